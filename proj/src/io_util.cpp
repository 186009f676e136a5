#include "ehr/io_util.hpp"

#include <openssl/evp.h>

#include <bit>
#include <fstream>
#include <memory>
#include <sstream>

#include "ehr/errors.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

namespace ehr {

namespace {

std::string to_hex(const unsigned char* d, unsigned n) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (unsigned i = 0; i < n; ++i) {
        out += kHex[d[i] >> 4];
        out += kHex[d[i] & 15];
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) {
        throw std::runtime_error("sha256 failed");
    }
    return to_hex(md, len);
}

std::string sha256_file_hex(const std::filesystem::path& path) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        throw IoError("cannot open " + path.string());
    }
    size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) {
        EVP_DigestUpdate(ctx.get(), buf.data(), n);
    }
    std::fclose(f);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    return to_hex(md, len);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        FileWriter w(tmp);
        w.write(data);
        w.close();
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                      ec.message());
    }
}

void ByteReader::need(size_t n) const {
    if (size_ - pos_ < n) {
        throw IoError("truncated record: need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_));
    }
}

FileWriter::FileWriter(const std::filesystem::path& path, size_t buffer_bytes) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) {
        throw IoError("cannot create " + path.string());
    }
    buffer_.reserve(buffer_bytes);
}

FileWriter::~FileWriter() {
    if (f_) {
        std::fclose(f_);
    }
}

void FileWriter::write(std::string_view data) {
    if (!f_) {
        throw IoError("write to closed file " + path_.string());
    }
    offset_ += data.size();
    if (buffer_.size() + data.size() > buffer_.capacity()) {
        if (!buffer_.empty() && std::fwrite(buffer_.data(), 1, buffer_.size(), f_) != buffer_.size()) {
            throw IoError("write failed on " + path_.string());
        }
        buffer_.clear();
        if (data.size() >= buffer_.capacity()) {
            if (std::fwrite(data.data(), 1, data.size(), f_) != data.size()) {
                throw IoError("write failed on " + path_.string());
            }
            return;
        }
    }
    buffer_.insert(buffer_.end(), data.begin(), data.end());
}

void FileWriter::close() {
    if (!f_) {
        return;
    }
    bool ok = buffer_.empty() || std::fwrite(buffer_.data(), 1, buffer_.size(), f_) == buffer_.size();
    buffer_.clear();
    ok = std::fclose(f_) == 0 && ok;
    f_ = nullptr;
    if (!ok) {
        throw IoError("write failed on " + path_.string());
    }
}

FileReader::FileReader(const std::filesystem::path& path, size_t buffer_bytes)
    : path_(path), buffer_(buffer_bytes) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_) {
        throw IoError("cannot open " + path.string());
    }
}

FileReader::~FileReader() {
    if (f_) {
        std::fclose(f_);
    }
}

bool FileReader::fill() {
    begin_ = 0;
    end_ = std::fread(buffer_.data(), 1, buffer_.size(), f_);
    if (end_ == 0 && std::ferror(f_)) {
        throw IoError("read failed on " + path_.string());
    }
    return end_ > 0;
}

bool FileReader::read_exact(char* dst, size_t n) {
    size_t copied = 0;
    while (copied < n) {
        if (begin_ == end_ && !fill()) {
            if (copied == 0) {
                return false;
            }
            throw_eof();
        }
        const size_t take = std::min(n - copied, end_ - begin_);
        std::memcpy(dst + copied, buffer_.data() + begin_, take);
        begin_ += take;
        copied += take;
    }
    bytes_read_ += n;
    return true;
}

void FileReader::read_into(std::string& dst, size_t n) {
    dst.resize(n);
    if (n && !read_exact(dst.data(), n)) {
        throw_eof();
    }
}

void FileReader::seek(std::uint64_t offset) {
    if (std::fseek(f_, static_cast<long>(offset), SEEK_SET) != 0) {
        throw IoError("seek failed on " + path_.string());
    }
    begin_ = end_ = 0;
}

void FileReader::throw_eof() const { throw IoError("unexpected end of file in " + path_.string()); }

}  // namespace ehr
