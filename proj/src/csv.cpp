#include "ehr/csv.hpp"

#include "ehr/errors.hpp"

namespace ehr {

CsvReader::CsvReader(const std::filesystem::path& path, size_t buffer_bytes)
    : path_(path), buf_(buffer_bytes) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_) {
        throw IoError("cannot open " + path.string());
    }
    if (!read_record(header_)) {
        throw IoError("missing header row in " + path.string());
    }
    if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        header_[0] = header_[0].substr(3);
    }
}

CsvReader::~CsvReader() {
    if (f_) {
        std::fclose(f_);
    }
}

int CsvReader::column(const std::string& name) const {
    for (size_t i = 0; i < header_.size(); ++i) {
        if (header_[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

int CsvReader::peek() {
    if (pos_ == len_) {
        len_ = std::fread(buf_.data(), 1, buf_.size(), f_);
        pos_ = 0;
        if (len_ == 0) {
            if (std::ferror(f_)) {
                throw IoError("read failed on " + path_.string());
            }
            return EOF;
        }
    }
    return static_cast<unsigned char>(buf_[pos_]);
}

int CsvReader::get() {
    const int c = peek();
    if (c != EOF) {
        ++pos_;
        if (c == '\n') {
            ++cur_line_;
        }
    }
    return c;
}

bool CsvReader::read_record(std::vector<std::string>& out) {
    record_line_ = cur_line_;
    size_t n = 0;
    auto field = [&]() -> std::string& {
        if (n == out.size()) {
            out.emplace_back();
        }
        std::string& f = out[n++];
        f.clear();
        return f;
    };
    int c = peek();
    if (c == EOF) {
        return false;
    }
    std::string* cur = &field();
    while (true) {
        c = get();
        if (c == '"' && cur->empty()) {
            // quoted field
            while (true) {
                c = get();
                if (c == EOF) {
                    throw IoError("unterminated quoted field in " + path_.string() + " line " +
                                  std::to_string(record_line_));
                }
                if (c == '"') {
                    if (peek() == '"') {
                        get();
                        cur->push_back('"');
                        continue;
                    }
                    break;
                }
                cur->push_back(static_cast<char>(c));
            }
            c = get();
            if (c != ',' && c != '\n' && c != '\r' && c != EOF) {
                throw IoError("unexpected character after closing quote in " + path_.string() +
                              " line " + std::to_string(record_line_));
            }
        }
        if (c == ',') {
            cur = &field();
            continue;
        }
        if (c == '\r') {
            if (peek() == '\n') {
                get();
            }
            break;
        }
        if (c == '\n' || c == EOF) {
            break;
        }
        cur->push_back(static_cast<char>(c));
    }
    out.resize(n);
    return true;
}

bool CsvReader::next(std::vector<std::string>& row) {
    while (true) {
        if (!read_record(row)) {
            return false;
        }
        // tolerate blank lines
        if (row.size() == 1 && row[0].empty() && header_.size() != 1) {
            continue;
        }
        ++rows_;
        if (row.size() != header_.size()) {
            throw IoError(path_.string() + " line " + std::to_string(record_line_) + ": expected " +
                          std::to_string(header_.size()) + " fields, got " +
                          std::to_string(row.size()));
        }
        return true;
    }
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

}  // namespace ehr
