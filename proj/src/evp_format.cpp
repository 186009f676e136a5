#include "ehr/evp_format.hpp"

#include <cstring>
#include <limits>

#include "ehr/errors.hpp"

namespace ehr::evp {

namespace {

template <typename Len>
void put_str(ByteWriter& w, std::string_view s, const char* what) {
    if (s.size() > std::numeric_limits<Len>::max()) {
        throw IoError(std::string(what) + " too long for EVP record");
    }
    w.put<Len>(static_cast<Len>(s.size()));
    w.bytes(s);
}

template <typename Len>
void get_str(FileReader& in, std::string& out) {
    in.read_into(out, in.get<Len>());
}

}  // namespace

void encode_event(const Event& e, std::string& out) {
    ByteWriter w(out);
    put_str<std::uint32_t>(w, e.patient_id, "patient_id");
    w.put<std::uint8_t>(e.timestamp ? 1 : 0);
    if (e.timestamp) {
        w.put<std::int64_t>(*e.timestamp);
    }
    put_str<std::uint16_t>(w, e.event_type, "event_type");
    w.put<std::uint64_t>(e.seq);
    if (e.attributes.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw IoError("too many attributes for EVP record");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(e.attributes.size()));
    for (const auto& [k, v] : e.attributes) {
        put_str<std::uint16_t>(w, k, "attribute key");
        put_str<std::uint32_t>(w, v, "attribute value");
    }
}

bool decode_event(FileReader& in, Event& out) {
    std::uint32_t pid_len;
    if (!in.read_exact(reinterpret_cast<char*>(&pid_len), sizeof(pid_len))) {
        return false;
    }
    in.read_into(out.patient_id, pid_len);
    const auto flags = in.get<std::uint8_t>();
    if (flags & 1) {
        out.timestamp = in.get<std::int64_t>();
    } else {
        out.timestamp.reset();
    }
    get_str<std::uint16_t>(in, out.event_type);
    out.seq = in.get<std::uint64_t>();
    const auto n = in.get<std::uint16_t>();
    std::vector<Attributes::Entry> attrs(n);
    for (auto& [k, v] : attrs) {
        get_str<std::uint16_t>(in, k);
        get_str<std::uint32_t>(in, v);
    }
    out.attributes = Attributes(std::move(attrs));
    return true;
}

Event decode_event(ByteReader& in) {
    Event e;
    e.patient_id = std::string(in.bytes(in.get<std::uint32_t>()));
    if (in.get<std::uint8_t>() & 1) {
        e.timestamp = in.get<std::int64_t>();
    }
    e.event_type = std::string(in.bytes(in.get<std::uint16_t>()));
    e.seq = in.get<std::uint64_t>();
    const auto n = in.get<std::uint16_t>();
    std::vector<Attributes::Entry> attrs;
    attrs.reserve(n);
    for (std::uint16_t i = 0; i < n; ++i) {
        std::string k(in.bytes(in.get<std::uint16_t>()));
        std::string v(in.bytes(in.get<std::uint32_t>()));
        attrs.emplace_back(std::move(k), std::move(v));
    }
    e.attributes = Attributes(std::move(attrs));
    return e;
}

std::string_view skip_event(ByteReader& in) {
    std::string_view pid = in.bytes(in.get<std::uint32_t>());
    if (in.get<std::uint8_t>() & 1) {
        in.skip(8);
    }
    in.skip(in.get<std::uint16_t>());
    in.skip(8);
    const auto n = in.get<std::uint16_t>();
    for (std::uint16_t i = 0; i < n; ++i) {
        in.skip(in.get<std::uint16_t>());
        in.skip(in.get<std::uint32_t>());
    }
    return pid;
}

PartitionWriter::PartitionWriter(const std::filesystem::path& path) : out_(path) {
    std::string header(kMagic, 4);
    ByteWriter(header).put<std::uint32_t>(kFormatVersion);
    out_.write(header);
}

void PartitionWriter::add(const Event& e) {
    if (!any_) {
        footer_.min_patient_id = e.patient_id;
        footer_.max_patient_id = e.patient_id;
        footer_.patient_count = 1;
        any_ = true;
    } else if (e.patient_id != footer_.max_patient_id) {
        footer_.max_patient_id = e.patient_id;
        ++footer_.patient_count;
    }
    ++footer_.event_count;
    scratch_.clear();
    encode_event(e, scratch_);
    out_.write(scratch_);
}

Footer PartitionWriter::close() {
    footer_.footer_offset = out_.offset();
    std::string tail;
    ByteWriter w(tail);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(footer_.min_patient_id.size()));
    w.bytes(footer_.min_patient_id);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(footer_.max_patient_id.size()));
    w.bytes(footer_.max_patient_id);
    w.put<std::uint64_t>(footer_.event_count);
    w.put<std::uint64_t>(footer_.patient_count);
    w.put<std::uint64_t>(footer_.footer_offset);
    w.bytes(std::string_view(kFooterMagic, 4));
    out_.write(tail);
    out_.close();
    return footer_;
}

Footer read_footer(const std::filesystem::path& path, std::uint64_t* bytes_read) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        throw IoError("cannot open partition " + path.string());
    }
    struct Closer {
        std::FILE* f;
        ~Closer() { std::fclose(f); }
    } closer{f};
    auto fail = [&](const std::string& why) -> IoError {
        return IoError("corrupt partition " + path.string() + ": " + why);
    };
    char header[kHeaderSize];
    if (std::fread(header, 1, kHeaderSize, f) != kHeaderSize || std::memcmp(header, kMagic, 4) != 0) {
        throw fail("bad magic");
    }
    std::uint32_t version;
    std::memcpy(&version, header + 4, 4);
    if (version != kFormatVersion) {
        throw fail("unsupported format version " + std::to_string(version));
    }
    if (std::fseek(f, 0, SEEK_END) != 0) {
        throw fail("seek failed");
    }
    const long size = std::ftell(f);
    if (size < static_cast<long>(kHeaderSize + kTrailerSize)) {
        throw fail("too short");
    }
    char trailer[kTrailerSize];
    std::fseek(f, size - static_cast<long>(kTrailerSize), SEEK_SET);
    if (std::fread(trailer, 1, kTrailerSize, f) != kTrailerSize ||
        std::memcmp(trailer + 8, kFooterMagic, 4) != 0) {
        throw fail("bad footer magic");
    }
    Footer ft;
    std::memcpy(&ft.footer_offset, trailer, 8);
    if (ft.footer_offset < kHeaderSize ||
        ft.footer_offset > static_cast<std::uint64_t>(size) - kTrailerSize) {
        throw fail("bad footer offset");
    }
    const size_t body = static_cast<size_t>(size) - kTrailerSize - ft.footer_offset;
    std::string buf(body, '\0');
    std::fseek(f, static_cast<long>(ft.footer_offset), SEEK_SET);
    if (std::fread(buf.data(), 1, body, f) != body) {
        throw fail("truncated footer");
    }
    ByteReader r(buf);
    ft.min_patient_id = std::string(r.bytes(r.get<std::uint32_t>()));
    ft.max_patient_id = std::string(r.bytes(r.get<std::uint32_t>()));
    ft.event_count = r.get<std::uint64_t>();
    ft.patient_count = r.get<std::uint64_t>();
    if (!r.done()) {
        throw fail("trailing footer bytes");
    }
    if (bytes_read) {
        *bytes_read += kHeaderSize + kTrailerSize + body;
    }
    return ft;
}

PartitionReader::PartitionReader(const std::filesystem::path& path)
    : footer_(read_footer(path)), in_(path, 1 << 18), events_left_(footer_.event_count) {
    char header[kHeaderSize];
    in_.read_exact(header, kHeaderSize);
}

bool PartitionReader::next(Event& out) {
    if (events_left_ == 0) {
        return false;
    }
    if (!decode_event(in_, out)) {
        throw IoError("partition ended before its footer event count");
    }
    --events_left_;
    return true;
}

}  // namespace ehr::evp
