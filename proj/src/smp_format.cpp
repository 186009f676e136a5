#include "ehr/smp_format.hpp"

#include <cstring>

#include "ehr/errors.hpp"

namespace ehr::smp {

namespace {

void put_indices(ByteWriter& w, const IndexSeq& v) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
    for (auto i : v) {
        w.put<std::uint32_t>(i);
    }
}

void put_bitset(ByteWriter& w, const Bitset& b) {
    w.put<std::uint32_t>(b.size);
    w.bytes(std::string_view(reinterpret_cast<const char*>(b.bytes.data()), b.bytes.size()));
}

IndexSeq get_indices(ByteReader& r) {
    IndexSeq v(r.get<std::uint32_t>());
    for (auto& i : v) {
        i = r.get<std::uint32_t>();
    }
    return v;
}

Bitset get_bitset(ByteReader& r) {
    Bitset b(r.get<std::uint32_t>());
    std::string_view raw = r.bytes(b.bytes.size());
    std::memcpy(b.bytes.data(), raw.data(), raw.size());
    return b;
}

}  // namespace

void encode_sample(const EncodedSample& s, std::string& out) {
    ByteWriter w(out);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.patient_id.size()));
    w.bytes(s.patient_id);
    for (const auto& f : s.inputs) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(f.index()));
        std::visit(
            [&](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, IndexSeq>) {
                    put_indices(w, v);
                } else if constexpr (std::is_same_v<V, NestedIndexSeq>) {
                    w.put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
                    for (const auto& inner : v) {
                        put_indices(w, inner);
                    }
                } else if constexpr (std::is_same_v<V, Bitset>) {
                    put_bitset(w, v);
                } else {
                    w.put<std::uint32_t>(static_cast<std::uint32_t>(v.size()));
                    w.bytes(v);
                }
            },
            f);
    }
    for (const auto& l : s.labels) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(l.index()));
        std::visit(
            [&](const auto& v) {
                using V = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<V, Bitset>) {
                    put_bitset(w, v);
                } else {
                    w.put<V>(v);
                }
            },
            l);
    }
}

ShardWriter::ShardWriter(const std::filesystem::path& path) : out_(path) {
    std::string header(kMagic, 4);
    ByteWriter(header).put<std::uint32_t>(kFormatVersion);
    out_.write(header);
}

void ShardWriter::add(const EncodedSample& s) {
    scratch_.clear();
    encode_sample(s, scratch_);
    out_.write(scratch_);
    ++count_;
}

void ShardWriter::close() {
    std::string tail;
    ByteWriter w(tail);
    w.put<std::uint64_t>(count_);
    w.bytes(std::string_view(kFooterMagic, 4));
    out_.write(tail);
    out_.close();
}

std::vector<EncodedSample> read_shard(const std::filesystem::path& path, size_t input_fields,
                                      size_t output_fields) {
    const std::string data = read_file(path);
    auto fail = [&](const std::string& why) {
        return IoError("corrupt shard " + path.string() + ": " + why);
    };
    if (data.size() < 20 || std::memcmp(data.data(), kMagic, 4) != 0) {
        throw fail("bad magic");
    }
    if (std::memcmp(data.data() + data.size() - 4, kFooterMagic, 4) != 0) {
        throw fail("bad footer magic");
    }
    ByteReader r(data.data(), data.size() - 12);
    r.skip(4);
    if (r.get<std::uint32_t>() != kFormatVersion) {
        throw fail("unsupported format version");
    }
    std::uint64_t expected;
    std::memcpy(&expected, data.data() + data.size() - 12, 8);
    std::vector<EncodedSample> out;
    while (!r.done()) {
        EncodedSample s;
        s.patient_id = std::string(r.bytes(r.get<std::uint32_t>()));
        for (size_t i = 0; i < input_fields; ++i) {
            switch (r.get<std::uint8_t>()) {
                case 0:
                    s.inputs.emplace_back(get_indices(r));
                    break;
                case 1: {
                    NestedIndexSeq n(r.get<std::uint32_t>());
                    for (auto& inner : n) {
                        inner = get_indices(r);
                    }
                    s.inputs.emplace_back(std::move(n));
                    break;
                }
                case 2:
                    s.inputs.emplace_back(get_bitset(r));
                    break;
                case 3:
                    s.inputs.emplace_back(RawBytes(r.bytes(r.get<std::uint32_t>())));
                    break;
                default:
                    throw fail("unknown feature tag");
            }
        }
        for (size_t i = 0; i < output_fields; ++i) {
            switch (r.get<std::uint8_t>()) {
                case 0:
                    s.labels.emplace_back(r.get<std::uint8_t>());
                    break;
                case 1:
                    s.labels.emplace_back(r.get<std::uint32_t>());
                    break;
                case 2:
                    s.labels.emplace_back(get_bitset(r));
                    break;
                case 3:
                    s.labels.emplace_back(r.get<double>());
                    break;
                default:
                    throw fail("unknown label tag");
            }
        }
        out.push_back(std::move(s));
    }
    if (out.size() != expected) {
        throw fail("sample count mismatch");
    }
    return out;
}

}  // namespace ehr::smp
