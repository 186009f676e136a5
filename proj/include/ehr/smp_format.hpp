#pragma once

// SMP1: encoded sample shard.
//
//   "SMP1" | format_version u32
//   per sample: patient_id_len u32, patient_id,
//     per input field (schema order), tag u8:
//       0 index sequence    count u32, count x u32
//       1 nested sequence   outer u32, per inner: count u32, count x u32
//       2 multi-hot         vocab_size u32, ceil(vocab_size/8) bitset bytes
//       3 raw bytes         len u32, bytes
//     per output field (schema order), tag u8:
//       0 binary u8 | 1 class u32 | 2 multilabel size u32 + bitset bytes | 3 real f64
//   footer: sample_count u64, "SMPF"
//
// Bitsets are LSB-first within each byte. All integers little-endian.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "ehr/io_util.hpp"
#include "ehr/processors.hpp"

namespace ehr::smp {

inline constexpr char kMagic[4] = {'S', 'M', 'P', '1'};
inline constexpr char kFooterMagic[4] = {'S', 'M', 'P', 'F'};
inline constexpr std::uint32_t kFormatVersion = 1;

using IndexSeq = std::vector<std::uint32_t>;
using NestedIndexSeq = std::vector<IndexSeq>;
using RawBytes = std::string;
using EncodedFeature = std::variant<IndexSeq, NestedIndexSeq, Bitset, RawBytes>;

struct EncodedSample {
    std::string patient_id;
    std::vector<EncodedFeature> inputs;
    std::vector<EncodedLabel> labels;

    friend bool operator==(const EncodedSample&, const EncodedSample&) = default;
};

void encode_sample(const EncodedSample& s, std::string& out);

class ShardWriter {
   public:
    explicit ShardWriter(const std::filesystem::path& path);
    void add(const EncodedSample& s);
    void close();
    std::uint64_t count() const { return count_; }

   private:
    FileWriter out_;
    std::string scratch_;
    std::uint64_t count_ = 0;
};

// Reads a whole shard; validates magic, footer and sample count.
// input_fields/output_fields give the number of fields per sample.
std::vector<EncodedSample> read_shard(const std::filesystem::path& path, size_t input_fields,
                                      size_t output_fields);

}  // namespace ehr::smp
