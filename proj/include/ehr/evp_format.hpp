#pragma once

// EVP1: patient-sorted event partition file.
//
//   "EVP1" | format_version u32
//   records:  patient_id_len u32, patient_id,
//             flags u8 (bit0 = has_timestamp), [timestamp i64 micros],
//             event_type_len u16, event_type, seq u64,
//             attr_count u16, { key_len u16, key, val_len u32, val }*
//   footer:   min_pid_len u32, min_pid, max_pid_len u32, max_pid,
//             event_count u64, patient_count u64, footer_offset u64, "EVPF"
//
// All integers little-endian. footer_offset is the byte offset of the footer.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ehr/event_model.hpp"
#include "ehr/io_util.hpp"

namespace ehr::evp {

inline constexpr char kMagic[4] = {'E', 'V', 'P', '1'};
inline constexpr char kFooterMagic[4] = {'E', 'V', 'P', 'F'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr size_t kHeaderSize = 8;
inline constexpr size_t kTrailerSize = 12;  // footer_offset + magic

void encode_event(const Event& e, std::string& out);
// Decodes one record; false on clean EOF at a record boundary.
bool decode_event(FileReader& in, Event& out);
Event decode_event(ByteReader& in);
// Reads only the patient id of the record at the reader's position and
// advances past the whole record.
std::string_view skip_event(ByteReader& in);

struct Footer {
    std::string min_patient_id;
    std::string max_patient_id;
    std::uint64_t event_count = 0;
    std::uint64_t patient_count = 0;
    std::uint64_t footer_offset = 0;
};

// Record codec for the external sorter.
struct EventCodec {
    static void encode(const Event& e, std::string& out) { encode_event(e, out); }
    static bool decode(FileReader& in, Event& out) { return decode_event(in, out); }
    static size_t mem_size(const Event& e) { return approx_event_bytes(e); }
};

// Streams sorted events into one partition file and writes the footer on
// close. Events of a patient must be contiguous.
class PartitionWriter {
   public:
    explicit PartitionWriter(const std::filesystem::path& path);
    void add(const Event& e);
    Footer close();
    std::uint64_t event_count() const { return footer_.event_count; }

   private:
    FileWriter out_;
    Footer footer_;
    std::string scratch_;
    bool any_ = false;
};

// Reads header and trailer; throws IoError on bad magic or truncation.
Footer read_footer(const std::filesystem::path& path, std::uint64_t* bytes_read = nullptr);

// Sequential record reader over one partition (header checked, stops at footer).
class PartitionReader {
   public:
    explicit PartitionReader(const std::filesystem::path& path);
    bool next(Event& out);
    const Footer& footer() const { return footer_; }
    std::uint64_t bytes_read() const { return in_.bytes_read(); }

   private:
    Footer footer_;
    FileReader in_;
    std::uint64_t events_left_;
};

}  // namespace ehr::evp
