#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehr/event_model.hpp"
#include "ehr/evp_format.hpp"
#include "ehr/ingest.hpp"

namespace ehr {

inline constexpr size_t kDefaultBatchSize = 128;

struct StoreOptions {
    size_t max_open_partitions = 16;
};

struct PatientBatch {
    std::vector<PatientRecord> records;
    std::uint64_t batch_index = 0;
};

class PatientBatchReader;

// Read-only view of an ingested cache. Opening reads only manifest.json;
// partition payloads are read on demand. Copies share the same state, and
// concurrent get_events calls are safe.
class Store {
   public:
    // Throws ManifestError for a missing, corrupt or overlapping manifest.
    static Store open(const std::filesystem::path& root, StoreOptions opts = {});

    const CacheManifest& manifest() const;
    const std::filesystem::path& root() const;

    // All events of one patient in canonical order, optionally filtered.
    // Unknown patients yield an empty vector.
    std::vector<Event> get_events(std::string_view patient_id,
                                  const EventFilter* filter = nullptr) const;

    // Index of the partition whose range holds patient_id, if any.
    std::optional<size_t> find_partition(std::string_view patient_id) const;

    // Every patient exactly once, ascending, in batches of batch_size.
    // first_batch/batch_limit select a contiguous range of batches.
    PatientBatchReader batches(size_t batch_size = kDefaultBatchSize, std::uint64_t first_batch = 0,
                               std::uint64_t batch_limit =
                                   std::numeric_limits<std::uint64_t>::max()) const;

    std::uint64_t batch_count(size_t batch_size = kDefaultBatchSize) const;

    // Instrumentation: bytes read from disk since open, split by source.
    std::uint64_t manifest_bytes_read() const;
    std::uint64_t partition_bytes_read() const;
    size_t open_partition_handles() const;

    struct State;

   private:
    explicit Store(std::shared_ptr<State> s) : state_(std::move(s)) {}
    std::shared_ptr<State> state_;
};

inline Store open_store(const std::filesystem::path& root, StoreOptions opts = {}) {
    return Store::open(root, opts);
}

class PatientBatchReader {
   public:
    // Throws ValidationError when batch_size is 0.
    PatientBatchReader(std::shared_ptr<Store::State> state, size_t batch_size,
                       std::uint64_t first_batch, std::uint64_t batch_limit);

    std::optional<PatientBatch> next();

    // Largest number of events held by any yielded batch.
    std::uint64_t peak_buffered_events() const { return peak_events_; }

   private:
    bool read_event(Event& e);

    std::shared_ptr<Store::State> state_;
    size_t batch_size_;
    std::uint64_t next_batch_index_;
    std::uint64_t patients_left_;
    size_t partition_ = 0;
    std::optional<evp::PartitionReader> reader_;
    std::optional<Event> lookahead_;
    std::uint64_t peak_events_ = 0;
};

}  // namespace ehr
