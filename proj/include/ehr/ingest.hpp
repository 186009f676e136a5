#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ehr/descriptor.hpp"
#include "ehr/event_model.hpp"
#include "ehr/evp_format.hpp"
#include "ehr/external_sort.hpp"
#include "ehr/io_util.hpp"

namespace ehr {

inline constexpr std::uint64_t kDefaultPartitionEvents = 1'048'576;
inline constexpr size_t kMinIngestBudget = 64u << 20;

struct IngestConfig {
    size_t mem_budget_bytes = 256u << 20;
    int workers = 1;
    std::uint64_t target_partition_events = kDefaultPartitionEvents;
    std::filesystem::path out_dir;
    // Parent tables whose join map would exceed this are joined by sort-merge.
    // 0 means a quarter of the budget.
    size_t join_hash_limit_bytes = 0;
};

void validate_ingest_config(const IngestConfig& cfg);

struct EventPartition {
    std::string path;  // file name relative to the cache root
    std::string min_patient_id;
    std::string max_patient_id;
    std::uint64_t event_count = 0;
    std::uint64_t patient_count = 0;

    friend bool operator==(const EventPartition&, const EventPartition&) = default;
};

struct CacheManifest {
    std::string dataset_name;
    std::string descriptor_digest;
    std::vector<EventPartition> partitions;
    std::uint64_t total_events = 0;
    std::uint64_t total_patients = 0;
    std::string created_at;
    std::uint64_t target_partition_events = kDefaultPartitionEvents;

    friend bool operator==(const CacheManifest&, const CacheManifest&) = default;
};

inline constexpr const char* kManifestFile = "manifest.json";

std::string manifest_to_json(const CacheManifest& m);
// Parses and validates (ascending, disjoint ranges; totals). Throws ManifestError.
CacheManifest manifest_from_json(const std::string& text);

struct IngestStats {
    bool cache_hit = false;
    std::uint64_t rows_read = 0;
    std::uint64_t events_written = 0;
    std::uint64_t runs_written = 0;
    std::uint64_t merge_passes = 0;
    std::uint64_t sort_merge_joins = 0;
    std::int64_t buffer_high_water = 0;
};

// Table-joining stage: reads every table, applies joins, sorts globally by
// event_sort_key under the memory budget and writes the partitioned cache.
// A no-op when out_dir already holds a cache of the same descriptor.
CacheManifest ingest(const DatasetDescriptor& descriptor, const IngestConfig& cfg,
                     IngestStats* stats = nullptr, MemoryTracker* tracker = nullptr);

// Sorts a stream of events with spill files under cfg.out_dir. Bounded by
// opts; equal keys keep input order.
using EventSource = std::function<bool(Event&)>;
MergedStream<Event, evp::EventCodec, EventLess> external_sort_events(EventSource source,
                                                                      const SortOptions& opts,
                                                                      MemoryTracker* tracker = nullptr,
                                                                      SortStats* stats = nullptr);

// Splits a sorted stream into patient-aligned partition files named
// part-NNNNN.evp under dir. A partition is closed at the first patient
// boundary at or after target_events.
std::vector<EventPartition> write_partitions(const EventSource& sorted,
                                             std::uint64_t target_events,
                                             const std::filesystem::path& dir);

}  // namespace ehr
