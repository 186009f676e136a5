#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ehr/event_model.hpp"
#include "ehr/io_util.hpp"
#include "ehr/patient_store.hpp"
#include "ehr/processors.hpp"
#include "ehr/smp_format.hpp"

namespace ehr {

struct RawSample {
    std::string patient_id;
    std::map<std::string, RawValue> values;
};

// Per-worker counters a task may bump while building samples.
struct TaskContext {
    std::uint64_t skipped = 0;
};

struct TaskDefinition {
    std::string task_name;
    // Bumped whenever apply's behavior changes; part of the cache key.
    std::string version = "1";
    std::vector<std::pair<std::string, ProcessorKind>> input_schema;
    std::vector<std::pair<std::string, LabelKind>> output_schema;
    // Output fields with a predeclared label space (not fitted from data).
    std::map<std::string, std::vector<std::string>> fixed_label_spaces;
    std::function<std::vector<RawSample>(const PatientRecord&, TaskContext&)> apply;
};

// Throws SchemaError for empty schemas or overlapping field names.
void validate_task(const TaskDefinition& task);

struct ShardInfo {
    std::string path;
    std::uint64_t sample_count = 0;
};

struct SampleSetManifest {
    std::string task_name;
    std::string task_digest;
    std::string source_cache_digest;
    std::vector<std::pair<std::string, ProcessorKind>> input_schema;
    std::vector<std::pair<std::string, LabelKind>> output_schema;
    std::vector<ShardInfo> shards;
    std::map<std::string, std::string> processor_state_digests;  // field -> sha256 of sidecar
    std::uint64_t total_samples = 0;
    std::uint64_t skipped = 0;
    std::uint64_t dropped_labels = 0;
    std::string label_stats_json;  // per output field; JSON object text
};

inline constexpr const char* kSamplesManifestFile = "samples.json";
inline constexpr std::uint64_t kDefaultShardSamples = 16384;

std::string samples_manifest_to_json(const SampleSetManifest& m);
SampleSetManifest samples_manifest_from_json(const std::string& text);

struct TaskRunOptions {
    int workers = 1;
    std::filesystem::path out_dir;
    size_t batch_size = kDefaultBatchSize;
    std::uint64_t samples_per_shard = kDefaultShardSamples;
    std::uint64_t min_token_count = 1;
    MemoryTracker* tracker = nullptr;
};

struct TaskRunStats {
    bool cache_hit = false;
    std::uint64_t patients_visited = 0;
    std::uint64_t peak_batch_events = 0;
};

// Applies the task to every patient in parallel, fits processors over the
// union of all raw samples and writes encoded shards plus samples.json.
// Output bytes are identical for any worker count. A no-op when out_dir
// already holds the same task over the same cache.
SampleSetManifest set_task(const Store& store, const TaskDefinition& task,
                           const TaskRunOptions& opts, TaskRunStats* stats = nullptr);

// Decoded view of a finished sample set.
struct SampleSet {
    SampleSetManifest manifest;
    std::map<std::string, Vocabulary> vocabularies;
    std::map<std::string, LabelSpace> label_spaces;

    static SampleSet open(const std::filesystem::path& dir);
    std::vector<smp::EncodedSample> read_all(const std::filesystem::path& dir) const;
};

enum class Split { train, val, test };

// Patient-level split from the first 8 bytes of sha256(salt + patient_id)
// read as a fraction u in [0, 1): train if u < train_frac, val if
// u < train_frac + val_frac, else test. Stable across runs and machines.
Split hash_split(std::string_view patient_id, double train_frac, double val_frac,
                 std::string_view salt = {});

}  // namespace ehr
