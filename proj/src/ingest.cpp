#include "ehr/ingest.hpp"

#include <algorithm>
#include <sys/stat.h>

#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "ehr/csv.hpp"
#include "ehr/errors.hpp"
#include "json.hpp"

namespace ehr {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// manifest

std::string manifest_to_json(const CacheManifest& m) {
    ojson j;
    j["dataset_name"] = m.dataset_name;
    j["descriptor_digest"] = m.descriptor_digest;
    j["format"] = "EVP1";
    j["target_partition_events"] = m.target_partition_events;
    j["total_events"] = m.total_events;
    j["total_patients"] = m.total_patients;
    j["created_at"] = m.created_at;
    j["partitions"] = ojson::array();
    for (const auto& p : m.partitions) {
        j["partitions"].push_back({{"path", p.path},
                                   {"min_patient_id", p.min_patient_id},
                                   {"max_patient_id", p.max_patient_id},
                                   {"event_count", p.event_count},
                                   {"patient_count", p.patient_count}});
    }
    return j.dump(2) + "\n";
}

CacheManifest manifest_from_json(const std::string& text) {
    CacheManifest m;
    try {
        const ojson j = ojson::parse(text);
        if (j.value("format", "") != "EVP1") {
            throw ManifestError("unsupported cache format");
        }
        m.dataset_name = j.at("dataset_name").get<std::string>();
        m.descriptor_digest = j.at("descriptor_digest").get<std::string>();
        m.target_partition_events = j.at("target_partition_events").get<std::uint64_t>();
        m.total_events = j.at("total_events").get<std::uint64_t>();
        m.total_patients = j.at("total_patients").get<std::uint64_t>();
        m.created_at = j.at("created_at").get<std::string>();
        for (const auto& p : j.at("partitions")) {
            EventPartition ep;
            ep.path = p.at("path").get<std::string>();
            ep.min_patient_id = p.at("min_patient_id").get<std::string>();
            ep.max_patient_id = p.at("max_patient_id").get<std::string>();
            ep.event_count = p.at("event_count").get<std::uint64_t>();
            ep.patient_count = p.at("patient_count").get<std::uint64_t>();
            m.partitions.push_back(std::move(ep));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("corrupt manifest: ") + e.what());
    }
    std::uint64_t events = 0, patients = 0;
    for (size_t i = 0; i < m.partitions.size(); ++i) {
        const auto& p = m.partitions[i];
        if (p.path.empty() || p.path.find('/') != std::string::npos || p.path == "..") {
            throw ManifestError("partition " + std::to_string(i) + " has an invalid path");
        }
        if (p.max_patient_id < p.min_patient_id) {
            throw ManifestError("partition " + p.path + " has min_patient_id > max_patient_id");
        }
        if (i > 0 && !(m.partitions[i - 1].max_patient_id < p.min_patient_id)) {
            throw ManifestError("partition ranges overlap or are out of order at " + p.path);
        }
        events += p.event_count;
        patients += p.patient_count;
    }
    if (events != m.total_events) {
        throw ManifestError("total_events does not match partition event counts");
    }
    if (patients != m.total_patients) {
        throw ManifestError("total_patients does not match partition patient counts");
    }
    return m;
}

void validate_ingest_config(const IngestConfig& cfg) {
    if (cfg.mem_budget_bytes < kMinIngestBudget) {
        throw ValidationError("mem_budget_bytes must be at least 64 MiB");
    }
    if (cfg.workers < 1) {
        throw ValidationError("workers must be >= 1");
    }
    if (cfg.target_partition_events < 1) {
        throw ValidationError("target_partition_events must be >= 1");
    }
    if (cfg.out_dir.empty()) {
        throw ValidationError("out_dir is required");
    }
}

// ---------------------------------------------------------------------------
// sorting and partitioning

MergedStream<Event, evp::EventCodec, EventLess> external_sort_events(EventSource source,
                                                                      const SortOptions& opts,
                                                                      MemoryTracker* tracker,
                                                                      SortStats* stats) {
    return external_sort<Event, evp::EventCodec, EventLess>(source, opts, tracker, stats);
}

namespace {

std::string partition_name(size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "part-%05zu.evp", index);
    return buf;
}

}  // namespace

std::vector<EventPartition> write_partitions(const EventSource& sorted,
                                             std::uint64_t target_events, const fs::path& dir) {
    std::vector<EventPartition> parts;
    std::optional<evp::PartitionWriter> writer;
    std::string current_patient;
    std::string last_key_patient;
    auto close = [&]() {
        const evp::Footer ft = writer->close();
        parts.back().min_patient_id = ft.min_patient_id;
        parts.back().max_patient_id = ft.max_patient_id;
        parts.back().event_count = ft.event_count;
        parts.back().patient_count = ft.patient_count;
        writer.reset();
    };
    Event e;
    bool first = true;
    while (sorted(e)) {
        const bool new_patient = first || e.patient_id != current_patient;
        if (!first && e.patient_id < current_patient) {
            throw std::logic_error("write_partitions: input not sorted by patient");
        }
        if (new_patient && writer && writer->event_count() >= target_events) {
            close();
        }
        if (!writer) {
            parts.push_back(EventPartition{partition_name(parts.size()), "", "", 0, 0});
            writer.emplace(dir / parts.back().path);
        }
        if (new_patient) {
            current_patient = e.patient_id;
        }
        writer->add(e);
        first = false;
    }
    if (writer) {
        close();
    }
    return parts;
}

// ---------------------------------------------------------------------------
// ingest

namespace {

SortOptions with_dir(SortOptions o, fs::path dir) {
    o.spill_dir = std::move(dir);
    return o;
}

// (key, seq, cells) record used by the sort-merge join.
struct KeyedRow {
    std::string key;
    std::uint64_t seq = 0;
    std::vector<std::string> cells;
};

struct KeyedRowLess {
    bool operator()(const KeyedRow& a, const KeyedRow& b) const {
        if (int c = a.key.compare(b.key); c != 0) {
            return c < 0;
        }
        return a.seq < b.seq;
    }
};

struct KeyedRowCodec {
    static void encode(const KeyedRow& r, std::string& out) {
        ByteWriter w(out);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(r.key.size()));
        w.bytes(r.key);
        w.put<std::uint64_t>(r.seq);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(r.cells.size()));
        for (const auto& c : r.cells) {
            w.put<std::uint32_t>(static_cast<std::uint32_t>(c.size()));
            w.bytes(c);
        }
    }
    static bool decode(FileReader& in, KeyedRow& r) {
        std::uint32_t n;
        if (!in.read_exact(reinterpret_cast<char*>(&n), 4)) {
            return false;
        }
        in.read_into(r.key, n);
        r.seq = in.get<std::uint64_t>();
        r.cells.resize(in.get<std::uint32_t>());
        for (auto& c : r.cells) {
            in.read_into(c, in.get<std::uint32_t>());
        }
        return true;
    }
    static size_t mem_size(const KeyedRow& r) {
        size_t n = r.key.capacity() + r.cells.capacity() * sizeof(std::string);
        for (const auto& c : r.cells) {
            n += c.capacity();
        }
        return n;
    }
};

using JoinMap = std::unordered_map<std::string, std::vector<std::string>>;

std::string join_id(const JoinSpec& j) {
    std::string id = j.table + "\x1f" + j.on;
    for (const auto& c : j.columns) {
        id += "\x1f" + c;
    }
    return id;
}

struct JoinSource {
    JoinSpec spec;
    std::optional<JoinMap> map;  // absent => sort-merge
    TrackedBytes held;
};

// Column layout of one table's CSV resolved against its spec.
struct TableLayout {
    int pid = -1;
    int ts = -1;           // timestamp cell in own row
    int ts_joined = -1;    // index into joined values
    int join_key = -1;
    std::vector<std::pair<std::string, int>> attrs;
};

TableLayout resolve_layout(const TableSpec& t, const CsvReader& csv) {
    TableLayout l;
    const std::string file = csv.path().string();
    l.pid = csv.column(t.patient_id_column);
    if (l.pid < 0) {
        throw ValidationError("table '" + t.name + "': patient_id_column '" +
                              t.patient_id_column + "' not in header of " + file);
    }
    for (const auto& c : t.attribute_columns) {
        const int idx = csv.column(c);
        if (idx < 0) {
            throw ValidationError("table '" + t.name + "': attribute column '" + c +
                                  "' not in header of " + file);
        }
        l.attrs.emplace_back(c, idx);
    }
    if (t.join) {
        l.join_key = csv.column(t.join->on);
        if (l.join_key < 0) {
            throw JoinKeyError("table '" + t.name + "': join column '" + t.join->on +
                               "' absent from " + file);
        }
    }
    if (t.timestamp_column) {
        l.ts = csv.column(*t.timestamp_column);
        if (l.ts < 0 && t.join) {
            const auto& jc = t.join->columns;
            auto it = std::find(jc.begin(), jc.end(), *t.timestamp_column);
            if (it != jc.end()) {
                l.ts_joined = static_cast<int>(it - jc.begin());
            }
        }
        if (l.ts < 0 && l.ts_joined < 0) {
            throw ValidationError("table '" + t.name + "': timestamp_column '" +
                                  *t.timestamp_column + "' is neither in " + file +
                                  " nor a join column");
        }
    }
    return l;
}

Event make_event(const TableSpec& t, const TableLayout& l, std::vector<std::string>& row,
                 std::uint64_t seq, const std::vector<std::string>* joined,
                 const CsvReader& csv) {
    Event e;
    e.patient_id = row[static_cast<size_t>(l.pid)];
    if (e.patient_id.empty()) {
        throw ValidationError("table '" + t.name + "': empty patient id in " +
                              csv.path().string() + " row " + std::to_string(seq));
    }
    e.event_type = t.name;
    e.seq = seq;
    const std::string* ts_cell = nullptr;
    if (l.ts >= 0) {
        ts_cell = &row[static_cast<size_t>(l.ts)];
    } else if (l.ts_joined >= 0 && joined) {
        ts_cell = &(*joined)[static_cast<size_t>(l.ts_joined)];
    }
    if (ts_cell && !ts_cell->empty() && t.timestamp_format) {
        auto parsed = parse_timestamp(*ts_cell, *t.timestamp_format);
        if (!parsed) {
            throw TimestampParseError("table '" + t.name + "': cannot parse '" + *ts_cell +
                                      "' with format '" + *t.timestamp_format + "' in " +
                                      csv.path().string() + " row " + std::to_string(seq));
        }
        e.timestamp = *parsed;
    }
    std::vector<Attributes::Entry> attrs;
    attrs.reserve(l.attrs.size() + (joined ? joined->size() : 0));
    for (const auto& [name, idx] : l.attrs) {
        std::string& v = row[static_cast<size_t>(idx)];
        if (!v.empty()) {
            attrs.emplace_back(name, std::move(v));
        }
    }
    if (joined) {
        for (size_t i = 0; i < joined->size(); ++i) {
            const std::string& name = t.join->columns[i];
            const std::string& v = (*joined)[i];
            if (v.empty()) {
                continue;
            }
            bool own = false;
            for (const auto& a : attrs) {
                own = own || a.first == name;
            }
            if (!own) {
                attrs.emplace_back(name, v);
            }
        }
    }
    e.attributes = Attributes(std::move(attrs));
    return e;
}

size_t join_entry_bytes(const std::string& key, const std::vector<std::string>& vals) {
    size_t n = 64 + key.capacity() + vals.capacity() * sizeof(std::string);
    for (const auto& v : vals) {
        n += v.capacity();
    }
    return n;
}

std::vector<int> parent_columns(const TableSpec& parent, const JoinSpec& j, const CsvReader& csv,
                                const std::string& child) {
    std::vector<int> idx;
    for (const auto& c : j.columns) {
        const int i = csv.column(c);
        if (i < 0) {
            throw JoinKeyError("table '" + child + "': join column '" + c + "' absent from " +
                               parent.name + " (" + csv.path().string() + ")");
        }
        idx.push_back(i);
    }
    return idx;
}

// Builds the hash map; returns nullopt when it would exceed the limit.
std::optional<JoinMap> build_join_map(const DatasetDescriptor& d, const JoinSpec& j,
                                      const std::string& child, std::atomic<std::int64_t>& room,
                                      TrackedBytes& held) {
    const TableSpec& parent = *d.find_table(j.table);
    CsvReader csv(d.base_dir / parent.file);
    const int key_idx = csv.column(j.on);
    if (key_idx < 0) {
        throw JoinKeyError("table '" + child + "': join column '" + j.on + "' absent from " +
                           parent.name + " (" + csv.path().string() + ")");
    }
    const std::vector<int> cols = parent_columns(parent, j, csv, child);
    JoinMap map;
    std::vector<std::string> row;
    while (csv.next(row)) {
        std::string& key = row[static_cast<size_t>(key_idx)];
        if (key.empty()) {
            continue;
        }
        std::vector<std::string> vals;
        vals.reserve(cols.size());
        for (int c : cols) {
            vals.push_back(row[static_cast<size_t>(c)]);
        }
        const auto bytes = static_cast<std::int64_t>(join_entry_bytes(key, vals));
        if (room.fetch_sub(bytes) < bytes) {
            room.fetch_add(bytes);
            room.fetch_add(held.bytes());
            held.reset();
            return std::nullopt;
        }
        held.add(bytes);
        auto [it, inserted] = map.try_emplace(std::move(key), std::move(vals));
        if (!inserted) {
            throw JoinKeyError("table '" + child + "': duplicate join key '" + it->first +
                               "' in parent " + parent.name);
        }
    }
    return map;
}

class IngestRun {
   public:
    IngestRun(const DatasetDescriptor& d, const IngestConfig& cfg, MemoryTracker& tracker,
              IngestStats& stats)
        : d_(d), cfg_(cfg), tracker_(tracker), stats_(stats) {}

    CacheManifest run() {
        const fs::path spill_dir = cfg_.out_dir / ".spill";
        auto runs = std::make_shared<RunSet>(spill_dir);
        build_joins();
        generate_runs(*runs);

        SortOptions merge_opts;
        merge_opts.merge_budget_bytes = cfg_.mem_budget_bytes / 8;
        merge_opts.spill_dir = spill_dir;
        std::vector<EventPartition> parts;
        {
            MergedStream<Event, evp::EventCodec, EventLess> merged(runs, merge_opts, &tracker_,
                                                                   &sort_stats_);
            TrackedBytes writer_buffer(&tracker_, 1 << 20);
            parts = write_partitions([&](Event& e) { return merged.next(e); },
                                     cfg_.target_partition_events, cfg_.out_dir);
        }
        runs.reset();
        std::error_code ec;
        fs::remove_all(spill_dir, ec);

        CacheManifest m;
        m.dataset_name = d_.dataset_name;
        m.descriptor_digest = sha256_hex(d_.source_text);
        m.target_partition_events = cfg_.target_partition_events;
        m.created_at = inputs_timestamp();
        for (auto& p : parts) {
            m.total_events += p.event_count;
            m.total_patients += p.patient_count;
        }
        m.partitions = std::move(parts);

        stats_.events_written = m.total_events;
        stats_.runs_written = sort_stats_.runs_written.load();
        stats_.merge_passes = sort_stats_.merge_passes.load();
        if (stats_.events_written != stats_.rows_read) {
            throw std::logic_error("event conservation violated: read " +
                                   std::to_string(stats_.rows_read) + " rows, wrote " +
                                   std::to_string(stats_.events_written) + " events");
        }
        return m;
    }

   private:
    template <typename Job>
    void parallel_for(size_t n, Job job) {
        std::vector<std::exception_ptr> errors(n);
        std::atomic<size_t> next{0};
        std::atomic<bool> failed{false};
        auto worker = [&](int w) {
            for (size_t i; !failed && (i = next.fetch_add(1)) < n;) {
                try {
                    job(i, w);
                } catch (...) {
                    errors[i] = std::current_exception();
                    failed = true;
                }
            }
        };
        const int threads = static_cast<int>(std::min<size_t>(static_cast<size_t>(cfg_.workers), n));
        if (threads <= 1) {
            worker(0);
        } else {
            std::vector<std::jthread> pool;
            for (int w = 0; w < threads; ++w) {
                pool.emplace_back(worker, w);
            }
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    void build_joins() {
        std::vector<const TableSpec*> children;
        for (const auto& t : d_.tables) {
            if (t.join && !joins_.contains(join_id(*t.join))) {
                auto src = std::make_unique<JoinSource>();
                src->spec = *t.join;
                src->held = TrackedBytes(&tracker_, 0);
                joins_.emplace(join_id(*t.join), std::move(src));
                children.push_back(&t);
            }
        }
        const size_t limit = cfg_.join_hash_limit_bytes ? cfg_.join_hash_limit_bytes
                                                        : cfg_.mem_budget_bytes / 4;
        std::atomic<std::int64_t> room{static_cast<std::int64_t>(limit)};
        parallel_for(children.size(), [&](size_t i, int) {
            JoinSource& src = *joins_.at(join_id(*children[i]->join));
            src.map = build_join_map(d_, src.spec, children[i]->name, room, src.held);
        });
    }

    void generate_runs(RunSet& runs) {
        const size_t share = cfg_.mem_budget_bytes / 2 / static_cast<size_t>(cfg_.workers);
        std::vector<std::uint64_t> rows(d_.tables.size(), 0);
        parallel_for(d_.tables.size(), [&](size_t i, int) {
            rows[i] = process_table(i, share, runs);
        });
        for (auto r : rows) {
            stats_.rows_read += r;
        }
    }

    std::uint64_t process_table(size_t index, size_t share, RunSet& runs) {
        const TableSpec& t = d_.tables[index];
        const JoinSource* join = t.join ? joins_.at(join_id(*t.join)).get() : nullptr;
        const bool sort_merge = join && !join->map;
        TrackedBytes csv_buffer(&tracker_, 1 << 16);
        CsvReader csv(d_.base_dir / t.file);
        const TableLayout layout = resolve_layout(t, csv);
        RunBuilder<Event, evp::EventCodec, EventLess> builder(
            runs, sort_merge ? share / 2 : share, &tracker_, &sort_stats_, std::uint64_t{index} << 40);
        std::uint64_t count = 0;
        std::vector<std::string> row;
        if (!sort_merge) {
            while (csv.next(row)) {
                const std::vector<std::string>* joined = nullptr;
                if (join) {
                    auto it = join->map->find(row[static_cast<size_t>(layout.join_key)]);
                    if (it != join->map->end()) {
                        joined = &it->second;
                    }
                }
                builder.add(make_event(t, layout, row, csv.row_index(), joined, csv));
                ++count;
            }
        } else {
            count = sort_merge_table(t, layout, csv, *join, share, builder);
        }
        builder.finish();
        return count;
    }

    std::uint64_t sort_merge_table(const TableSpec& t, const TableLayout& layout, CsvReader& csv,
                                   const JoinSource& join,
                                   size_t share, RunBuilder<Event, evp::EventCodec, EventLess>& out) {
        ++sort_merge_joins_;
        const fs::path spill = cfg_.out_dir / ".spill" / ("join-" + t.name);
        SortOptions opts;
        opts.run_budget_bytes = share / 4;
        opts.merge_budget_bytes = share / 8;

        const TableSpec& parent = *d_.find_table(join.spec.table);
        CsvReader pcsv(d_.base_dir / parent.file);
        const int pkey = pcsv.column(join.spec.on);
        if (pkey < 0) {
            throw JoinKeyError("table '" + t.name + "': join column '" + join.spec.on +
                               "' absent from " + parent.name);
        }
        const std::vector<int> pcols = parent_columns(parent, join.spec, pcsv, t.name);
        std::vector<std::string> prow;
        auto parents = external_sort<KeyedRow, KeyedRowCodec, KeyedRowLess>(
            [&](KeyedRow& r) {
                while (pcsv.next(prow)) {
                    if (prow[static_cast<size_t>(pkey)].empty()) {
                        continue;
                    }
                    r.key = prow[static_cast<size_t>(pkey)];
                    r.seq = pcsv.row_index();
                    r.cells.clear();
                    for (int c : pcols) {
                        r.cells.push_back(prow[static_cast<size_t>(c)]);
                    }
                    return true;
                }
                return false;
            },
            with_dir(opts, spill / "parent"), &tracker_);
        std::vector<std::string> crow;
        auto children = external_sort<KeyedRow, KeyedRowCodec, KeyedRowLess>(
            [&](KeyedRow& r) {
                if (!csv.next(crow)) {
                    return false;
                }
                r.key = crow[static_cast<size_t>(layout.join_key)];
                r.seq = csv.row_index();
                r.cells = crow;
                return true;
            },
            with_dir(opts, spill / "child"), &tracker_);

        KeyedRow p, c;
        bool have_p = parents.next(p);
        std::uint64_t count = 0;
        while (children.next(c)) {
            while (have_p && p.key < c.key) {
                KeyedRow nxt;
                have_p = parents.next(nxt);
                if (have_p && nxt.key == p.key) {
                    throw JoinKeyError("table '" + t.name + "': duplicate join key '" + p.key +
                                       "' in parent " + parent.name);
                }
                p = std::move(nxt);
            }
            const std::vector<std::string>* joined =
                have_p && !c.key.empty() && p.key == c.key ? &p.cells : nullptr;
            out.add(make_event(t, layout, c.cells, c.seq, joined, csv));
            ++count;
        }
        // remaining parents still need the duplicate check
        while (have_p) {
            KeyedRow nxt;
            have_p = parents.next(nxt);
            if (have_p && nxt.key == p.key) {
                throw JoinKeyError("table '" + t.name + "': duplicate join key '" + p.key +
                                   "' in parent " + parent.name);
            }
            p = std::move(nxt);
        }
        return count;
    }

    // Latest modification time among the input files, so identical inputs
    // give an identical manifest.
    std::string inputs_timestamp() const {
        std::int64_t latest = 0;
        for (const auto& t : d_.tables) {
            struct stat st {};
            if (::stat((d_.base_dir / t.file).c_str(), &st) == 0) {
                latest = std::max<std::int64_t>(latest, st.st_mtime);
            }
        }
        return format_timestamp(latest * kMicrosPerSecond);
    }

    const DatasetDescriptor& d_;
    const IngestConfig& cfg_;
    MemoryTracker& tracker_;
    IngestStats& stats_;
    SortStats sort_stats_;
    std::unordered_map<std::string, std::unique_ptr<JoinSource>> joins_;
    std::atomic<std::uint64_t> sort_merge_joins_{0};

   public:
    std::uint64_t sort_merge_joins() const { return sort_merge_joins_.load(); }
};

bool dir_has_entries(const fs::path& p) {
    return fs::exists(p) && fs::is_directory(p) && fs::directory_iterator(p) != fs::directory_iterator();
}

}  // namespace

CacheManifest ingest(const DatasetDescriptor& descriptor, const IngestConfig& cfg,
                     IngestStats* stats_out, MemoryTracker* tracker_in) {
    validate_ingest_config(cfg);
    IngestStats stats;
    MemoryTracker local_tracker;
    MemoryTracker& tracker = tracker_in ? *tracker_in : local_tracker;

    const std::string digest = sha256_hex(descriptor.source_text);
    const fs::path manifest_path = cfg.out_dir / kManifestFile;
    if (fs::exists(manifest_path)) {
        CacheManifest existing = manifest_from_json(read_file(manifest_path));
        if (existing.descriptor_digest == digest &&
            existing.target_partition_events == cfg.target_partition_events) {
            stats.cache_hit = true;
            stats.events_written = existing.total_events;
            if (stats_out) {
                *stats_out = stats;
            }
            return existing;
        }
        throw IoError("output directory " + cfg.out_dir.string() +
                      " holds a cache built from a different descriptor or partition size");
    }
    if (dir_has_entries(cfg.out_dir)) {
        throw IoError("output directory " + cfg.out_dir.string() + " is not empty");
    }
    for (const auto& t : descriptor.tables) {
        const fs::path p = descriptor.base_dir / t.file;
        if (!fs::is_regular_file(p)) {
            throw IoError("table '" + t.name + "': missing or unreadable file " + p.string());
        }
    }
    fs::create_directories(cfg.out_dir);

    CacheManifest m;
    try {
        IngestRun run(descriptor, cfg, tracker, stats);
        m = run.run();
        stats.sort_merge_joins = run.sort_merge_joins();
        write_file_atomic(manifest_path, manifest_to_json(m));
    } catch (...) {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(cfg.out_dir, ec)) {
            fs::remove_all(entry.path(), ec);
        }
        throw;
    }
    stats.buffer_high_water = tracker.high_water();
    if (stats_out) {
        *stats_out = stats;
    }
    return m;
}

}  // namespace ehr
