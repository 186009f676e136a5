#include "ehr/task_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include "ehr/errors.hpp"
#include "json.hpp"

namespace ehr {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void validate_task(const TaskDefinition& task) {
    if (task.task_name.empty()) {
        throw SchemaError("task_name must be non-empty");
    }
    if (task.input_schema.empty() || task.output_schema.empty()) {
        throw SchemaError("task '" + task.task_name + "': schemas must be non-empty");
    }
    std::set<std::string> names;
    for (const auto& [f, k] : task.input_schema) {
        if (!names.insert(f).second) {
            throw SchemaError("task '" + task.task_name + "': duplicate field '" + f + "'");
        }
    }
    for (const auto& [f, k] : task.output_schema) {
        if (!names.insert(f).second) {
            throw SchemaError("task '" + task.task_name + "': field '" + f +
                              "' appears in both schemas");
        }
    }
    for (const auto& [f, labels] : task.fixed_label_spaces) {
        auto it = std::find_if(task.output_schema.begin(), task.output_schema.end(),
                               [&](const auto& p) { return p.first == f; });
        if (it == task.output_schema.end() ||
            (it->second != LabelKind::multiclass && it->second != LabelKind::multilabel)) {
            throw SchemaError("task '" + task.task_name + "': fixed label space for '" + f +
                              "' needs a multiclass or multilabel output field");
        }
    }
    if (!task.apply) {
        throw SchemaError("task '" + task.task_name + "': apply is not set");
    }
}

// ---------------------------------------------------------------------------
// manifest

std::string samples_manifest_to_json(const SampleSetManifest& m) {
    ojson j;
    j["task_name"] = m.task_name;
    j["task_digest"] = m.task_digest;
    j["source_cache_digest"] = m.source_cache_digest;
    j["format"] = "SMP1";
    j["input_schema"] = ojson::array();
    for (const auto& [f, k] : m.input_schema) {
        j["input_schema"].push_back({{"field", f}, {"kind", to_string(k)}});
    }
    j["output_schema"] = ojson::array();
    for (const auto& [f, k] : m.output_schema) {
        j["output_schema"].push_back({{"field", f}, {"kind", to_string(k)}});
    }
    j["shards"] = ojson::array();
    for (const auto& s : m.shards) {
        j["shards"].push_back({{"path", s.path}, {"sample_count", s.sample_count}});
    }
    j["processor_state_digests"] = ojson::object();
    for (const auto& [f, d] : m.processor_state_digests) {
        j["processor_state_digests"][f] = d;
    }
    j["total_samples"] = m.total_samples;
    j["skipped"] = m.skipped;
    j["dropped_labels"] = m.dropped_labels;
    j["label_stats"] = m.label_stats_json.empty() ? ojson::object() : ojson::parse(m.label_stats_json);
    return j.dump(2) + "\n";
}

SampleSetManifest samples_manifest_from_json(const std::string& text) {
    SampleSetManifest m;
    try {
        const ojson j = ojson::parse(text);
        m.task_name = j.at("task_name").get<std::string>();
        m.task_digest = j.at("task_digest").get<std::string>();
        m.source_cache_digest = j.at("source_cache_digest").get<std::string>();
        for (const auto& f : j.at("input_schema")) {
            m.input_schema.emplace_back(f.at("field").get<std::string>(),
                                        processor_kind_from_string(f.at("kind").get<std::string>()));
        }
        for (const auto& f : j.at("output_schema")) {
            m.output_schema.emplace_back(f.at("field").get<std::string>(),
                                         label_kind_from_string(f.at("kind").get<std::string>()));
        }
        for (const auto& s : j.at("shards")) {
            m.shards.push_back({s.at("path").get<std::string>(), s.at("sample_count").get<std::uint64_t>()});
        }
        for (const auto& [f, d] : j.at("processor_state_digests").items()) {
            m.processor_state_digests[f] = d.get<std::string>();
        }
        m.total_samples = j.at("total_samples").get<std::uint64_t>();
        m.skipped = j.at("skipped").get<std::uint64_t>();
        m.dropped_labels = j.at("dropped_labels").get<std::uint64_t>();
        m.label_stats_json = j.at("label_stats").dump();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("corrupt samples manifest: ") + e.what());
    }
    std::uint64_t total = 0;
    for (const auto& s : m.shards) {
        total += s.sample_count;
    }
    if (total != m.total_samples) {
        throw ManifestError("samples manifest total_samples does not match shard counts");
    }
    return m;
}

namespace {

// ---------------------------------------------------------------------------
// raw sample spill codec (values in schema order, no keys)

void put_str(ByteWriter& w, std::string_view s) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    w.bytes(s);
}

void put_tokens(ByteWriter& w, const TokenList& t) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.size()));
    for (const auto& s : t) {
        put_str(w, s);
    }
}

void encode_raw(const std::string& pid, const std::vector<const RawValue*>& values,
                std::string& out) {
    ByteWriter w(out);
    put_str(w, pid);
    for (const RawValue* v : values) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(v->index()));
        std::visit(
            [&](const auto& x) {
                using V = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<V, std::string>) {
                    put_str(w, x);
                } else if constexpr (std::is_same_v<V, bool>) {
                    w.put<std::uint8_t>(x ? 1 : 0);
                } else if constexpr (std::is_same_v<V, TokenList>) {
                    put_tokens(w, x);
                } else if constexpr (std::is_same_v<V, NestedTokens>) {
                    w.put<std::uint32_t>(static_cast<std::uint32_t>(x.size()));
                    for (const auto& inner : x) {
                        put_tokens(w, inner);
                    }
                } else {
                    w.put<V>(x);
                }
            },
            *v);
    }
}

std::string get_str(FileReader& in) {
    std::string s;
    in.read_into(s, in.get<std::uint32_t>());
    return s;
}

TokenList get_tokens(FileReader& in) {
    TokenList t(in.get<std::uint32_t>());
    for (auto& s : t) {
        s = get_str(in);
    }
    return t;
}

void decode_raw(FileReader& in, size_t n_values, std::string& pid, std::vector<RawValue>& values) {
    pid = get_str(in);
    values.clear();
    for (size_t i = 0; i < n_values; ++i) {
        switch (in.get<std::uint8_t>()) {
            case 0:
                values.emplace_back(get_str(in));
                break;
            case 1:
                values.emplace_back(in.get<std::int64_t>());
                break;
            case 2:
                values.emplace_back(in.get<double>());
                break;
            case 3:
                values.emplace_back(in.get<std::uint8_t>() != 0);
                break;
            case 4:
                values.emplace_back(get_tokens(in));
                break;
            case 5: {
                NestedTokens n(in.get<std::uint32_t>());
                for (auto& inner : n) {
                    inner = get_tokens(in);
                }
                values.emplace_back(std::move(n));
                break;
            }
            default:
                throw IoError("corrupt raw sample spill at byte " + std::to_string(in.bytes_read()));
        }
    }
}

const char* value_type_name(const RawValue& v) {
    static constexpr const char* kNames[] = {"string", "integer", "real", "bool", "token list",
                                             "nested token list"};
    return kNames[v.index()];
}

// Which RawValue alternative each processor kind accepts.
bool accepts(ProcessorKind k, const RawValue& v) {
    switch (k) {
        case ProcessorKind::sequence:
        case ProcessorKind::multi_hot:
            return std::holds_alternative<TokenList>(v);
        case ProcessorKind::nested_sequence:
            return std::holds_alternative<NestedTokens>(v);
        case ProcessorKind::raw:
            return std::holds_alternative<std::string>(v);
    }
    return false;
}

std::string shard_name(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "shard-%05zu.smp", i);
    return buf;
}

std::string task_digest(const TaskDefinition& task, const std::string& cache_digest,
                        const TaskRunOptions& opts) {
    ojson j;
    j["task"] = task.task_name;
    j["version"] = task.version;
    for (const auto& [f, k] : task.input_schema) {
        j["inputs"].push_back({f, to_string(k)});
    }
    for (const auto& [f, k] : task.output_schema) {
        j["outputs"].push_back({f, to_string(k)});
    }
    j["fixed"] = task.fixed_label_spaces;
    j["cache"] = cache_digest;
    j["samples_per_shard"] = opts.samples_per_shard;
    j["min_token_count"] = opts.min_token_count;
    return sha256_hex(j.dump());
}

struct FieldStats {
    std::map<std::string, std::uint64_t> counts;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    std::uint64_t n = 0;

    void merge(const FieldStats& o) {
        for (const auto& [k, c] : o.counts) {
            counts[k] += c;
        }
        min = std::min(min, o.min);
        max = std::max(max, o.max);
        n += o.n;
    }
};

struct WorkerOutput {
    fs::path raw_path;
    std::vector<std::uint64_t> offsets;  // byte offset of each raw sample
    std::vector<VocabCounts> counts;     // per schema field (inputs then outputs)
    std::uint64_t skipped = 0;
    std::uint64_t patients = 0;
    std::uint64_t peak_events = 0;
    std::exception_ptr error;
};

class TaskRun {
   public:
    TaskRun(const Store& store, const TaskDefinition& task, const TaskRunOptions& opts)
        : store_(store), task_(task), opts_(opts) {
        for (const auto& [f, k] : task_.input_schema) {
            fields_.push_back(f);
        }
        for (const auto& [f, k] : task_.output_schema) {
            fields_.push_back(f);
        }
    }

    SampleSetManifest run(const std::string& digest, const std::string& cache_digest,
                          TaskRunStats& stats) {
        const fs::path work = opts_.out_dir / ".work";
        fs::create_directories(work);

        // phase A: apply per contiguous batch range
        const std::uint64_t nb = store_.batch_count(opts_.batch_size);
        const auto W = static_cast<std::uint64_t>(opts_.workers);
        std::vector<WorkerOutput> outs(static_cast<size_t>(W));
        std::atomic<std::uint64_t> min_failed{W};
        {
            std::vector<std::jthread> pool;
            std::uint64_t first = 0;
            for (std::uint64_t w = 0; w < W; ++w) {
                const std::uint64_t count = nb / W + (w < nb % W ? 1 : 0);
                outs[w].raw_path = work / ("raw-" + std::to_string(w) + ".bin");
                auto job = [this, &outs, &min_failed, w, first, count] {
                    try {
                        phase_a(outs[w], first, count, w, min_failed);
                    } catch (...) {
                        outs[w].error = std::current_exception();
                        std::uint64_t cur = min_failed.load();
                        while (w < cur && !min_failed.compare_exchange_weak(cur, w)) {
                        }
                    }
                };
                if (W == 1) {
                    job();
                } else {
                    pool.emplace_back(job);
                }
                first += count;
            }
        }
        for (auto& o : outs) {
            if (o.error) {
                std::rethrow_exception(o.error);
            }
        }

        // phase B: global processor fit
        SampleSetManifest m;
        m.task_name = task_.task_name;
        m.task_digest = digest;
        m.source_cache_digest = cache_digest;
        m.input_schema = task_.input_schema;
        m.output_schema = task_.output_schema;
        fit_processors(outs, m);

        // phase C: encode fixed-size shards in parallel
        std::vector<std::uint64_t> starts;  // global index of each worker's first sample
        std::uint64_t total = 0;
        for (const auto& o : outs) {
            starts.push_back(total);
            total += o.offsets.size();
            m.skipped += o.skipped;
            stats.patients_visited += o.patients;
            stats.peak_batch_events = std::max(stats.peak_batch_events, o.peak_events);
        }
        m.total_samples = total;
        const std::uint64_t per = opts_.samples_per_shard;
        const std::uint64_t n_shards = (total + per - 1) / per;
        std::vector<FieldStats> shard_stats(static_cast<size_t>(n_shards) * task_.output_schema.size());
        std::vector<std::uint64_t> shard_dropped(static_cast<size_t>(n_shards), 0);
        std::vector<std::exception_ptr> errors(static_cast<size_t>(n_shards));
        {
            std::atomic<std::uint64_t> next{0};
            auto worker = [&] {
                for (std::uint64_t s; (s = next.fetch_add(1)) < n_shards;) {
                    try {
                        encode_shard(s, std::min(total, (s + 1) * per) - s * per, outs, starts,
                                     &shard_stats[static_cast<size_t>(s) * task_.output_schema.size()],
                                     shard_dropped[static_cast<size_t>(s)]);
                    } catch (...) {
                        errors[static_cast<size_t>(s)] = std::current_exception();
                    }
                }
            };
            const auto threads = std::min<std::uint64_t>(W, n_shards);
            if (threads <= 1) {
                worker();
            } else {
                std::vector<std::jthread> pool;
                for (std::uint64_t t = 0; t < threads; ++t) {
                    pool.emplace_back(worker);
                }
            }
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
        for (std::uint64_t s = 0; s < n_shards; ++s) {
            m.shards.push_back({shard_name(static_cast<size_t>(s)), std::min(total, (s + 1) * per) - s * per});
            m.dropped_labels += shard_dropped[static_cast<size_t>(s)];
        }
        m.label_stats_json = label_stats(shard_stats, n_shards);

        std::error_code ec;
        fs::remove_all(work, ec);
        return m;
    }

   private:
    void phase_a(WorkerOutput& out, std::uint64_t first_batch, std::uint64_t count, std::uint64_t w,
                 const std::atomic<std::uint64_t>& min_failed) {
        out.counts.resize(fields_.size());
        FileWriter raw(out.raw_path);
        if (count == 0) {
            raw.close();
            return;
        }
        PatientBatchReader reader = store_.batches(opts_.batch_size, first_batch, count);
        std::string buf;
        std::vector<const RawValue*> ordered(fields_.size());
        TaskContext ctx;
        while (auto batch = reader.next()) {
            if (min_failed.load() < w) {
                break;  // an earlier range already failed; its error wins
            }
            std::int64_t batch_bytes = 0;
            for (const auto& rec : batch->records) {
                for (const auto& e : rec.events) {
                    batch_bytes += static_cast<std::int64_t>(approx_event_bytes(e));
                }
            }
            TrackedBytes held(opts_.tracker, batch_bytes);
            for (const auto& rec : batch->records) {
                ++out.patients;
                std::vector<RawSample> samples;
                try {
                    samples = task_.apply(rec, ctx);
                } catch (const std::exception& e) {
                    throw TaskError("task '" + task_.task_name + "' failed on patient " +
                                    rec.patient_id + ": " + e.what());
                }
                for (auto& s : samples) {
                    if (s.patient_id.empty()) {
                        s.patient_id = rec.patient_id;
                    }
                    check_and_count(s, rec.patient_id, out, ordered);
                    out.offsets.push_back(raw.offset());
                    buf.clear();
                    encode_raw(s.patient_id, ordered, buf);
                    raw.write(buf);
                }
            }
        }
        out.skipped = ctx.skipped;
        out.peak_events = reader.peak_buffered_events();
        raw.close();
    }

    void check_and_count(const RawSample& s, const std::string& pid, WorkerOutput& out,
                         std::vector<const RawValue*>& ordered) {
        if (s.values.size() != fields_.size()) {
            for (const auto& [k, v] : s.values) {
                if (std::find(fields_.begin(), fields_.end(), k) == fields_.end()) {
                    throw SchemaError("task '" + task_.task_name + "', patient " + pid +
                                      ": sample has field '" + k + "' outside the schema");
                }
            }
        }
        for (size_t i = 0; i < fields_.size(); ++i) {
            auto it = s.values.find(fields_[i]);
            if (it == s.values.end()) {
                throw SchemaError("task '" + task_.task_name + "', patient " + pid +
                                  ": sample misses field '" + fields_[i] + "'");
            }
            ordered[i] = &it->second;
            const RawValue& v = it->second;
            if (i < task_.input_schema.size()) {
                const ProcessorKind k = task_.input_schema[i].second;
                if (!accepts(k, v)) {
                    throw SchemaError("task '" + task_.task_name + "', patient " + pid +
                                      ": field '" + fields_[i] + "' of kind " +
                                      std::string(to_string(k)) + " got a " + value_type_name(v));
                }
                if (k == ProcessorKind::nested_sequence) {
                    for (const auto& inner : std::get<NestedTokens>(v)) {
                        out.counts[i].add_all(inner);
                    }
                } else if (k != ProcessorKind::raw) {
                    out.counts[i].add_all(std::get<TokenList>(v));
                }
            } else {
                const auto& [name, kind] = task_.output_schema[i - task_.input_schema.size()];
                if ((kind == LabelKind::multiclass || kind == LabelKind::multilabel) &&
                    !task_.fixed_label_spaces.contains(name)) {
                    out.counts[i].add_all(label_tokens(v));
                }
            }
        }
    }

    void fit_processors(const std::vector<WorkerOutput>& outs, SampleSetManifest& m) {
        for (size_t i = 0; i < fields_.size(); ++i) {
            std::vector<VocabCounts> partials;
            for (const auto& o : outs) {
                if (i < o.counts.size()) {
                    partials.push_back(o.counts[i]);
                }
            }
            std::string state;
            if (i < task_.input_schema.size()) {
                const ProcessorKind k = task_.input_schema[i].second;
                vocabs_.push_back(fit_vocab(partials, opts_.min_token_count));
                state = vocab_state_json(fields_[i], k, vocabs_.back());
            } else {
                const auto& [name, kind] = task_.output_schema[i - task_.input_schema.size()];
                if (auto fixed = task_.fixed_label_spaces.find(name);
                    fixed != task_.fixed_label_spaces.end()) {
                    spaces_.emplace_back(fixed->second);
                } else {
                    spaces_.push_back(fit_label_space(partials));
                }
                state = label_state_json(name, kind, spaces_.back());
            }
            write_file_atomic(opts_.out_dir / ("procstate." + fields_[i] + ".json"), state);
            m.processor_state_digests[fields_[i]] = sha256_hex(state);
        }
    }

    void encode_shard(std::uint64_t shard, std::uint64_t count, const std::vector<WorkerOutput>& outs,
                      const std::vector<std::uint64_t>& starts, FieldStats* stats,
                      std::uint64_t& dropped) {
        const std::uint64_t begin = shard * opts_.samples_per_shard;
        size_t w = static_cast<size_t>(std::upper_bound(starts.begin(), starts.end(), begin) - starts.begin() - 1);
        while (outs[w].offsets.empty() || begin - starts[w] >= outs[w].offsets.size()) {
            ++w;
        }
        std::optional<FileReader> in;
        in.emplace(outs[w].raw_path);
        std::uint64_t local = begin - starts[w];
        in->seek(outs[w].offsets[static_cast<size_t>(local)]);

        smp::ShardWriter writer(opts_.out_dir / shard_name(static_cast<size_t>(shard)));
        std::string pid;
        std::vector<RawValue> values;
        const size_t n_in = task_.input_schema.size();
        for (std::uint64_t i = 0; i < count; ++i) {
            while (local >= outs[w].offsets.size()) {
                ++w;
                local = 0;
                if (!outs[w].offsets.empty()) {
                    in.emplace(outs[w].raw_path);
                }
            }
            decode_raw(*in, fields_.size(), pid, values);
            ++local;
            smp::EncodedSample s;
            s.patient_id = pid;
            for (size_t f = 0; f < n_in; ++f) {
                const RawValue& v = values[f];
                switch (task_.input_schema[f].second) {
                    case ProcessorKind::sequence:
                        s.inputs.emplace_back(encode_sequence(std::get<TokenList>(v), vocabs_[f]));
                        break;
                    case ProcessorKind::nested_sequence:
                        s.inputs.emplace_back(encode_nested(std::get<NestedTokens>(v), vocabs_[f]));
                        break;
                    case ProcessorKind::multi_hot:
                        s.inputs.emplace_back(encode_multihot(std::get<TokenList>(v), vocabs_[f]));
                        break;
                    case ProcessorKind::raw:
                        s.inputs.emplace_back(std::get<std::string>(v));
                        break;
                }
            }
            for (size_t f = 0; f < task_.output_schema.size(); ++f) {
                const LabelKind kind = task_.output_schema[f].second;
                const LabelSpace& space = spaces_[f];
                EncodedLabel label;
                try {
                    label = encode_label(values[n_in + f], kind, space, &dropped);
                } catch (const LabelError& e) {
                    throw LabelError("patient " + pid + ", field '" + task_.output_schema[f].first +
                                     "': " + e.what());
                }
                FieldStats& st = stats[f];
                ++st.n;
                switch (kind) {
                    case LabelKind::binary:
                        ++st.counts[std::to_string(std::get<std::uint8_t>(label))];
                        break;
                    case LabelKind::multiclass:
                        ++st.counts[space.labels()[std::get<std::uint32_t>(label)]];
                        break;
                    case LabelKind::multilabel: {
                        const Bitset& b = std::get<Bitset>(label);
                        for (std::uint32_t k = 0; k < b.size; ++k) {
                            if (b.test(k)) {
                                ++st.counts[space.labels()[k]];
                            }
                        }
                        break;
                    }
                    case LabelKind::regression: {
                        const double d = std::get<double>(label);
                        st.min = std::min(st.min, d);
                        st.max = std::max(st.max, d);
                        break;
                    }
                }
                s.labels.push_back(std::move(label));
            }
            writer.add(s);
        }
        writer.close();
    }

    std::string label_stats(const std::vector<FieldStats>& per_shard, std::uint64_t n_shards) const {
        ojson j = ojson::object();
        const size_t n_out = task_.output_schema.size();
        for (size_t f = 0; f < n_out; ++f) {
            FieldStats total;
            for (std::uint64_t s = 0; s < n_shards; ++s) {
                total.merge(per_shard[static_cast<size_t>(s) * n_out + f]);
            }
            const auto& [name, kind] = task_.output_schema[f];
            ojson fj;
            fj["kind"] = to_string(kind);
            fj["count"] = total.n;
            if (kind == LabelKind::regression) {
                fj["min"] = total.n ? total.min : 0.0;
                fj["max"] = total.n ? total.max : 0.0;
            } else {
                fj["class_counts"] = total.counts;
            }
            j[name] = fj;
        }
        return j.dump();
    }

    const Store& store_;
    const TaskDefinition& task_;
    const TaskRunOptions& opts_;
    std::vector<std::string> fields_;
    std::vector<Vocabulary> vocabs_;
    std::vector<LabelSpace> spaces_;
};

bool dir_has_entries(const fs::path& p) {
    return fs::exists(p) && fs::is_directory(p) && fs::directory_iterator(p) != fs::directory_iterator();
}

}  // namespace

SampleSetManifest set_task(const Store& store, const TaskDefinition& task,
                           const TaskRunOptions& opts, TaskRunStats* stats_out) {
    validate_task(task);
    if (opts.workers < 1) {
        throw ValidationError("workers must be >= 1");
    }
    if (opts.samples_per_shard < 1) {
        throw ValidationError("samples_per_shard must be >= 1");
    }
    if (opts.out_dir.empty()) {
        throw ValidationError("out_dir is required");
    }
    TaskRunStats stats;
    const std::string cache_digest = sha256_hex(manifest_to_json(store.manifest()));
    const std::string digest = task_digest(task, cache_digest, opts);
    const fs::path manifest_path = opts.out_dir / kSamplesManifestFile;
    if (fs::exists(manifest_path)) {
        SampleSetManifest existing = samples_manifest_from_json(read_file(manifest_path));
        if (existing.task_digest == digest) {
            stats.cache_hit = true;
            if (stats_out) {
                *stats_out = stats;
            }
            return existing;
        }
        throw IoError("output directory " + opts.out_dir.string() +
                      " holds samples of a different task or cache");
    }
    if (dir_has_entries(opts.out_dir)) {
        throw IoError("output directory " + opts.out_dir.string() + " is not empty");
    }
    fs::create_directories(opts.out_dir);
    SampleSetManifest m;
    try {
        TaskRun run(store, task, opts);
        m = run.run(digest, cache_digest, stats);
        write_file_atomic(manifest_path, samples_manifest_to_json(m));
    } catch (...) {
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(opts.out_dir, ec)) {
            fs::remove_all(entry.path(), ec);
        }
        throw;
    }
    if (stats_out) {
        *stats_out = stats;
    }
    return m;
}

SampleSet SampleSet::open(const fs::path& dir) {
    const fs::path mpath = dir / kSamplesManifestFile;
    if (!fs::is_regular_file(mpath)) {
        throw ManifestError("missing samples manifest " + mpath.string());
    }
    SampleSet s;
    s.manifest = samples_manifest_from_json(read_file(mpath));
    for (const auto& [f, k] : s.manifest.input_schema) {
        s.vocabularies[f] = vocab_from_state_json(read_file(dir / ("procstate." + f + ".json")));
    }
    for (const auto& [f, k] : s.manifest.output_schema) {
        s.label_spaces[f] = label_space_from_state_json(read_file(dir / ("procstate." + f + ".json")));
    }
    return s;
}

std::vector<smp::EncodedSample> SampleSet::read_all(const fs::path& dir) const {
    std::vector<smp::EncodedSample> out;
    for (const auto& sh : manifest.shards) {
        auto part = smp::read_shard(dir / sh.path, manifest.input_schema.size(),
                                    manifest.output_schema.size());
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

Split hash_split(std::string_view patient_id, double train_frac, double val_frac,
                 std::string_view salt) {
    if (!(train_frac >= 0 && val_frac >= 0 && train_frac + val_frac <= 1.0)) {
        throw ValidationError("split fractions must be non-negative and sum to at most 1");
    }
    const std::string hex = sha256_hex(std::string(salt) + std::string(patient_id));
    const double u = static_cast<double>(std::stoull(hex.substr(0, 16), nullptr, 16) >> 11) * 0x1.0p-53;
    if (u < train_frac) {
        return Split::train;
    }
    return u < train_frac + val_frac ? Split::val : Split::test;
}

}  // namespace ehr
