#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ehr/descriptor.hpp"
#include "ehr/ehr_tasks.hpp"
#include "ehr/errors.hpp"
#include "ehr/ingest.hpp"
#include "ehr/io_util.hpp"
#include "ehr/medcode.hpp"
#include "ehr/patient_store.hpp"
#include "ehr/synth_bench.hpp"
#include "ehr/task_engine.hpp"
#include "ehr/timestamp.hpp"
#include "ehr/uncertainty_io.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int default_workers() {
    const char* env = std::getenv("EHR_WORKERS");
    if (!env || !*env) {
        return 1;
    }
    try {
        size_t used = 0;
        const int w = std::stoi(env, &used);
        if (used == std::string(env).size() && w >= 1) {
            return w;
        }
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("EHR_WORKERS must be a positive integer, got '") + env + "'");
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        ehr::write_file_atomic(out_path, text);
    }
}

std::string format_event(const ehr::Event& e) {
    std::string line = e.timestamp ? ehr::format_timestamp(*e.timestamp) : "-";
    line += '\t';
    line += e.event_type;
    line += '\t';
    line += std::to_string(e.seq);
    for (const auto& [k, v] : e.attributes.entries()) {
        line += '\t';
        line += k;
        line += '=';
        line += v;
    }
    return line;
}

ehr::Micros flag_time(const char* flag, const std::string& text, const std::string& format) {
    const auto t = ehr::parse_timestamp(text, format);
    if (!t) {
        throw UsageError(std::string(flag) + ": '" + text + "' does not match " + format);
    }
    return *t;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        out += i ? sep : "";
        out += v[i];
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EHR event cache, task and uncertainty toolkit"};
    app.require_subcommand(1);
    int workers = 1;

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Build the partitioned event cache from a descriptor");
    std::string ingest_config, ingest_out;
    size_t ingest_budget_mib = 256;
    std::uint64_t partition_events = ehr::kDefaultPartitionEvents;
    ingest_cmd->add_option("--config", ingest_config, "Dataset descriptor (.yaml)")->required();
    ingest_cmd->add_option("--out", ingest_out, "Cache directory")->required();
    ingest_cmd->add_option("--mem-budget", ingest_budget_mib, "Memory budget in MiB")->capture_default_str();
    ingest_cmd->add_option("--partition-events", partition_events, "Target events per partition")
        ->capture_default_str();
    ingest_cmd->add_option("--workers", workers, "Worker threads (default $EHR_WORKERS or 1)");

    // patient
    auto* patient_cmd = app.add_subcommand("patient", "Print one patient's events in canonical order");
    std::string patient_cache, patient_id, patient_start, patient_end;
    std::vector<std::string> patient_tables;
    std::string patient_format = "%Y-%m-%d %H:%M:%S";
    patient_cmd->add_option("--cache", patient_cache, "Cache directory")->required();
    patient_cmd->add_option("--id", patient_id, "Patient id")->required();
    patient_cmd->add_option("--tables", patient_tables, "Event types to keep")->delimiter(',');
    patient_cmd->add_option("--start", patient_start, "Inclusive start timestamp");
    patient_cmd->add_option("--end", patient_end, "Exclusive end timestamp");
    patient_cmd->add_option("--time-format", patient_format, "Format of --start/--end")->capture_default_str();

    // task
    auto* task_cmd = app.add_subcommand("task", "Apply a built-in task and write encoded sample shards");
    std::string task_cache, task_name, task_out;
    size_t batch_size = ehr::kDefaultBatchSize;
    std::uint64_t shard_samples = ehr::kDefaultShardSamples;
    std::uint64_t min_count = 1;
    task_cmd->add_option("--cache", task_cache, "Cache directory")->required();
    task_cmd->add_option("--task", task_name, "Task name")
        ->required()
        ->check(CLI::IsMember(ehr::builtin_task_names()));
    task_cmd->add_option("--out", task_out, "Sample set directory")->required();
    task_cmd->add_option("--workers", workers, "Worker threads (default $EHR_WORKERS or 1)");
    task_cmd->add_option("--batch-size", batch_size, "Patients per batch")->capture_default_str();
    task_cmd->add_option("--shard-samples", shard_samples, "Samples per shard")->capture_default_str();
    task_cmd->add_option("--min-count", min_count, "Minimum token count for vocabularies")
        ->capture_default_str();

    // medcode
    auto* medcode_cmd = app.add_subcommand("medcode", "Query code ontologies and cross-maps");
    medcode_cmd->require_subcommand(1);
    std::string onto_file, onto_system = "ontology", code;
    auto* lookup_cmd = medcode_cmd->add_subcommand("lookup", "Print a code's name");
    auto* ancestors_cmd = medcode_cmd->add_subcommand("ancestors", "Print a code's ancestors, nearest first");
    auto* descendants_cmd = medcode_cmd->add_subcommand("descendants", "Print a code's descendants, sorted");
    for (auto* c : {lookup_cmd, ancestors_cmd, descendants_cmd}) {
        c->add_option("--ontology", onto_file, "Ontology CSV (code,name,parent)")->required();
        c->add_option("--system", onto_system, "Coding system name");
        c->add_option("code", code, "Code")->required();
    }
    auto* translate_cmd = medcode_cmd->add_subcommand("translate", "Map codes through a cross-map");
    std::string map_file;
    std::vector<std::string> codes;
    translate_cmd->add_option("--map", map_file, "Cross-map CSV (source,target)")->required();
    translate_cmd->add_option("codes", codes, "Source codes")->required();

    // calib
    auto* calib_cmd = app.add_subcommand("calib", "Calibration and conformal prediction on score files");
    calib_cmd->require_subcommand(1);
    std::string cal_file, test_file, report_out;
    int bins = ehr::uq::kDefaultBins;
    double alpha = 0.1;
    auto* temp_cmd = calib_cmd->add_subcommand("temperature", "Fit temperature scaling");
    auto* binning_cmd = calib_cmd->add_subcommand("binning", "Fit top-label histogram binning");
    auto* conformal_cmd = calib_cmd->add_subcommand("conformal", "Fit a split-conformal label threshold");
    for (auto* c : {temp_cmd, binning_cmd, conformal_cmd}) {
        c->add_option("--cal", cal_file, "Calibration CSV (p_0..p_{K-1},label)")->required();
        c->add_option("--test", test_file, "Evaluation CSV (defaults to --cal)");
        c->add_option("--bins", bins, "ECE / binning bins")->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--out", report_out, "Report path (default stdout)");
    }
    conformal_cmd->add_option("--alpha", alpha, "Miscoverage level")->check(CLI::Range(0.0, 1.0))->capture_default_str();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic EHR dataset");
    ehr::synth::SynthConfig scfg;
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--patients", scfg.n_patients, "Patient count")->capture_default_str();
    synth_cmd->add_option("--seed", scfg.seed, "PRNG seed")->capture_default_str();
    synth_cmd->add_option("--death-rate", scfg.death_rate, "Per-admission death rate")->capture_default_str();
    synth_cmd->add_option("--min-admissions", scfg.admissions_per_patient.lo)->capture_default_str();
    synth_cmd->add_option("--max-admissions", scfg.admissions_per_patient.hi)->capture_default_str();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Time ingest + task and record peak memory");
    ehr::synth::BenchOptions bopts;
    std::string bench_config, bench_json;
    size_t bench_budget_mib = 256;
    bench_cmd->add_option("--config", bench_config, "Dataset descriptor")->required();
    bench_cmd->add_option("--work-dir", bopts.work_dir, "Scratch directory for cache and samples")->required();
    bench_cmd->add_option("--task", bopts.task_name, "Task name")
        ->capture_default_str()
        ->check(CLI::IsMember(ehr::builtin_task_names()));
    bench_cmd->add_option("--workers", workers, "Worker threads (default $EHR_WORKERS or 1)");
    bench_cmd->add_option("--mem-budget", bench_budget_mib, "Memory budget in MiB")->capture_default_str();
    bench_cmd->add_option("--partition-events", bopts.target_partition_events)->capture_default_str();
    bench_cmd->add_flag("--warm", bopts.warm, "Reuse an existing cache and sample set");
    bench_cmd->add_option("--json", bench_json, "Write the JSON report here");

    try {
        workers = default_workers();
        app.parse(argc, argv);
        if (workers < 1) {
            throw UsageError("--workers must be >= 1");
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*ingest_cmd) {
            ehr::IngestConfig cfg;
            cfg.mem_budget_bytes = ingest_budget_mib << 20;
            cfg.workers = workers;
            cfg.target_partition_events = partition_events;
            cfg.out_dir = ingest_out;
            ehr::IngestStats stats;
            const auto m = ehr::ingest(ehr::load_descriptor(ingest_config), cfg, &stats);
            if (stats.cache_hit) {
                std::cout << "cache hit\n";
            }
            std::cout << m.dataset_name << ": " << m.total_patients << " patients, " << m.total_events
                      << " events, " << m.partitions.size() << " partitions\n";
        } else if (*patient_cmd) {
            const auto store = ehr::open_store(patient_cache);
            ehr::EventFilter filter;
            if (!patient_tables.empty()) {
                filter.event_types = std::set<std::string>(patient_tables.begin(), patient_tables.end());
            }
            if (!patient_start.empty() || !patient_end.empty()) {
                if (patient_start.empty() || patient_end.empty()) {
                    std::cerr << "usage error: --start and --end go together\n";
                    return 2;
                }
                filter.time_range = ehr::TimeRange{flag_time("--start", patient_start, patient_format),
                                                   flag_time("--end", patient_end, patient_format)};
            }
            ehr::validate_filter(filter);
            for (const auto& e : store.get_events(patient_id, &filter)) {
                std::cout << format_event(e) << "\n";
            }
        } else if (*task_cmd) {
            const auto store = ehr::open_store(task_cache);
            ehr::TaskRunOptions opts;
            opts.workers = workers;
            opts.out_dir = task_out;
            opts.batch_size = batch_size;
            opts.samples_per_shard = shard_samples;
            opts.min_token_count = min_count;
            ehr::TaskRunStats stats;
            const auto m = ehr::set_task(store, *ehr::builtin_task(task_name), opts, &stats);
            if (stats.cache_hit) {
                std::cout << "cache hit\n";
            }
            std::cout << m.task_name << ": " << m.total_samples << " samples in " << m.shards.size()
                      << " shards (" << m.skipped << " skipped)\n";
        } else if (*medcode_cmd) {
            if (*translate_cmd) {
                const auto map = ehr::medcode::load_crossmap("source", "target", map_file);
                for (const auto& c : codes) {
                    const auto out = map.translate(c);
                    std::cout << c << "\t" << join(std::vector<std::string>(out.begin(), out.end()), ",")
                              << "\n";
                }
            } else {
                const auto graph = ehr::medcode::load_ontology(onto_system, onto_file);
                if (*lookup_cmd) {
                    const auto name = graph.lookup(code);
                    if (!name) {
                        throw ehr::UnknownCodeError("unknown code " + code + " in " + onto_system);
                    }
                    std::cout << *name << "\n";
                } else if (*ancestors_cmd) {
                    for (const auto& a : graph.ancestors(code)) {
                        std::cout << a << "\n";
                    }
                } else {
                    for (const auto& d : graph.descendants(code)) {
                        std::cout << d << "\n";
                    }
                }
            }
        } else if (*calib_cmd) {
            const auto cal = ehr::uq::read_score_csv(cal_file);
            const auto test = test_file.empty() ? cal : ehr::uq::read_score_csv(test_file);
            ehr::uq::CalibReport r;
            if (*temp_cmd) {
                r = ehr::uq::run_temperature(cal, test, bins);
            } else if (*binning_cmd) {
                r = ehr::uq::run_binning(cal, test, bins);
            } else {
                r = ehr::uq::run_conformal(cal, test, alpha, bins);
            }
            emit(ehr::uq::calib_report_json(r), report_out);
        } else if (*synth_cmd) {
            const auto desc = ehr::synth::generate(scfg, synth_out);
            std::cout << desc.string() << "\n";
        } else if (*bench_cmd) {
            bopts.workers = workers;
            bopts.mem_budget_bytes = bench_budget_mib << 20;
            const auto r = ehr::synth::run_bench(bench_config, bopts);
            std::cout << ehr::synth::report_table(r);
            if (!bench_json.empty()) {
                ehr::write_file_atomic(bench_json, ehr::synth::report_json(r));
            }
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ehr::Error& e) {
        std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
