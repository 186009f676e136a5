#include <gtest/gtest.h>

#include "json.hpp"

#include "ehr/patient_store.hpp"
#include "test_util.hpp"

using ehr::testing::cli;
using ehr::testing::run_command;
using ehr::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, HelpExitsZeroEverywhere) {
    for (const char* sub : {"", "ingest", "patient", "task", "medcode", "medcode lookup",
                            "medcode ancestors", "medcode descendants", "medcode translate", "calib",
                            "calib temperature", "calib binning", "calib conformal", "synth", "bench"}) {
        const auto r = run_command(cli(std::string(sub) + " --help"));
        EXPECT_EQ(r.exit_code, 0) << sub << r.err;
        EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
    }
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run_command(cli("")).exit_code, 2);
    EXPECT_EQ(run_command(cli("frobnicate")).exit_code, 2);
    const auto r = run_command(cli("ingest --out x"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("--config"), std::string::npos) << r.err;
    EXPECT_EQ(run_command(cli("task --cache c --out o --task nope")).exit_code, 2);
    EXPECT_EQ(run_command(cli("ingest --config a --out b --workers zero")).exit_code, 2);
    const auto env = run_command("EHR_WORKERS=abc " + cli("task --cache c --out o --task los"));
    EXPECT_EQ(env.exit_code, 2);
    EXPECT_NE(env.err.find("EHR_WORKERS"), std::string::npos) << env.err;
}

TEST(Cli, RuntimeErrorsExitOne) {
    TempDir dir;
    const auto r = run_command(cli("ingest --config " + q(dir / "missing.yaml") + " --out " + q(dir / "c")));
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_NE(r.err.find("error:"), std::string::npos) << r.err;
    EXPECT_EQ(run_command(cli("patient --cache " + q(dir / "nocache") + " --id P1")).exit_code, 1);
}

TEST(Cli, IngestAndPatient) {
    TempDir dir;
    auto r = run_command(cli("ingest --config " + q(ehr::testing::fixture("dataset.yaml")) + " --out " +
                             q(dir / "cache")));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "cache" / "manifest.json"));
    const auto before = ehr::testing::tree_bytes(dir / "cache");

    r = run_command(cli("patient --cache " + q(dir / "cache") + " --id P1 --tables diagnoses"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    // Same events through the library, formatted independently.
    const auto store = ehr::Store::open(dir / "cache");
    ehr::EventFilter f;
    f.event_types = std::set<std::string>{"diagnoses"};
    std::string expect;
    for (const auto& e : store.get_events("P1", &f)) {
        expect += ehr::format_timestamp(*e.timestamp) + "\tdiagnoses\t" + std::to_string(e.seq);
        for (const auto& [k, v] : e.attributes) expect += "\t" + k + "=" + v;
        expect += "\n";
    }
    EXPECT_EQ(r.out, expect);
    EXPECT_NE(r.out.find("icd_code=I10"), std::string::npos);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);

    r = run_command(cli("patient --cache " + q(dir / "cache") +
                        " --id P1 --start '2150-06-01 00:00:00' --end '2151-01-01 00:00:00'"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
    EXPECT_EQ(run_command(cli("patient --cache " + q(dir / "cache") + " --id P1 --start nope --end nope"))
                  .exit_code,
              2);
    r = run_command(cli("patient --cache " + q(dir / "cache") + " --id P404"));
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(r.out.empty());

    r = run_command(cli("ingest --config " + q(ehr::testing::fixture("dataset.yaml")) + " --out " +
                        q(dir / "cache")));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(ehr::testing::tree_bytes(dir / "cache"), before);
}

TEST(Cli, SynthTaskCacheHit) {
    TempDir dir;
    auto r = run_command(cli("synth --out " + q(dir / "raw") + " --patients 40 --seed 3"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    r = run_command(cli("ingest --config " + q(dir / "raw" / "dataset.yaml") + " --out " + q(dir / "cache")));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const std::string task = "task --cache " + q(dir / "cache") + " --task mortality --workers 4 --out " +
                             q(dir / "samples");
    r = run_command(cli(task));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out.find("cache hit"), std::string::npos);
    ASSERT_TRUE(fs::exists(dir / "samples" / "samples.json"));
    ASSERT_TRUE(fs::exists(dir / "samples" / "shard-00000.smp"));
    const auto bytes = ehr::testing::tree_bytes(dir / "samples");
    const auto mtime = fs::last_write_time(dir / "samples" / "shard-00000.smp");
    r = run_command(cli(task));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("cache hit"), std::string::npos) << r.out;
    EXPECT_EQ(ehr::testing::tree_bytes(dir / "samples"), bytes);
    EXPECT_EQ(fs::last_write_time(dir / "samples" / "shard-00000.smp"), mtime);

    r = run_command("EHR_WORKERS=2 " + cli("task --cache " + q(dir / "cache") + " --task mortality --out " +
                                          q(dir / "samples2")));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(ehr::testing::tree_bytes(dir / "samples2"), bytes);
}

TEST(Cli, Medcode) {
    const std::string onto = "--ontology " + q(ehr::testing::fixture("icd_tree.csv")) + " --system ICD ";
    auto r = run_command(cli("medcode ancestors " + onto + "A01.0"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out, "A01\nA0\nA\nROOT\n");
    r = run_command(cli("medcode lookup " + onto + "A00"));
    EXPECT_EQ(r.out, "Cholera\n");
    r = run_command(cli("medcode descendants " + onto + "B"));
    EXPECT_EQ(r.out, "B1\nB10\nB11\n");
    EXPECT_EQ(run_command(cli("medcode ancestors " + onto + "ZZZ")).exit_code, 1);
    r = run_command(cli("medcode translate --map " + q(ehr::testing::fixture("ndc_atc.csv")) + " 00002-1"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("A01AA01"), std::string::npos);
    EXPECT_NE(r.out.find("A01AB02"), std::string::npos);
}

TEST(Cli, CalibReports) {
    TempDir dir;
    std::string cal = "p_0,p_1,p_2,label\n", test = cal;
    for (int i = 0; i < 200; ++i) {
        const int y = i % 3;
        std::string row;
        for (int c = 0; c < 3; ++c) row += (c == y ? "0.6," : "0.2,");
        cal += row + std::to_string(y) + "\n";
        test += row + std::to_string((i % 5 == 0) ? (y + 1) % 3 : y) + "\n";
    }
    ehr::testing::spit(dir / "cal.csv", cal);
    ehr::testing::spit(dir / "test.csv", test);
    const std::string io = " --cal " + q(dir / "cal.csv") + " --test " + q(dir / "test.csv");
    for (const char* method : {"temperature", "binning", "conformal"}) {
        const auto out = dir / (std::string(method) + ".json");
        const auto r = run_command(cli(std::string("calib ") + method + io + " --out " + q(out)));
        ASSERT_EQ(r.exit_code, 0) << method << r.err;
        const auto j = nlohmann::json::parse(ehr::testing::slurp(out));
        for (const char* key : {"ece", "coverage", "avg_set_size", "T", "alpha", "t"}) {
            EXPECT_TRUE(j.contains(key)) << method << " " << key;
        }
    }
    const auto j = nlohmann::json::parse(ehr::testing::slurp(dir / "conformal.json"));
    EXPECT_EQ(j["alpha"].get<double>(), 0.1);
    EXPECT_EQ(j["t"].get<double>(), 0.6);
    EXPECT_DOUBLE_EQ(j["coverage"].get<double>(), 0.8);
    EXPECT_EQ(run_command(cli("calib conformal" + io + " --alpha 0.001")).exit_code, 1);
    EXPECT_EQ(run_command(cli("calib conformal" + io + " --alpha 2")).exit_code, 2);
}
