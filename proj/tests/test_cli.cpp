#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "helpers.hpp"

using Catch::Matchers::ContainsSubstring;
using testutil::CliResult;
using testutil::read_file;
using testutil::run_cli;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) n += (c == '\n');
    return n;
}

std::size_t entry_count(const fs::path& dir) {
    if (!fs::exists(dir)) return 0;
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
    return n;
}

bool is_digest(const std::string& s) {
    if (s.size() != 7 + 64 || s.rfind("sha256:", 0) != 0) return false;
    for (std::size_t i = 7; i < s.size(); ++i)
        if (std::string("0123456789abcdef").find(s[i]) == std::string::npos) return false;
    return true;
}

const std::string kSynthConfig =
    "[synth]\n"
    "days = 30\n"
    "first_day = 2018-01-01\n"
    "seed = 5\n";

/// Generated data plus one finished backtest, shared across test cases.
struct StudyFixture {
    TempDir dir{"cli"};
    std::string data;      // synth output directory
    std::string config;    // backtest config path
    std::string out;       // backtest output directory
    std::string errors;    // errors.csv of the backtest

    StudyFixture() {
        data = dir.sub("data");
        const CliResult synth = run_cli("synth --config " +
                                        dir.file("synth.ini",
                                                 "[synth]\n"
                                                 "days = 47\n"
                                                 "first_day = 2018-01-01\n"
                                                 "seed = 5\n") +
                                        " --out " + data);
        if (synth.exit_code != 0) throw std::runtime_error("fixture synth failed: " + synth.output);
        config = dir.file("bt.ini",
                          "[data]\n"
                          "calendar = data/calendar.csv\n"
                          "exaa = data/exaa.csv\n"
                          "target = data/target.csv\n"
                          "[study]\n"
                          "in_sample_days = 7\n"
                          "rolls = 40\n"
                          "bootstrap_replicates = 20\n"
                          "seed = 3\n"
                          "models = naive, naive_exaa, ar\n"
                          "[models]\n"
                          "ar_p_max = 24\n");
        out = dir.sub("run1");
        const CliResult bt = run_cli("backtest --config " + config + " --out " + out);
        if (bt.exit_code != 0) throw std::runtime_error("fixture backtest failed: " + bt.output);
        errors = out + "/errors.csv";
    }
};

const StudyFixture& study() {
    static StudyFixture fixture;
    return fixture;
}

}  // namespace

TEST_CASE("command line surface") {
    CHECK(run_cli("--version").output.find("0.1.0") != std::string::npos);
    CHECK(run_cli("--version").exit_code == 0);
    CHECK(run_cli("").exit_code != 0);
    CHECK(run_cli("frobnicate").exit_code != 0);
    CHECK(run_cli("synth").exit_code != 0);  // --out is required
    CHECK(run_cli("backtest --out /tmp/x").exit_code != 0);  // --config is required
}

TEST_CASE("synthetic data generation writes a complete output set") {
    TempDir tmp("cli");
    const std::string cfg = tmp.file("synth.ini", kSynthConfig);
    const std::string out = tmp.sub("gen");

    const CliResult r = run_cli("synth --config " + cfg + " --out " + out);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);

    for (const char* name :
         {"calendar.csv", "exaa.csv", "target.csv", "spread.csv", "manifest.json"})
        CHECK(fs::exists(fs::path(out) / name));

    const std::string calendar = read_file(out + "/calendar.csv");
    CHECK(line_count(calendar) == 30);
    CHECK(calendar.rfind("2018-01-01,24\n", 0) == 0);
    CHECK(line_count(read_file(out + "/exaa.csv")) == 1 + 30 * 24);

    const auto manifest = nlohmann::json::parse(read_file(out + "/manifest.json"));
    CHECK(manifest["tool"] == "dayahead");
    CHECK(manifest["command"] == "synth");
    CHECK(manifest["seed"] == 5);
    CHECK(is_digest(manifest["config"]["digest"]));
    for (const char* name : {"calendar.csv", "exaa.csv", "target.csv", "spread.csv"})
        CHECK(is_digest(manifest["outputs"][name]));
    CHECK(manifest["wall_seconds"].get<double>() >= 0.0);
    CHECK(manifest["started_at"].get<std::string>().size() == 20);  // ISO UTC
}

TEST_CASE("synthetic data regenerates identically and follows the seed") {
    TempDir tmp("cli");
    const std::string cfg = tmp.file("synth.ini", kSynthConfig);

    REQUIRE(run_cli("synth --config " + cfg + " --out " + tmp.sub("a")).exit_code == 0);
    REQUIRE(run_cli("synth --config " + cfg + " --out " + tmp.sub("b")).exit_code == 0);
    for (const char* name : {"calendar.csv", "exaa.csv", "target.csv", "spread.csv"})
        CHECK(read_file(tmp.sub("a") + "/" + name) == read_file(tmp.sub("b") + "/" + name));

    // A seed override changes the draws and matches a config carrying that seed.
    REQUIRE(run_cli("synth --config " + cfg + " --seed 9 --out " + tmp.sub("c")).exit_code == 0);
    CHECK(read_file(tmp.sub("c") + "/target.csv") != read_file(tmp.sub("a") + "/target.csv"));
    const std::string cfg9 = tmp.file("synth9.ini",
                                      "[synth]\ndays = 30\nfirst_day = 2018-01-01\nseed = 9\n");
    REQUIRE(run_cli("synth --config " + cfg9 + " --out " + tmp.sub("d")).exit_code == 0);
    CHECK(read_file(tmp.sub("c") + "/target.csv") == read_file(tmp.sub("d") + "/target.csv"));
}

TEST_CASE("generated clock change days shape the files") {
    TempDir tmp("cli");
    const std::string cfg = tmp.file("synth.ini",
                                     "[synth]\n"
                                     "days = 14\n"
                                     "first_day = 2018-01-01\n"
                                     "short_days = 5\n"
                                     "long_days = 12\n"
                                     "seed = 2\n");
    const std::string out = tmp.sub("gen");
    REQUIRE(run_cli("synth --config " + cfg + " --out " + out).exit_code == 0);
    const std::string calendar = read_file(out + "/calendar.csv");
    CHECK_THAT(calendar, ContainsSubstring("2018-01-05,23\n"));
    CHECK_THAT(calendar, ContainsSubstring("2018-01-12,25\n"));
    CHECK(line_count(read_file(out + "/target.csv")) == 1 + 14 * 24);  // -1 +1 hours
}

TEST_CASE("generation failures leave nothing behind") {
    TempDir tmp("cli");
    SECTION("invalid dynamics") {
        const std::string cfg = tmp.file("synth.ini", "[synth]\ndays = 10\nexaa_ar = 1.2\n");
        const CliResult r = run_cli("synth --config " + cfg + " --out " + tmp.sub("gen"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("exaa_ar"));
        CHECK(entry_count(tmp.sub("gen")) == 0);
    }
    SECTION("unknown config key") {
        const std::string cfg = tmp.file("synth.ini", "[synth]\ndayz = 10\n");
        const CliResult r = run_cli("synth --config " + cfg + " --out " + tmp.sub("gen"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("unrecognised"));
        CHECK_THAT(r.output, ContainsSubstring("synth.dayz"));
    }
}

TEST_CASE("existing outputs are protected unless forced") {
    TempDir tmp("cli");
    const std::string cfg = tmp.file("synth.ini", kSynthConfig);
    const std::string out = tmp.sub("gen");
    REQUIRE(run_cli("synth --config " + cfg + " --out " + out).exit_code == 0);
    const std::string before = read_file(out + "/target.csv");

    const CliResult blocked = run_cli("synth --config " + cfg + " --out " + out);
    CHECK(blocked.exit_code != 0);
    CHECK_THAT(blocked.output, ContainsSubstring("already exists"));
    CHECK_THAT(blocked.output, ContainsSubstring("--force"));
    CHECK(read_file(out + "/target.csv") == before);

    const CliResult forced = run_cli("synth --config " + cfg + " --seed 9 --force --out " + out);
    CHECK(forced.exit_code == 0);
    CHECK(read_file(out + "/target.csv") != before);
}

TEST_CASE("failed runs remove their partial outputs") {
    TempDir tmp("cli");
    const std::string cfg = tmp.file("synth.ini", kSynthConfig);
    const std::string out = tmp.sub("gen");
    // A directory squatting on an output name makes that write fail after
    // earlier files have already been written.
    fs::create_directories(fs::path(out) / "target.csv");
    const CliResult r = run_cli("synth --config " + cfg + " --force --out " + out);
    CHECK(r.exit_code != 0);
    CHECK(entry_count(out) == 1);  // only the planted directory survives
    CHECK_FALSE(fs::exists(fs::path(out) / "calendar.csv"));
    CHECK_FALSE(fs::exists(fs::path(out) / "exaa.csv"));
}

TEST_CASE("backtest writes the full output set") {
    const StudyFixture& fx = study();

    for (const char* name : {"report.json", "metrics.csv", "hourly.csv", "partition_monthly.csv",
                             "partition_daily.csv", "partition_annual.csv", "errors.csv",
                             "manifest.json"})
        CHECK(fs::exists(fs::path(fx.out) / name));

    const auto report = nlohmann::json::parse(read_file(fx.out + "/report.json"));
    CHECK(report["study"]["rolls"] == 40);
    CHECK(report["study"]["in_sample_days"] == 7);
    CHECK(report["study"]["total_out_of_sample_hours"] == 960);
    CHECK(report["study"]["first_forecast_date"] == "2018-01-08");
    REQUIRE(report["models"].size() == 3);
    CHECK(report["models"][0]["name"] == "naive");
    CHECK(report["models"][1]["name"] == "naive_exaa");
    CHECK(report["models"][2]["name"] == "ar");
    CHECK(report["models"][2]["p_max"] == 24);
    for (const auto& m : report["models"]) {
        CHECK(m["mae"].get<double>() > 0.0);
        CHECK(m["rmse"].get<double>() >= m["mae"].get<double>());
        CHECK(m["mae_by_hour"].size() == 25);
    }

    const std::string errors = read_file(fx.errors);
    CHECK(line_count(errors) == 1 + 960);
    CHECK(errors.rfind("roll,day,date,hour,position,naive,naive_exaa,ar\n", 0) == 0);

    CHECK(line_count(read_file(fx.out + "/metrics.csv")) == 1 + 6);
    CHECK(line_count(read_file(fx.out + "/partition_daily.csv")) == 1 + 21);
    CHECK(line_count(read_file(fx.out + "/hourly.csv")) == 1 + 72);

    const auto manifest = nlohmann::json::parse(read_file(fx.out + "/manifest.json"));
    CHECK(manifest["command"] == "backtest");
    CHECK(manifest["seed"] == 3);
    CHECK(manifest["jobs"] == 1);
    for (const char* name : {"calendar", "exaa", "target"})
        CHECK(is_digest(manifest["inputs"][name]));
    CHECK(is_digest(manifest["outputs"]["report.json"]));
}

TEST_CASE("backtest reruns are byte identical and jobs neutral") {
    const StudyFixture& fx = study();
    TempDir tmp("cli");

    REQUIRE(run_cli("backtest --config " + fx.config + " --out " + tmp.sub("r2")).exit_code == 0);
    CHECK(read_file(tmp.sub("r2") + "/report.json") == read_file(fx.out + "/report.json"));
    CHECK(read_file(tmp.sub("r2") + "/errors.csv") == read_file(fx.errors));

    REQUIRE(run_cli("backtest --config " + fx.config + " --jobs 3 --out " + tmp.sub("r3"))
                .exit_code == 0);
    CHECK(read_file(tmp.sub("r3") + "/report.json") == read_file(fx.out + "/report.json"));
    CHECK(read_file(tmp.sub("r3") + "/errors.csv") == read_file(fx.errors));

    // The seed feeds only the bootstrap: errors stay put, bands move.
    REQUIRE(run_cli("backtest --config " + fx.config + " --seed 11 --out " + tmp.sub("r4"))
                .exit_code == 0);
    CHECK(read_file(tmp.sub("r4") + "/errors.csv") == read_file(fx.errors));
    CHECK(read_file(tmp.sub("r4") + "/report.json") != read_file(fx.out + "/report.json"));
}

TEST_CASE("backtest configuration is validated") {
    const StudyFixture& fx = study();
    TempDir tmp("cli");
    const std::string data = fs::path(fx.data).filename().string();

    auto config_with = [&](const std::string& study_lines) {
        return tmp.file("bt.ini",
                        "[data]\n"
                        "calendar = " + fx.data + "/calendar.csv\n"
                        "exaa = " + fx.data + "/exaa.csv\n"
                        "target = " + fx.data + "/target.csv\n"
                        "[study]\n"
                        "in_sample_days = 7\n" +
                        study_lines);
    };

    SECTION("duplicate model") {
        const CliResult r = run_cli("backtest --config " +
                                    config_with("rolls = 2\nmodels = ar, ar\n") + " --out " +
                                    tmp.sub("o"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("listed twice"));
    }
    SECTION("unknown model name") {
        const CliResult r = run_cli("backtest --config " +
                                    config_with("rolls = 2\nmodels = arma\n") + " --out " +
                                    tmp.sub("o"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("arma"));
    }
    SECTION("missing data key") {
        const std::string cfg = tmp.file("bt.ini",
                                         "[data]\ncalendar = " + fx.data + "/calendar.csv\n"
                                         "exaa = " + fx.data + "/exaa.csv\n");
        const CliResult r = run_cli("backtest --config " + cfg + " --out " + tmp.sub("o"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("data.target"));
    }
    SECTION("misspelled study key") {
        const CliResult r = run_cli("backtest --config " +
                                    config_with("rolls = 2\nrollz = 3\n") + " --out " +
                                    tmp.sub("o"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("study.rollz"));
    }
    SECTION("not enough data for the study") {
        const CliResult r = run_cli("backtest --config " + config_with("rolls = 100\n") +
                                    " --out " + tmp.sub("o"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("days of data"));
    }
    SECTION("nothing written on failure") {
        run_cli("backtest --config " + config_with("rolls = 100\n") + " --out " + tmp.sub("o"));
        CHECK(entry_count(tmp.sub("o")) == 0);
    }
}

TEST_CASE("missing hours impute from the prior week") {
    const StudyFixture& fx = study();
    TempDir tmp("cli");

    // Drop one mid-study row from the target file.
    const std::string marker = "2018-01-20 07:00";
    std::string target = read_file(fx.data + "/target.csv");
    const auto pos = target.find(marker);
    REQUIRE(pos != std::string::npos);
    const auto eol = target.find('\n', pos);
    target.erase(pos, eol - pos + 1);
    const std::string holed = tmp.file("target.csv", target);

    auto config_with = [&](const std::string& extra) {
        return tmp.file("bt" + std::to_string(extra.size()) + ".ini",
                        "[data]\n"
                        "calendar = " + fx.data + "/calendar.csv\n"
                        "exaa = " + fx.data + "/exaa.csv\n"
                        "target = " + holed + "\n" + extra +
                        "[study]\n"
                        "in_sample_days = 7\nrolls = 40\nbootstrap_replicates = 1\n"
                        "models = naive_exaa, ar\n[models]\nar_p_max = 24\n");
    };

    const CliResult ok = run_cli("backtest --config " + config_with("") + " --out " +
                                 tmp.sub("imputed"));
    INFO(ok.output);
    CHECK(ok.exit_code == 0);

    const CliResult strict = run_cli("backtest --config " + config_with("impute = false\n") +
                                     " --out " + tmp.sub("strict"));
    CHECK(strict.exit_code != 0);
    CHECK_THAT(strict.output, ContainsSubstring("missing"));
}

TEST_CASE("pairwise comparisons read the errors export") {
    const StudyFixture& fx = study();
    TempDir tmp("cli");

    SECTION("default pairs take the baseline against everything") {
        const CliResult r = run_cli("dm --errors " + fx.errors + " --out " + tmp.sub("d"));
        INFO(r.output);
        REQUIRE(r.exit_code == 0);
        const std::string csv = read_file(tmp.sub("d") + "/dm.csv");
        CHECK(line_count(csv) == 1 + 48);  // ar vs naive, ar vs naive_exaa
        CHECK(csv.rfind("model_a,model_b,hour,", 0) == 0);
        CHECK_THAT(csv, ContainsSubstring("\nar,naive,1,"));
        CHECK_THAT(csv, ContainsSubstring("\nar,naive_exaa,1,"));
        const auto manifest = nlohmann::json::parse(read_file(tmp.sub("d") + "/manifest.json"));
        CHECK(manifest["command"] == "dm");
        CHECK(is_digest(manifest["inputs"]["errors"]));
    }
    SECTION("explicit pairs and baseline override") {
        const std::string cfg = tmp.file("dm.ini",
                                         "[dm]\n"
                                         "errors = " + fx.errors + "\n"
                                         "pairs = naive:ar, ar:naive_exaa, naive_exaa:naive\n");
        REQUIRE(run_cli("dm --config " + cfg + " --out " + tmp.sub("d")).exit_code == 0);
        CHECK(line_count(read_file(tmp.sub("d") + "/dm.csv")) == 1 + 72);

        const std::string base_cfg = tmp.file("dmb.ini", "[dm]\nbaseline = naive\n");
        REQUIRE(run_cli("dm --config " + base_cfg + " --errors " + fx.errors + " --out " +
                        tmp.sub("e"))
                    .exit_code == 0);
        const std::string csv = read_file(tmp.sub("e") + "/dm.csv");
        CHECK(line_count(csv) == 1 + 48);
        CHECK_THAT(csv, ContainsSubstring("\nnaive,naive_exaa,1,"));
        CHECK_THAT(csv, ContainsSubstring("\nnaive,ar,1,"));
    }
    SECTION("a model against itself degenerates everywhere") {
        const std::string cfg = tmp.file("dm.ini", "[dm]\npairs = ar:ar\n");
        REQUIRE(run_cli("dm --config " + cfg + " --errors " + fx.errors + " --out " +
                        tmp.sub("d"))
                    .exit_code == 0);
        const std::string csv = read_file(tmp.sub("d") + "/dm.csv");
        CHECK(line_count(csv) == 1 + 24);
        std::size_t degenerate_rows = 0;
        for (std::size_t pos = csv.find('\n'); pos != std::string::npos;
             pos = csv.find('\n', pos + 1))
            if (csv.compare(pos - 4, 4, ",0,1") == 0) ++degenerate_rows;
        CHECK(degenerate_rows == 24);
    }
    SECTION("failure modes") {
        CliResult r = run_cli("dm --out " + tmp.sub("d"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("no errors file"));

        const std::string bad_pair = tmp.file("dm.ini", "[dm]\npairs = arnaive\n");
        r = run_cli("dm --config " + bad_pair + " --errors " + fx.errors + " --out " +
                    tmp.sub("d"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("malformed pair"));

        const std::string ghost = tmp.file("dmg.ini", "[dm]\npairs = ar:var2d\n");
        r = run_cli("dm --config " + ghost + " --errors " + fx.errors + " --out " + tmp.sub("d"));
        CHECK(r.exit_code != 0);
        CHECK_THAT(r.output, ContainsSubstring("not present in the errors file"));

        r = run_cli("dm --errors " + tmp.sub("nope.csv") + " --out " + tmp.sub("d"));
        CHECK(r.exit_code != 0);
    }
}
