#include <doctest.h>

#include "cli.hpp"

#include <onestep/io.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

namespace fs = std::filesystem;
using onestep::read_text;
using onestep::cli::run;

namespace {

fs::path root()
{
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / ("onestep_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string out_dir(const std::string& name) { return (root() / name).string(); }

// y = 3 x1 - 2 x3 + noise, plus a constant column
std::string data_file(int p = 5, const std::string& name = "data.csv")
{
    const fs::path path = root() / name;
    if (fs::exists(path)) return path.string();
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0.0, 1.0);
    std::ofstream f(path);
    for (int j = 0; j < p; ++j) f << "x" << j + 1 << ",";
    f << "c,y\n";
    for (int i = 0; i < 60; ++i) {
        std::vector<double> x(static_cast<std::size_t>(p));
        for (auto& v : x) v = z(rng);
        for (double v : x) f << v << ",";
        f << "1," << 3.0 * x[0] - 2.0 * x[2 % p] + z(rng) << "\n";
    }
    return path.string();
}

nlohmann::json json_at(const std::string& dir, const std::string& file)
{
    return nlohmann::json::parse(read_text(fs::path(dir) / file));
}

} // namespace

TEST_SUITE("cli")
{
    TEST_CASE("fit writes an estimate and a config echo")
    {
        const auto out = out_dir("fit");
        REQUIRE(run({"fit", "--data", data_file(), "--penalty", "scad", "--steps", "1", "--out", out}) == 0);
        const auto est = json_at(out, "estimate.json");
        CHECK(est["algorithm"] == "one_step_lla");
        CHECK(est["penalty"]["family"] == "SCAD");
        CHECK(est["beta"].size() == 5);
        CHECK(est["active_set"].size() >= 2);
        CHECK(est["beta"][0].get<double>() == doctest::Approx(3.0).epsilon(0.2));
        const auto cfg = json_at(out, "config.json");
        CHECK(cfg["command"] == "fit");
        CHECK(cfg["seed"] == 0);
        CHECK(cfg["options"]["tuning"] == "cv");
        CHECK(json_at(out, "manifest.json")["dropped"][0] == "c");
    }

    TEST_CASE("lambda above lambda_max gives an empty model")
    {
        for (const std::string pen : {"lasso", "scad", "mcp", "adalasso"}) {
            const auto out = out_dir("fit_big_" + pen);
            REQUIRE(run({"fit", "--data", data_file(), "--penalty", pen, "--lambda", "1e6", "--out", out}) == 0);
            CHECK(json_at(out, "estimate.json")["active_set"].empty());
        }
        const auto probe = out_dir("fit_probe");
        REQUIRE(run({"fit", "--data", data_file(), "--penalty", "lasso", "--lambda", "0", "--out", probe}) == 0);
        const double lmax = json_at(probe, "estimate.json")["lambda_max"];
        const auto at = out_dir("fit_at_max");
        REQUIRE(run({"fit", "--data", data_file(), "--penalty", "lasso", "--lambda", std::to_string(lmax * 1.000001),
                     "--out", at}) == 0);
        CHECK(json_at(at, "estimate.json")["active_set"].empty());
    }

    TEST_CASE("fit variants")
    {
        const std::vector<std::vector<std::string>> variants{
            {"--penalty", "mcp", "--bic"},
            {"--penalty", "scad", "--steps", "3", "--initial", "ridge"},
            {"--penalty", "scad", "--algorithm", "lqa", "--initial", "ols"},
            {"--penalty", "adalasso", "--gamma-cv"},
            {"--penalty", "adalasso", "--gamma", "2", "--initial", "enet"},
            {"--penalty", "bridge", "--lambda", "0.5", "--epsilon", "0.01"},
            {"--penalty", "log", "--lambda", "0.5", "--epsilon", "0.1"},
        };
        int i = 0;
        for (const auto& v : variants) {
            const auto out = out_dir("variant" + std::to_string(i++));
            std::vector<std::string> args{"fit", "--data", data_file(), "--out", out};
            args.insert(args.end(), v.begin(), v.end());
            CHECK(run(args) == 0);
            CHECK(fs::exists(fs::path(out) / "estimate.json"));
        }
    }

    TEST_CASE("path, subset and recovery artifacts")
    {
        const auto p = out_dir("path");
        REQUIRE(run({"path", "--data", data_file(), "--out", p}) == 0);
        const auto csv = read_text(fs::path(p) / "path.csv");
        CHECK(csv.rfind("lambda,active_size,beta_1,beta_2,beta_3,beta_4,beta_5\n", 0) == 0);

        const auto s = out_dir("subset");
        REQUIRE(run({"subset", "--data", data_file(), "--lambda", "2", "--out", s}) == 0);
        const auto sub = json_at(s, "subset.json");
        CHECK(sub["subset"] == nlohmann::json::array({0, 2}));
        CHECK(sub["subsets_examined"] == 32);

        const auto r = out_dir("recovery");
        REQUIRE(run({"recovery", "--n", "64", "--p", "10", "--k", "1", "--instances", "4", "--out", r}) == 0);
        const auto lines = read_text(fs::path(r) / "recovery.jsonl");
        CHECK(std::count(lines.begin(), lines.end(), '\n') == 4);
        const auto first = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
        for (const char* key : {"mu", "k", "bound_satisfied", "recovered", "l1_support", "l0_support"})
            CHECK(first.contains(key));
    }

    TEST_CASE("compare runs the battery on a file")
    {
        const auto out = out_dir("compare");
        REQUIRE(run({"compare", "--data", data_file(), "--out", out, "--threads", "3"}) == 0);
        const auto j = json_at(out, "compare.json");
        CHECK(j["estimators"].size() == 7);
        for (const auto& e : j["estimators"]) CHECK_FALSE(e["failed"].get<bool>());
        const auto csv = read_text(fs::path(out) / "compare.csv");
        CHECK(csv.rfind("estimator,lambda,active_size,intercept,x1,x2,x3,x4,x5\n", 0) == 0);
        const auto again = out_dir("compare1");
        REQUIRE(run({"compare", "--data", data_file(), "--out", again, "--threads", "1"}) == 0);
        CHECK(read_text(fs::path(again) / "compare.csv") == csv);
    }

    TEST_CASE("simulate is reproducible across runs and thread counts")
    {
        const auto a = out_dir("sim_a"), b = out_dir("sim_b"), c = out_dir("sim_c");
        REQUIRE(run({"simulate", "--reps", "4", "--seed", "7", "--out", a}) == 0);
        REQUIRE(run({"simulate", "--reps", "4", "--seed", "7", "--out", b}) == 0);
        REQUIRE(run({"simulate", "--reps", "4", "--seed", "7", "--threads", "4", "--out", c}) == 0);
        for (const char* f : {"report.json", "summary.csv"}) {
            CHECK(read_text(fs::path(a) / f) == read_text(fs::path(b) / f));
            CHECK(read_text(fs::path(a) / f) == read_text(fs::path(c) / f));
        }
        auto cfg_a = json_at(a, "config.json"), cfg_b = json_at(b, "config.json");
        for (auto* j : {&cfg_a, &cfg_b}) {
            j->erase("args");
            j->erase("out");
        }
        CHECK(cfg_a == cfg_b);

        const auto d = out_dir("sim_d");
        REQUIRE(run({"simulate", "--from-report", (fs::path(a) / "report.json").string(), "--out", d}) == 0);
        CHECK(read_text(fs::path(d) / "summary.csv") == read_text(fs::path(a) / "summary.csv"));
    }

    TEST_CASE("ONESTEP_THREADS is read and overridden")
    {
        ::setenv("ONESTEP_THREADS", "3", 1);
        const auto a = out_dir("env_a"), b = out_dir("env_b");
        REQUIRE(run({"simulate", "--reps", "2", "--out", a}) == 0);
        CHECK(json_at(a, "config.json")["threads"] == 3);
        REQUIRE(run({"simulate", "--reps", "2", "--threads", "1", "--out", b}) == 0);
        CHECK(json_at(b, "config.json")["threads"] == 1);
        CHECK(read_text(fs::path(a) / "report.json") == read_text(fs::path(b) / "report.json"));
        ::setenv("ONESTEP_THREADS", "zero", 1);
        CHECK(run({"simulate", "--reps", "2", "--out", out_dir("env_c")}) == 1);
        ::unsetenv("ONESTEP_THREADS");
    }

    TEST_CASE("scenario and battery files")
    {
        const fs::path scen = root() / "scenario.json";
        std::ofstream(scen) << R"({"n": 60, "beta_star": [2, 0, 0, 1], "rho": 0.3, "sigma": 1.0})";
        const fs::path bat = root() / "battery.json";
        std::ofstream(bat) << R"([{"name": "lasso_cv", "kind": "lasso", "penalty": "L1", "shape": 0}])";
        const auto out = out_dir("sim_files");
        REQUIRE(run({"simulate", "--reps", "3", "--scenario", scen.string(), "--battery", bat.string(), "--out", out}) == 0);
        const auto rep = json_at(out, "report.json");
        CHECK(rep["config"]["scenario"]["p"] == 4);
        CHECK(rep["per_rep"].size() == 3);

        const fs::path none = root() / "empty_battery.json";
        std::ofstream(none) << "[]";
        const auto e = out_dir("sim_empty");
        REQUIRE(run({"simulate", "--reps", "2", "--battery", none.string(), "--out", e}) == 0);
        CHECK(read_text(fs::path(e) / "summary.csv") == "estimator,mean_ME,median_ME,mean_FP,mean_FN,mean_active_size\n");

        const fs::path bad = root() / "bad.json";
        std::ofstream(bad) << "{not json";
        CHECK(run({"simulate", "--scenario", bad.string(), "--out", out_dir("sim_bad")}) == 1);
        CHECK(run({"simulate", "--battery", bad.string(), "--out", out_dir("sim_bad2")}) == 1);
    }

    TEST_CASE("exit codes")
    {
        // 0: help
        CHECK(run({"--help"}) == 0);
        // 1: usage and validation
        CHECK(run({}) == 1);
        CHECK(run({"bogus"}) == 1);
        CHECK(run({"fit", "--out", out_dir("e1")}) == 1);
        CHECK(run({"fit", "--data", "/nonexistent.csv", "--out", out_dir("e2")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--penalty", "ridge", "--out", out_dir("e3")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--lambda", "1", "--cv", "--out", out_dir("e4")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--lambda", "-1", "--out", out_dir("e5")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--response", "nope", "--out", out_dir("e6")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--penalty", "scad", "--shape", "1.5", "--out", out_dir("e7")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--family", "binomial", "--out", out_dir("e8")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--steps", "0", "--out", out_dir("e9")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--gamma-cv", "--out", out_dir("e10")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--out", "/proc/onestep_unwritable"}) == 1);
        CHECK(run({"simulate", "--reps", "0", "--out", out_dir("e11")}) == 1);
        CHECK(run({"subset", "--data", data_file(), "--out", out_dir("e12")}) == 1);
        CHECK(run({"recovery", "--k", "0", "--out", out_dir("e13")}) == 1);
        CHECK(run({"path", "--data", data_file(), "--penalty", "scad", "--out", out_dir("e14")}) == 1);
        CHECK(run({"fit", "--data", data_file(), "--threads", "0", "--out", out_dir("e15")}) == 1);
        // 2: computation
        const auto cap = out_dir("cap");
        CHECK(run({"subset", "--data", data_file(25, "wide.csv"), "--lambda", "1", "--out", cap}) == 2);
        const auto err = json_at(cap, "error.json");
        CHECK(err["exit_code"] == 2);
        CHECK(err["code"] == "p_cap_exceeded");
        CHECK(err["message"].get<std::string>().find("p exceeds exhaustive cap") != std::string::npos);
        CHECK(run({"subset", "--data", data_file(), "--lambda", "1", "--p-cap", "3", "--out", out_dir("cap2")}) == 2);

        const auto v = json_at(out_dir("e6"), "error.json");
        CHECK(v["exit_code"] == 1);
        CHECK(v["kind"] == "validation");
    }

    TEST_CASE("inputs are not modified")
    {
        const auto before = read_text(data_file());
        const auto t = fs::last_write_time(data_file());
        REQUIRE(run({"fit", "--data", data_file(), "--penalty", "lasso", "--out", out_dir("nomut")}) == 0);
        CHECK(read_text(data_file()) == before);
        CHECK(fs::last_write_time(data_file()) == t);
    }

    TEST_CASE("repeated fits are byte-identical")
    {
        const auto a = out_dir("rep_a"), b = out_dir("rep_b");
        REQUIRE(run({"fit", "--data", data_file(), "--penalty", "scad", "--seed", "5", "--out", a}) == 0);
        REQUIRE(run({"fit", "--data", data_file(), "--penalty", "scad", "--seed", "5", "--out", b}) == 0);
        for (const char* f : {"estimate.json", "manifest.json"})
            CHECK(read_text(fs::path(a) / f) == read_text(fs::path(b) / f));
    }
}
