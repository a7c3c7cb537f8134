#include "cli.hpp"

#include "biot/errors.hpp"

#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace biot;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("biot_cli_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct Outcome {
    int code;
    std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "biot_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

nlohmann::json error_record(const Outcome& o) {
    const auto j = nlohmann::json::parse(o.err);
    CHECK(j.contains("error"));
    CHECK(j.contains("message"));
    return j;
}

} // namespace

TEST_CASE("infsup writes the recorded constant") {
    TempDir dir;
    const Outcome o = invoke({"infsup", "--n-list", "2", "--lambda", "1", "--rp-inv", "1", "--alpha-p", "0", "--out",
                              dir.path.string()});
    REQUIRE(o.code == 0);
    const auto rows = lines(slurp(dir.path / "infsup.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "triple,norms,n,lambda,rp_inv,alpha_p,beta0");
    CHECK(rows[1].rfind("bdm1-rt0-p0,paper,2,", 0) == 0);
    const double beta0 = std::stod(rows[1].substr(rows[1].rfind(',') + 1));
    CHECK(beta0 == doctest::Approx(0.540708).epsilon(1e-6));
}

TEST_CASE("infsup grid from lists") {
    TempDir dir;
    const Outcome o = invoke({"infsup", "--n-list", "2,3", "--lambda", "1,1e4", "--rp-inv", "1", "--out",
                              dir.path.string(), "--threads", "2"});
    REQUIRE(o.code == 0);
    CHECK(lines(slurp(dir.path / "infsup.csv")).size() == 5);
}

TEST_CASE("zero right-hand side solve") {
    TempDir dir;
    const Outcome o = invoke({"solve", "--n", "2", "--rhs", "zero", "--out", dir.path.string()});
    REQUIRE(o.code == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    CHECK(report["iterations"] == 0);
    CHECK(report["converged"] == true);
    CHECK(report["conservation_max"] == 0.0);
    CHECK_FALSE(fs::exists(dir.path / "errors.json"));
    const auto sol = nlohmann::json::parse(slurp(dir.path / "solution.json"));
    for (const char* k : {"u", "v", "p"})
        for (double x : sol[k]) CHECK(x == 0.0);
}

TEST_CASE("manufactured solve with dumps") {
    TempDir dir;
    const Outcome o = invoke({"solve", "--n", "2", "--solver", "direct", "--dump-matrices", "--dump-mesh",
                              "--with-condition", "--out", dir.path.string()});
    REQUIRE(o.code == 0);
    for (const char* f : {"config.json", "report.json", "residuals.csv", "solution.json", "errors.json", "A_uu.mtx",
                          "B_up.mtx", "A_vv.mtx", "B_vp.mtx", "C_pp.mtx", "A.mtx", "mesh.txt"})
        CHECK_MESSAGE(fs::exists(dir.path / f), f);
    CHECK(slurp(dir.path / "A.mtx").rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
    CHECK(slurp(dir.path / "mesh.txt").rfind("# biot mesh v1", 0) == 0);
    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    CHECK(report["cond_estimate"].get<double>() >= 1.0);
    CHECK(report["conservation_max"].get<double>() <= 1e-10);
    const auto errs = nlohmann::json::parse(slurp(dir.path / "errors.json"));
    CHECK(errs["err_U"].get<double>() > 0.0);
}

TEST_CASE("repeated runs are byte identical") {
    TempDir a, b;
    for (const fs::path* p : {&a.path, &b.path}) {
        REQUIRE(invoke({"sweep", "--n", "2", "--lambda", "1,100", "--rp-inv", "1e-4,1", "--out", p->string(),
                        "--threads", "3"})
                    .code == 0);
    }
    CHECK(slurp(a.path / "minres.csv") == slurp(b.path / "minres.csv"));
    CHECK(lines(slurp(a.path / "minres.csv")).size() == 5);
}

TEST_CASE("convergence table") {
    TempDir dir;
    const Outcome o = invoke({"convergence", "--n-list", "2,4", "--out", dir.path.string()});
    REQUIRE(o.code == 0);
    const auto rows = lines(slurp(dir.path / "convergence.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "n,h,err_U,err_V,err_P,order_U,order_V,order_P");
    CHECK(rows[1].substr(rows[1].size() - 3) == ",,,");
}

TEST_CASE("timestep outputs") {
    TempDir dir;
    const Outcome o = invoke({"timestep", "--n", "2", "--steps", "3", "--mu", "0.5", "--lame", "2", "--source-g",
                              "0.5", "--solver", "direct", "--out", dir.path.string()});
    REQUIRE(o.code == 0);
    const auto rows = lines(slurp(dir.path / "timestep.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "step,iters,conservation_max");
    CHECK(nlohmann::json::parse(slurp(dir.path / "timestep_reports.json")).size() == 3);
    CHECK(fs::exists(dir.path / "final_state.json"));
    const auto cfg = nlohmann::json::parse(slurp(dir.path / "config.json"));
    CHECK(cfg["physical"]["mu"] == 0.5);
    CHECK(cfg["reduced"]["lambda_red"][0] == 2.0);
}

TEST_CASE("config echo") {
    TempDir dir;
    REQUIRE(invoke({"infsup", "--n-list", "2", "--eta", "12", "--out", dir.path.string()}).code == 0);
    const auto cfg = nlohmann::json::parse(slurp(dir.path / "config.json"));
    CHECK(cfg["command"] == "infsup");
    CHECK(cfg["eta"] == 12.0);
    CHECK(cfg["n_list"] == nlohmann::json::array({2}));
    CHECK(cfg["triple"] == "bdm1-rt0-p0");
    CHECK(cfg["reduced"]["rp_inv"][0] == 1.0);
    CHECK(cfg["physical"].is_null());
}

TEST_CASE("config file with command-line overrides") {
    TempDir dir;
    const fs::path file = dir.path / "run.cfg";
    std::ofstream(file) << "# comment line\n"
                           "n_list = 2   # trailing comment\n"
                           "lambda_red = 1e4\n"
                           "rp_inv = 1\n"
                           "eta = 8\n";
    const fs::path out = dir.path / "out";
    REQUIRE(invoke({"infsup", "--config", file.string(), "--eta", "10", "--out", out.string()}).code == 0);
    const auto cfg = nlohmann::json::parse(slurp(out / "config.json"));
    CHECK(cfg["eta"] == 10.0);
    CHECK(cfg["reduced"]["lambda_red"][0] == 1e4);

    std::ofstream(file) << "n = 2\nn = 3\n";
    const Outcome dup = invoke({"solve", "--config", file.string(), "--out", out.string()});
    CHECK(dup.code == 2);
    CHECK(error_record(dup)["error"] == "ConfigError");
}

TEST_CASE("configuration errors") {
    TempDir dir;
    const std::string out = dir.path.string();
    SUBCASE("mixed parameter sets") {
        const Outcome o = invoke({"solve", "--lambda", "2", "--mu", "1", "--out", out});
        CHECK(o.code == 2);
        CHECK(error_record(o)["error"] == "ConfigError");
    }
    SUBCASE("mixed parameter sets in a file") {
        std::ofstream(dir.path / "m.cfg") << "mu = 1\nrp_inv = 2\n";
        const Outcome o = invoke({"solve", "--config", (dir.path / "m.cfg").string(), "--out", out});
        CHECK(o.code == 2);
    }
    SUBCASE("natural norms outside infsup") {
        std::ofstream(dir.path / "n.cfg") << "norms = natural\n";
        const Outcome o = invoke({"solve", "--config", (dir.path / "n.cfg").string(), "--out", out});
        CHECK(o.code == 2);
        CHECK(error_record(o)["error"] == "ConfigError");
    }
    SUBCASE("unknown key") {
        std::ofstream(dir.path / "k.cfg") << "mesh = 4\n";
        const Outcome o = invoke({"solve", "--config", (dir.path / "k.cfg").string(), "--out", out});
        CHECK(o.code == 2);
        CHECK(error_record(o)["message"].get<std::string>().find("mesh") != std::string::npos);
    }
    SUBCASE("unknown flag") {
        CHECK(invoke({"solve", "--bogus"}).code == 2);
    }
    SUBCASE("parameter out of range") {
        const Outcome o = invoke({"solve", "--lambda", "0.5", "--out", out});
        CHECK(o.code == 1);
        CHECK(error_record(o)["error"] == "RangeViolation");
    }
    SUBCASE("incompatible spaces") {
        const Outcome o = invoke({"solve", "--triple", "rt1-rt0-p0", "--out", out});
        CHECK(o.code == 1);
        CHECK(error_record(o)["error"] == "IncompatibleSpaces");
    }
    SUBCASE("bad solver name") {
        CHECK(invoke({"solve", "--solver", "cg", "--out", out}).code == 2);
    }
}

TEST_CASE("iteration cap reports non-convergence") {
    TempDir dir;
    const Outcome o = invoke({"solve", "--n", "4", "--max-iter", "2", "--out", dir.path.string()});
    CHECK(o.code == 3);
    CHECK(error_record(o)["error"] == "NotConverged");
    const auto report = nlohmann::json::parse(slurp(dir.path / "report.json"));
    CHECK(report["converged"] == false);
    CHECK(report["status"] == "MaxIterExceeded");
}

TEST_CASE("apply_config_file") {
    cli::RunConfig cfg;
    apply_config_file({{"mu", "2"}, {"lambda", "8"}, {"command", "timestep"}}, cfg);
    REQUIRE(cfg.physical.has_value());
    CHECK(cfg.physical->mu == 2.0);
    CHECK(cfg.physical->lambda == 8.0);
    CHECK(cfg.command == cli::Command::Timestep);
    CHECK_FALSE(cfg.reduced.has_value());
    CHECK_NOTHROW(cfg.validate());
    CHECK_THROWS_AS(apply_config_file({{"n", "four"}}, cfg), ConfigError);
}
