#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "cqte/cli.hpp"
#include "cqte/dataset.hpp"
#include "cqte/simulation.hpp"

using namespace cqte;
namespace fs = std::filesystem;

namespace {

int run(std::initializer_list<std::string> args) {
    std::vector<const char*> argv{"cqte"};
    std::vector<std::string> hold(args);
    for (const auto& a : hold) argv.push_back(a.c_str());
    return cli_run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string tmpfile(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

struct DataFixture {
    std::string path;
    DataFixture() {
        path = tmpfile("cqte_cli_data.csv");
        const Generated g = generate({ModelId::m1, 400, 20260810});
        save_csv(g.data, path);
    }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("estimate produces the documented columns") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_est.csv");
    const int rc = run({"estimate", "--input", fx.path, "--l", "1", "--propensity", "logit",
                        "--tau", "0.5", "--x1", "-0.2", "--x1", "0", "--x1", "0.2", "--seed",
                        "3", "--threads", "1", "--out", out});
    CHECK(rc == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("x1,tau,q1,q0,delta,se,estimator,h,trimCount\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(text.find("pcqte") != std::string::npos);
    CHECK(fs::exists(out + ".cfg"));
}

TEST_CASE("quantile sheet export: one row per (point, tau)") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_sheet.csv");
    REQUIRE(run({"estimate", "--input", fx.path, "--propensity", "logit", "--tau", "0.25",
                 "--tau", "0.5", "--tau", "0.75", "--x1", "-0.1", "--x1", "0.1", "--out",
                 out}) == 0);
    const std::string text = slurp(out);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7); // header + 2x3 rows
}

TEST_CASE("CQTE_THREADS drives the default worker count") {
    const auto o1 = tmpfile("cqte_cli_env1.csv");
    const auto o2 = tmpfile("cqte_cli_env2.csv");
    setenv("CQTE_THREADS", "3", 1);
    REQUIRE(run({"simulate", "--model", "1", "--n", "120", "--reps", "4", "--seed", "2",
                 "--out", o1}) == 0);
    unsetenv("CQTE_THREADS");
    REQUIRE(run({"simulate", "--model", "1", "--n", "120", "--reps", "4", "--seed", "2",
                 "--threads", "1", "--out", o2}) == 0);
    CHECK(slurp(o1) == slurp(o2)); // worker count never changes the numbers
}

TEST_CASE("estimate deltas near the design truth") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_est2.csv");
    REQUIRE(run({"estimate", "--input", fx.path, "--propensity", "logit", "--tau", "0.5",
                 "--x1", "0", "--out", out, "--threads", "1"}) == 0);
    // delta column of the single row
    std::istringstream in(slurp(out));
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream rin(row);
    while (std::getline(rin, cell, ',')) cells.push_back(cell);
    const double delta = std::stod(cells[4]);
    CHECK(std::abs(delta - 1.0) < 0.25); // truth is 1.0 at x1=0, tau=0.5
}

TEST_CASE("oracle propensity rejected outside the harness") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_oracle.csv");
    const int rc = run({"estimate", "--input", fx.path, "--propensity", "oracle", "--x1", "0",
                        "--out", out});
    CHECK(rc != 0);
    CHECK(!fs::exists(out));
}

TEST_CASE("failed runs leave no partial output") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_partial.csv");
    fs::remove(out);
    const int rc = run({"estimate", "--input", fx.path, "--x1", "0.49999", "--x1", "99.0",
                        "--out", out});
    CHECK(rc != 0);
    CHECK(!fs::exists(out));
}

TEST_CASE("simulate rejects reps below 2") {
    const auto out = tmpfile("cqte_cli_r1.csv");
    CHECK(run({"simulate", "--model", "1", "--n", "100", "--reps", "1", "--out", out}) != 0);
}

TEST_CASE("simulate writes the report and restricts estimators") {
    const auto out = tmpfile("cqte_cli_sim.csv");
    const int rc = run({"simulate", "--model", "1", "--n", "120", "--reps", "4", "--group", "1",
                        "--estimators", "ocqte,pcqte", "--seed", "5", "--threads", "2", "--out",
                        out});
    CHECK(rc == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("model,n,estimator,x1,tau,bias,sd,mse,are,reps,failures\n", 0) == 0);
    CHECK(text.find("ocqte") != std::string::npos);
    CHECK(text.find("pcqte") != std::string::npos);
    CHECK(text.find("ncqte") == std::string::npos);
}

TEST_CASE("simulate is bit-identical across thread counts") {
    const auto out1 = tmpfile("cqte_cli_t1.csv");
    const auto out8 = tmpfile("cqte_cli_t8.csv");
    REQUIRE(run({"simulate", "--model", "1", "--n", "150", "--reps", "6", "--seed", "9",
                 "--threads", "1", "--out", out1}) == 0);
    REQUIRE(run({"simulate", "--model", "1", "--n", "150", "--reps", "6", "--seed", "9",
                 "--threads", "8", "--out", out8}) == 0);
    CHECK(slurp(out1) == slurp(out8));
}

TEST_CASE("sidecar rerun reproduces the output bit for bit") {
    const auto out = tmpfile("cqte_cli_side.csv");
    REQUIRE(run({"simulate", "--model", "2", "--n", "130", "--reps", "5", "--seed", "17",
                 "--threads", "2", "--out", out}) == 0);
    const std::string first = slurp(out);
    const auto out2 = tmpfile("cqte_cli_side2.csv");
    REQUIRE(run({"rerun", out + ".cfg", "--out", out2}) == 0);
    CHECK(slurp(out2) == first);
}

TEST_CASE("bootstrap variance in the CLI is deterministic") {
    DataFixture fx;
    const auto o1 = tmpfile("cqte_cli_boot1.csv");
    const auto o2 = tmpfile("cqte_cli_boot2.csv");
    for (const auto& o : {o1, o2})
        REQUIRE(run({"estimate", "--input", fx.path, "--propensity", "logit", "--tau", "0.5",
                     "--x1", "0", "--variance", "boot", "--boot-b", "24", "--seed", "21",
                     "--threads", "2", "--out", o}) == 0);
    CHECK(slurp(o1) == slurp(o2));
    CHECK(slurp(o1).find(",,") == std::string::npos); // se column filled
}

TEST_CASE("plugin variance fills the se column") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_plug.csv");
    REQUIRE(run({"estimate", "--input", fx.path, "--propensity", "logit", "--tau", "0.5",
                 "--x1", "0", "--variance", "plugin", "--out", out}) == 0);
    std::istringstream in(slurp(out));
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream rin(row);
    while (std::getline(rin, cell, ',')) cells.push_back(cell);
    CHECK(std::stod(cells[5]) > 0.0);
}

TEST_CASE("semiparametric estimate with the empirical preset runs") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_semi.csv");
    const int rc = run({"estimate", "--input", fx.path, "--propensity", "semi", "--q", "1",
                        "--bandwidth", "empirical", "--tau", "0.5", "--x1", "0", "--out", out});
    CHECK(rc == 0);
    CHECK(slurp(out).find("scqte") != std::string::npos);
}

TEST_CASE("auto grid generates interior points") {
    DataFixture fx;
    const auto out = tmpfile("cqte_cli_grid.csv");
    REQUIRE(run({"estimate", "--input", fx.path, "--propensity", "logit", "--grid-size", "4",
                 "--tau", "0.5", "--out", out}) == 0);
    const std::string text = slurp(out);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

} // TEST_SUITE
