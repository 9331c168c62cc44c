#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "schnet/data.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd =
        std::string(SCHNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

fs::path only_run_dir(const fs::path& root) {
    fs::path found;
    for (const auto& e : fs::directory_iterator(root)) {
        REQUIRE(found.empty());
        found = e.path();
    }
    REQUIRE(!found.empty());
    return found;
}

struct TmpDir {
    fs::path path;
    explicit TmpDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const {
        return (path / leaf).string();
    }
};

const std::string kTinyModel =
    " --set n_features=8 --set n_interactions=1 --set rbf_count=16"
    " --set rbf_spacing=0.4 --set max_atomic_number=10";

}  // namespace

TEST_CASE("end-to-end pipeline with deterministic reruns") {
    TmpDir tmp("schnet_cli_test");
    const std::string ds = tmp / "ds.xyz";
    REQUIRE(run("gen-synthetic --out " + ds +
                " --frames 30 --displacement 0.08 --seed 5") == 0);

    const std::string common =
        "train --data " + ds + kTinyModel +
        " --set max_steps=60 --set eval_interval=30 --set batch_size=10"
        " --set n_val=6 --set log_wall_time=false --seed 7 --rho 0.01";
    REQUIRE(run(common + " --out " + (tmp / "runs_a")) == 0);
    REQUIRE(run(common + " --out " + (tmp / "runs_b")) == 0);

    const fs::path a = only_run_dir(tmp.path / "runs_a");
    const fs::path b = only_run_dir(tmp.path / "runs_b");

    SUBCASE("identical seed and config give a bit-identical metrics CSV") {
        const std::string ma = slurp(a / "metrics.csv");
        CHECK(!ma.empty());
        CHECK(ma == slurp(b / "metrics.csv"));
    }
    SUBCASE("the resolved config persists the loss weight verbatim") {
        const std::string cfg = slurp(a / "config.txt");
        CHECK(cfg.find("rho=0.01") != std::string::npos);
        CHECK(cfg.find("seed=7") != std::string::npos);
    }
    SUBCASE("predict then eval closes the loop at zero error") {
        const std::string ckpt = (a / "model.ckpt").string();
        const std::string pred = tmp / "pred.xyz";
        REQUIRE(run("predict --checkpoint " + ckpt + " --in " + ds + " --out " +
                    pred) == 0);
        // the model's own labels: eval must agree to printed precision
        const std::string csv = tmp / "eval.csv";
        REQUIRE(run("eval --checkpoint " + ckpt + " --data " + pred + " --csv " +
                    csv) == 0);
        std::ifstream in(csv);
        std::string header, row;
        std::getline(in, header);
        std::getline(in, row);
        std::istringstream fields(row);
        std::string emae;
        std::getline(fields, emae, ',');
        CHECK(std::abs(std::stod(emae)) < 1e-10);
    }
    SUBCASE("verify passes on the trained checkpoint") {
        CHECK(run("verify --checkpoint " + (a / "model.ckpt").string() +
                  " --molecules 6 --trials 6 --seed 2") == 0);
    }
    SUBCASE("md with dt=0 repeats the initial frame") {
        const std::string traj = tmp / "traj.xyz";
        REQUIRE(run("md --checkpoint " + (a / "model.ckpt").string() +
                    " --init " + ds + " --steps 30 --dt 0 --stride 10 --traj " +
                    traj) == 0);
        schnet::data::Dataset t = schnet::data::parse_extxyz(traj);
        REQUIRE(t.size() == 4);
        for (const auto& f : t.frames)
            CHECK(f.positions.data == t.frames[0].positions.data);
    }
    SUBCASE("export-filters emits every block/channel series") {
        const std::string out = tmp / "filters.csv";
        REQUIRE(run("export-filters --checkpoint " +
                    (a / "model.ckpt").string() + " --out " + out +
                    " --d-max 2 --d-step 0.5") == 0);
        std::ifstream in(out);
        std::string line;
        std::getline(in, line);
        CHECK(line == "block,channel,d,value");
        std::size_t rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 1 * 8 * 5);  // blocks x channels x grid points
    }
}

TEST_CASE("usage and config errors exit with code 2") {
    TmpDir tmp("schnet_cli_err");
    const std::string ds = tmp / "ds.xyz";
    REQUIRE(run("gen-synthetic --out " + ds + " --frames 5 --seed 1") == 0);
    CHECK(run("train --data " + ds + " --set nonsense=1") == 2);
    CHECK(run("train --data " + (tmp / "missing.xyz")) == 2);
    CHECK(run("eval --data " + ds) == 2);
    CHECK(run("bogus-subcommand") == 2);
    CHECK(run("train --data " + ds + " --out " + (tmp / "r") +
              " --set max_atomic_number=4") == 2);
}

TEST_CASE("training divergence exits with code 3") {
    TmpDir tmp("schnet_cli_div");
    const std::string ds = tmp / "ds.xyz";
    REQUIRE(run("gen-synthetic --out " + ds + " --frames 10 --seed 3") == 0);
    CHECK(run("train --data " + ds + kTinyModel + " --out " + (tmp / "r") +
              " --set lr=1e200 --set max_steps=20 --set n_val=2"
              " --set batch_size=8") == 3);
}
