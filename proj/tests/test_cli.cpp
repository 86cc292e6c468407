#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rlsac/scene.hpp"

namespace fs = std::filesystem;
using namespace rlsac;

namespace {

const std::string kCli = RLSAC_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

/// Small, fast settings shared by the CLI invocations under test.
const std::string kTiny =
    " --n-points 24 --k-neighbors 4 --hidden-width 4 --head-width 4";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("gen writes loadable scenes with the configured split") {
    TempDir dir("cli_gen");
    CHECK(run_cli("gen --task line2d --count 10 --outlier-rate 0.3 --seed 7 --n-points 100 --out-dir " +
                  dir.str()) == 0);

    const auto manifest = lines_of(slurp(dir.str() + "/manifest.txt"));
    REQUIRE(manifest.size() == 10);
    for (const auto& entry : manifest) {
        std::istringstream ss(entry);
        std::string file;
        std::uint64_t seed;
        REQUIRE((ss >> file >> seed));
        const SceneData scene = load_scene(dir.str() + "/" + file);
        CHECK(scene.num_points() == 100);
        int inliers = 0;
        for (bool b : scene.true_inlier_mask) inliers += b ? 1 : 0;
        CHECK(inliers == 70);
    }
}

TEST_CASE("gen regeneration with the same seed is byte-identical") {
    TempDir a("cli_gen_a"), b("cli_gen_b");
    CHECK(run_cli("gen --count 3 --seed 11 --outlier-rate 0.4" + kTiny + " --out-dir " + a.str()) == 0);
    CHECK(run_cli("gen --count 3 --seed 11 --outlier-rate 0.4" + kTiny + " --out-dir " + b.str()) == 0);
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "/scene_%05d.txt", i);
        CHECK(slurp(a.str() + name) == slurp(b.str() + name));
    }
    CHECK(slurp(a.str() + "/manifest.txt") == slurp(b.str() + "/manifest.txt"));
}

TEST_CASE("gen count 0 leaves an empty manifest and exits 0") {
    TempDir dir("cli_gen0");
    CHECK(run_cli("gen --count 0 --out-dir " + dir.str()) == 0);
    CHECK(slurp(dir.str() + "/manifest.txt").empty());
}

TEST_CASE("train epochs 0 writes an initialization model and an empty log body") {
    TempDir dir("cli_train0");
    CHECK(run_cli("train --task line2d --epochs 0 --seed 1" + kTiny + " --out " + dir.str() +
                  "/model.txt --log " + dir.str() + "/log.csv") == 0);
    const auto log = lines_of(slurp(dir.str() + "/log.csv"));
    REQUIRE(log.size() == 1);
    CHECK(log[0] == "epoch,mean_reward,critic_loss,actor_loss,buffer_size");
    CHECK(fs::exists(dir.str() + "/model.txt"));
}

TEST_CASE("train is deterministic: identical commands, identical bytes") {
    TempDir dir("cli_train_det");
    const std::string common = "train --task line2d --outlier-rate 0.6 --epochs 1 "
                               "--scenes-per-epoch 3 --warmup 8 --batch-size 4 --seed 3" +
                               kTiny;
    CHECK(run_cli(common + " --out " + dir.str() + "/m1.txt --log " + dir.str() + "/l1.csv") == 0);
    CHECK(run_cli(common + " --out " + dir.str() + "/m2.txt --log " + dir.str() + "/l2.csv") == 0);
    CHECK(slurp(dir.str() + "/m1.txt") == slurp(dir.str() + "/m2.txt"));
    CHECK(slurp(dir.str() + "/l1.csv") == slurp(dir.str() + "/l2.csv"));
    const auto log = lines_of(slurp(dir.str() + "/l1.csv"));
    REQUIRE(log.size() == 2);  // header + one epoch row
    CHECK(log[1].rfind("0,", 0) == 0);
}

TEST_CASE("eval budget parity and determinism") {
    TempDir dir("cli_eval");
    REQUIRE(run_cli("train --task line2d --epochs 0 --seed 1" + kTiny + " --out " + dir.str() +
                    "/model.txt --log " + dir.str() + "/log.csv") == 0);

    const std::string common = "eval --task line2d --model " + dir.str() +
                               "/model.txt --outlier-rate 0.4 --scene-count 4 --episodes 10 "
                               "--steps 14 --seed 5" + kTiny;
    CHECK(run_cli(common + " --results " + dir.str() + "/r1.csv --summary " + dir.str() +
                  "/s1.csv") == 0);
    CHECK(run_cli(common + " --results " + dir.str() + "/r2.csv --summary " + dir.str() +
                  "/s2.csv") == 0);
    CHECK(slurp(dir.str() + "/r1.csv") == slurp(dir.str() + "/r2.csv"));
    CHECK(slurp(dir.str() + "/s1.csv") == slurp(dir.str() + "/s2.csv"));

    const auto rows = lines_of(slurp(dir.str() + "/r1.csv"));
    REQUIRE(rows.size() == 9);  // header + 4 rlsac + 4 ransac
    CHECK(rows[0] == "scene_id,method,outlier_rate,error_deg,best_inlier_ratio,hypotheses_used,wall_ms");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        // hypotheses_used is the sixth field; budget parity at 10 * (14+1).
        std::istringstream ss(rows[i]);
        std::string field;
        for (int f = 0; f < 6; ++f) std::getline(ss, field, ',');
        CHECK(field == "150");
    }

    const auto summary = lines_of(slurp(dir.str() + "/s1.csv"));
    REQUIRE(summary.size() == 3);
    CHECK(summary[0] == "method,outlier_rate,maa,median_deg,n_scenes");
    CHECK(summary[1].rfind("rlsac,", 0) == 0);
    CHECK(summary[2].rfind("ransac,", 0) == 0);
}

TEST_CASE("eval error handling and exit codes") {
    TempDir dir("cli_eval_err");
    CHECK(run_cli("eval --task line2d --model " + dir.str() + "/missing.txt") == 2);

    REQUIRE(run_cli("train --task line2d --epochs 0 --seed 1" + kTiny + " --out " + dir.str() +
                    "/model.txt --log " + dir.str() + "/log.csv") == 0);
    CHECK(run_cli("eval --task fundamental --model " + dir.str() + "/model.txt --scene-count 1") == 1);
    CHECK(run_cli("eval --no-such-flag") == 1);
    CHECK(run_cli("frobnicate") == 1);
}

TEST_CASE("bench baseline-only sweep emits 7 RANSAC rows and plot data") {
    TempDir dir("cli_bench");
    CHECK(run_cli("bench --task line2d --scene-count 3 --episodes 2 --steps 4 --seed 9" + kTiny +
                  " --summary " + dir.str() + "/summary.csv --plot-data " + dir.str() +
                  "/plot.csv") == 0);

    const auto summary = lines_of(slurp(dir.str() + "/summary.csv"));
    REQUIRE(summary.size() == 8);
    CHECK(summary[0] == "method,outlier_rate,maa,median_deg,n_scenes,transfer");
    for (int i = 1; i <= 7; ++i) CHECK(summary[i].rfind("ransac,", 0) == 0);

    const auto plot = lines_of(slurp(dir.str() + "/plot.csv"));
    REQUIRE(plot.size() == 8);
    CHECK(plot[0] == "rate,method,maa,median");
}

TEST_CASE("bench shared model tags RLSAC rows as transfer") {
    TempDir dir("cli_bench_shared");
    REQUIRE(run_cli("train --task line2d --epochs 0 --seed 2" + kTiny + " --out " + dir.str() +
                    "/model05.txt --log " + dir.str() + "/log.csv") == 0);
    CHECK(run_cli("bench --task line2d --scene-count 2 --episodes 2 --steps 4 --seed 9" + kTiny +
                  " --shared-model " + dir.str() + "/model05.txt --summary " + dir.str() +
                  "/summary.csv --plot-data " + dir.str() + "/plot.csv") == 0);
    const auto summary = lines_of(slurp(dir.str() + "/summary.csv"));
    REQUIRE(summary.size() == 15);  // header + 7 rates x 2 methods
    int transfer_rows = 0;
    for (const auto& row : summary)
        if (row.rfind("rlsac,", 0) == 0) {
            CHECK(row.substr(row.size() - 5) == ",true");
            ++transfer_rows;
        }
    CHECK(transfer_rows == 7);
}

TEST_CASE("dump-config round-trips") {
    TempDir dir("cli_config");
    CHECK(run_cli("gen --dump-config --count 0 --seed 42 --outlier-rate 0.65 --task line2d") == 0);
    const std::string dump1 = slurp("cli_stdout.txt");
    CHECK(dump1.find("seed = 42") != std::string::npos);
    CHECK(dump1.find("outlier_rate = 0.65") != std::string::npos);

    std::ofstream(dir.str() + "/cfg.txt") << dump1;
    CHECK(run_cli("gen --dump-config --count 0 --config " + dir.str() + "/cfg.txt") == 0);
    CHECK(slurp("cli_stdout.txt") == dump1);

    // Flags override the file.
    CHECK(run_cli("gen --dump-config --count 0 --config " + dir.str() + "/cfg.txt --seed 43") == 0);
    CHECK(slurp("cli_stdout.txt").find("seed = 43") != std::string::npos);

    std::ofstream(dir.str() + "/bad.txt") << "no_such_key = 1\n";
    CHECK(run_cli("gen --count 0 --config " + dir.str() + "/bad.txt") == 1);
}
