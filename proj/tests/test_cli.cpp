#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hystop/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = HYSTOP_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("hystop_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& sub) const { return (path / sub).string(); }
};

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

int count_files(const std::string& dir, const std::string& suffix) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() >= suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            ++n;
    }
    return n;
}

std::string slurp(const std::string& path) { return hystop::read_text_file(path); }

// one artifact subdirectory is created per train run, named by config hash
std::string only_subdir(const std::string& dir) {
    std::string found;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) {
            REQUIRE(found.empty());
            found = e.path().string();
        }
    REQUIRE(!found.empty());
    return found;
}

} // namespace

TEST_CASE("full pipeline: generate, augment, train, evaluate") {
    TempDir tmp;
    const std::string corpus = tmp / "corpus";
    const std::string aug = tmp / "aug";
    const std::string runs = tmp / "runs";
    const std::string ev = tmp / "eval";

    // small grid keeps the suite fast; sample counts scale 6 -> 60 -> 120
    REQUIRE(run("generate --out " + corpus + " --freqs 5,50,500 --peaks 1.0,1.5") == 0);
    CHECK(count_files(corpus, ".csv") == 6);
    CHECK(fs::exists(corpus + "/manifest.json"));
    CHECK(fs::exists(corpus + "/material.json"));
    CHECK(fs::exists(corpus + "/run_config.json"));

    REQUIRE(run("augment --dataset " + corpus + " --out " + aug +
                " --regime cyclic+gda --seed 3") == 0);
    CHECK(count_files(aug, ".csv") == 120);
    json manifest = json::parse(slurp(aug + "/manifest.json"));
    CHECK(manifest.at("regime") == "cyclic+gda");
    CHECK(manifest.at("loops").size() == 120);
    CHECK(manifest.contains("b_scale"));

    REQUIRE(run("train --dataset " + aug + " --out " + runs +
                " --model fno --epochs 2 --seed 1 --split 8:1:1 --config " +
                [&] {
                    const std::string cfg = tmp / "train_cfg.json";
                    hystop::write_text_file(
                        cfg, R"({"train":{"fno":{"lift_width":8,"modes":6,"n_layers":2}}})");
                    return cfg;
                }()) == 0);
    const std::string run_dir = only_subdir(runs);
    CHECK(fs::exists(run_dir + "/checkpoint.ckpt"));
    CHECK(fs::exists(run_dir + "/run_config.json"));
    json report = json::parse(slurp(run_dir + "/report.json"));
    CHECK(report.at("loss").size() == 2);
    const std::string curve = slurp(run_dir + "/loss.csv");
    CHECK(curve.rfind("epoch,loss\n", 0) == 0);

    REQUIRE(run("evaluate --checkpoint " + run_dir + "/checkpoint.ckpt --dataset " + aug +
                " --out " + ev) == 0);
    CHECK(fs::exists(ev + "/metrics.json"));
    json metrics = json::parse(slurp(ev + "/metrics.json"));
    CHECK(metrics.at("samples").size() == 12); // 120 at 8:1:1
    CHECK(count_files(ev, ".svg") == 5);       // default plot count
    CHECK(count_files(ev, ".csv") == 12);

    // re-running the same training config reproduces the artifacts bit-identically
    const std::string loss_before = slurp(run_dir + "/loss.csv");
    const std::string ckpt_before = slurp(run_dir + "/checkpoint.ckpt");
    REQUIRE(run("train --dataset " + aug + " --out " + runs +
                " --model fno --epochs 2 --seed 1 --split 8:1:1 --config " + tmp / "train_cfg.json") == 0);
    CHECK(slurp(run_dir + "/loss.csv") == loss_before);
    CHECK(slurp(run_dir + "/checkpoint.ckpt") == ckpt_before);
}

TEST_CASE("single pair generation") {
    TempDir tmp;
    const std::string corpus = tmp / "one";
    REQUIRE(run("generate --out " + corpus + " --freqs 50 --peaks 1.0") == 0);
    CHECK(count_files(corpus, ".csv") == 1);
}

TEST_CASE("regime none passes the corpus through") {
    TempDir tmp;
    const std::string corpus = tmp / "corpus";
    REQUIRE(run("generate --out " + corpus + " --freqs 5,50 --peaks 1.0") == 0);
    const std::string aug = tmp / "plain";
    REQUIRE(run("augment --dataset " + corpus + " --out " + aug + " --regime none") == 0);
    CHECK(count_files(aug, ".csv") == 2);
}

TEST_CASE("usage and config failures exit with 2") {
    TempDir tmp;
    CHECK(run("no_such_command") == 2);
    CHECK(run("generate") == 2); // missing --out
    const std::string corpus = tmp / "corpus";
    REQUIRE(run("generate --out " + corpus + " --freqs 50 --peaks 1.0") == 0);
    CHECK(run("augment --dataset " + corpus + " --out " + tmp / "x" + " --regime sideways") == 2);

    // corrupt material parameters
    const std::string bad = tmp / "bad_params.json";
    hystop::write_text_file(bad, "{ not json");
    CHECK(run("generate --out " + tmp / "y" + " --params " + bad) == 2);

    // evaluate against a different dataset than the checkpoint saw
    const std::string quad = tmp / "quad";
    REQUIRE(run("generate --out " + quad + " --freqs 5,50 --peaks 1.0,1.5") == 0);
    const std::string runs = tmp / "runs";
    REQUIRE(run("train --dataset " + quad + " --out " + runs +
                " --model fno --epochs 1 --seed 1 --split 1:1 --config " +
                [&] {
                    const std::string cfg = tmp / "cfg.json";
                    hystop::write_text_file(
                        cfg, R"({"train":{"fno":{"lift_width":4,"modes":4,"n_layers":1}}})");
                    return cfg;
                }()) == 0);
    const std::string run_dir = only_subdir(runs);
    const std::string other = tmp / "other";
    REQUIRE(run("generate --out " + other + " --freqs 5,10,25 --peaks 1.0") == 0);
    CHECK(run("evaluate --checkpoint " + run_dir + "/checkpoint.ckpt --dataset " + other +
              " --out " + tmp / "ev") == 2);
}

TEST_CASE("training without a test part cannot be evaluated") {
    TempDir tmp;
    const std::string corpus = tmp / "corpus";
    REQUIRE(run("generate --out " + corpus + " --freqs 5,50 --peaks 1.0,1.5") == 0);
    const std::string runs = tmp / "runs";
    const std::string cfg = tmp / "cfg.json";
    hystop::write_text_file(cfg,
                            R"({"train":{"fno":{"lift_width":4,"modes":4,"n_layers":1}}})");
    REQUIRE(run("train --dataset " + corpus + " --out " + runs +
                " --model fno --epochs 1 --split 1:0 --config " + cfg) == 0);
    const std::string run_dir = only_subdir(runs);
    CHECK(run("evaluate --checkpoint " + run_dir + "/checkpoint.ckpt --dataset " + corpus +
              " --out " + tmp / "ev") == 2);
}

TEST_CASE("numerical divergence exits with 3") {
    TempDir tmp;
    const std::string corpus = tmp / "corpus";
    REQUIRE(run("generate --out " + corpus + " --freqs 5,50 --peaks 1.0,1.5") == 0);
    const std::string cfg = tmp / "cfg.json";
    hystop::write_text_file(
        cfg, R"({"train":{"lr":1e200,"fno":{"lift_width":4,"modes":4,"n_layers":2}}})");
    CHECK(run("train --dataset " + corpus + " --out " + tmp / "runs" +
              " --model fno --epochs 5 --split 1:1 --config " + cfg) == 3);
}

TEST_CASE("deeponet training produces the requested epoch count") {
    TempDir tmp;
    const std::string corpus = tmp / "corpus";
    REQUIRE(run("generate --out " + corpus + " --freqs 5,50 --peaks 1.0,1.5") == 0);
    const std::string cfg = tmp / "cfg.json";
    hystop::write_text_file(
        cfg, R"({"train":{"deeponet":{"hidden_layers":2,"width":8,"p":4}}})");
    const std::string runs = tmp / "runs";
    REQUIRE(run("train --dataset " + corpus + " --out " + runs +
                " --model deeponet --epochs 3 --split 1:1 --config " + cfg) == 0);
    json report = json::parse(slurp(only_subdir(runs) + "/report.json"));
    CHECK(report.at("loss").size() == 3);
}

TEST_CASE("default generation covers the full 9x4 grid") {
    TempDir tmp;
    const std::string corpus = tmp / "grid36";
    REQUIRE(run("generate --out " + corpus) == 0);
    CHECK(count_files(corpus, ".csv") == 36);

    // cyclic rolling multiplies the archive tenfold
    const std::string rolled = tmp / "rolled";
    REQUIRE(run("augment --dataset " + corpus + " --out " + rolled + " --regime cyclic") == 0);
    json manifest = json::parse(slurp(rolled + "/manifest.json"));
    CHECK(manifest.at("loops").size() == 360);

    // a 9:1 split of 36 leaves 4 test loops, hence 4 overlay plots
    const std::string cfg = tmp / "cfg.json";
    hystop::write_text_file(cfg,
                            R"({"train":{"fno":{"lift_width":4,"modes":4,"n_layers":1}}})");
    const std::string runs = tmp / "runs";
    REQUIRE(run("train --dataset " + corpus + " --out " + runs +
                " --model fno --epochs 1 --seed 1 --split 9:1 --config " + cfg) == 0);
    const std::string ev = tmp / "eval";
    REQUIRE(run("evaluate --checkpoint " + only_subdir(runs) + "/checkpoint.ckpt --dataset " +
                corpus + " --out " + ev) == 0);
    CHECK(count_files(ev, ".svg") == 4);
    CHECK(count_files(ev, ".csv") == 4);
}
