#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "testsupport.hpp"

namespace fs = std::filesystem;

namespace {

// Runs the installed CLI binary with `args`, capturing stdout+stderr into
// `log`, and returns its exit status.
int run_cli(const std::string& args, const std::string& log) {
    std::string cmd =
        std::string("\"") + CHROMAFORGE_CLI_PATH + "\" " + args + " > \"" + log +
        "\" 2>&1";
    int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

size_t count_lines(const std::string& text) {
    size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    return out;
}

bool args_contain(const nlohmann::json& args, const std::string& token) {
    for (const auto& a : args)
        if (a.get<std::string>() == token) return true;
    return false;
}

} // namespace

TEST_CASE("cli: help and parse errors") {
    ts::TempDir dir("cli_parse");
    const std::string log = dir.str("log.txt");

    CHECK(run_cli("--help", log) == 0);
    std::string help = slurp(log);
    CHECK(help.find("attack") != std::string::npos);
    CHECK(help.find("train") != std::string::npos);

    CHECK(run_cli("", log) == 2);                 // a subcommand is required
    CHECK(run_cli("frobnicate", log) == 2);       // unknown subcommand
    CHECK(run_cli("train --arch resnet --out " + dir.str("m"), log) == 2);
    CHECK(run_cli("train --epochs 0 --out " + dir.str("m"), log) == 2);
    CHECK(run_cli("train --arch mlp-small", log) == 2); // --out is required
    CHECK(run_cli("attack --method warp --model x --images y --out z", log) == 2);

    // Post-parse usage errors still exit 2 with a diagnostic.
    CHECK(run_cli("gradcheck --trials 0", log) == 2);
    CHECK(slurp(log).find("error:") != std::string::npos);
    CHECK(run_cli("train --config " + dir.str("nope.json") + " --out " +
                      dir.str("m"),
                  log) == 2);

    // A missing manifest is caught by option validation...
    CHECK(run_cli("rerun --manifest " + dir.str("nope/manifest.json") +
                      " --out " + dir.str("m"),
                  log) == 2);
    // ...while a corrupt one surfaces as a runtime failure.
    std::ofstream(dir.str("broken.json")) << "not json";
    CHECK(run_cli("rerun --manifest " + dir.str("broken.json") + " --out " +
                      dir.str("m"),
                  log) == 1);
}

TEST_CASE("cli: dataset/train/attack/rerun pipeline") {
    ts::TempDir dir("cli_pipeline");
    const std::string log = dir.str("log.txt");
    const std::string data = dir.str("data");
    const std::string model_dir = dir.str("model");
    const std::string model = model_dir + "/model.json";

    REQUIRE(run_cli("gen-data --classes 3 --per-class 20 --seed 5 --out " + data,
                    log) == 0);
    REQUIRE(fs::exists(fs::path(data) / "train" / "labels.csv"));
    REQUIRE(fs::exists(fs::path(data) / "holdout" / "labels.csv"));
    REQUIRE(fs::exists(fs::path(data) / "manifest.json"));

    REQUIRE(run_cli("train --arch mlp-small --data " + data +
                        " --epochs 10 --seed 1 --out " + model_dir,
                    log) == 0);
    REQUIRE(fs::exists(model));
    std::string acc_csv = slurp(fs::path(model_dir) / "accuracy.csv");
    CHECK(acc_csv.rfind("epoch,split,loss,accuracy\n", 0) == 0);
    CHECK(count_lines(acc_csv) == 1 + 10 + 1); // header, epochs, holdout row

    SUBCASE("attack writes per-image artifacts and an honest manifest") {
        const std::string atk = dir.str("atk");
        REQUIRE(run_cli("attack --method ace --model " + model + " --images " +
                            data + " --count 4 --K 8 --max-iters 40 --seed 9 "
                            "--out " + atk,
                        log) == 0);
        for (int i = 0; i < 4; ++i) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "%05d", i);
            CHECK(fs::exists(fs::path(atk) / ("result_" + std::string(stem) +
                                              ".json")));
            CHECK(fs::exists(fs::path(atk) / ("adv_" + std::string(stem) +
                                              ".png")));
        }
        CHECK_FALSE(fs::exists(fs::path(atk) / "result_00004.json"));
        std::string summary = slurp(fs::path(atk) / "summary.csv");
        CHECK(summary.rfind(
                  "method,model_src,model_dst,n,success_pct,l0_pct,l2,linf255,"
                  "mean_iters\n",
                  0) == 0);

        nlohmann::json manifest =
            nlohmann::json::parse(slurp(fs::path(atk) / "manifest.json"));
        CHECK(manifest["command"] == "attack");
        CHECK(manifest["seed"].get<uint64_t>() == 9);
        CHECK(args_contain(manifest["args"], "--method"));
        CHECK(args_contain(manifest["args"], "ace"));
        CHECK_FALSE(args_contain(manifest["args"], "--out"));

        nlohmann::json result =
            nlohmann::json::parse(slurp(fs::path(atk) / "result_00000.json"));
        CHECK(result.contains("method"));
        CHECK(result.contains("labels"));
        CHECK(result.contains("norms"));
        CHECK(result.contains("params"));

        // Replaying the manifest into a fresh directory reproduces every
        // output byte for byte, including the manifest itself.
        const std::string atk2 = dir.str("atk2");
        REQUIRE(run_cli("rerun --manifest " + atk + "/manifest.json --out " +
                            atk2,
                        log) == 0);
        auto first = tree_contents(atk);
        auto second = tree_contents(atk2);
        REQUIRE(first.size() == second.size());
        for (const auto& [rel, bytes] : first) {
            REQUIRE_MESSAGE(second.count(rel) == 1, "missing " << rel);
            CHECK_MESSAGE(second.at(rel) == bytes, rel << " differs on rerun");
        }
    }

    SUBCASE("variant-specific flags are enforced after parse") {
        std::string base = " --model " + model + " --images " + data +
                           " --count 1 --out " + dir.str("neg");
        CHECK(run_cli("attack --method ace-style" + base, log) == 2);
        CHECK(slurp(log).find("--target") != std::string::npos);
        CHECK(run_cli("attack --method ace-semantic" + base, log) == 2);
        CHECK(slurp(log).find("--mask") != std::string::npos);
        CHECK(run_cli("sweep --param lambda --values \"\"" + base, log) == 2);
        // Invalid attack hyper-parameters surface as runtime errors.
        CHECK(run_cli("attack --method fgsm --epsilon 0.03 --alpha 0.05" + base,
                      log) == 1);
    }

    SUBCASE("seed comes from the environment only when no flag is given") {
        setenv("CHROMAFORGE_SEED", "123", 1);
        const std::string env_atk = dir.str("env_atk");
        int rc = run_cli("attack --method ace --model " + model + " --images " +
                             data + " --count 1 --K 4 --max-iters 5 --out " +
                             env_atk,
                         log);
        const std::string env_gen = dir.str("env_gen");
        int rc2 = run_cli(
            "gen-data --classes 2 --per-class 5 --seed 5 --out " + env_gen, log);
        unsetenv("CHROMAFORGE_SEED");
        REQUIRE(rc == 0);
        REQUIRE(rc2 == 0);
        nlohmann::json m1 =
            nlohmann::json::parse(slurp(fs::path(env_atk) / "manifest.json"));
        CHECK(m1["seed"].get<uint64_t>() == 123);
        nlohmann::json m2 =
            nlohmann::json::parse(slurp(fs::path(env_gen) / "manifest.json"));
        CHECK(m2["seed"].get<uint64_t>() == 5); // explicit flag wins
    }

    SUBCASE("config file fills defaults, explicit flags win") {
        std::ofstream(dir.str("cfg.json")) << "{\"epochs\": 3}";
        REQUIRE(run_cli("train --config " + dir.str("cfg.json") +
                            " --arch mlp-small --data " + data +
                            " --seed 2 --out " + dir.str("model_cfg"),
                        log) == 0);
        CHECK(count_lines(slurp(dir.str("model_cfg") + "/accuracy.csv")) ==
              1 + 3 + 1);

        REQUIRE(run_cli("train --config " + dir.str("cfg.json") +
                            " --epochs 1 --arch mlp-small --data " + data +
                            " --seed 2 --out " + dir.str("model_cfg2"),
                        log) == 0);
        CHECK(count_lines(slurp(dir.str("model_cfg2") + "/accuracy.csv")) ==
              1 + 1 + 1);
    }

    SUBCASE("gradcheck passes and writes a report when asked") {
        const std::string gc = dir.str("gc");
        REQUIRE(run_cli("gradcheck --trials 2 --seed 4 --out " + gc, log) == 0);
        CHECK(slurp(log).find("PASS") != std::string::npos);
        CHECK(fs::exists(fs::path(gc) / "gradcheck.json"));
    }
}
