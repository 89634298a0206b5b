// Release gate: one binary that exercises every acceptance criterion and
// prints one PASS/FAIL line per criterion. Exits nonzero if any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "chromaforge/attacks.hpp"
#include "chromaforge/batch.hpp"
#include "chromaforge/classifier.hpp"
#include "chromaforge/color_filter.hpp"
#include "chromaforge/datagen.hpp"
#include "chromaforge/gradcheck.hpp"
#include "chromaforge/image_io.hpp"
#include "chromaforge/lp_attacks.hpp"
#include "chromaforge/metrics.hpp"
#include "chromaforge/rng.hpp"
#include "chromaforge/trainer.hpp"

using namespace chromaforge;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run_criterion(int id, const std::function<std::pair<bool, std::string>()>& fn) {
    try {
        auto [pass, detail] = fn();
        report(id, pass, detail);
    } catch (const std::exception& e) {
        report(id, false, std::string("threw: ") + e.what());
    }
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double secs() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Image random_image(Rng& rng, size_t h, size_t w) {
    Image img(h, w);
    for (double& p : img.pixels) p = rng.uniform();
    return img;
}

// Simplex rows built without project_simplex so the filter oracle does not
// share code with the library path it checks.
FilterParams random_simplex(Rng& rng, int k) {
    FilterParams p;
    p.pieces = k;
    p.theta = Tensor({3, static_cast<size_t>(k)}, 0.0);
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int i = 0; i < k; ++i) {
            double v = rng.uniform();
            p.theta[static_cast<size_t>(c * k + i)] = v;
            sum += v;
        }
        for (int i = 0; i < k; ++i) p.theta[static_cast<size_t>(c * k + i)] /= sum;
    }
    return p;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           (a.empty() ||
            std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool traces_equal(const std::vector<TracePoint>& a,
                  const std::vector<TracePoint>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(&a[i].adv_loss, &b[i].adv_loss, sizeof(double)) != 0 ||
            std::memcmp(&a[i].penalty, &b[i].penalty, sizeof(double)) != 0)
            return false;
    return true;
}

// ------------------------------------------------------------ desk benchmark

struct Bench {
    Dataset ds;
    Classifier cnn;
    Classifier mlp;
    std::vector<LabeledImage> eval; // fixed 100-image evaluation set
};

Classifier train_preset(const std::string& arch, const Dataset& ds,
                        uint64_t model_seed, uint64_t train_seed) {
    Classifier model = Classifier::make_preset(arch, ds.num_classes, model_seed);
    TrainConfig tc;
    tc.seed = train_seed;
    train(model, ds.train, tc);
    return model;
}

Bench build_bench() {
    Timer t;
    Dataset ds = generate_synthetic(SyntheticSpec{});
    Classifier cnn = train_preset("cnn-small", ds, 1, 11);
    Classifier mlp = train_preset("mlp-small", ds, 2, 22);
    Bench b{std::move(ds), std::move(cnn), std::move(mlp), {}};
    b.eval.assign(b.ds.holdout.begin(), b.ds.holdout.begin() + 100);
    std::printf("benchmark: cnn holdout %.1f%%, mlp holdout %.1f%% (%.0fs)\n",
                100.0 * evaluate_accuracy(b.cnn, b.ds.holdout),
                100.0 * evaluate_accuracy(b.mlp, b.ds.holdout), t.secs());
    std::fflush(stdout);
    return b;
}

std::vector<AttackResult> run_ace_batch(const Bench& b, const AttackConfig& base,
                                        uint64_t seed) {
    return run_batch(b.eval, seed, 0,
                     [&](const LabeledImage& img, uint64_t s) {
                         AttackConfig cfg = base;
                         cfg.seed = s;
                         return ace_attack(b.cnn, img, cfg);
                     });
}

int attacked_count(const std::vector<AttackResult>& rs) {
    int n = 0;
    for (const auto& r : rs)
        if (r.status != AttackStatus::AlreadyMisclassified) ++n;
    return n;
}

// Success rate when each attack is cut off after `budget` iterations. Valid
// because the optimization trajectory at a smaller budget is a prefix of the
// full run, so first_success tells when the cheaper run would have hit.
double rate_at_budget(const std::vector<AttackResult>& rs, int budget) {
    int n = 0, s = 0;
    for (const auto& r : rs) {
        if (r.status == AttackStatus::AlreadyMisclassified) continue;
        ++n;
        if (r.first_success > 0 && r.first_success <= budget) ++s;
    }
    return n ? 100.0 * s / n : 0.0;
}

double success_rate(const std::vector<AttackResult>& rs) {
    int n = 0, s = 0;
    for (const auto& r : rs) {
        if (r.status == AttackStatus::AlreadyMisclassified) continue;
        ++n;
        if (r.success) ++s;
    }
    return n ? 100.0 * s / n : 0.0;
}

double mean_raw_penalty(const std::vector<AttackResult>& rs) {
    int n = 0;
    double sum = 0.0;
    for (const auto& r : rs) {
        if (r.status == AttackStatus::AlreadyMisclassified || !r.params) continue;
        ++n;
        sum += deviation_penalty(*r.params);
    }
    return n ? sum / n : 0.0;
}

// ----------------------------------------------------------------- CLI glue

int run_cli(const std::string& args, const std::string& log) {
    std::string cmd = std::string("\"") + CHROMAFORGE_CLI_PATH + "\" " + args +
                      " > \"" + log + "\" 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), root).string()] = slurp(entry.path());
    return out;
}

} // namespace

int main() {
    Bench bench = build_bench();

    // 1. identity curve leaves pixels unchanged for K in {1, 2, 4, 64}
    run_criterion(1, [&]() -> std::pair<bool, std::string> {
        Timer t;
        Rng rng(101);
        const int ks[] = {1, 2, 4, 64};
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            Image img = random_image(rng, 32, 32);
            for (int k : ks) {
                Image out = apply_filter(FilterParams::identity(k), img);
                for (size_t j = 0; j < img.pixels.size(); ++j)
                    worst = std::max(worst, std::abs(out.pixels[j] - img.pixels[j]));
            }
        }
        bool ok = worst <= 1e-12 && t.secs() < 10.0;
        return {ok, "identity max |out-in| = " + fmt("%.3g", worst) + " over 1000 images x 4 K values (" + fmt("%.1f", t.secs()) + "s)"};
    });

    // 2. curve application agrees with a straight-line per-scalar oracle
    run_criterion(2, [&]() -> std::pair<bool, std::string> {
        Rng rng(202);
        double worst = 0.0;
        for (int trial = 0; trial < 10000; ++trial) {
            const int k = 1 + static_cast<int>(rng.below(64));
            FilterParams p = random_simplex(rng, k);
            double x = rng.uniform();
            if (rng.below(8) == 0) // hit piece boundaries now and then
                x = std::min<double>(1.0, static_cast<double>(rng.below(
                                              static_cast<uint64_t>(k) + 1)) /
                                              k);
            Image img(1, 1);
            img.pixels = {x, x, x};
            Image out = apply_filter(p, img);
            for (int c = 0; c < 3; ++c) {
                const double* row = p.theta.data() + c * k;
                const int piece = std::min(k - 1, static_cast<int>(x * k));
                double acc = 0.0;
                for (int j = 0; j < piece; ++j) acc += row[j];
                acc += (x * k - piece) * row[piece];
                acc = std::clamp(acc, 0.0, 1.0);
                worst = std::max(worst, std::abs(out.pixels[c] - acc));
            }
        }
        return {worst <= 1e-12,
                "max |library - oracle| = " + fmt("%.3g", worst) + " on 10000 (theta, x) pairs"};
    });

    // 3. monotone curves with pinned endpoints
    run_criterion(3, [&]() -> std::pair<bool, std::string> {
        Rng rng(303);
        Image grid(1, 1001);
        for (int i = 0; i <= 1000; ++i)
            for (int c = 0; c < 3; ++c) grid.at(0, static_cast<size_t>(i), c) = i / 1000.0;
        int bad_mono = 0;
        double worst_end = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int k = 2 + static_cast<int>(rng.below(63));
            FilterParams p = random_simplex(rng, k);
            Image out = apply_filter(p, grid);
            for (int c = 0; c < 3; ++c) {
                for (int i = 0; i < 1000; ++i)
                    if (out.at(0, static_cast<size_t>(i) + 1, c) <
                        out.at(0, static_cast<size_t>(i), c))
                        ++bad_mono;
                worst_end = std::max(worst_end, std::abs(out.at(0, 0, c)));
                worst_end = std::max(worst_end, std::abs(out.at(0, 1000, c) - 1.0));
            }
        }
        bool ok = bad_mono == 0 && worst_end <= 1e-12;
        return {ok, std::to_string(bad_mono) + " monotonicity violations, endpoint err " + fmt("%.3g", worst_end) + " over 1000 curves x 1001-point grid"};
    });

    // 4. analytic gradients vs central finite differences, via the CLI
    run_criterion(4, [&]() -> std::pair<bool, std::string> {
        Timer t;
        const fs::path dir =
            fs::temp_directory_path() /
            ("chromaforge_acceptance_gc_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        const int rc = run_cli("gradcheck --trials 50 --seed 7 --out " +
                                   (dir / "out").string(),
                               (dir / "log.txt").string());
        fs::remove_all(dir);
        bool ok = rc == 0 && t.secs() < 60.0;
        return {ok, "gradcheck exit " + std::to_string(rc) + " with 50 trials (" + fmt("%.1f", t.secs()) + "s)"};
    });

    // Shared attack runs: the criterion 5 pair is reused by 6, 7 and 8.
    std::vector<AttackResult> ace_k64_l5, rs_results;

    // 5. gradient attack beats random search at a fraction of the budget
    run_criterion(5, [&]() -> std::pair<bool, std::string> {
        Timer t;
        AttackConfig ace_cfg; // K = 64, lambda = 5, 500 iterations
        ace_k64_l5 = run_ace_batch(bench, ace_cfg, 500);
        AttackConfig rs_cfg;
        rs_cfg.max_iters = 5000;
        rs_results = run_batch(bench.eval, 501, 0,
                               [&](const LabeledImage& img, uint64_t s) {
                                   AttackConfig cfg = rs_cfg;
                                   cfg.seed = s;
                                   return random_search_attack(bench.cnn, img, cfg);
                               });
        const double a50 = rate_at_budget(ace_k64_l5, 50);
        const double a100 = rate_at_budget(ace_k64_l5, 100);
        const double a500 = rate_at_budget(ace_k64_l5, 500);
        const double r500 = rate_at_budget(rs_results, 500);
        const double r1500 = rate_at_budget(rs_results, 1500);
        const double r5000 = rate_at_budget(rs_results, 5000);
        bool ok = a100 > r1500 && t.secs() < 600.0;
        std::string detail =
            "ace@{50,100,500} = " + fmt("%.1f", a50) + "/" + fmt("%.1f", a100) +
            "/" + fmt("%.1f", a500) + "%, random@{500,1500,5000} = " +
            fmt("%.1f", r500) + "/" + fmt("%.1f", r1500) + "/" +
            fmt("%.1f", r5000) + "% (" + fmt("%.0f", t.secs()) + "s)";
        return {ok, detail};
    });

    // 6. raising lambda trades success for smaller curve deviation
    run_criterion(6, [&]() -> std::pair<bool, std::string> {
        const double lambdas[] = {0.0, 1.0, 5.0, 10.0};
        std::vector<double> rates, pens;
        for (double l : lambdas) {
            if (l == 5.0) {
                rates.push_back(success_rate(ace_k64_l5));
                pens.push_back(mean_raw_penalty(ace_k64_l5));
                continue;
            }
            AttackConfig cfg;
            cfg.lambda = l;
            auto rs = run_ace_batch(bench, cfg, 500);
            rates.push_back(success_rate(rs));
            pens.push_back(mean_raw_penalty(rs));
        }
        bool non_increasing = true;
        for (size_t i = 1; i < rates.size(); ++i)
            if (rates[i] > rates[i - 1] + 1e-12) non_increasing = false;
        bool pen_ok = pens[0] >= 2.0 * pens[3];
        std::string detail = "success@lambda{0,1,5,10} = ";
        for (size_t i = 0; i < rates.size(); ++i)
            detail += fmt("%.1f", rates[i]) + (i + 1 < rates.size() ? "/" : "%");
        detail += ", mean deviation " + fmt("%.4f", pens[0]) + " (l=0) vs " +
                  fmt("%.4f", pens[3]) + " (l=10)";
        return {non_increasing && pen_ok, detail};
    });

    // 7. more curve pieces help (or at least never hurt)
    run_criterion(7, [&]() -> std::pair<bool, std::string> {
        AttackConfig cfg;
        cfg.pieces = 2;
        auto k2 = run_ace_batch(bench, cfg, 500);
        const double r64 = success_rate(ace_k64_l5);
        const double r2 = success_rate(k2);
        return {r64 >= r2, "success K=64 " + fmt("%.1f", r64) + "% vs K=2 " + fmt("%.1f", r2) + "%"};
    });

    // 8. adversarial curves transfer to an independently trained model
    run_criterion(8, [&]() -> std::pair<bool, std::string> {
        int agree = 0, white = 0, moved = 0;
        for (size_t i = 0; i < bench.eval.size(); ++i) {
            const AttackResult& r = ace_k64_l5[i];
            if (r.status == AttackStatus::AlreadyMisclassified) continue;
            if (bench.mlp.predict(bench.eval[i].image) != bench.eval[i].label)
                continue;
            ++agree;
            if (r.success) ++white;
            if (bench.mlp.predict(r.adversarial) != bench.eval[i].label) ++moved;
        }
        if (agree == 0) return {false, "empty agreement set"};
        const double transfer = 100.0 * moved / agree;
        const double diag = 100.0 * white / agree;
        bool ok = moved > 0 && transfer < diag;
        return {ok, "transfer " + fmt("%.1f", transfer) + "% vs white-box " + fmt("%.1f", diag) + "% on " + std::to_string(agree) + " agreement images"};
    });

    // 9. pixel-space baseline invariants
    run_criterion(9, [&]() -> std::pair<bool, std::string> {
        const double eps = 0.03;
        LpConfig bim_cfg;
        bim_cfg.epsilon = eps; // 10 steps of eps/5
        LpConfig bim1_cfg;
        bim1_cfg.epsilon = eps;
        bim1_cfg.alpha = eps;
        bim1_cfg.iterations = 1;

        double worst_linf = 0.0;
        bool bim1_matches_fgsm = true;
        int fgsm_succ = 0, bim_succ = 0, n = 0;
        for (const LabeledImage& ex : bench.eval) {
            AttackResult f = fgsm(bench.cnn, ex, eps);
            AttackResult b10 = bim(bench.cnn, ex, bim_cfg);
            AttackResult b1 = bim(bench.cnn, ex, bim1_cfg);
            if (!bitwise_equal(b1.adversarial.pixels, f.adversarial.pixels))
                bim1_matches_fgsm = false;
            if (f.status == AttackStatus::AlreadyMisclassified) continue;
            ++n;
            if (f.success) ++fgsm_succ;
            if (b10.success) ++bim_succ;
            for (const AttackResult* r : {&f, &b10}) {
                for (size_t j = 0; j < ex.image.pixels.size(); ++j) {
                    const double d =
                        std::abs(r->adversarial.pixels[j] - ex.image.pixels[j]);
                    worst_linf = std::max(worst_linf, d - eps);
                }
            }
        }

        // w = 0 keeps the L2 attack at its starting point: the reconstruction
        // is exact only away from fully saturated pixels.
        Image interior = bench.eval[0].image;
        for (double& p : interior.pixels) p = std::clamp(p, 0.01, 0.99);
        LpConfig cw_cfg;
        cw_cfg.cw_search_steps = 1;
        cw_cfg.cw_inner_iters = 1;
        AttackResult cw_res =
            cw_l2(bench.cnn, {interior, bench.eval[0].label}, cw_cfg);
        double cw_dev = 0.0;
        for (size_t j = 0; j < interior.pixels.size(); ++j)
            cw_dev = std::max(cw_dev, std::abs(cw_res.adversarial.pixels[j] -
                                               interior.pixels[j]));

        bool ok = worst_linf <= 0.0 && bim1_matches_fgsm && cw_dev <= 1e-12 &&
                  bim_succ >= fgsm_succ;
        std::string detail =
            std::string("L-inf excess ") + fmt("%.3g", worst_linf) +
            ", bim(1)==fgsm " + (bim1_matches_fgsm ? "yes" : "NO") +
            ", cw(w=0) dev " + fmt("%.3g", cw_dev) + ", success bim " +
            std::to_string(bim_succ) + " vs fgsm " + std::to_string(fgsm_succ) +
            "/" + std::to_string(n);
        return {ok, detail};
    });

    // 10. perturbation norms against a brute-force loop plus the worked example
    run_criterion(10, [&]() -> std::pair<bool, std::string> {
        Rng rng(1010);
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            Image a = random_image(rng, 4, 4);
            Image b = a;
            for (double& p : b.pixels)
                if (rng.below(3) == 0) p += rng.uniform(-0.4, 0.4);
            PerturbationNorms got = perturbation_norms(a, b);
            int changed = 0;
            double ss = 0.0, mx = 0.0;
            for (size_t j = 0; j < a.pixels.size(); ++j) {
                const double d = std::abs(a.pixels[j] - b.pixels[j]);
                if (d > 1e-9) ++changed;
                ss += d * d;
                mx = std::max(mx, d);
            }
            worst = std::max({worst,
                              std::abs(got.l0_percent -
                                       100.0 * changed /
                                           static_cast<double>(a.pixels.size())),
                              std::abs(got.l2 - std::sqrt(ss)),
                              std::abs(got.linf_255 - mx * 255.0)});
        }
        // 0.1 - 0.0 is exactly 0.1 in binary; 0.6 - 0.5 is not.
        Image base(2, 2, 0.5);
        base.at(0, 1, 2) = 0.0;
        Image pert = base;
        pert.at(0, 1, 2) = 0.1;
        PerturbationNorms hand = perturbation_norms(base, pert);
        bool hand_ok = std::abs(hand.l0_percent - 100.0 / 12.0) <= 1e-12 &&
                       hand.l2 == 0.1 && hand.linf_255 == 25.5;
        return {worst <= 1e-12 && hand_ok,
                "brute-force gap " + fmt("%.3g", worst) + ", worked example " + (hand_ok ? "exact" : "WRONG")};
    });

    // 11. the style and region variants collapse to the plain attack
    run_criterion(11, [&]() -> std::pair<bool, std::string> {
        size_t idx = 0;
        while (idx < bench.eval.size() &&
               bench.cnn.predict(bench.eval[idx].image) != bench.eval[idx].label)
            ++idx;
        if (idx + 1 >= bench.eval.size()) return {false, "no attackable image"};
        const LabeledImage& ex = bench.eval[idx];

        AttackConfig cfg0;
        cfg0.pieces = 8;
        cfg0.lambda = 0.0;
        cfg0.max_iters = 80;
        cfg0.seed = 9;
        AttackResult plain0 = ace_attack(bench.cnn, ex, cfg0);
        AttackResult styled = style_guided_attack(bench.cnn, ex,
                                                  bench.eval[idx + 1].image, cfg0);
        bool style_ok = traces_equal(plain0.trace, styled.trace) &&
                        bitwise_equal(plain0.adversarial.pixels,
                                      styled.adversarial.pixels) &&
                        plain0.success == styled.success;

        AttackConfig cfg5 = cfg0;
        cfg5.lambda = 5.0;
        SemanticMask whole;
        whole.regions.height = ex.image.height;
        whole.regions.width = ex.image.width;
        whole.regions.region.assign(ex.image.num_pixels(), 0);
        whole.regions.num_regions = 1;
        whole.regions.levels = {0};
        whole.weights = {1.0};
        AttackResult plain5 = ace_attack(bench.cnn, ex, cfg5);
        AttackResult regional = semantic_attack(bench.cnn, ex, whole, cfg5);
        bool region_ok =
            traces_equal(plain5.trace, regional.trace) &&
            bitwise_equal(plain5.adversarial.pixels, regional.adversarial.pixels) &&
            plain5.params && regional.params &&
            bitwise_equal(plain5.params->theta, regional.params->theta);

        return {style_ok && region_ok,
                std::string("style(lambda=0) trace ") + (style_ok ? "identical" : "DIFFERS") + ", one-region trace " + (region_ok ? "identical" : "DIFFERS")};
    });

    // 12. every CLI command replays byte-identically from its manifest
    run_criterion(12, [&]() -> std::pair<bool, std::string> {
        const fs::path root =
            fs::temp_directory_path() /
            ("chromaforge_acceptance_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        const std::string log = (root / "log.txt").string();
        auto at = [&](const char* rel) { return (root / rel).string(); };

        std::vector<std::pair<std::string, std::string>> cmds = {
            {"gen-data --classes 2 --per-class 10 --seed 3", at("g")},
            {"train --arch mlp-small --data " + at("g") + " --epochs 2 --seed 4",
             at("m")},
            {"train --arch mlp-small --data " + at("g") + " --epochs 2 --seed 9",
             at("m2")},
            {"attack --method ace --model " + at("m") + "/model.json --images " +
                 at("g") + " --count 3 --K 8 --max-iters 20 --seed 5",
             at("a")},
            {"sweep --model " + at("m") + "/model.json --images " + at("g") +
                 " --count 2 --param lambda --values 0,5 --K 8 --max-iters 10 "
                 "--seed 6",
             at("s")},
            {"compare-search --model " + at("m") + "/model.json --images " +
                 at("g") + " --count 2 --K 8 --budgets 20 --rs-budgets 60 --seed 7",
             at("c")},
            {"evaluate --models " + at("m") + "/model.json," + at("m2") +
                 "/model.json --images " + at("g") +
                 " --count 2 --method ace --K 8 --max-iters 10 --seed 8",
             at("e")},
            {"gradcheck --trials 2 --seed 10", at("gc")},
        };

        std::string bad;
        for (const auto& [args, out] : cmds) {
            if (run_cli(args + " --out " + out, log) != 0) {
                bad = args.substr(0, args.find(' ')) + " failed: " + slurp(log);
                break;
            }
            const std::string replay = out + "_replay";
            if (run_cli("rerun --manifest " + out + "/manifest.json --out " +
                            replay,
                        log) != 0) {
                bad = "rerun of " + args.substr(0, args.find(' ')) + " failed";
                break;
            }
            auto first = tree_contents(out);
            auto second = tree_contents(replay);
            if (first.size() != second.size()) {
                bad = args.substr(0, args.find(' ')) + ": file sets differ";
                break;
            }
            for (const auto& [rel, bytes] : first) {
                auto it = second.find(rel);
                if (it == second.end() || it->second != bytes) {
                    bad = args.substr(0, args.find(' ')) + ": " + rel + " differs";
                    break;
                }
            }
            if (!bad.empty()) break;
        }
        fs::remove_all(root);
        if (!bad.empty()) return {false, bad};
        return {true, "8 commands replayed byte-identically (gen-data, train x2, attack, sweep, compare-search, evaluate, gradcheck)"};
    });

    std::printf("%d/12 criteria passed\n", 12 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
