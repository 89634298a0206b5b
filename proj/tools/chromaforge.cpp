// chromaforge: train small classifiers, run color-curve and pixel-space
// attacks against them, and emit plot-ready CSV/JSON artifacts.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Every command
// writes all artifacts under --out, along with a manifest.json from which
// `rerun` reproduces the outputs byte-identically.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chromaforge/attacks.hpp"
#include "chromaforge/batch.hpp"
#include "chromaforge/classifier.hpp"
#include "chromaforge/color_filter.hpp"
#include "chromaforge/datagen.hpp"
#include "chromaforge/errors.hpp"
#include "chromaforge/eval.hpp"
#include "chromaforge/gradcheck.hpp"
#include "chromaforge/image_io.hpp"
#include "chromaforge/lp_attacks.hpp"
#include "chromaforge/manifest.hpp"
#include "chromaforge/metrics.hpp"
#include "chromaforge/rng.hpp"
#include "chromaforge/trainer.hpp"
#include "chromaforge/version.hpp"

namespace fs = std::filesystem;
using namespace chromaforge;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- helpers

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const std::string& tok : split_list(s)) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " value: " + tok);
        }
    }
    return out;
}

std::vector<int> parse_ints(const std::string& s, const char* what) {
    std::vector<int> out;
    for (const std::string& tok : split_list(s)) {
        try {
            size_t pos = 0;
            int v = std::stoi(tok, &pos);
            if (pos != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " value: " + tok);
        }
    }
    return out;
}

std::string abs_path(const std::string& p) {
    return fs::absolute(fs::path(p)).lexically_normal().string();
}

void ensure_out_dir(const std::string& out) {
    if (out.empty()) throw UsageError("--out is required");
    fs::create_directories(out);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(IoErrorKind::Unwritable, "cannot write " + path.string());
    f << text;
    if (!f) throw IoError(IoErrorKind::Unwritable, "short write to " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string csv_num(double v) { return format_double(v); }
std::string csv_opt(const std::optional<double>& v) {
    return v ? format_double(*v) : "NA";
}

// Accumulates the canonical flag list stored in the manifest; `rerun` replays
// it verbatim with a fresh --out.
struct ArgList {
    std::vector<std::string> v;
    void opt(const std::string& flag, const std::string& val) {
        v.push_back(flag);
        v.push_back(val);
    }
    void num(const std::string& flag, double d) { opt(flag, format_double(d)); }
    void inum(const std::string& flag, long long i) { opt(flag, std::to_string(i)); }
    void unum(const std::string& flag, uint64_t u) { opt(flag, std::to_string(u)); }
    void onoff(const std::string& flag, bool b) {
        if (b) v.push_back(flag);
    }
};

void save_manifest(const std::string& out, const std::string& command,
                   ArgList args, uint64_t seed,
                   const std::vector<std::string>& input_paths,
                   std::vector<std::string> outputs) {
    RunManifest m;
    m.tool_version = kToolVersion;
    m.command = command;
    m.args = std::move(args.v);
    m.seed = seed;
    for (const std::string& p : input_paths)
        m.input_hashes[abs_path(p)] = hash_hex(fnv1a64_file(p));
    m.outputs = std::move(outputs);
    m.save((fs::path(out) / "manifest.json").string());
}

// ------------------------------------------------- config / env expansion

std::string config_token_value(std::vector<std::string>& tokens) {
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == "--config") {
            if (i + 1 >= tokens.size()) throw UsageError("--config needs a file");
            std::string path = tokens[i + 1];
            tokens.erase(tokens.begin() + static_cast<long>(i),
                         tokens.begin() + static_cast<long>(i) + 2);
            return path;
        }
        if (tokens[i].rfind("--config=", 0) == 0) {
            std::string path = tokens[i].substr(9);
            tokens.erase(tokens.begin() + static_cast<long>(i));
            return path;
        }
    }
    return {};
}

bool has_flag(const std::vector<std::string>& tokens, const std::string& flag) {
    for (const std::string& t : tokens)
        if (t == flag || t.rfind(flag + "=", 0) == 0) return true;
    return false;
}

std::string json_scalar_to_token(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_unsigned()) return std::to_string(v.get<uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
    if (v.is_number_float()) return format_double(v.get<double>());
    throw UsageError("config values must be scalars or arrays of scalars");
}

// Config file: a JSON object whose keys are long flag names without the
// leading dashes. Explicit command-line flags win; config fills the rest.
void apply_config_file(std::vector<std::string>& tokens) {
    const std::string path = config_token_value(tokens);
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad config file: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        if (has_flag(tokens, flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) {
                if (!joined.empty()) joined += ",";
                joined += json_scalar_to_token(item);
            }
            tokens.push_back(flag);
            tokens.push_back(joined);
        } else {
            tokens.push_back(flag);
            tokens.push_back(json_scalar_to_token(value));
        }
    }
}

void apply_env_seed(std::vector<std::string>& tokens) {
    if (has_flag(tokens, "--seed")) return;
    const char* env = std::getenv("CHROMAFORGE_SEED");
    if (!env || !*env) return;
    try {
        size_t pos = 0;
        (void)std::stoull(env, &pos);
        if (env[pos] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
        throw UsageError(std::string("CHROMAFORGE_SEED is not an integer: ") + env);
    }
    tokens.push_back("--seed");
    tokens.push_back(env);
}

// ------------------------------------------------------------ data access

std::vector<LabeledImage> load_images_arg(const std::string& images, int count,
                                          std::string* hash_source) {
    fs::path p(images);
    std::vector<LabeledImage> out;
    if (p.extension() == ".bin") {
        out = load_binary_batch(p.string(), 32, 32);
        *hash_source = p.string();
    } else if (fs::exists(p / "labels.csv")) {
        out = load_split_dir(p.string());
        *hash_source = (p / "labels.csv").string();
    } else if (fs::exists(p / "holdout" / "labels.csv")) {
        out = load_split_dir((p / "holdout").string());
        *hash_source = (p / "holdout" / "labels.csv").string();
    } else {
        throw UsageError("--images must be a .bin batch, a split directory or a "
                         "dataset directory: " + images);
    }
    if (count >= 0 && static_cast<size_t>(count) < out.size())
        out.resize(static_cast<size_t>(count));
    if (out.empty()) throw UsageError("no images in " + images);
    return out;
}

std::string model_stem(const std::string& path) {
    return fs::path(path).stem().string();
}

// --------------------------------------------------------- attack options

struct AttackOpts {
    std::string method = "ace";
    std::string model;
    std::string images;
    std::string target;        // ace-style: image path or preset:<name>
    std::string mask;          // ace-semantic: mask image path
    std::string mask_weights;  // JSON array text
    std::string loss = "cw";
    int pieces = 64;
    double lambda = 5.0;
    double kappa = 0.0;
    bool kappa_given = false;
    int max_iters = 500;
    double lr = 0.01;
    int patience = 50;
    double epsilon = 2.0; // in /255 units
    double alpha = 0.0;   // in /255 units; 0 = epsilon/5
    int iterations = 10;
    int cw_steps = 3;
    int cw_iters = 100;
    bool rs_raw = false;
    bool l0_spatial = false;
    int count = -1;
    int jobs = 0;
    uint64_t seed = 0;
    std::string out;
};

void add_curve_flags(CLI::App* cmd, AttackOpts& o) {
    cmd->add_option("--K", o.pieces, "curve pieces per channel")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--lambda", o.lambda, "deviation penalty weight")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--max-iters", o.max_iters, "iteration budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--lr", o.lr, "Adam step size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--patience", o.patience,
                    "plateau iterations after success before stopping")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--loss", o.loss, "adversarial loss")
        ->check(CLI::IsMember({"cw", "ce"}))
        ->capture_default_str();
    cmd->add_flag("--rs-raw", o.rs_raw,
                  "random search: skip the simplex projection of samples");
}

void add_common_attack_flags(CLI::App* cmd, AttackOpts& o, bool with_method) {
    if (with_method)
        cmd->add_option("--method", o.method, "attack method")
            ->check(CLI::IsMember({"ace", "random", "fgsm", "bim", "cw", "ace-style",
                                   "ace-semantic"}))
            ->capture_default_str();
    cmd->add_option("--model", o.model, "classifier file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--images", o.images, "evaluation images (.bin or dataset dir)")
        ->required();
    cmd->add_option("--count", o.count, "use only the first N images (-1 = all)")
        ->capture_default_str();
    cmd->add_option("--jobs", o.jobs, "parallel attack workers (0 = auto)")
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "global seed")->capture_default_str();
    add_curve_flags(cmd, o);
    cmd->add_option("--kappa", o.kappa,
                    "confidence margin (default 0; 40 for --method cw)");
    cmd->add_option("--epsilon", o.epsilon, "Linf bound in /255 units")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "BIM step in /255 units (0 = epsilon/5)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--iterations", o.iterations, "BIM steps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--cw-steps", o.cw_steps, "C&W balance search rounds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--cw-iters", o.cw_iters, "C&W iterations per round")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--l0-spatial", o.l0_spatial,
                  "report L0 over pixels instead of channel coordinates");
    cmd->add_option("--target", o.target,
                    "style target: image path or preset:<warm|cool|contrast|fade>");
    cmd->add_option("--mask", o.mask, "region mask image (ace-semantic)");
    cmd->add_option("--mask-weights", o.mask_weights,
                    "JSON array of per-region penalty weights");
    cmd->add_option("--config", "JSON file of flag defaults (flags win)")
        ->group(""); // consumed before parsing; listed for help only
}

AttackConfig curve_config(const AttackOpts& o) {
    AttackConfig cfg;
    cfg.pieces = o.pieces;
    cfg.lambda = o.lambda;
    cfg.kappa = o.kappa_given ? o.kappa : 0.0;
    cfg.max_iters = o.max_iters;
    cfg.learning_rate = o.lr;
    cfg.early_stop_patience = o.patience;
    cfg.seed = o.seed;
    cfg.loss = o.loss == "ce" ? AttackLoss::CrossEntropy : AttackLoss::CwMargin;
    cfg.rs_project = !o.rs_raw;
    cfg.validate();
    return cfg;
}

LpConfig lp_config(const AttackOpts& o) {
    LpConfig cfg;
    cfg.epsilon = o.epsilon / 255.0;
    cfg.alpha = o.alpha / 255.0;
    cfg.iterations = o.iterations;
    cfg.kappa = o.kappa_given ? o.kappa : 40.0;
    cfg.cw_search_steps = o.cw_steps;
    cfg.cw_inner_iters = o.cw_iters;
    cfg.learning_rate = o.lr;
    cfg.validate();
    return cfg;
}

std::vector<double> parse_mask_weights(const std::string& text, int regions) {
    if (text.empty())
        return std::vector<double>(static_cast<size_t>(regions),
                                   1.0 / std::max(1, regions));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad --mask-weights: ") + e.what());
    }
    if (!j.is_array()) throw UsageError("--mask-weights must be a JSON array");
    std::vector<double> w;
    for (const auto& item : j) {
        if (!item.is_number()) throw UsageError("--mask-weights must hold numbers");
        w.push_back(item.get<double>());
    }
    return w;
}

// Bundled per-method state resolved once per command.
struct MethodRunner {
    std::string method;
    AttackConfig curve;
    LpConfig lp;
    std::optional<Image> target_image;
    std::string target_preset;
    std::optional<SemanticMask> mask;

    AttackResult operator()(const Classifier& model, const LabeledImage& img,
                            uint64_t per_image_seed) const {
        AttackConfig cfg = curve;
        cfg.seed = per_image_seed;
        if (method == "ace") return ace_attack(model, img, cfg);
        if (method == "random") return random_search_attack(model, img, cfg);
        if (method == "ace-style") {
            Image target = target_image
                               ? *target_image
                               : apply_filter(style_preset(target_preset, cfg.pieces),
                                              img.image);
            return style_guided_attack(model, img, target, cfg);
        }
        if (method == "ace-semantic") return semantic_attack(model, img, *mask, cfg);
        if (method == "fgsm") return fgsm(model, img, lp.epsilon);
        if (method == "bim") return bim(model, img, lp);
        if (method == "cw") return cw_l2(model, img, lp);
        throw ValueError("unknown method " + method);
    }
};

MethodRunner make_runner(const AttackOpts& o) {
    MethodRunner r;
    r.method = o.method;
    r.curve = curve_config(o);
    r.lp = lp_config(o);
    if (o.method == "ace-style") {
        if (o.target.empty())
            throw UsageError("--method ace-style requires --target");
        if (o.target.rfind("preset:", 0) == 0) {
            r.target_preset = o.target.substr(7);
            style_preset(r.target_preset, o.pieces); // validate the name now
        } else {
            r.target_image = load_image(o.target);
        }
    }
    if (o.method == "ace-semantic") {
        if (o.mask.empty())
            throw UsageError("--method ace-semantic requires --mask");
        SemanticMask m;
        m.regions = load_mask(o.mask);
        m.weights = parse_mask_weights(o.mask_weights, m.regions.num_regions);
        m.validate();
        r.mask = std::move(m);
    }
    return r;
}

// Canonical flag list for the manifest: every relevant flag in resolved form.
ArgList attack_args(const AttackOpts& o, bool with_method) {
    ArgList a;
    if (with_method) a.opt("--method", o.method);
    a.opt("--model", abs_path(o.model));
    a.opt("--images", abs_path(o.images));
    a.inum("--count", o.count);
    a.inum("--jobs", o.jobs);
    a.unum("--seed", o.seed);
    a.inum("--K", o.pieces);
    a.num("--lambda", o.lambda);
    a.inum("--max-iters", o.max_iters);
    a.num("--lr", o.lr);
    a.inum("--patience", o.patience);
    a.opt("--loss", o.loss);
    a.onoff("--rs-raw", o.rs_raw);
    if (o.kappa_given) a.num("--kappa", o.kappa);
    if (o.method == "fgsm" || o.method == "bim" || o.method == "cw") {
        a.num("--epsilon", o.epsilon);
        a.num("--alpha", o.alpha);
        a.inum("--iterations", o.iterations);
        a.inum("--cw-steps", o.cw_steps);
        a.inum("--cw-iters", o.cw_iters);
    }
    a.onoff("--l0-spatial", o.l0_spatial);
    if (!o.target.empty())
        a.opt("--target", o.target.rfind("preset:", 0) == 0 ? o.target
                                                            : abs_path(o.target));
    if (!o.mask.empty()) a.opt("--mask", abs_path(o.mask));
    if (!o.mask_weights.empty()) a.opt("--mask-weights", o.mask_weights);
    return a;
}

std::vector<std::string> attack_input_paths(const AttackOpts& o,
                                            const std::string& images_hash_source) {
    std::vector<std::string> inputs{o.model, images_hash_source};
    if (!o.target.empty() && o.target.rfind("preset:", 0) != 0)
        inputs.push_back(o.target);
    if (!o.mask.empty()) inputs.push_back(o.mask);
    return inputs;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
    std::string arch = "cnn-small";
    std::string data = "synthetic";
    int epochs = 30;
    int batch = 32;
    double lr = 1e-3;
    int classes = 6;
    int per_class = 200;
    double noise = 0.03;
    double hue_width = 0.09;
    uint64_t seed = 0;
    bool verbose = false;
    std::string out;
};

int cmd_train(const TrainOpts& o) {
    ensure_out_dir(o.out);
    Dataset ds;
    std::vector<std::string> inputs;
    if (o.data == "synthetic") {
        SyntheticSpec spec;
        spec.num_classes = o.classes;
        spec.per_class = o.per_class;
        spec.texture_noise = o.noise;
        spec.hue_width = o.hue_width;
        spec.seed = derive_seed(o.seed, 1);
        ds = generate_synthetic(spec);
    } else if (fs::path(o.data).extension() == ".bin") {
        ds.train = load_binary_batch(o.data, 32, 32);
        int max_label = 0;
        for (const auto& ex : ds.train) max_label = std::max(max_label, ex.label);
        ds.num_classes = max_label + 1;
        inputs.push_back(o.data);
    } else {
        ds = load_dataset(o.data);
        inputs.push_back((fs::path(o.data) / "train" / "labels.csv").string());
        inputs.push_back((fs::path(o.data) / "holdout" / "labels.csv").string());
    }

    Classifier model = Classifier::make_preset(o.arch, ds.num_classes,
                                               derive_seed(o.seed, 2));
    TrainConfig tc;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch;
    tc.learning_rate = o.lr;
    tc.seed = derive_seed(o.seed, 3);
    tc.verbose = o.verbose;
    TrainReport report = train(model, ds.train, tc);

    std::string csv = "epoch,split,loss,accuracy\n";
    for (size_t e = 0; e < report.epoch_loss.size(); ++e)
        csv += std::to_string(e + 1) + ",train," + csv_num(report.epoch_loss[e])
               + "," + csv_num(report.epoch_accuracy[e]) + "\n";
    std::optional<double> holdout_acc;
    if (!ds.holdout.empty()) {
        holdout_acc = evaluate_accuracy(model, ds.holdout);
        csv += std::to_string(report.epoch_loss.size()) + ",holdout,NA,"
               + csv_num(*holdout_acc) + "\n";
    }

    model.save((fs::path(o.out) / "model.json").string());
    write_text(fs::path(o.out) / "accuracy.csv", csv);

    ArgList args;
    args.opt("--arch", o.arch);
    args.opt("--data", o.data == "synthetic" ? o.data : abs_path(o.data));
    args.inum("--epochs", o.epochs);
    args.inum("--batch", o.batch);
    args.num("--lr", o.lr);
    args.inum("--classes", o.classes);
    args.inum("--per-class", o.per_class);
    args.num("--noise", o.noise);
    args.num("--hue-width", o.hue_width);
    args.unum("--seed", o.seed);
    save_manifest(o.out, "train", std::move(args), o.seed, inputs,
                  {"model.json", "accuracy.csv"});

    std::cout << o.arch << ": final train accuracy "
              << csv_num(100.0 * report.epoch_accuracy.back()) << "%";
    if (holdout_acc)
        std::cout << ", holdout accuracy " << csv_num(100.0 * *holdout_acc) << "%";
    std::cout << "\nwrote " << (fs::path(o.out) / "model.json").string() << "\n";
    return 0;
}

// --------------------------------------------------------------- gen-data

struct GenDataOpts {
    int classes = 6;
    int per_class = 200;
    int size = 32;
    double hue_width = 0.09;
    double hue_margin = 0.05;
    int grid = 4;
    double noise = 0.03;
    uint64_t seed = 0;
    std::string out;
};

int cmd_gen_data(const GenDataOpts& o) {
    ensure_out_dir(o.out);
    SyntheticSpec spec;
    spec.num_classes = o.classes;
    spec.per_class = o.per_class;
    spec.height = static_cast<size_t>(o.size);
    spec.width = static_cast<size_t>(o.size);
    spec.hue_width = o.hue_width;
    spec.hue_margin = o.hue_margin;
    spec.grid = o.grid;
    spec.texture_noise = o.noise;
    spec.seed = derive_seed(o.seed, 1);
    Dataset ds = generate_synthetic(spec);
    save_dataset(ds, o.out);

    ArgList args;
    args.inum("--classes", o.classes);
    args.inum("--per-class", o.per_class);
    args.inum("--size", o.size);
    args.num("--hue-width", o.hue_width);
    args.num("--hue-margin", o.hue_margin);
    args.inum("--grid", o.grid);
    args.num("--noise", o.noise);
    args.unum("--seed", o.seed);
    save_manifest(o.out, "gen-data", std::move(args), o.seed, {},
                  {"train/labels.csv", "holdout/labels.csv"});

    std::cout << "wrote " << ds.train.size() << " train + " << ds.holdout.size()
              << " holdout images to " << o.out << "\n";
    return 0;
}

// ----------------------------------------------------------------- attack

int cmd_attack(AttackOpts& o) {
    MethodRunner runner = make_runner(o);
    ensure_out_dir(o.out);
    Classifier model = Classifier::load(o.model);
    std::string images_hash_source;
    std::vector<LabeledImage> images =
        load_images_arg(o.images, o.count, &images_hash_source);

    std::vector<AttackResult> results =
        run_batch(images, o.seed, o.jobs,
                  [&](const LabeledImage& img, uint64_t per_image_seed) {
                      return runner(model, img, per_image_seed);
                  });

    std::vector<std::string> outputs;
    for (size_t i = 0; i < results.size(); ++i) {
        if (o.l0_spatial)
            results[i].norms = perturbation_norms(images[i].image,
                                                  results[i].adversarial, 1e-9, true);
        char name[40];
        std::snprintf(name, sizeof name, "result_%05zu.json", i);
        write_json(fs::path(o.out) / name, result_to_json(results[i]));
        outputs.emplace_back(name);
        std::snprintf(name, sizeof name, "adv_%05zu.png", i);
        save_image(results[i].adversarial, (fs::path(o.out) / name).string());
        outputs.emplace_back(name);
    }

    EvalReport report = summarize(results);
    for (EvalRow& row : report.rows) {
        row.model_src = model_stem(o.model);
        row.model_dst = model_stem(o.model);
    }
    write_text(fs::path(o.out) / "summary.csv", report.to_csv());
    outputs.emplace_back("summary.csv");

    save_manifest(o.out, "attack", attack_args(o, true), o.seed,
                  attack_input_paths(o, images_hash_source), std::move(outputs));
    std::cout << report.to_csv() << "wrote " << o.out << "\n";
    return 0;
}

// ------------------------------------------------------------------ sweep

struct SweepOpts {
    AttackOpts base;
    std::string param = "lambda";
    std::string values;
    int repeats = 1;
};

int cmd_sweep(SweepOpts& o) {
    std::vector<double> values = parse_doubles(o.values, "--values");
    if (values.empty()) throw UsageError("--values must list at least one value");
    if (o.param == "K")
        for (double v : values)
            if (v < 1 || v != static_cast<int>(v))
                throw UsageError("--param K needs positive integer values");

    ensure_out_dir(o.base.out);
    Classifier model = Classifier::load(o.base.model);
    std::string images_hash_source;
    std::vector<LabeledImage> images =
        load_images_arg(o.base.images, o.base.count, &images_hash_source);

    std::string csv = "param,value,repeat,n,success_pct,mean_dev_penalty,"
                      "mean_iters_success,l2_success\n";
    uint64_t run_index = 0;
    for (double value : values) {
        for (int rep = 0; rep < o.repeats; ++rep, ++run_index) {
            AttackOpts run = o.base;
            if (o.param == "K")
                run.pieces = static_cast<int>(value);
            else
                run.lambda = value;
            run.method = "ace";
            MethodRunner runner = make_runner(run);
            const uint64_t run_seed = derive_seed(o.base.seed, run_index);
            std::vector<AttackResult> results =
                run_batch(images, run_seed, o.base.jobs,
                          [&](const LabeledImage& img, uint64_t s) {
                              return runner(model, img, s);
                          });

            int n = 0, successes = 0;
            double dev = 0, iters = 0, l2 = 0;
            for (const AttackResult& r : results) {
                if (r.status == AttackStatus::AlreadyMisclassified) continue;
                ++n;
                if (r.params) dev += deviation_penalty(*r.params);
                if (r.success) {
                    ++successes;
                    iters += r.iterations_used;
                    l2 += r.norms.l2;
                }
            }
            csv += o.param + "," + csv_num(value) + "," + std::to_string(rep) + ","
                   + std::to_string(n) + ","
                   + (n ? csv_num(100.0 * successes / n) : "NA") + ","
                   + (n ? csv_num(dev / n) : "NA") + ","
                   + (successes ? csv_num(iters / successes) : "NA") + ","
                   + (successes ? csv_num(l2 / successes) : "NA") + "\n";
        }
    }
    write_text(fs::path(o.base.out) / "sweep.csv", csv);

    ArgList args = attack_args(o.base, false);
    args.opt("--param", o.param);
    args.opt("--values", o.values);
    args.inum("--repeats", o.repeats);
    save_manifest(o.base.out, "sweep", std::move(args), o.base.seed,
                  attack_input_paths(o.base, images_hash_source), {"sweep.csv"});
    std::cout << csv << "wrote " << o.base.out << "\n";
    return 0;
}

// --------------------------------------------------------- compare-search

struct CompareOpts {
    AttackOpts base;
    std::string budgets = "50,100,500";
    std::string rs_budgets = "500,1500,5000";
};

// Success at budget b falls out of one max-budget run: the iterate sequence
// does not depend on the cap, so success@b is first_success <= b.
int successes_at(const std::vector<AttackResult>& results, int budget) {
    int n = 0;
    for (const AttackResult& r : results)
        if (r.first_success >= 1 && r.first_success <= budget) ++n;
    return n;
}

int cmd_compare_search(CompareOpts& o) {
    std::vector<int> budgets = parse_ints(o.budgets, "--budgets");
    std::vector<int> rs_budgets = parse_ints(o.rs_budgets, "--rs-budgets");
    if (budgets.empty() || rs_budgets.empty())
        throw UsageError("--budgets and --rs-budgets must be non-empty");
    for (int b : budgets)
        if (b < 0) throw UsageError("budgets must be >= 0");
    for (int b : rs_budgets)
        if (b < 0) throw UsageError("budgets must be >= 0");

    ensure_out_dir(o.base.out);
    Classifier model = Classifier::load(o.base.model);
    std::string images_hash_source;
    std::vector<LabeledImage> images =
        load_images_arg(o.base.images, o.base.count, &images_hash_source);

    auto run_method = [&](const std::string& method, int max_budget) {
        AttackOpts run = o.base;
        run.method = method;
        run.max_iters = std::max(1, max_budget);
        MethodRunner runner = make_runner(run);
        return run_batch(images, o.base.seed, o.base.jobs,
                         [&](const LabeledImage& img, uint64_t s) {
                             return runner(model, img, s);
                         });
    };
    std::vector<AttackResult> ace_results =
        run_method("ace", *std::max_element(budgets.begin(), budgets.end()));
    std::vector<AttackResult> rs_results = run_method(
        "random", *std::max_element(rs_budgets.begin(), rs_budgets.end()));

    int n = 0;
    for (const AttackResult& r : ace_results)
        if (r.status != AttackStatus::AlreadyMisclassified) ++n;

    std::string csv = "method,budget,n,success_pct\n";
    for (int b : budgets)
        csv += "ace," + std::to_string(b) + "," + std::to_string(n) + ","
               + (n ? csv_num(100.0 * successes_at(ace_results, b) / n) : "NA")
               + "\n";
    for (int b : rs_budgets)
        csv += "random," + std::to_string(b) + "," + std::to_string(n) + ","
               + (n ? csv_num(100.0 * successes_at(rs_results, b) / n) : "NA")
               + "\n";
    write_text(fs::path(o.base.out) / "compare.csv", csv);

    ArgList args = attack_args(o.base, false);
    args.opt("--budgets", o.budgets);
    args.opt("--rs-budgets", o.rs_budgets);
    save_manifest(o.base.out, "compare-search", std::move(args), o.base.seed,
                  attack_input_paths(o.base, images_hash_source), {"compare.csv"});
    std::cout << csv << "wrote " << o.base.out << "\n";
    return 0;
}

// --------------------------------------------------------------- evaluate

struct EvaluateOpts {
    AttackOpts base;
    std::string models; // comma list of model files
};

int cmd_evaluate(EvaluateOpts& o) {
    std::vector<std::string> paths = split_list(o.models);
    if (paths.empty()) throw UsageError("--models must list at least one model");
    static const std::set<std::string> kTransferable{"ace", "random", "fgsm", "bim",
                                                     "cw"};
    if (!kTransferable.count(o.base.method))
        throw UsageError("evaluate supports methods ace, random, fgsm, bim, cw");

    ensure_out_dir(o.base.out);
    std::vector<Classifier> models;
    std::vector<const Classifier*> model_ptrs;
    std::vector<std::string> names;
    for (const std::string& p : paths) models.push_back(Classifier::load(p));
    for (size_t i = 0; i < models.size(); ++i) {
        model_ptrs.push_back(&models[i]);
        std::string name = model_stem(paths[i]);
        int copy = 2;
        while (std::find(names.begin(), names.end(), name) != names.end())
            name = model_stem(paths[i]) + "#" + std::to_string(copy++);
        names.push_back(name);
    }

    std::string images_hash_source;
    std::vector<LabeledImage> images =
        load_images_arg(o.base.images, o.base.count, &images_hash_source);

    MethodRunner runner = make_runner(o.base);
    TransferMatrix matrix = transfer_matrix(
        model_ptrs, names, images,
        [&](const Classifier& model, const LabeledImage& img, size_t idx) {
            size_t src = 0;
            for (size_t i = 0; i < model_ptrs.size(); ++i)
                if (model_ptrs[i] == &model) src = i;
            return runner(model, img, derive_seed(derive_seed(o.base.seed, src), idx));
        });

    EvalReport report = matrix.report(o.base.method);
    write_text(fs::path(o.base.out) / "transfer.csv", report.to_csv());

    ArgList args = attack_args(o.base, true);
    std::string joined;
    for (const std::string& p : paths) {
        if (!joined.empty()) joined += ",";
        joined += abs_path(p);
    }
    args.opt("--models", joined);
    std::vector<std::string> inputs = paths;
    inputs.push_back(images_hash_source);
    save_manifest(o.base.out, "evaluate", std::move(args), o.base.seed, inputs,
                  {"transfer.csv"});
    std::cout << report.to_csv() << "wrote " << o.base.out << "\n";
    return 0;
}

// --------------------------------------------------------------- gradcheck

struct GradcheckOpts {
    std::string module = "all";
    int trials = 50;
    uint64_t seed = 0;
    std::string out;
};

int cmd_gradcheck(const GradcheckOpts& o) {
    if (o.trials < 1) throw UsageError("--trials must be at least 1");
    GradCheckReport report = run_gradcheck(o.module, o.trials, o.seed);
    std::cout << "filter_theta        max rel err " << csv_num(report.filter_theta)
              << "\npenalty             max rel err " << csv_num(report.penalty)
              << "\nclassifier_input    max rel err "
              << csv_num(report.classifier_input)
              << "\nclassifier_weights  max rel err "
              << csv_num(report.classifier_weights) << "\n"
              << (report.passed() ? "PASS" : "FAIL") << " (tolerance "
              << csv_num(kGradTolerance) << ")\n";
    if (!o.out.empty()) {
        ensure_out_dir(o.out);
        write_json(fs::path(o.out) / "gradcheck.json", report.to_json());
        ArgList args;
        args.opt("--module", o.module);
        args.inum("--trials", o.trials);
        args.unum("--seed", o.seed);
        save_manifest(o.out, "gradcheck", std::move(args), o.seed, {},
                      {"gradcheck.json"});
    }
    return report.passed() ? 0 : 1;
}

// ------------------------------------------------------------------ rerun

int run_tokens(std::vector<std::string> tokens); // forward

struct RerunOpts {
    std::string manifest;
    std::string out;
};

int cmd_rerun(const RerunOpts& o) {
    RunManifest m = RunManifest::load(o.manifest);
    for (const auto& [path, stored_hash] : m.input_hashes) {
        if (!fs::exists(path)) {
            std::cerr << "warning: input " << path << " is missing\n";
            continue;
        }
        if (hash_hex(fnv1a64_file(path)) != stored_hash)
            std::cerr << "warning: input " << path
                      << " changed since the manifest was written\n";
    }
    std::vector<std::string> tokens{m.command};
    tokens.insert(tokens.end(), m.args.begin(), m.args.end());
    tokens.push_back("--out");
    tokens.push_back(o.out);
    return run_tokens(std::move(tokens));
}

// --------------------------------------------------------------- dispatch

int run_tokens(std::vector<std::string> tokens) {
    static const std::set<std::string> kConfigurable{
        "train", "gen-data", "attack", "sweep", "compare-search", "evaluate",
        "gradcheck"};
    if (!tokens.empty() && kConfigurable.count(tokens[0])) {
        apply_config_file(tokens);
        apply_env_seed(tokens);
    }

    CLI::App app{"color-curve adversarial attack toolkit"};
    app.require_subcommand(1);

    TrainOpts train_opts;
    CLI::App* train_cmd = app.add_subcommand("train", "train a classifier preset");
    train_cmd->add_option("--arch", train_opts.arch, "model preset")
        ->check(CLI::IsMember(Classifier::preset_names()))
        ->capture_default_str();
    train_cmd->add_option("--data", train_opts.data,
                          "synthetic | dataset dir | .bin batch")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_opts.epochs)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--batch", train_opts.batch)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--lr", train_opts.lr)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--classes", train_opts.classes, "synthetic classes")
        ->check(CLI::Range(2, 32))
        ->capture_default_str();
    train_cmd->add_option("--per-class", train_opts.per_class)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--noise", train_opts.noise, "synthetic texture noise")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train_cmd->add_option("--hue-width", train_opts.hue_width)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train_cmd->add_option("--seed", train_opts.seed)->capture_default_str();
    train_cmd->add_flag("--verbose", train_opts.verbose);
    train_cmd->add_option("--out", train_opts.out, "output directory")->required();
    train_cmd->add_option("--config", "JSON flag defaults")->group("");

    GenDataOpts gen_opts;
    CLI::App* gen_cmd =
        app.add_subcommand("gen-data", "write a synthetic dataset to disk");
    gen_cmd->add_option("--classes", gen_opts.classes)
        ->check(CLI::Range(2, 32))
        ->capture_default_str();
    gen_cmd->add_option("--per-class", gen_opts.per_class)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen_cmd->add_option("--size", gen_opts.size, "image edge length")
        ->check(CLI::Range(8, 512))
        ->capture_default_str();
    gen_cmd->add_option("--hue-width", gen_opts.hue_width)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen_cmd->add_option("--hue-margin", gen_opts.hue_margin)
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    gen_cmd->add_option("--grid", gen_opts.grid)
        ->check(CLI::Range(1, 64))
        ->capture_default_str();
    gen_cmd->add_option("--noise", gen_opts.noise)
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen_opts.seed)->capture_default_str();
    gen_cmd->add_option("--out", gen_opts.out, "output directory")->required();
    gen_cmd->add_option("--config", "JSON flag defaults")->group("");

    AttackOpts attack_opts;
    CLI::App* attack_cmd =
        app.add_subcommand("attack", "attack a model over an image set");
    add_common_attack_flags(attack_cmd, attack_opts, true);
    CLI::Option* attack_kappa = attack_cmd->get_option("--kappa");
    attack_cmd->add_option("--out", attack_opts.out, "output directory")->required();

    SweepOpts sweep_opts;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "success rate across K or lambda values");
    add_common_attack_flags(sweep_cmd, sweep_opts.base, false);
    CLI::Option* sweep_kappa = sweep_cmd->get_option("--kappa");
    sweep_cmd->add_option("--param", sweep_opts.param, "swept parameter")
        ->check(CLI::IsMember({"K", "lambda"}))
        ->capture_default_str();
    sweep_cmd->add_option("--values", sweep_opts.values, "comma-separated values")
        ->required();
    sweep_cmd->add_option("--repeats", sweep_opts.repeats)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sweep_cmd->add_option("--out", sweep_opts.base.out, "output directory")
        ->required();

    CompareOpts compare_opts;
    CLI::App* compare_cmd = app.add_subcommand(
        "compare-search", "gradient attack vs random search per budget");
    add_common_attack_flags(compare_cmd, compare_opts.base, false);
    CLI::Option* compare_kappa = compare_cmd->get_option("--kappa");
    compare_cmd
        ->add_option("--budgets", compare_opts.budgets, "gradient attack budgets")
        ->capture_default_str();
    compare_cmd
        ->add_option("--rs-budgets", compare_opts.rs_budgets,
                     "random search budgets")
        ->capture_default_str();
    compare_cmd->add_option("--out", compare_opts.base.out, "output directory")
        ->required();

    EvaluateOpts eval_opts;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "pairwise transfer matrix across models");
    add_common_attack_flags(eval_cmd, eval_opts.base, true);
    CLI::Option* eval_kappa = eval_cmd->get_option("--kappa");
    eval_cmd->get_option("--model")->required(false);
    eval_cmd->add_option("--models", eval_opts.models, "comma-separated model files")
        ->required();
    eval_cmd->add_option("--out", eval_opts.base.out, "output directory")
        ->required();

    GradcheckOpts grad_opts;
    CLI::App* grad_cmd = app.add_subcommand(
        "gradcheck", "finite-difference check of every analytic gradient");
    grad_cmd->add_option("--module", grad_opts.module)
        ->check(CLI::IsMember({"filter", "classifier", "all"}))
        ->capture_default_str();
    grad_cmd->add_option("--trials", grad_opts.trials)->capture_default_str();
    grad_cmd->add_option("--seed", grad_opts.seed)->capture_default_str();
    grad_cmd->add_option("--out", grad_opts.out, "optional report directory");
    grad_cmd->add_option("--config", "JSON flag defaults")->group("");

    RerunOpts rerun_opts;
    CLI::App* rerun_cmd =
        app.add_subcommand("rerun", "replay a command from its manifest");
    rerun_cmd->add_option("--manifest", rerun_opts.manifest, "manifest.json path")
        ->required()
        ->check(CLI::ExistingFile);
    rerun_cmd->add_option("--out", rerun_opts.out, "fresh output directory")
        ->required();

    std::vector<std::string> store;
    store.emplace_back("chromaforge");
    store.insert(store.end(), tokens.begin(), tokens.end());
    std::vector<char*> argv;
    argv.reserve(store.size());
    for (std::string& s : store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    attack_opts.kappa_given = attack_kappa->count() > 0;
    sweep_opts.base.kappa_given = sweep_kappa->count() > 0;
    compare_opts.base.kappa_given = compare_kappa->count() > 0;
    eval_opts.base.kappa_given = eval_kappa->count() > 0;

    if (train_cmd->parsed()) return cmd_train(train_opts);
    if (gen_cmd->parsed()) return cmd_gen_data(gen_opts);
    if (attack_cmd->parsed()) return cmd_attack(attack_opts);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts);
    if (compare_cmd->parsed()) return cmd_compare_search(compare_opts);
    if (eval_cmd->parsed()) {
        if (eval_opts.base.model.empty() && !eval_opts.models.empty())
            eval_opts.base.model = split_list(eval_opts.models).front();
        return cmd_evaluate(eval_opts);
    }
    if (grad_cmd->parsed()) return cmd_gradcheck(grad_opts);
    if (rerun_cmd->parsed()) return cmd_rerun(rerun_opts);
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> tokens(argv + 1, argv + argc);
    try {
        return run_tokens(std::move(tokens));
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
