// hystop: synthesize dynamic hysteresis loops, augment them, train the
// neural operator models, and evaluate core-loss accuracy.
//
// Exit codes: 0 success, 2 usage/config/input problems, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hystop/dataset.hpp"
#include "hystop/error.hpp"
#include "hystop/io.hpp"
#include "hystop/material.hpp"
#include "hystop/metrics.hpp"
#include "hystop/models.hpp"
#include "hystop/svg.hpp"
#include "hystop/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hystop;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::Config, "config '" + path + "': invalid JSON");
    return j;
}

// flag > config file > built-in default
template <typename T>
T pick(const CLI::Option* flag, const T& flag_value, const json& section, const char* key,
       const T& fallback) {
    if (flag && flag->count() > 0) return flag_value;
    if (section.contains(key)) return section.at(key).get<T>();
    return fallback;
}

void write_run_config(const std::string& dir, const json& resolved) {
    write_text_file(dir + "/run_config.json", resolved.dump(2));
}

SplitSpec parse_split(const std::string& text, uint64_t seed) {
    // "9:1" or "8:1:1" ratio notation
    std::vector<double> parts;
    std::string tok;
    for (char c : text + ":") {
        if (c == ':') {
            if (tok.empty()) raise(ErrorKind::Config, "split '" + text + "': empty part");
            parts.push_back(std::stod(tok));
            tok.clear();
        } else {
            tok += c;
        }
    }
    double total = 0.0;
    for (double p : parts) total += p;
    if (parts.size() < 2 || parts.size() > 3 || total <= 0.0)
        raise(ErrorKind::Config, "split '" + text + "': want train:test or train:val:test");
    SplitSpec spec;
    spec.seed = seed;
    spec.train = parts[0] / total;
    if (parts.size() == 2) {
        spec.val = 0.0;
        spec.test = parts[1] / total;
    } else {
        spec.val = parts[1] / total;
        spec.test = parts[2] / total;
    }
    return spec;
}

struct DatasetBundle {
    NormalizedDataset ds;
    DatasetArchive archive;
};

// Augmented archives carry their scales; raw corpora are normalized against
// the train rows of the requested split.
DatasetBundle load_normalized(const std::string& dir, const SplitSpec& split_spec) {
    DatasetBundle out;
    out.archive = read_dataset(dir);
    if (out.archive.loops.empty()) raise(ErrorKind::Config, "dataset '" + dir + "' is empty");
    if (out.archive.manifest.has_scales) {
        out.ds = normalize_with(out.archive.loops, out.archive.manifest.scale,
                                out.archive.manifest.t_scale_s, out.archive.manifest.f_scale_hz,
                                out.archive.meta);
    } else {
        const int n = static_cast<int>(out.archive.loops.size());
        std::vector<int> order = split_order(n, split_spec.seed);
        const int n_train = static_cast<int>(std::floor(split_spec.train * n));
        std::vector<int> mask(order.begin(), order.begin() + std::max(1, n_train));
        out.ds = normalize(out.archive.loops, mask);
    }
    return out;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const json& cfg, const std::string& out_dir, const std::string& params_path,
                 const std::vector<double>& freqs_flag, const std::vector<double>& peaks_flag) {
    json section = cfg.value("generate", json::object());
    MaterialParams params = MaterialParams::go_steel_default();
    if (!params_path.empty())
        params = load_material_params(params_path);
    else if (section.contains("material"))
        params = material_params_from_json(section.at("material").dump());

    std::vector<double> freqs = {5, 10, 25, 50, 100, 200, 400, 800, 1000};
    std::vector<double> peaks = {1.0, 1.3, 1.5, 1.7};
    if (section.contains("freqs")) freqs = section.at("freqs").get<std::vector<double>>();
    if (section.contains("peaks")) peaks = section.at("peaks").get<std::vector<double>>();
    if (!freqs_flag.empty()) freqs = freqs_flag;
    if (!peaks_flag.empty()) peaks = peaks_flag;

    ExcitationSpec defaults;
    defaults.n_samples = section.value("n_samples", 500);
    defaults.phase = section.value("phase", 0.0);
    defaults.n_settle_periods = section.value("n_settle_periods", 2);

    std::vector<LoopRecord> loops = generate_corpus(freqs, peaks, defaults, params);

    const std::string params_json = material_params_json(params);
    DatasetManifest manifest;
    manifest.regime = "none";
    manifest.params_hash = fnv1a_hex(params_json);
    manifest.length = defaults.n_samples;
    std::vector<SampleMeta> meta(loops.size());
    for (size_t i = 0; i < loops.size(); ++i) {
        meta[i].freq = loops[i].freq;
        meta[i].b_peak = loops[i].b_peak;
        meta[i].source_index = static_cast<int>(i);
    }
    write_dataset(out_dir, manifest, loops, meta);
    write_text_file(out_dir + "/material.json", params_json);

    json resolved = {{"command", "generate"},
                     {"out", out_dir},
                     {"generate",
                      {{"freqs", freqs},
                       {"peaks", peaks},
                       {"n_samples", defaults.n_samples},
                       {"phase", defaults.phase},
                       {"n_settle_periods", defaults.n_settle_periods},
                       {"material", json::parse(params_json)},
                       {"params_hash", manifest.params_hash}}}};
    write_run_config(out_dir, resolved);
    std::cout << "generated " << loops.size() << " loops in " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

int cmd_augment(const json& cfg, const std::string& dataset_dir, const std::string& out_dir,
                const std::string& regime_flag, const CLI::Option* regime_opt,
                uint64_t seed_flag, const CLI::Option* seed_opt) {
    json section = cfg.value("augment", json::object());
    const std::string regime = pick(regime_opt, regime_flag, section, "regime", std::string("none"));
    const uint64_t seed = pick(seed_opt, seed_flag, section, "seed", uint64_t{0});
    const int n_shifts = section.value("n_shifts", 10);
    const double sigma = section.value("sigma", 0.05);
    const double mu = section.value("mu", 0.0);
    if (regime != "none" && regime != "cyclic" && regime != "cyclic+gda")
        raise(ErrorKind::Config, "unknown regime '" + regime + "' (none|cyclic|cyclic+gda)");

    DatasetArchive in = read_dataset(dataset_dir);
    if (in.loops.empty()) raise(ErrorKind::Config, "dataset '" + dataset_dir + "' is empty");

    // augmentation operates in normalized units; scales from this corpus
    NormalizedDataset ds =
        in.manifest.has_scales
            ? normalize_with(in.loops, in.manifest.scale, in.manifest.t_scale_s,
                             in.manifest.f_scale_hz, in.meta)
            : normalize(in.loops);
    if (regime == "cyclic" || regime == "cyclic+gda") ds = cyclic_roll(ds, n_shifts);
    if (regime == "cyclic+gda") ds = gaussian_augment(ds, mu, sigma, seed);

    // store denormalized loop files; the manifest keeps the exact scales
    const int len = ds.length;
    std::vector<LoopRecord> loops(static_cast<size_t>(ds.count()));
    for (int s = 0; s < ds.count(); ++s) {
        LoopRecord& rec = loops[static_cast<size_t>(s)];
        rec.freq = ds.meta[static_cast<size_t>(s)].freq;
        rec.b_peak = ds.meta[static_cast<size_t>(s)].b_peak;
        rec.phase = 0.0;
        rec.b.resize(static_cast<size_t>(len));
        rec.h.resize(static_cast<size_t>(len));
        for (int i = 0; i < len; ++i) {
            rec.b[static_cast<size_t>(i)] =
                denormalize_b(ds.scale, ds.b.data[static_cast<size_t>(s * len + i)]);
            rec.h[static_cast<size_t>(i)] =
                denormalize_h(ds.scale, ds.h.data[static_cast<size_t>(s * len + i)]);
        }
    }
    DatasetManifest manifest;
    manifest.regime = regime;
    manifest.has_scales = true;
    manifest.scale = ds.scale;
    manifest.t_scale_s = ds.t_scale_s;
    manifest.f_scale_hz = ds.f_scale_hz;
    manifest.n_shifts = n_shifts;
    manifest.sigma = sigma;
    manifest.mu = mu;
    manifest.augment_seed = seed;
    manifest.params_hash = in.manifest.params_hash;
    manifest.length = len;
    write_dataset(out_dir, manifest, loops, ds.meta);

    json resolved = {{"command", "augment"},
                     {"dataset", dataset_dir},
                     {"out", out_dir},
                     {"augment",
                      {{"regime", regime},
                       {"n_shifts", n_shifts},
                       {"sigma", sigma},
                       {"mu", mu},
                       {"seed", seed}}}};
    write_run_config(out_dir, resolved);
    std::cout << "regime " << regime << ": " << ds.count() << " samples in " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const json& cfg, const std::string& dataset_dir, const std::string& out_dir,
              const std::string& model_flag, const CLI::Option* model_opt, uint64_t seed_flag,
              const CLI::Option* seed_opt, int epochs_flag, const CLI::Option* epochs_opt,
              const std::string& split_flag, const CLI::Option* split_opt) {
    json section = cfg.value("train", json::object());
    const std::string model_name = pick(model_opt, model_flag, section, "model", std::string("fno"));
    const ModelKind kind = model_kind_from_string(model_name);
    const uint64_t seed = pick(seed_opt, seed_flag, section, "seed", uint64_t{0});
    const int default_epochs = kind == ModelKind::DeepOnet ? 6000 : 300;
    const int epochs = pick(epochs_opt, epochs_flag, section, "epochs", default_epochs);
    const std::string split_text =
        pick(split_opt, split_flag, section, "split", std::string("9:1"));
    const uint64_t split_seed = section.value("split_seed", seed);

    SplitSpec split_spec = parse_split(split_text, split_seed);
    DatasetBundle bundle = load_normalized(dataset_dir, split_spec);
    SplitResult parts = split(bundle.ds, split_spec);
    if (parts.train.count() == 0) raise(ErrorKind::Config, "train: empty training part");

    ModelParams mp;
    switch (kind) {
    case ModelKind::Fno: {
        FnoConfig mc;
        if (section.contains("fno")) {
            const json& m = section.at("fno");
            mc.lift_width = m.value("lift_width", mc.lift_width);
            mc.n_layers = m.value("n_layers", mc.n_layers);
            mc.modes = m.value("modes", mc.modes);
        }
        mp = init_fno(mc, seed);
        break;
    }
    case ModelKind::Ufno: {
        UfnoConfig mc;
        if (section.contains("ufno")) {
            const json& m = section.at("ufno");
            mc.lift_width = m.value("lift_width", mc.lift_width);
            mc.n_fno_layers = m.value("n_fno_layers", mc.n_fno_layers);
            mc.n_ufno_layers = m.value("n_ufno_layers", mc.n_ufno_layers);
            mc.modes = m.value("modes", mc.modes);
            mc.up_channels = m.value("up_channels", mc.up_channels);
        }
        mp = init_ufno(mc, seed);
        break;
    }
    case ModelKind::DeepOnet: {
        DeepOnetConfig mc;
        mc.branch_input = bundle.ds.length + 1;
        if (section.contains("deeponet")) {
            const json& m = section.at("deeponet");
            mc.hidden_layers = m.value("hidden_layers", mc.hidden_layers);
            mc.width = m.value("width", mc.width);
            mc.p = m.value("p", mc.p);
        }
        mp = init_deeponet(mc, seed);
        break;
    }
    }

    TrainConfig tc;
    tc.epochs = epochs;
    tc.lr = section.value("lr", 1e-3);
    tc.batch_size = section.value("batch_size", 0);
    tc.chunk = section.value("chunk", 4);
    tc.seed = seed;
    tc.checkpoint_every = section.value("checkpoint_every", 0);
    tc.early_stopping = section.value("early_stopping", false);
    tc.patience = section.value("patience", 100);
    tc.resume_from = section.value("resume_from", std::string());

    json resolved = {{"command", "train"},
                     {"dataset", dataset_dir},
                     {"out", out_dir},
                     {"train",
                      {{"model", model_name},
                       {"epochs", epochs},
                       {"lr", tc.lr},
                       {"batch_size", tc.batch_size},
                       {"seed", seed},
                       {"split", split_text},
                       {"split_seed", split_seed},
                       {"early_stopping", tc.early_stopping},
                       {"patience", tc.patience},
                       {"model_config", json::parse(mp.config_json())},
                       {"dataset_params_hash", bundle.archive.manifest.params_hash},
                       {"dataset_regime", bundle.archive.manifest.regime},
                       {"n_samples", bundle.ds.count()}}}};
    // hash only the numerics-determining section, not artifact paths
    const std::string run_hash = fnv1a_hex(resolved.at("train").dump());
    const std::string run_dir = out_dir + "/" + run_hash;
    fs::create_directories(run_dir);
    tc.out_dir = run_dir;

    ModelData train_data = assemble_for(kind, parts.train);
    ModelData val_data = assemble_for(kind, parts.val);
    TrainReport report = fit(mp, train_data, val_data, tc);

    if (section.value("cache_tensors", false))
        write_tensor_cache(run_dir + "/inputs.f32", train_data.inputs);

    json extra = {{"b_scale", bundle.ds.scale.b_scale},
                  {"h_scale", bundle.ds.scale.h_scale},
                  {"t_scale_s", bundle.ds.t_scale_s},
                  {"f_scale_hz", bundle.ds.f_scale_hz},
                  {"split",
                   {{"train", split_spec.train},
                    {"val", split_spec.val},
                    {"test", split_spec.test},
                    {"seed", split_spec.seed}}},
                  {"length", bundle.ds.length},
                  {"n_samples", bundle.ds.count()},
                  {"dataset_params_hash", bundle.archive.manifest.params_hash},
                  {"seed", seed},
                  {"config_hash", run_hash}};
    save_checkpoint(run_dir + "/checkpoint.ckpt", mp, extra.dump());
    write_text_file(run_dir + "/report.json", train_report_json(report));
    write_text_file(run_dir + "/loss.csv", loss_curve_csv(report));
    write_run_config(run_dir, resolved);
    std::cout << "trained " << model_name << " for " << report.loss.size() << " epochs, final loss "
              << report.final_train_loss << "\nartifacts: " << run_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const json& cfg, const std::string& checkpoint_path,
                 const std::string& dataset_dir, const std::string& out_dir, int plots_flag,
                 const CLI::Option* plots_opt, const std::string& baseline_path) {
    json section = cfg.value("evaluate", json::object());
    const int plots = pick(plots_opt, plots_flag, section, "plots", 5);

    std::string extra_text;
    ModelParams mp = load_checkpoint(checkpoint_path, &extra_text);
    json extra = json::parse(extra_text, nullptr, false);
    if (extra.is_discarded() || !extra.contains("split"))
        raise(ErrorKind::Config, "checkpoint '" + checkpoint_path + "' lacks evaluation state");

    DatasetArchive archive = read_dataset(dataset_dir);
    const int length = extra.at("length").get<int>();
    if (!archive.loops.empty() && static_cast<int>(archive.loops[0].b.size()) != length)
        raise(ErrorKind::Config, "checkpoint/dataset mismatch: loop length differs");
    if (static_cast<int>(archive.loops.size()) != extra.at("n_samples").get<int>())
        raise(ErrorKind::Config, "checkpoint/dataset mismatch: sample count differs");
    const std::string want_hash = extra.value("dataset_params_hash", std::string());
    if (!want_hash.empty() && want_hash != archive.manifest.params_hash)
        raise(ErrorKind::Config, "checkpoint/dataset mismatch: material parameters differ");

    NormScale scale;
    scale.b_scale = extra.at("b_scale").get<double>();
    scale.h_scale = extra.at("h_scale").get<double>();
    NormalizedDataset ds = normalize_with(archive.loops, scale, extra.at("t_scale_s").get<double>(),
                                          extra.at("f_scale_hz").get<double>(), archive.meta);
    SplitSpec split_spec;
    split_spec.train = extra.at("split").at("train").get<double>();
    split_spec.val = extra.at("split").at("val").get<double>();
    split_spec.test = extra.at("split").at("test").get<double>();
    split_spec.seed = extra.at("split").at("seed").get<uint64_t>();
    SplitResult parts = split(ds, split_spec);
    if (parts.test.count() == 0) raise(ErrorKind::Config, "evaluate: empty test split");

    ModelData test_data = assemble_for(mp.kind, parts.test);
    Evaluation ev = evaluate(mp, test_data);

    fs::create_directories(out_dir);
    const int len = parts.test.length;
    std::vector<MetricSample> samples(static_cast<size_t>(parts.test.count()));
    char name[64];
    for (int s = 0; s < parts.test.count(); ++s) {
        const SampleMeta& meta = parts.test.meta[static_cast<size_t>(s)];
        std::vector<double> b_raw(static_cast<size_t>(len)), h_raw(static_cast<size_t>(len)),
            h_pred(static_cast<size_t>(len));
        for (int i = 0; i < len; ++i) {
            b_raw[static_cast<size_t>(i)] =
                denormalize_b(ds.scale, parts.test.b.data[static_cast<size_t>(s * len + i)]);
            h_raw[static_cast<size_t>(i)] =
                denormalize_h(ds.scale, parts.test.h.data[static_cast<size_t>(s * len + i)]);
            h_pred[static_cast<size_t>(i)] =
                denormalize_h(ds.scale, ev.predictions.data[static_cast<size_t>(s * len + i)]);
        }
        MetricSample& m = samples[static_cast<size_t>(s)];
        m.freq = meta.freq;
        m.b_peak = meta.b_peak;
        m.p_ref = core_loss(b_raw, h_raw, meta.freq);
        m.p_pred = core_loss(b_raw, h_pred, meta.freq);
        m.rel_err = std::abs(m.p_ref - m.p_pred) / std::abs(m.p_ref);

        // per-loop prediction CSV
        snprintf(name, sizeof(name), "pred_%03d.csv", s);
        std::string csv = "t_s,b_T,h_ref_Apm,h_pred_Apm\n";
        char line[160];
        for (int i = 0; i < len; ++i) {
            snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g\n",
                     static_cast<double>(i) / (meta.freq * len), b_raw[static_cast<size_t>(i)],
                     h_raw[static_cast<size_t>(i)], h_pred[static_cast<size_t>(i)]);
            csv += line;
        }
        write_text_file(out_dir + "/" + std::string(name), csv);

        if (s < plots) {
            snprintf(name, sizeof(name), "loop_%03d.svg", s);
            char title[128];
            snprintf(title, sizeof(title), "B-H loop: f = %g Hz, Bp = %g T (shift %d%s)",
                     meta.freq, meta.b_peak, meta.shift, meta.noisy ? ", noisy" : "");
            SvgSeries ref{b_raw, h_raw, "#1f77b4", "reference"};
            SvgSeries pred{b_raw, h_pred, "#d62728", "predicted"};
            write_text_file(out_dir + "/" + std::string(name),
                            svg_xy_plot({ref, pred}, title, "B (T)", "H (A/m)"));
        }
    }

    std::optional<double> eta;
    if (!baseline_path.empty()) {
        json base = json::parse(read_text_file(baseline_path), nullptr, false);
        if (base.is_discarded() || !base.contains("aggregate"))
            raise(ErrorKind::Config, "baseline '" + baseline_path + "' is not a metrics report");
        std::vector<double> refs, preds;
        for (const MetricSample& m : samples) {
            refs.push_back(m.p_ref);
            preds.push_back(m.p_pred);
        }
        eta = improvement(base.at("aggregate").at("mre").get<double>(), mre(refs, preds));
    }
    write_text_file(out_dir + "/metrics.json", metrics_report_json(samples, eta));

    json resolved = {{"command", "evaluate"},
                     {"checkpoint", checkpoint_path},
                     {"dataset", dataset_dir},
                     {"out", out_dir},
                     {"evaluate", {{"plots", plots}, {"baseline", baseline_path}}}};
    write_run_config(out_dir, resolved);

    std::vector<double> refs, preds;
    for (const MetricSample& m : samples) {
        refs.push_back(m.p_ref);
        preds.push_back(m.p_pred);
    }
    std::cout << "evaluated " << samples.size() << " test loops, core-loss MRE " << mre(refs, preds)
              << "\nartifacts: " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic hysteresis neural-operator toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, dataset_dir, checkpoint_path, params_path, baseline_path;
    std::string model_name = "fno", regime = "none", split_text = "9:1";
    uint64_t seed = 0;
    int epochs = 0, plots = 5;
    std::vector<double> freqs_flag, peaks_flag;

    CLI::App* gen = app.add_subcommand("generate", "synthesize a steady-state loop corpus");
    gen->add_option("--config", config_path, "JSON run configuration");
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->add_option("--params", params_path, "material parameter JSON file");
    gen->add_option("--freqs", freqs_flag, "frequencies in Hz")->delimiter(',');
    gen->add_option("--peaks", peaks_flag, "peak flux densities in T")->delimiter(',');

    CLI::App* aug = app.add_subcommand("augment", "apply cyclic rolling / gaussian augmentation");
    aug->add_option("--config", config_path, "JSON run configuration");
    aug->add_option("--dataset", dataset_dir, "input dataset directory")->required();
    aug->add_option("--out", out_dir, "output dataset directory")->required();
    CLI::Option* regime_opt =
        aug->add_option("--regime", regime, "none|cyclic|cyclic+gda");
    CLI::Option* aug_seed_opt = aug->add_option("--seed", seed, "augmentation seed");

    CLI::App* trn = app.add_subcommand("train", "fit a model on a dataset");
    trn->add_option("--config", config_path, "JSON run configuration");
    trn->add_option("--dataset", dataset_dir, "dataset directory")->required();
    trn->add_option("--out", out_dir, "artifact root directory")->required();
    CLI::Option* model_opt = trn->add_option("--model", model_name, "fno|ufno|deeponet");
    CLI::Option* trn_seed_opt = trn->add_option("--seed", seed, "training seed");
    CLI::Option* epochs_opt = trn->add_option("--epochs", epochs, "epoch count");
    CLI::Option* split_opt = trn->add_option("--split", split_text, "ratios, e.g. 9:1 or 8:1:1");

    CLI::App* ev = app.add_subcommand("evaluate", "compute core-loss metrics and plots");
    ev->add_option("--config", config_path, "JSON run configuration");
    ev->add_option("--checkpoint", checkpoint_path, "trained model checkpoint")->required();
    ev->add_option("--dataset", dataset_dir, "dataset directory")->required();
    ev->add_option("--out", out_dir, "output directory")->required();
    CLI::Option* plots_opt = ev->add_option("--plots", plots, "number of loop plots");
    ev->add_option("--baseline", baseline_path, "baseline metrics.json for the improvement figure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const json cfg = load_config(config_path);
        if (gen->parsed()) return cmd_generate(cfg, out_dir, params_path, freqs_flag, peaks_flag);
        if (aug->parsed())
            return cmd_augment(cfg, dataset_dir, out_dir, regime, regime_opt, seed, aug_seed_opt);
        if (trn->parsed())
            return cmd_train(cfg, dataset_dir, out_dir, model_name, model_opt, seed, trn_seed_opt,
                             epochs, epochs_opt, split_text, split_opt);
        if (ev->parsed())
            return cmd_evaluate(cfg, checkpoint_path, dataset_dir, out_dir, plots, plots_opt,
                                baseline_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Numeric ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
