#include "hystop/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "hystop/error.hpp"

namespace hystop {


Var l2_loss(Tape& tape, Var pred, Var target) {
    require_same_shape(tape.value(pred), tape.value(target), "l2_loss");
    return tape.sqrt_scalar(tape.square_sum(tape.sub(pred, target)));
}

double l2_loss_value(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "l2_loss");
    double acc = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

ModelData assemble_for(ModelKind kind, const NormalizedDataset& ds) {
    ModelData out;
    if (kind == ModelKind::DeepOnet) {
        DeepOnetTensors t = assemble_deeponet(ds);
        out.inputs = std::move(t.branch);
        out.trunk = std::move(t.trunk);
        out.targets = std::move(t.targets);
    } else {
        FnoTensors t = assemble_fno(ds);
        out.inputs = std::move(t.inputs);
        out.targets = std::move(t.targets);
    }
    return out;
}

namespace {

// rows [from, to) of a tensor's leading dimension
Tensor slice_rows(const Tensor& t, int from, int to) {
    std::vector<int> shape = t.shape;
    shape[0] = to - from;
    const int64_t row = t.numel() / t.shape[0];
    return Tensor(std::move(shape),
                  std::vector<double>(t.data.begin() + from * row, t.data.begin() + to * row));
}

double param_norm(const std::vector<Param>& params) {
    double acc = 0.0;
    for (const Param& p : params)
        for (double v : p.value.data) acc += v * v;
    return std::sqrt(acc);
}

// Accumulates d(SSE)/dtheta into the param grads and returns the batch SSE.
double batch_sse_grad(ModelParams& mp, const ModelData& data, int from, int to, int chunk) {
    double sse = 0.0;
    for (int at = from; at < to; at += chunk) {
        const int end = std::min(to, at + chunk);
        Tape tape;
        Var inputs = tape.constant(slice_rows(data.inputs, at, end));
        Var trunk = data.trunk.numel() > 0 ? tape.constant(data.trunk) : Var{};
        Var pred = model_forward(tape, mp, inputs, trunk);
        Var diff = tape.sub(pred, tape.constant(slice_rows(data.targets, at, end)));
        Var ss = tape.square_sum(diff);
        sse += tape.value(ss).data[0];
        tape.backward(ss);
    }
    return sse;
}

} // namespace

Evaluation evaluate(ModelParams& mp, const ModelData& data, int chunk) {
    const int n = data.count();
    Evaluation out;
    out.predictions = Tensor({n, data.targets.dim(-1)});
    out.sample_l2.resize(static_cast<size_t>(n));
    const int64_t row = data.targets.dim(-1);
    for (int at = 0; at < n; at += chunk) {
        const int end = std::min(n, at + chunk);
        Tape tape;
        Var inputs = tape.constant(slice_rows(data.inputs, at, end));
        Var trunk = data.trunk.numel() > 0 ? tape.constant(data.trunk) : Var{};
        const Tensor& pred = tape.value(model_forward(tape, mp, inputs, trunk));
        std::copy(pred.data.begin(), pred.data.end(),
                  out.predictions.data.begin() + static_cast<ptrdiff_t>(at) * row);
        for (int s = at; s < end; ++s) {
            double acc = 0.0;
            for (int64_t i = 0; i < row; ++i) {
                const double d = pred.data[static_cast<size_t>((s - at) * row + i)] -
                                 data.targets.data[static_cast<size_t>(s * row + i)];
                acc += d * d;
            }
            out.sample_l2[static_cast<size_t>(s)] = std::sqrt(acc);
        }
    }
    return out;
}

TrainReport fit(ModelParams& mp, const ModelData& train, const ModelData& val,
                const TrainConfig& cfg) {
    if (cfg.epochs < 1) raise(ErrorKind::Config, "fit: epochs must be >= 1");
    if (!(cfg.lr > 0.0) && cfg.lr != 0.0) raise(ErrorKind::Config, "fit: bad learning rate");
    const int n = train.count();
    if (n < 1) raise(ErrorKind::Config, "fit: empty training set");
    const int chunk = std::max(1, cfg.chunk);
    const int batch = cfg.batch_size > 0 ? cfg.batch_size : n;

    AdamState state = AdamState::init(mp.params, cfg.lr);
    int start_epoch = 0;
    if (!cfg.resume_from.empty()) {
        std::string extra;
        std::vector<NamedTensor> opt;
        ModelParams loaded = load_checkpoint(cfg.resume_from, &extra, &opt);
        if (loaded.kind != mp.kind)
            raise(ErrorKind::Config, "fit: resume checkpoint holds a different model kind");
        mp = std::move(loaded);
        nlohmann::json je = nlohmann::json::parse(extra);
        start_epoch = je.value("epoch", 0);
        state.step = je.value("adam_step", int64_t{0});
        for (size_t i = 0; i < mp.params.size(); ++i) {
            for (NamedTensor& t : opt) {
                if (t.name == "opt.m." + mp.params[i].name) state.m[i] = t.value;
                if (t.name == "opt.v." + mp.params[i].name) state.v[i] = t.value;
            }
        }
    }

    TrainReport report;
    report.seed = cfg.seed;
    {
        nlohmann::json jc = {{"kind", to_string(mp.kind)}, {"epochs", cfg.epochs},
                             {"lr", cfg.lr},              {"batch_size", cfg.batch_size},
                             {"seed", cfg.seed},          {"n_train", n}};
        report.config_hash = fnv1a_hex(jc.dump());
    }

    std::vector<Param> best_params;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    const auto t0 = std::chrono::steady_clock::now();
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        double epoch_sse = 0.0;
        for (int at = 0; at < n; at += batch) {
            const int end = std::min(n, at + batch);
            mp.zero_grads();
            const double sse = batch_sse_grad(mp, train, at, end, chunk);
            if (!std::isfinite(sse))
                raise(ErrorKind::Numeric,
                      "fit: non-finite loss at epoch " + std::to_string(epoch) + ", batch at " +
                          std::to_string(at) + ", |theta| = " + std::to_string(param_norm(mp.params)));
            epoch_sse += sse;
            // chain rule through the sqrt: d sqrt(SSE) = dSSE / (2 sqrt(SSE))
            const double factor = sse > 0.0 ? 0.5 / std::sqrt(sse) : 0.0;
            for (Param& p : mp.params)
                for (double& g : p.grad.data) g *= factor;
            adam_step(mp.params, state);
        }
        report.loss.push_back(std::sqrt(epoch_sse));

        if (val.count() > 0) {
            Evaluation ev = evaluate(mp, val, std::max(chunk, 8));
            const double vl = l2_loss_value(ev.predictions, val.targets);
            report.val_loss.push_back(vl);
            if (vl < best_val) {
                best_val = vl;
                best_params = mp.params;
                report.best_epoch = epoch;
                since_best = 0;
            } else if (cfg.early_stopping && ++since_best >= cfg.patience) {
                break;
            }
        }

        if (cfg.checkpoint_every > 0 && !cfg.out_dir.empty() &&
            (epoch + 1) % cfg.checkpoint_every == 0 && epoch + 1 < cfg.epochs) {
            nlohmann::json je = {{"epoch", epoch + 1}, {"adam_step", state.step}};
            std::vector<NamedTensor> opt;
            for (size_t i = 0; i < mp.params.size(); ++i) {
                opt.push_back({"opt.m." + mp.params[i].name, state.m[i]});
                opt.push_back({"opt.v." + mp.params[i].name, state.v[i]});
            }
            std::filesystem::create_directories(cfg.out_dir);
            save_checkpoint(cfg.out_dir + "/resume_epoch_" + std::to_string(epoch + 1) + ".ckpt",
                            mp, je.dump(), opt);
        }
    }
    const auto t1 = std::chrono::steady_clock::now();
    report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.final_train_loss = report.loss.empty() ? 0.0 : report.loss.back();

    // keep the lowest-val-loss parameters when a validation part exists
    if (!best_params.empty()) mp.params = std::move(best_params);
    return report;
}

std::string train_report_json(const TrainReport& report) {
    nlohmann::json j;
    j["loss"] = report.loss;
    if (!report.val_loss.empty()) j["val_loss"] = report.val_loss;
    j["final_train_loss"] = report.final_train_loss;
    j["wall_seconds"] = report.wall_seconds;
    j["seed"] = report.seed;
    j["config_hash"] = report.config_hash;
    j["best_epoch"] = report.best_epoch;
    return j.dump(2);
}

std::string loss_curve_csv(const TrainReport& report) {
    std::string out = "epoch,loss\n";
    char buf[64];
    for (size_t i = 0; i < report.loss.size(); ++i) {
        snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, report.loss[i]);
        out += buf;
    }
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace hystop
