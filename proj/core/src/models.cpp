#include "hystop/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "hystop/error.hpp"
#include "hystop/rng.hpp"

namespace hystop {

std::string to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::Fno: return "fno";
    case ModelKind::Ufno: return "ufno";
    case ModelKind::DeepOnet: return "deeponet";
    }
    return "fno";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "fno") return ModelKind::Fno;
    if (name == "ufno") return ModelKind::Ufno;
    if (name == "deeponet") return ModelKind::DeepOnet;
    raise(ErrorKind::Config, "unknown model kind '" + name + "' (fno|ufno|deeponet)");
}

Param& ModelParams::find(const std::string& name) {
    for (Param& p : params)
        if (p.name == name) return p;
    raise(ErrorKind::Contract, "model parameter '" + name + "' not found");
}

const Param& ModelParams::find(const std::string& name) const {
    for (const Param& p : params)
        if (p.name == name) return p;
    raise(ErrorKind::Contract, "model parameter '" + name + "' not found");
}

void ModelParams::zero_grads() {
    for (Param& p : params) p.zero_grad();
}

std::string ModelParams::config_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["fno"] = {{"in_channels", fno.in_channels},
                {"lift_width", fno.lift_width},
                {"n_layers", fno.n_layers},
                {"modes", fno.modes},
                {"out_channels", fno.out_channels}};
    j["ufno"] = {{"in_channels", ufno.in_channels},
                 {"lift_width", ufno.lift_width},
                 {"kernel", ufno.kernel},
                 {"n_fno_layers", ufno.n_fno_layers},
                 {"n_ufno_layers", ufno.n_ufno_layers},
                 {"modes", ufno.modes},
                 {"up_channels", ufno.up_channels},
                 {"out_channels", ufno.out_channels}};
    j["deeponet"] = {{"branch_input", deeponet.branch_input},
                     {"trunk_input", deeponet.trunk_input},
                     {"hidden_layers", deeponet.hidden_layers},
                     {"width", deeponet.width},
                     {"p", deeponet.p}};
    return j.dump();
}

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

namespace {

// dense/conv weights: uniform in +-sqrt(1/fan_in); biases start at zero
Param dense_init(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng) {
    Param p(name, Tensor(std::move(shape)));
    const double s = std::sqrt(1.0 / fan_in);
    for (double& v : p.value.data) v = rng.uniform(-s, s);
    return p;
}

Param zero_init(const std::string& name, std::vector<int> shape) {
    return Param(name, Tensor(std::move(shape)));
}

// spectral weights: complex uniform scaled by 1/(C_in*C_out)
Param spectral_init(const std::string& name, int c_out, int c_in, int modes, Rng& rng) {
    Param p(name, Tensor({c_out, c_in, modes, 2}));
    const double s = 1.0 / (static_cast<double>(c_in) * c_out);
    for (double& v : p.value.data) v = rng.uniform(-s, s);
    return p;
}

void append_fourier_layer(std::vector<Param>& params, const std::string& prefix, int width,
                          int modes, Rng& rng) {
    params.push_back(spectral_init(prefix + ".r", width, width, modes, rng));
    params.push_back(dense_init(prefix + ".w", {width, width}, width, rng));
    params.push_back(zero_init(prefix + ".b", {width}));
}

void append_mlp(std::vector<Param>& params, const std::string& prefix, int input, int width,
                int output, int hidden_layers, Rng& rng) {
    int d_in = input;
    for (int i = 0; i < hidden_layers; ++i) {
        params.push_back(dense_init(prefix + "." + std::to_string(i) + ".w", {d_in, width}, d_in, rng));
        params.push_back(zero_init(prefix + "." + std::to_string(i) + ".b", {width}));
        d_in = width;
    }
    const std::string out = prefix + "." + std::to_string(hidden_layers);
    params.push_back(dense_init(out + ".w", {d_in, output}, d_in, rng));
    params.push_back(zero_init(out + ".b", {output}));
}

} // namespace

ModelParams init_fno(const FnoConfig& cfg, uint64_t seed) {
    if (cfg.lift_width < 1 || cfg.n_layers < 1 || cfg.modes < 1)
        raise(ErrorKind::Config, "fno: extents must be >= 1");
    ModelParams mp;
    mp.kind = ModelKind::Fno;
    mp.fno = cfg;
    Rng rng(seed);
    mp.params.push_back(dense_init("lift.w", {cfg.lift_width, cfg.in_channels}, cfg.in_channels, rng));
    mp.params.push_back(zero_init("lift.b", {cfg.lift_width}));
    for (int i = 0; i < cfg.n_layers; ++i)
        append_fourier_layer(mp.params, "layer" + std::to_string(i), cfg.lift_width, cfg.modes, rng);
    mp.params.push_back(dense_init("proj.w", {cfg.out_channels, cfg.lift_width}, cfg.lift_width, rng));
    mp.params.push_back(zero_init("proj.b", {cfg.out_channels}));
    return mp;
}

ModelParams init_ufno(const UfnoConfig& cfg, uint64_t seed) {
    if (cfg.lift_width < 1 || cfg.n_fno_layers < 0 || cfg.n_ufno_layers < 0 ||
        cfg.n_fno_layers + cfg.n_ufno_layers < 1 || cfg.modes < 1 || cfg.kernel < 1)
        raise(ErrorKind::Config, "ufno: invalid layer configuration");
    ModelParams mp;
    mp.kind = ModelKind::Ufno;
    mp.ufno = cfg;
    Rng rng(seed);
    const int w = cfg.lift_width;
    const int up = cfg.up_channels;
    const int k = cfg.kernel;
    const int cat = w + up; // channels after each skip concat
    mp.params.push_back(dense_init("lift.w", {w, cfg.in_channels}, cfg.in_channels, rng));
    mp.params.push_back(zero_init("lift.b", {w}));
    const int total = cfg.n_fno_layers + cfg.n_ufno_layers;
    for (int i = 0; i < total; ++i) {
        const std::string prefix = "layer" + std::to_string(i);
        append_fourier_layer(mp.params, prefix, w, cfg.modes, rng);
        if (i < cfg.n_fno_layers) continue;
        const std::string u = prefix + ".unet";
        mp.params.push_back(dense_init(u + ".enc1.w", {w, w, k}, w * k, rng));
        mp.params.push_back(zero_init(u + ".enc1.b", {w}));
        mp.params.push_back(dense_init(u + ".enc2.w", {w, w, k}, w * k, rng));
        mp.params.push_back(zero_init(u + ".enc2.b", {w}));
        mp.params.push_back(dense_init(u + ".enc3.w", {w, w, k}, w * k, rng));
        mp.params.push_back(zero_init(u + ".enc3.b", {w}));
        mp.params.push_back(dense_init(u + ".dec2.w", {w, up, k}, w * k, rng));
        mp.params.push_back(zero_init(u + ".dec2.b", {up}));
        mp.params.push_back(dense_init(u + ".dec1.w", {cat, up, k}, cat * k, rng));
        mp.params.push_back(zero_init(u + ".dec1.b", {up}));
        mp.params.push_back(dense_init(u + ".reduce.w", {w, cat}, cat, rng));
        mp.params.push_back(zero_init(u + ".reduce.b", {w}));
        mp.params.push_back(dense_init(u + ".dec0.w", {w, w, k}, w * k, rng));
        mp.params.push_back(zero_init(u + ".dec0.b", {w}));
    }
    mp.params.push_back(dense_init("proj.w", {cfg.out_channels, w}, w, rng));
    mp.params.push_back(zero_init("proj.b", {cfg.out_channels}));
    return mp;
}

ModelParams init_deeponet(const DeepOnetConfig& cfg, uint64_t seed) {
    if (cfg.branch_input < 1 || cfg.hidden_layers < 1 || cfg.width < 1 || cfg.p < 1)
        raise(ErrorKind::Config, "deeponet: extents must be >= 1");
    ModelParams mp;
    mp.kind = ModelKind::DeepOnet;
    mp.deeponet = cfg;
    Rng rng(seed);
    append_mlp(mp.params, "branch", cfg.branch_input, cfg.width, cfg.p, cfg.hidden_layers, rng);
    append_mlp(mp.params, "trunk", cfg.trunk_input, cfg.width, cfg.p, cfg.hidden_layers, rng);
    mp.params.push_back(zero_init("bias", {1}));
    return mp;
}

// ---------------------------------------------------------------------------
// forward passes
// ---------------------------------------------------------------------------

Var spectral_conv(Tape& tape, Var f, Var r, int modes, int length) {
    if (tape.value(f).dim(-1) != length)
        raise(ErrorKind::Dimension, "spectral_conv: length mismatch");
    return tape.spectral_conv_fused(f, r, modes);
}

Var fno_layer(Tape& tape, Var f, Var r, Var w, Var b, int modes, int length, bool activation) {
    Var sum = tape.add(spectral_conv(tape, f, r, modes, length), tape.channel_mix(f, w, b));
    return activation ? tape.relu(sum) : sum;
}

Var unet_forward(Tape& tape, ModelParams& mp, const std::string& prefix, Var f) {
    const int length = tape.value(f).dim(-1);
    if (length < 8) raise(ErrorKind::Dimension, "unet: length must be >= 8");
    auto p = [&](const std::string& n) { return tape.param(mp.find(prefix + "." + n)); };
    const int l1 = (length + 1) / 2, l2 = (l1 + 1) / 2;

    Var e1 = tape.relu(tape.conv1d(f, p("enc1.w"), p("enc1.b"), 2, 1));
    Var e2 = tape.relu(tape.conv1d(e1, p("enc2.w"), p("enc2.b"), 2, 1));
    Var e3 = tape.relu(tape.conv1d(e2, p("enc3.w"), p("enc3.b"), 2, 1));

    Var d2 = tape.relu(tape.conv_transpose1d(e3, p("dec2.w"), p("dec2.b"), 2, 1));
    d2 = tape.crop_or_pad_tail(d2, l2);
    Var c2 = tape.concat_channels(e2, d2);
    Var d1 = tape.relu(tape.conv_transpose1d(c2, p("dec1.w"), p("dec1.b"), 2, 1));
    d1 = tape.crop_or_pad_tail(d1, l1);
    Var c1 = tape.concat_channels(e1, d1);
    Var red = tape.relu(tape.channel_mix(c1, p("reduce.w"), p("reduce.b")));
    Var d0 = tape.conv_transpose1d(red, p("dec0.w"), p("dec0.b"), 2, 1); // last conv: no ReLU
    return tape.crop_or_pad_tail(d0, length);
}

namespace {

Var project_and_squeeze(Tape& tape, ModelParams& mp, Var f) {
    Var out = tape.channel_mix(f, tape.param(mp.find("proj.w")), tape.param(mp.find("proj.b")));
    std::vector<int> shape = tape.value(out).shape; // [..., 1, L] -> [..., L]
    shape.erase(shape.end() - 2);
    return tape.reshape(out, std::move(shape));
}

} // namespace

Var fno_forward(Tape& tape, ModelParams& mp, Var x) {
    const FnoConfig& cfg = mp.fno;
    const int length = tape.value(x).dim(-1);
    Var f = tape.channel_mix(x, tape.param(mp.find("lift.w")), tape.param(mp.find("lift.b")));
    for (int i = 0; i < cfg.n_layers; ++i) {
        const std::string prefix = "layer" + std::to_string(i);
        f = fno_layer(tape, f, tape.param(mp.find(prefix + ".r")),
                      tape.param(mp.find(prefix + ".w")), tape.param(mp.find(prefix + ".b")),
                      cfg.modes, length, i + 1 < cfg.n_layers);
    }
    return project_and_squeeze(tape, mp, f);
}

Var ufno_forward(Tape& tape, ModelParams& mp, Var x) {
    const UfnoConfig& cfg = mp.ufno;
    const int length = tape.value(x).dim(-1);
    const int total = cfg.n_fno_layers + cfg.n_ufno_layers;
    Var f = tape.channel_mix(x, tape.param(mp.find("lift.w")), tape.param(mp.find("lift.b")));
    for (int i = 0; i < total; ++i) {
        const std::string prefix = "layer" + std::to_string(i);
        Var r = tape.param(mp.find(prefix + ".r"));
        Var w = tape.param(mp.find(prefix + ".w"));
        Var b = tape.param(mp.find(prefix + ".b"));
        const bool activation = i + 1 < total;
        if (i < cfg.n_fno_layers) {
            f = fno_layer(tape, f, r, w, b, cfg.modes, length, activation);
        } else {
            // three parallel paths: spectral + pointwise + U-net
            Var sum = tape.add(tape.add(spectral_conv(tape, f, r, cfg.modes, length),
                                        tape.channel_mix(f, w, b)),
                               unet_forward(tape, mp, prefix + ".unet", f));
            f = activation ? tape.relu(sum) : sum;
        }
    }
    return project_and_squeeze(tape, mp, f);
}

Var deeponet_forward(Tape& tape, ModelParams& mp, Var branch_in, Var trunk_in) {
    const DeepOnetConfig& cfg = mp.deeponet;
    auto mlp = [&](const std::string& prefix, Var h) {
        for (int i = 0; i <= cfg.hidden_layers; ++i) {
            const std::string layer = prefix + "." + std::to_string(i);
            h = tape.linear(h, tape.param(mp.find(layer + ".w")),
                            tape.param(mp.find(layer + ".b")));
            if (i < cfg.hidden_layers) h = tape.relu(h); // linear output layer
        }
        return h;
    };
    Var c = mlp("branch", branch_in);  // [N, p]
    Var xi = mlp("trunk", trunk_in);   // [L, p]
    Var out = tape.matmul_nt(c, xi);   // [N, L]
    return tape.add_scalar_bias(out, tape.param(mp.find("bias")));
}

Var model_forward(Tape& tape, ModelParams& mp, Var inputs, Var trunk) {
    switch (mp.kind) {
    case ModelKind::Fno: return fno_forward(tape, mp, inputs);
    case ModelKind::Ufno: return ufno_forward(tape, mp, inputs);
    case ModelKind::DeepOnet: return deeponet_forward(tape, mp, inputs, trunk);
    }
    raise(ErrorKind::Contract, "model_forward: bad kind");
}

// ---------------------------------------------------------------------------
// checkpoint file
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'S', 'T', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) raise(ErrorKind::Io, "checkpoint: truncated file");
    return v;
}

} // namespace

void write_tensor_file(const std::string& path, const std::string& config_json,
                       const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    put<uint32_t>(os, kVersion);
    put<uint32_t>(os, 1); // little-endian tag
    put<uint64_t>(os, config_json.size());
    os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    put<uint64_t>(os, tensors.size());
    for (const NamedTensor& t : tensors) {
        put<uint32_t>(os, static_cast<uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<uint8_t>(os, 0); // dtype f64
        put<uint32_t>(os, static_cast<uint32_t>(t.value.shape.size()));
        for (int d : t.value.shape) put<int64_t>(os, d);
        os.write(reinterpret_cast<const char*>(t.value.data.data()),
                 static_cast<std::streamsize>(t.value.data.size() * sizeof(double)));
    }
    if (!os) raise(ErrorKind::Io, "failed writing '" + path + "'");
}

std::pair<std::string, std::vector<NamedTensor>> read_tensor_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(ErrorKind::Io, "cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        raise(ErrorKind::Io, "'" + path + "' is not a HYSTCKPT file");
    const uint32_t version = get<uint32_t>(is);
    if (version != kVersion)
        raise(ErrorKind::Io, "unsupported checkpoint version " + std::to_string(version));
    if (get<uint32_t>(is) != 1) raise(ErrorKind::Io, "checkpoint: unsupported byte order");
    const uint64_t json_len = get<uint64_t>(is);
    std::string config(json_len, '\0');
    is.read(config.data(), static_cast<std::streamsize>(json_len));
    const uint64_t count = get<uint64_t>(is);
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t name_len = get<uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const uint8_t dtype = get<uint8_t>(is);
        if (dtype != 0) raise(ErrorKind::Io, "checkpoint: unsupported dtype");
        const uint32_t ndim = get<uint32_t>(is);
        std::vector<int> shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int>(get<int64_t>(is));
        Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!is) raise(ErrorKind::Io, "checkpoint: truncated tensor data");
        tensors.push_back({std::move(name), std::move(t)});
    }
    return {std::move(config), std::move(tensors)};
}

void save_checkpoint(const std::string& path, const ModelParams& mp, const std::string& extra_json,
                     const std::vector<NamedTensor>& extra_tensors) {
    nlohmann::json j = nlohmann::json::parse(mp.config_json());
    j["extra"] = nlohmann::json::parse(extra_json);
    std::vector<NamedTensor> tensors;
    tensors.reserve(mp.params.size() + extra_tensors.size());
    for (const Param& p : mp.params) tensors.push_back({p.name, p.value});
    for (const NamedTensor& t : extra_tensors) tensors.push_back(t);
    write_tensor_file(path, j.dump(), tensors);
}

ModelParams load_checkpoint(const std::string& path, std::string* extra_json,
                            std::vector<NamedTensor>* extra_tensors) {
    auto [config, tensors] = read_tensor_file(path);
    nlohmann::json j = nlohmann::json::parse(config, nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::Io, "checkpoint: bad config JSON");
    ModelParams mp;
    mp.kind = model_kind_from_string(j.at("kind").get<std::string>());
    const auto& jf = j.at("fno");
    mp.fno = {jf.at("in_channels"), jf.at("lift_width"), jf.at("n_layers"), jf.at("modes"),
              jf.at("out_channels")};
    const auto& ju = j.at("ufno");
    mp.ufno = {ju.at("in_channels"), ju.at("lift_width"),  ju.at("kernel"),
               ju.at("n_fno_layers"), ju.at("n_ufno_layers"), ju.at("modes"),
               ju.at("up_channels"), ju.at("out_channels")};
    const auto& jd = j.at("deeponet");
    mp.deeponet = {jd.at("branch_input"), jd.at("trunk_input"), jd.at("hidden_layers"),
                   jd.at("width"), jd.at("p")};
    ModelParams fresh;
    switch (mp.kind) {
    case ModelKind::Fno: fresh = init_fno(mp.fno, 0); break;
    case ModelKind::Ufno: fresh = init_ufno(mp.ufno, 0); break;
    case ModelKind::DeepOnet: fresh = init_deeponet(mp.deeponet, 0); break;
    }
    mp.params = std::move(fresh.params);
    size_t assigned = 0;
    for (NamedTensor& t : tensors) {
        bool matched = false;
        for (Param& p : mp.params) {
            if (p.name != t.name) continue;
            if (!p.value.same_shape(t.value))
                raise(ErrorKind::Io, "checkpoint: tensor '" + t.name + "' has shape " +
                                         shape_str(t.value.shape) + ", expected " +
                                         shape_str(p.value.shape));
            p.value = std::move(t.value);
            ++assigned;
            matched = true;
            break;
        }
        if (!matched && extra_tensors) extra_tensors->push_back(std::move(t));
    }
    if (assigned != mp.params.size())
        raise(ErrorKind::Io, "checkpoint: missing parameter tensors (" + std::to_string(assigned) +
                                 " of " + std::to_string(mp.params.size()) + ")");
    if (extra_json) *extra_json = j.value("extra", nlohmann::json::object()).dump();
    return mp;
}

} // namespace hystop
