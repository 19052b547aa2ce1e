#pragma once

#include <string>
#include <vector>

#include "hystop/tape.hpp"

namespace hystop {

enum class ModelKind { Fno, Ufno, DeepOnet };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct FnoConfig {
    int in_channels = 2;
    int lift_width = 64;
    int n_layers = 4;
    int modes = 16;
    int out_channels = 1;
};

/// Encoder: three stride-2 convs at lift_width channels; decoder upsamples
/// at up_channels so each skip concat carries lift_width + up_channels
/// channels (160 + 200 = 360), a pointwise reduction brings the last concat
/// back to lift_width before the final deconv.
struct UfnoConfig {
    int in_channels = 2;
    int lift_width = 160;
    int kernel = 3;
    int n_fno_layers = 2;
    int n_ufno_layers = 2;
    int modes = 16;
    int up_channels = 200;
    int out_channels = 1;
};

struct DeepOnetConfig {
    int branch_input = 501;
    int trunk_input = 1;
    int hidden_layers = 8;
    int width = 100;
    int p = 100;
};

/// A model's full trainable state: ordered named parameter tensors plus the
/// architecture description that built them.
struct ModelParams {
    ModelKind kind = ModelKind::Fno;
    FnoConfig fno;
    UfnoConfig ufno;
    DeepOnetConfig deeponet;
    std::vector<Param> params;

    Param& find(const std::string& name);
    const Param& find(const std::string& name) const;
    void zero_grads();
    std::string config_json() const;
};

ModelParams init_fno(const FnoConfig& cfg, uint64_t seed);
ModelParams init_ufno(const UfnoConfig& cfg, uint64_t seed);
ModelParams init_deeponet(const DeepOnetConfig& cfg, uint64_t seed);

/// rdft -> keep bins [0, modes) -> complex channel mix -> zero fill -> irdft.
Var spectral_conv(Tape& tape, Var f, Var r, int modes, int length);

/// One Fourier layer: activation(spectral_conv(f) + W f + b).
Var fno_layer(Tape& tape, Var f, Var r, Var w, Var b, int modes, int length, bool activation);

/// U-net over [.., C, L] used inside U-FNO layers; `prefix` selects the
/// parameter group (e.g. "layer2.unet").
Var unet_forward(Tape& tape, ModelParams& mp, const std::string& prefix, Var f);

/// x [N, in_channels, L] -> [N, L]
Var fno_forward(Tape& tape, ModelParams& mp, Var x);
Var ufno_forward(Tape& tape, ModelParams& mp, Var x);
/// branch_in [N, branch_input], trunk_in [L, trunk_input] -> [N, L]
Var deeponet_forward(Tape& tape, ModelParams& mp, Var branch_in, Var trunk_in);

/// Dispatch on mp.kind; `trunk` is ignored for FNO/U-FNO.
Var model_forward(Tape& tape, ModelParams& mp, Var inputs, Var trunk);

// -- checkpoint file (versioned binary, magic HYSTCKPT) ---------------------

struct NamedTensor {
    std::string name;
    Tensor value;
};

void write_tensor_file(const std::string& path, const std::string& config_json,
                       const std::vector<NamedTensor>& tensors);
std::pair<std::string, std::vector<NamedTensor>> read_tensor_file(const std::string& path);

/// extra_json rides along for trainer state (epoch, optimizer scalars).
void save_checkpoint(const std::string& path, const ModelParams& mp,
                     const std::string& extra_json = "{}",
                     const std::vector<NamedTensor>& extra_tensors = {});
ModelParams load_checkpoint(const std::string& path, std::string* extra_json = nullptr,
                            std::vector<NamedTensor>* extra_tensors = nullptr);

} // namespace hystop
