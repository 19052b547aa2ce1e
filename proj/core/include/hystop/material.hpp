#pragma once

#include <string>
#include <vector>

namespace hystop {

inline constexpr double kMu0 = 1.25663706143591729e-6; // 4*pi*1e-7, H/m

/// Jiles-Atherton static-model parameters, all SI.
struct JaParams {
    double ms = 1.60e6;   // saturation magnetization, A/m
    double a = 15.0;      // anhysteretic shape, A/m
    double k_pin = 25.0;  // pinning strength, A/m
    double c_rev = 0.25;  // reversibility, in [0, 1]
    double alpha = 1.5e-5; // mean-field coupling
};

/// Thin-sheet material description:
///   H(t) = H_hys(B) + m^2/(12 rho) dB/dt + g(B) delta |dB/dt|^alpha_exc
/// The shipped defaults are illustrative GO-steel-like values; thickness and
/// resistivity match M105-30P (0.3 mm, 0.461 uOhm m).
struct MaterialParams {
    double thickness_m = 0.30e-3;
    double resistivity_ohm_m = 0.461e-6;
    JaParams ja;
    std::vector<double> g_coeffs{0.65}; // polynomial in B, ascending powers
    double alpha_exc = 0.5;
    int substeps = 10; // JA sub-steps per sample

    static MaterialParams go_steel_default() { return MaterialParams{}; }

    double eddy_coefficient() const { return thickness_m * thickness_m / (12.0 * resistivity_ohm_m); }
    double g_of_b(double b) const;
    /// Throws Config on invariant violations; b_range is the |B| extent the
    /// g(B) >= 0 check covers.
    void validate(double b_range = 2.0) const;
};

struct ExcitationSpec {
    double b_peak = 1.0; // tesla
    double freq = 50.0;  // hertz
    int n_samples = 500;
    double phase = 0.0;  // radians
    int n_settle_periods = 2;

    void validate() const;
};

/// One steady-state dynamic hysteresis loop.
struct LoopRecord {
    std::vector<double> b; // tesla
    std::vector<double> h; // A/m
    double freq = 0.0;
    double b_peak = 0.0;
    double phase = 0.0;
};

/// b[i] = b_peak sin(2 pi f t_i + phase), t_i = i / (f n), i in [0, n).
void sinusoidal_flux(const ExcitationSpec& spec, std::vector<double>& b, std::vector<double>& t);

/// B-driven (inverse) Jiles-Atherton hysteron. State is (B, M); H = B/mu0 - M.
/// Rate independent: the trajectory depends only on the ordered B values.
class JilesAtherton {
public:
    explicit JilesAtherton(const JaParams& p) : p_(p) {}

    void reset() { b_ = 0.0; m_ = 0.0; } // demagnetized
    /// Advance B to b_target with explicit Euler sub-stepping; returns H.
    double advance(double b_target, int substeps);
    double field() const { return b_ / kMu0 - m_; }
    double magnetization() const { return m_; }

private:
    double dm_db(double delta) const;

    JaParams p_;
    double b_ = 0.0;
    double m_ = 0.0;
};

/// Static field series: JA integrated through the B samples from the
/// demagnetized state. Independent of any time base.
std::vector<double> static_field(const std::vector<double>& b, const MaterialParams& params);

struct DynamicFieldResult {
    std::vector<double> h;     // A/m, same length as the input period
    double closure_rel = 0.0;  // |H restart - H[0]| / max|H|
    int settle_periods = 0;    // periods integrated before recording
};

/// Full thin-sheet field of one excitation period: the JA hysteron is settled
/// over repeated periods (at least n_settle_periods, extended until the
/// period map converges), then the recorded period gets the eddy and excess
/// terms added. dB/dt uses central differences with periodic wrap.
DynamicFieldResult dynamic_field(const std::vector<double>& b, const std::vector<double>& t,
                                 const MaterialParams& params, int n_settle_periods = 2);

LoopRecord generate_loop(const ExcitationSpec& spec, const MaterialParams& params);

/// One steady-state loop per (freq, peak) pair, row-major over freqs then
/// peaks. Per-loop failures are rethrown with the (freq, peak) context.
std::vector<LoopRecord> generate_corpus(const std::vector<double>& freqs,
                                        const std::vector<double>& peaks,
                                        const ExcitationSpec& defaults,
                                        const MaterialParams& params);

} // namespace hystop
