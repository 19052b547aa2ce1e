#pragma once

#include <optional>
#include <string>
#include <vector>

namespace hystop {

/// Volumetric dissipated power of one closed loop, W/m^3:
///   P = f * closed-loop integral of H dB
/// evaluated as composite Simpson over H * dB/dt in time, with the loop
/// closed by appending sample 0. dB/dt uses 4th-order central differences
/// with periodic wrap. When the closed interval count is odd, Simpson runs
/// on the even prefix and a trapezoid covers the tail. Positive for a
/// dissipative traversal.
double core_loss(const std::vector<double>& b, const std::vector<double>& h, double freq);

/// W/m^3 -> W/kg given a mass density in kg/m^3.
double to_mass_specific(double power_per_m3, double density);

/// Mean relative error of predicted vs reference losses: references must be
/// nonzero.
double mre(const std::vector<double>& reference, const std::vector<double>& predicted);

/// Improvement percentage of an augmentation regime:
///   eta = (1 - mre_aug / mre_no_aug) * 100
double improvement(double mre_no_aug, double mre_aug);

struct MetricSample {
    double freq = 0.0;
    double b_peak = 0.0;
    double p_ref = 0.0;
    double p_pred = 0.0;
    double rel_err = 0.0;
};

/// Serialized metrics report: per-sample records plus the aggregate MRE and
/// (when a baseline is supplied) the improvement over it.
std::string metrics_report_json(const std::vector<MetricSample>& samples,
                                std::optional<double> eta_vs_baseline = std::nullopt);

} // namespace hystop
