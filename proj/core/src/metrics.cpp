#include "hystop/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "hystop/error.hpp"

namespace hystop {

double core_loss(const std::vector<double>& b, const std::vector<double>& h, double freq) {
    const int n = static_cast<int>(b.size());
    if (h.size() != b.size())
        raise(ErrorKind::Input, "core_loss: B has " + std::to_string(b.size()) +
                                    " samples, H has " + std::to_string(h.size()));
    if (n < 3) raise(ErrorKind::Input, "core_loss: need at least 3 samples, got " + std::to_string(n));
    if (!(freq > 0.0)) raise(ErrorKind::Input, "core_loss: frequency must be positive");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(b[static_cast<size_t>(i)]) || !std::isfinite(h[static_cast<size_t>(i)]))
            raise(ErrorKind::Input, "core_loss: non-finite sample at index " + std::to_string(i));

    const double dt = 1.0 / (freq * n);

    // closed integrand u_i = H_i * dB/dt_i, u_n = u_0
    std::vector<double> u(static_cast<size_t>(n) + 1);
    auto wrap = [n](int i) { return ((i % n) + n) % n; };
    for (int i = 0; i < n; ++i) {
        const double d1 = b[static_cast<size_t>(wrap(i + 1))] - b[static_cast<size_t>(wrap(i - 1))];
        const double d2 = b[static_cast<size_t>(wrap(i + 2))] - b[static_cast<size_t>(wrap(i - 2))];
        const double dbdt = (8.0 * d1 - d2) / (12.0 * dt);
        u[static_cast<size_t>(i)] = h[static_cast<size_t>(i)] * dbdt;
    }
    u[static_cast<size_t>(n)] = u[0];

    // composite Simpson on the even prefix, trapezoid tail if n is odd
    const int m = n % 2 == 0 ? n : n - 1;
    double s = u[0] + u[static_cast<size_t>(m)];
    for (int i = 1; i < m; i += 2) s += 4.0 * u[static_cast<size_t>(i)];
    for (int i = 2; i < m; i += 2) s += 2.0 * u[static_cast<size_t>(i)];
    double integral = s * dt / 3.0;
    if (m != n) integral += 0.5 * dt * (u[static_cast<size_t>(n - 1)] + u[static_cast<size_t>(n)]);

    return freq * integral;
}

double to_mass_specific(double power_per_m3, double density) {
    if (!(density > 0.0)) raise(ErrorKind::Config, "density must be positive");
    return power_per_m3 / density;
}

double mre(const std::vector<double>& reference, const std::vector<double>& predicted) {
    if (reference.size() != predicted.size())
        raise(ErrorKind::Dimension, "mre: " + std::to_string(reference.size()) +
                                        " references vs " + std::to_string(predicted.size()) +
                                        " predictions");
    if (reference.empty()) raise(ErrorKind::Input, "mre: empty inputs");
    double acc = 0.0;
    for (size_t i = 0; i < reference.size(); ++i) {
        if (reference[i] == 0.0)
            raise(ErrorKind::Input, "mre: reference loss is zero at index " + std::to_string(i));
        acc += std::abs(reference[i] - predicted[i]) / std::abs(reference[i]);
    }
    return acc / static_cast<double>(reference.size());
}

double improvement(double mre_no_aug, double mre_aug) {
    if (!(mre_no_aug > 0.0))
        raise(ErrorKind::Input, "improvement: baseline MRE must be positive");
    return (1.0 - mre_aug / mre_no_aug) * 100.0;
}

std::string metrics_report_json(const std::vector<MetricSample>& samples,
                                std::optional<double> eta_vs_baseline) {
    nlohmann::json per_sample = nlohmann::json::array();
    std::vector<double> refs, preds;
    refs.reserve(samples.size());
    preds.reserve(samples.size());
    for (const MetricSample& s : samples) {
        per_sample.push_back({{"freq", s.freq},
                              {"b_peak", s.b_peak},
                              {"P_ref", s.p_ref},
                              {"P_pred", s.p_pred},
                              {"rel_err", s.rel_err}});
        refs.push_back(s.p_ref);
        preds.push_back(s.p_pred);
    }
    nlohmann::json aggregate;
    aggregate["mre"] = samples.empty() ? 0.0 : mre(refs, preds);
    if (eta_vs_baseline) aggregate["eta_vs_baseline"] = *eta_vs_baseline;
    nlohmann::json doc;
    doc["samples"] = per_sample;
    doc["aggregate"] = aggregate;
    return doc.dump(2);
}

} // namespace hystop
