#include "hystop/material.hpp"

#include <algorithm>
#include <cmath>

#include "hystop/error.hpp"
#include "hystop/parallel.hpp"

namespace hystop {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Langevin function and derivative, series near 0 against cancellation.
double langevin(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-2) {
        const double x2 = x * x;
        return x * (1.0 / 3.0 - x2 / 45.0 + 2.0 * x2 * x2 / 945.0);
    }
    if (ax > 20.0) return x > 0.0 ? 1.0 - 1.0 / x : -1.0 - 1.0 / x;
    return 1.0 / std::tanh(x) - 1.0 / x;
}

double langevin_prime(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-2) {
        const double x2 = x * x;
        return 1.0 / 3.0 - x2 / 15.0 + 2.0 * x2 * x2 / 189.0;
    }
    if (ax > 20.0) return 1.0 / (x * x);
    const double sh = std::sinh(x);
    return 1.0 / (x * x) - 1.0 / (sh * sh);
}

} // namespace

double MaterialParams::g_of_b(double b) const {
    double acc = 0.0;
    for (size_t i = g_coeffs.size(); i-- > 0;) acc = acc * b + g_coeffs[i];
    return acc;
}

void MaterialParams::validate(double b_range) const {
    if (!(thickness_m > 0.0)) raise(ErrorKind::Config, "material: thickness must be positive");
    if (!(resistivity_ohm_m > 0.0)) raise(ErrorKind::Config, "material: resistivity must be positive");
    if (!(ja.ms > 0.0) || !(ja.a > 0.0) || !(ja.k_pin > 0.0))
        raise(ErrorKind::Config, "material: JA parameters Ms, a, k must be positive");
    if (ja.c_rev < 0.0 || ja.c_rev > 1.0)
        raise(ErrorKind::Config, "material: JA reversibility c must lie in [0, 1]");
    if (ja.alpha < 0.0) raise(ErrorKind::Config, "material: JA coupling alpha must be >= 0");
    if (!(alpha_exc > 0.0)) raise(ErrorKind::Config, "material: excess exponent must be positive");
    if (substeps < 1) raise(ErrorKind::Config, "material: substeps must be >= 1");
    for (int i = 0; i <= 100; ++i) {
        const double b = -b_range + 2.0 * b_range * i / 100.0;
        if (g_of_b(b) < 0.0)
            raise(ErrorKind::Config,
                  "material: g(B) negative at B = " + std::to_string(b) + " T");
    }
}

void ExcitationSpec::validate() const {
    if (!(b_peak > 0.0)) raise(ErrorKind::Config, "excitation: b_peak must be positive");
    if (!(freq > 0.0)) raise(ErrorKind::Config, "excitation: frequency must be positive");
    if (n_samples < 16) raise(ErrorKind::Config, "excitation: need at least 16 samples per period");
    if (n_settle_periods < 1) raise(ErrorKind::Config, "excitation: need at least 1 settle period");
}

void sinusoidal_flux(const ExcitationSpec& spec, std::vector<double>& b, std::vector<double>& t) {
    spec.validate();
    const int n = spec.n_samples;
    b.resize(static_cast<size_t>(n));
    t.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        t[static_cast<size_t>(i)] = static_cast<double>(i) / (spec.freq * n);
        b[static_cast<size_t>(i)] = spec.b_peak * std::sin(kTwoPi * i / n + spec.phase);
    }
}

// Differential susceptibility dM/dB of the inverse model at the current
// state. With S = dM/dHe = (1-c)(Man - Mirr)/(k delta) + c Man'(He):
//   dM/dB = S / (mu0 (1 + (1 - alpha) S))
// The irreversible term is clamped to zero when it points against the drive
// (Bergqvist), which keeps S >= 0 and the denominator positive.
double JilesAtherton::dm_db(double delta) const {
    const double he = b_ / kMu0 - (1.0 - p_.alpha) * m_;
    const double x = he / p_.a;
    const double man = p_.ms * langevin(x);
    const double man_prime = p_.ms / p_.a * langevin_prime(x);

    double s = p_.c_rev * man_prime;
    if (p_.c_rev < 1.0 - 1e-12) {
        const double m_irr = (m_ - p_.c_rev * man) / (1.0 - p_.c_rev);
        const double gap = man - m_irr;
        if (gap * delta > 0.0) s += (1.0 - p_.c_rev) * gap / (p_.k_pin * delta);
    }
    return s / (kMu0 * (1.0 + (1.0 - p_.alpha) * s));
}

double JilesAtherton::advance(double b_target, int substeps) {
    const double db_total = b_target - b_;
    if (db_total != 0.0) {
        const double delta = db_total > 0.0 ? 1.0 : -1.0;
        const double db = db_total / substeps;
        for (int i = 0; i < substeps; ++i) {
            m_ += dm_db(delta) * db;
            b_ += db;
        }
        b_ = b_target; // absorb accumulated rounding
    }
    return field();
}

std::vector<double> static_field(const std::vector<double>& b, const MaterialParams& params) {
    params.validate();
    for (double v : b)
        if (!std::isfinite(v)) raise(ErrorKind::Input, "static_field: non-finite B sample");
    JilesAtherton hysteron(params.ja);
    hysteron.reset();
    std::vector<double> h(b.size());
    for (size_t i = 0; i < b.size(); ++i) h[i] = hysteron.advance(b[i], params.substeps);
    return h;
}

DynamicFieldResult dynamic_field(const std::vector<double>& b, const std::vector<double>& t,
                                 const MaterialParams& params, int n_settle_periods) {
    params.validate();
    const int n = static_cast<int>(b.size());
    if (t.size() != b.size())
        raise(ErrorKind::Input, "dynamic_field: B and t lengths differ");
    if (n < 16)
        raise(ErrorKind::Config, "dynamic_field: " + std::to_string(n) +
                                     " samples cannot resolve dB/dt; need >= 16");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(b[static_cast<size_t>(i)]) || !std::isfinite(t[static_cast<size_t>(i)]))
            raise(ErrorKind::Input, "dynamic_field: non-finite input at index " + std::to_string(i));
    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) raise(ErrorKind::Input, "dynamic_field: time base must increase");
    for (int i = 1; i + 1 < n; ++i)
        if (std::abs(t[static_cast<size_t>(i + 1)] - t[static_cast<size_t>(i)] - dt) > 1e-9 * dt)
            raise(ErrorKind::Input, "dynamic_field: sampling must be uniform");

    // settle the hysteron: at least n_settle_periods, then extend until the
    // recorded period stops moving (steady state)
    constexpr int kMaxPeriods = 200;
    constexpr double kPeriodTol = 1e-9;
    JilesAtherton hysteron(params.ja);
    hysteron.reset();
    std::vector<double> h_prev(static_cast<size_t>(n), 0.0);
    std::vector<double> h_hys(static_cast<size_t>(n), 0.0);
    int periods = 0;
    for (; periods < kMaxPeriods; ++periods) {
        for (int i = 0; i < n; ++i)
            h_hys[static_cast<size_t>(i)] = hysteron.advance(b[static_cast<size_t>(i)], params.substeps);
        if (periods >= n_settle_periods) {
            double diff = 0.0, peak = 0.0;
            for (int i = 0; i < n; ++i) {
                diff = std::max(diff, std::abs(h_hys[static_cast<size_t>(i)] - h_prev[static_cast<size_t>(i)]));
                peak = std::max(peak, std::abs(h_hys[static_cast<size_t>(i)]));
            }
            if (diff <= kPeriodTol * std::max(peak, 1e-30)) {
                ++periods;
                break;
            }
        }
        std::swap(h_prev, h_hys);
    }

    // closure: restart the recorded period and compare its first field value
    const double h_restart = hysteron.advance(b[0], params.substeps);

    const double coef = params.eddy_coefficient();
    DynamicFieldResult out;
    out.h.resize(static_cast<size_t>(n));
    double h_peak = 0.0;
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n;
        const int im = (i - 1 + n) % n;
        const double dbdt = (b[static_cast<size_t>(ip)] - b[static_cast<size_t>(im)]) / (2.0 * dt);
        const double delta = dbdt > 0.0 ? 1.0 : (dbdt < 0.0 ? -1.0 : 0.0);
        const double excess =
            params.g_of_b(b[static_cast<size_t>(i)]) * delta * std::pow(std::abs(dbdt), params.alpha_exc);
        out.h[static_cast<size_t>(i)] = h_hys[static_cast<size_t>(i)] + coef * dbdt + excess;
        h_peak = std::max(h_peak, std::abs(h_hys[static_cast<size_t>(i)]));
    }
    out.closure_rel = std::abs(h_restart - h_hys[0]) / std::max(h_peak, 1e-30);
    out.settle_periods = periods;
    return out;
}

LoopRecord generate_loop(const ExcitationSpec& spec, const MaterialParams& params) {
    spec.validate();
    params.validate(std::max(2.0, spec.b_peak));
    std::vector<double> b, t;
    sinusoidal_flux(spec, b, t);
    DynamicFieldResult dyn = dynamic_field(b, t, params, spec.n_settle_periods);
    if (dyn.closure_rel > 0.01)
        raise(ErrorKind::Numeric, "generate_loop: loop failed to close (closure " +
                                      std::to_string(dyn.closure_rel) + " of max|H|)");
    LoopRecord rec;
    rec.b = std::move(b);
    rec.h = std::move(dyn.h);
    rec.freq = spec.freq;
    rec.b_peak = spec.b_peak;
    rec.phase = spec.phase;
    return rec;
}

std::vector<LoopRecord> generate_corpus(const std::vector<double>& freqs,
                                        const std::vector<double>& peaks,
                                        const ExcitationSpec& defaults,
                                        const MaterialParams& params) {
    if (freqs.empty() || peaks.empty())
        raise(ErrorKind::Config, "generate_corpus: frequency and peak lists must be non-empty");
    const int64_t total = static_cast<int64_t>(freqs.size()) * static_cast<int64_t>(peaks.size());
    std::vector<LoopRecord> out(static_cast<size_t>(total));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(total));
    parallel_for(total, [&](int64_t idx) {
        const double f = freqs[static_cast<size_t>(idx) / peaks.size()];
        const double p = peaks[static_cast<size_t>(idx) % peaks.size()];
        try {
            ExcitationSpec spec = defaults;
            spec.freq = f;
            spec.b_peak = p;
            out[static_cast<size_t>(idx)] = generate_loop(spec, params);
        } catch (...) {
            errors[static_cast<size_t>(idx)] = std::current_exception();
        }
    });
    for (int64_t i = 0; i < total; ++i) {
        if (!errors[static_cast<size_t>(i)]) continue;
        const double f = freqs[static_cast<size_t>(i) / peaks.size()];
        const double p = peaks[static_cast<size_t>(i) % peaks.size()];
        try {
            std::rethrow_exception(errors[static_cast<size_t>(i)]);
        } catch (const Error& e) {
            raise(e.kind(), "loop (freq=" + std::to_string(f) + " Hz, b_peak=" +
                                std::to_string(p) + " T): " + e.what());
        }
    }
    return out;
}

} // namespace hystop
