#pragma once

// Extraction of physics from decay traces and tabulated relaxation data:
// exponential fitting (Gauss-Newton), sideband-averaged rate relations,
// the Purcell-like estimate, polarity classification and defect-frequency
// inference, and the spectral-feature search over fitted T1rho columns.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sls {

class out_of_domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class FitStatus { Ok, NonDecaying, NotConverged };

enum class FitForm {
    FreeOffset,       // offset + amplitude * exp(-gamma tau)
    HalfPlusHalfExp,  // (1 + exp(-gamma tau)) / 2, single parameter
};

struct ExpFit {
    double gamma = 0.0;      // decay rate (1/s), > 0 when converged
    double amplitude = 0.0;
    double offset = 0.0;
    double residual_rms = 0.0;
    bool converged = false;
    FitStatus status = FitStatus::NotConverged;
};

namespace detail {

inline double sum_sq_residual(const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
}

}  // namespace detail

// Least-squares exponential decay fit. FreeOffset runs Gauss-Newton on
// (offset, amplitude, gamma) seeded by a tail-mean offset and a log-linear
// regression of the baseline-subtracted data; HalfPlusHalfExp constrains
// offset = amplitude = 1/2 and fits gamma alone. Convergence requires a
// relative parameter update below 1e-8 within 100 iterations. A fit whose
// amplitude is indistinguishable from zero at three residual RMS, or whose
// rate comes out nonpositive, reports NonDecaying.
inline ExpFit fit_exponential(const std::vector<double>& tau,
                              const std::vector<double>& y,
                              FitForm form = FitForm::FreeOffset) {
    if (tau.size() != y.size())
        throw std::invalid_argument("fit_exponential: size mismatch");
    const std::size_t n = tau.size();
    if (n < 4)
        throw std::invalid_argument("fit_exponential: need at least 4 samples");

    const double tau_span = std::max(tau.back() - tau.front(), 1e-300);
    const auto [y_min_it, y_max_it] = std::minmax_element(y.begin(), y.end());
    const double y_range = *y_max_it - *y_min_it;

    ExpFit fit;
    if (y_range < 1e-13) {
        fit.offset = y.front();
        fit.amplitude = 0.0;
        fit.status = FitStatus::NonDecaying;
        return fit;
    }

    const bool constrained = form == FitForm::HalfPlusHalfExp;

    // Log-linear initialization.
    double c = 0.5, a = 0.5, g = 1.0 / tau_span;
    if (constrained) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = 2.0 * y[i] - 1.0;
            if (z > 1e-6) {
                num += tau[i] * std::log(z);
                den += tau[i] * tau[i];
            }
        }
        if (den > 0.0 && num < 0.0) g = -num / den;
    } else {
        const std::size_t n_tail = std::max<std::size_t>(2, n / 5);
        double c0 = 0.0;
        for (std::size_t i = n - n_tail; i < n; ++i) c0 += y[i];
        c0 /= static_cast<double>(n_tail);
        const double s = (y.front() - c0) >= 0.0 ? 1.0 : -1.0;
        double z_max = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            z_max = std::max(z_max, s * (y[i] - c0));
        double st = 0.0, stt = 0.0, sz = 0.0, stz = 0.0, cnt = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = s * (y[i] - c0);
            if (z > 1e-3 * z_max) {
                const double lz = std::log(z);
                st += tau[i];
                stt += tau[i] * tau[i];
                sz += lz;
                stz += tau[i] * lz;
                cnt += 1.0;
            }
        }
        c = c0;
        const double det = cnt * stt - st * st;
        if (cnt >= 2.0 && det > 0.0) {
            const double slope = (cnt * stz - st * sz) / det;
            const double icept = (sz * stt - st * stz) / det;
            if (slope < 0.0) g = -slope;
            a = s * std::exp(icept);
        } else {
            a = y.front() - c0;
        }
    }

    // Gauss-Newton with step halving.
    std::vector<double> r(n);
    auto residuals = [&](double cc, double aa, double gg) {
        for (std::size_t i = 0; i < n; ++i) {
            const double m = constrained ? 0.5 * (1.0 + std::exp(-gg * tau[i]))
                                         : cc + aa * std::exp(-gg * tau[i]);
            r[i] = y[i] - m;
        }
        return detail::sum_sq_residual(r);
    };

    double ssr = residuals(c, a, g);
    bool converged = false;
    for (int iter = 0; iter < 100 && !converged; ++iter) {
        double dc = 0.0, da = 0.0, dg = 0.0;
        if (constrained) {
            double jtj = 0.0, jtr = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::exp(-g * tau[i]);
                const double j = -0.5 * tau[i] * e;
                const double res = y[i] - 0.5 * (1.0 + e);
                jtj += j * j;
                jtr += j * res;
            }
            if (jtj <= 0.0) break;
            dg = jtr / jtj;
        } else {
            Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
            Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::exp(-g * tau[i]);
                const Eigen::Vector3d j(1.0, e, -a * tau[i] * e);
                jtj += j * j.transpose();
                jtr += j * (y[i] - (c + a * e));
            }
            const Eigen::Vector3d d = jtj.ldlt().solve(jtr);
            if (!d.allFinite()) break;
            dc = d(0);
            da = d(1);
            dg = d(2);
        }

        double step = 1.0;
        double ssr_new = residuals(c + dc, a + da, g + dg);
        int halvings = 0;
        while (ssr_new > ssr && halvings < 12) {
            step *= 0.5;
            ssr_new = residuals(c + step * dc, a + step * da, g + step * dg);
            ++halvings;
        }
        if (ssr_new > ssr) break;  // stalled

        c += step * dc;
        a += step * da;
        g += step * dg;
        ssr = ssr_new;

        const double rel =
            std::max({std::abs(step * dc) / std::max(std::abs(c), 1e-12),
                      std::abs(step * da) / std::max(std::abs(a), 1e-12),
                      std::abs(step * dg) / std::max(std::abs(g), 1e-12 / tau_span)});
        converged = rel < 1e-8;
    }

    fit.gamma = g;
    fit.amplitude = constrained ? 0.5 : a;
    fit.offset = constrained ? 0.5 : c;
    fit.residual_rms = std::sqrt(ssr / static_cast<double>(n));
    if (!converged) {
        fit.status = FitStatus::NotConverged;
        return fit;
    }
    if (std::abs(fit.amplitude) <= 3.0 * fit.residual_rms + 1e-14 || g <= 0.0) {
        fit.status = FitStatus::NonDecaying;
        return fit;
    }
    fit.converged = true;
    fit.status = FitStatus::Ok;
    return fit;
}

// Qubit energy-relaxation rate versus frequency, linearly interpolated
// between strictly increasing sample frequencies.
struct RelaxationSpectrum {
    std::vector<double> frequencies;  // rad/s
    std::vector<double> gamma1;       // 1/s

    void validate() const {
        if (frequencies.size() != gamma1.size() || frequencies.size() < 2)
            throw std::invalid_argument("RelaxationSpectrum: need >= 2 matched samples");
        for (std::size_t i = 0; i < frequencies.size(); ++i) {
            if (!(gamma1[i] > 0.0))
                throw std::invalid_argument("RelaxationSpectrum: gamma1 must be positive");
            if (i > 0 && !(frequencies[i] > frequencies[i - 1]))
                throw std::invalid_argument(
                    "RelaxationSpectrum: frequencies must be strictly increasing");
        }
    }

    bool contains(double omega) const {
        return !frequencies.empty() && omega >= frequencies.front() &&
               omega <= frequencies.back();
    }

    double operator()(double omega) const {
        if (!contains(omega))
            throw out_of_domain_error("RelaxationSpectrum: frequency outside table");
        const auto it = std::lower_bound(frequencies.begin(), frequencies.end(), omega);
        const std::size_t hi = std::min<std::size_t>(
            std::max<std::size_t>(1, it - frequencies.begin()), frequencies.size() - 1);
        const std::size_t lo = hi - 1;
        const double w = (omega - frequencies[lo]) / (frequencies[hi] - frequencies[lo]);
        return (1.0 - w) * gamma1[lo] + w * gamma1[hi];
    }
};

// Gamma'_1 = (Gamma_1(w_q - W_R) + Gamma_1(w_q + W_R)) / 2.
inline double gamma_prime_exact(const RelaxationSpectrum& spec, double omega_q,
                                double rabi) {
    return 0.5 * (spec(omega_q - rabi) + spec(omega_q + rabi));
}

// One-sided variant with the lower sideband frozen at Gamma_1(w_q), for
// tables that do not extend below the qubit frequency.
inline double gamma_prime_one_sided(const RelaxationSpectrum& spec, double omega_q,
                                    double rabi) {
    return 0.5 * (spec(omega_q) + spec(omega_q + rabi));
}

// T1rho from Gamma_1rho = Gamma'_1 / 2 + Gamma_Omega.
inline double gbe_t1rho(double gamma_prime, double gamma_omega) {
    if (gamma_prime < 0.0 || gamma_omega < 0.0)
        throw std::invalid_argument("gbe_t1rho: rates must be nonnegative");
    const double rate = 0.5 * gamma_prime + gamma_omega;
    if (rate <= 0.0)
        throw std::domain_error("gbe_t1rho: both rates zero (infinite lifetime)");
    return 1.0 / rate;
}

// Purcell-like effective dissipation rate g^2 / Gamma_1^(TLS), g angular.
inline double purcell_rate(double g, double gamma1_tls) {
    if (!(gamma1_tls > 0.0))
        throw std::invalid_argument("purcell_rate: TLS rate must be positive");
    return g * g / gamma1_tls;
}

enum class Polarity { Positive, Negative, Undetermined };

inline const char* to_string(Polarity p) {
    switch (p) {
        case Polarity::Positive: return "positive";
        case Polarity::Negative: return "negative";
        default: return "undetermined";
    }
}

// Positive polarity: D_up steady level below D_down (cooling, Delta > 0);
// Negative: the reverse (heating, Delta < 0).
inline Polarity classify_polarity(double up_steady, double down_steady,
                                  double noise_floor = 0.02) {
    if (up_steady < -1e-6 || up_steady > 1.0 + 1e-6 || down_steady < -1e-6 ||
        down_steady > 1.0 + 1e-6)
        throw std::invalid_argument("classify_polarity: populations outside [0, 1]");
    if (down_steady - up_steady > noise_floor) return Polarity::Positive;
    if (up_steady - down_steady > noise_floor) return Polarity::Negative;
    return Polarity::Undetermined;
}

// w_TLS = w_q + W_R for positive polarity, w_q - W_R for negative.
inline double infer_defect_frequency(double omega_q, double rabi_at_feature,
                                     Polarity polarity) {
    if (polarity == Polarity::Undetermined)
        throw std::invalid_argument("infer_defect_frequency: undetermined polarity");
    return polarity == Polarity::Positive ? omega_q + rabi_at_feature
                                          : omega_q - rabi_at_feature;
}

struct FeatureReport {
    double rabi_at_feature = 0.0;  // rad/s
    Polarity polarity = Polarity::Undetermined;
    std::optional<double> inferred_tls_frequency;  // rad/s, absent if undetermined
    double t1rho_at_feature = 0.0;  // s
};

struct FeatureSearchParams {
    int baseline_window = 7;    // rolling-median window (grid points)
    double depth = 0.7;         // feature: T1rho below depth * rolling median
    double noise_floor = 0.02;  // polarity separation threshold (population)
};

namespace detail {

inline double window_median(const std::vector<double>& v, std::size_t center,
                            int window) {
    const std::size_t half = static_cast<std::size_t>(window / 2);
    const std::size_t lo = center >= half ? center - half : 0;
    const std::size_t hi = std::min(center + half, v.size() - 1);
    std::vector<double> w;
    for (std::size_t i = lo; i <= hi; ++i)
        if (std::isfinite(v[i])) w.push_back(v[i]);
    if (w.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(w.begin(), w.end());
    const std::size_t m = w.size() / 2;
    return w.size() % 2 ? w[m] : 0.5 * (w[m - 1] + w[m]);
}

}  // namespace detail

// Locates local minima of T1rho(W_R) dipping below a rolling-median
// baseline. t1rho entries for failed column fits must be NaN; contiguous
// below-threshold runs produce one feature each, at the run's minimum.
inline std::vector<FeatureReport> find_features(
    double omega_q, const std::vector<double>& rabi_grid,
    const std::vector<double>& t1rho, const std::vector<double>& steady_up,
    const std::vector<double>& steady_down, const FeatureSearchParams& params = {}) {
    const std::size_t n = rabi_grid.size();
    if (t1rho.size() != n || steady_up.size() != n || steady_down.size() != n)
        throw std::invalid_argument("find_features: grid size mismatch");
    if (params.baseline_window < 1 || params.depth <= 0.0 || params.depth >= 1.0)
        throw std::invalid_argument("find_features: bad search parameters");

    std::vector<bool> below(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(t1rho[i])) continue;
        const double base = detail::window_median(t1rho, i, params.baseline_window);
        below[i] = std::isfinite(base) && t1rho[i] < params.depth * base;
    }

    std::vector<FeatureReport> features;
    std::size_t i = 0;
    while (i < n) {
        if (!below[i]) {
            ++i;
            continue;
        }
        std::size_t best = i;
        std::size_t j = i;
        while (j < n && below[j]) {
            if (t1rho[j] < t1rho[best]) best = j;
            ++j;
        }
        FeatureReport rep;
        rep.rabi_at_feature = rabi_grid[best];
        rep.t1rho_at_feature = t1rho[best];
        rep.polarity = classify_polarity(std::clamp(steady_up[best], 0.0, 1.0),
                                         std::clamp(steady_down[best], 0.0, 1.0),
                                         params.noise_floor);
        if (rep.polarity != Polarity::Undetermined)
            rep.inferred_tls_frequency =
                infer_defect_frequency(omega_q, rep.rabi_at_feature, rep.polarity);
        features.push_back(rep);
        i = j;
    }
    return features;
}

}  // namespace sls
