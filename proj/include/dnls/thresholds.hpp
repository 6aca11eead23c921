#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dnls/field.hpp"
#include "dnls/functionals.hpp"

namespace dnls {

namespace detail {
inline bool near_integer(double x, double tol = 1e-9) {
    return std::abs(x - std::round(x)) < tol;
}
}  // namespace detail

/// F(eta, sigma) = 1 + sum_{l=1}^{2 sigma + 1} eta^l for integer 2 sigma + 1,
/// continued to general sigma by the geometric closed form
/// (1 - eta^{2 sigma + 2}) / (1 - eta) the finite sum equals.
inline double f_poly(double eta, double sigma) {
    if (!(std::abs(eta) < 1.0)) throw std::invalid_argument("f_poly: |eta| must be < 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("f_poly: sigma must be > 0");
    const double m = 2.0 * sigma + 2.0;
    if (eta == 0.0) return 1.0;
    if (eta < 0.0 && !detail::near_integer(m))
        throw std::invalid_argument("f_poly: eta < 0 needs integer 2 sigma + 2");
    const double pw = (eta < 0.0) ? ((std::llround(m) % 2 == 0) ? std::pow(-eta, m)
                                                                : -std::pow(-eta, m))
                                  : std::pow(eta, m);
    return (1.0 - pw) / (1.0 - eta);
}

/// Integer coefficients of F1(eta, d), the exact quotient
/// ((1+eta^2)^d - (2 eta)^d) / (1-eta)^2. eta = 1 is a double root of the
/// numerator for every d, so the division is exact; the remainder is checked.
inline std::vector<long long> f1_coeffs(int d) {
    if (d < 1 || d > 30) throw std::invalid_argument("f1_coeffs: d must be in [1,30]");
    std::vector<long long> a(static_cast<std::size_t>(2 * d + 1), 0);
    long long binom = 1;  // C(d, k)
    for (int k = 0; k <= d; ++k) {
        a[static_cast<std::size_t>(2 * k)] += binom;
        binom = binom * (d - k) / (k + 1);
    }
    long long p2 = 1;
    for (int k = 0; k < d; ++k) p2 *= 2;
    a[static_cast<std::size_t>(d)] -= p2;

    auto divide_once = [](std::vector<long long>& c) {
        // quotient of c / (1 - eta): prefix sums; remainder = c(1)
        long long run = 0;
        for (auto& v : c) {
            run += v;
            v = run;
        }
        if (c.back() != 0) throw std::logic_error("f1_coeffs: nonzero remainder");
        c.pop_back();
    };
    divide_once(a);
    divide_once(a);
    return a;
}

inline double f1_poly(double eta, int d) {
    const auto c = f1_coeffs(d);
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * eta + static_cast<double>(*it);
    return v;
}

/// Geometric trial state x_n = A eta^{|n|} carrying mass nu on the infinite
/// lattice; eta in (-1,0) encodes the staggered profile (-1)^{|n|} |eta|^{|n|}.
struct TrialProfile {
    double eta = 0.5;
    double nu = 1.0;
    int dim = 1;
    double amplitude = 0.0;
};

inline TrialProfile make_trial(double eta, double nu, int dim) {
    if (!(std::abs(eta) < 1.0) || eta == 0.0)
        throw std::invalid_argument("make_trial: eta must be in (-1,0) or (0,1)");
    if (!(nu > 0.0)) throw std::invalid_argument("make_trial: nu must be > 0");
    if (dim < 1) throw std::invalid_argument("make_trial: dim must be >= 1");
    TrialProfile t;
    t.eta = eta;
    t.nu = nu;
    t.dim = dim;
    const double e2 = eta * eta;
    t.amplitude = std::pow((1.0 - e2) / (1.0 + e2), 0.5 * dim) * std::sqrt(nu);
    return t;
}

inline RealField materialize(const TrialProfile& t, int radius, Boundary bc) {
    Box b(t.dim, radius);
    RealField f(b, bc);
    const double ae = std::abs(t.eta);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const int l = b.l1(i);
        double v = t.amplitude * std::pow(ae, l);
        if (t.eta < 0.0 && (l % 2)) v = -v;
        f.values[i] = v;
    }
    return f;
}

/// Closed-form Hamiltonian of the trial state on the infinite lattice:
///   E = 2 d nu (1-eta)^2/(1+eta^2)
///       - gamma/(sigma+1) (a nu)^{sigma+1} ((1+q)/(1-q))^d  - V0 a nu,
/// with a = ((1-eta^2)/(1+eta^2))^d and q = |eta|^{2 sigma + 2}. Each factor
/// is the exact per-axis geometric sum of the materialized profile, so this
/// matches the lattice hamiltonian up to O(eta^R) truncation.
inline double trial_energy(const TrialProfile& t, const ModelParams& p) {
    require_valid(p);
    if (t.dim != p.dim) throw std::invalid_argument("trial_energy: dim mismatch");
    const double eta = t.eta, nu = t.nu;
    const double e2 = eta * eta;
    const double a = std::pow((1.0 - e2) / (1.0 + e2), p.dim);
    const double q = std::pow(std::abs(eta), 2.0 * p.sigma + 2.0);
    const double grad = 2.0 * p.dim * nu * (1.0 - eta) * (1.0 - eta) / (1.0 + e2);
    const double nl = p.gamma / (p.sigma + 1.0) * std::pow(a * nu, p.sigma + 1.0) *
                      std::pow((1.0 + q) / (1.0 - q), p.dim);
    return grad - nl - p.v0 * a * nu;
}

enum class ThresholdRegime { NoThreshold, ThresholdExists, NoLocalizedState, Uncovered };
enum class EndpointTrend { Unknown, TendsToZero, Diverges, Finite };

struct ThresholdReport {
    ThresholdRegime regime = ThresholdRegime::Uncovered;
    // Single-site-limit formula values; nu_lower/nu_upper carry the raw
    // quantity (units of nu^sigma), *_mass the induced mass threshold.
    std::optional<double> nu_lower;
    std::optional<double> nu_lower_mass;
    std::optional<double> nu_upper;
    std::optional<double> nu_upper_mass;
    std::vector<std::pair<double, double>> scan_curve;
    std::optional<double> inf_eta;
    std::optional<double> inf_value;
    std::optional<double> endpoint_zero_limit;
    EndpointTrend endpoint_one_trend = EndpointTrend::Unknown;
    std::optional<bool> exists_at_nu;
    std::vector<std::string> notes;
};

/// Excitation-threshold case table, d-aware. The eta -> 0 single-site limit
/// of the trial energy gives nu^sigma = (sigma+1)(2d-V0)/gamma as the
/// sufficient-mass formula (and (sigma+1)(V0-2d)/|gamma| as the defocusing
/// persistence bound).
inline ThresholdReport threshold_formulas(const ModelParams& p) {
    require_valid(p);
    if (p.gamma == 0.0)
        throw std::invalid_argument("threshold_formulas: gamma must be nonzero");
    const double lo = std::min(1.0, 2.0 / p.dim);
    const double hi = std::max(1.0, 2.0 / p.dim);
    const double band = 2.0 * p.dim;
    ThresholdReport r;
    if (p.gamma > 0.0) {
        if (p.v0 > 0.0) {
            r.regime = ThresholdRegime::NoThreshold;
            r.notes.push_back("attractive defect: E < 0 for every nu > 0");
        } else if (p.sigma < lo) {
            r.regime = ThresholdRegime::NoThreshold;
            r.notes.push_back("subcritical sigma: states of arbitrarily small mass");
        } else if (p.sigma >= hi) {
            if (p.v0 < band) {
                r.regime = ThresholdRegime::ThresholdExists;
                const double v = (p.sigma + 1.0) / p.gamma * (band - p.v0);
                r.nu_lower = v;
                r.nu_lower_mass = std::pow(v, 1.0 / p.sigma);
            } else {
                r.regime = ThresholdRegime::Uncovered;
                r.notes.push_back("V0 >= 2d: outside the covered case table");
            }
        } else {
            r.regime = ThresholdRegime::Uncovered;
            r.notes.push_back("sigma between min{1,2/d} and max{1,2/d}");
        }
    } else {
        if (p.sigma < lo) {
            r.regime = ThresholdRegime::NoLocalizedState;
            r.notes.push_back("defocusing, subcritical sigma: no localized state");
        } else if (p.sigma >= hi && p.v0 > band) {
            r.regime = ThresholdRegime::ThresholdExists;
            const double v = (p.sigma + 1.0) / std::abs(p.gamma) * (p.v0 - band);
            r.nu_upper = v;
            r.nu_upper_mass = std::pow(v, 1.0 / p.sigma);
            r.notes.push_back("defocusing upper persistence bound");
        } else {
            r.regime = ThresholdRegime::Uncovered;
        }
    }
    return r;
}

enum class ScanBranch { Breather, DefocusingPersistence, StaggeringSurvival };

namespace detail {

/// Bound expression whose comparison against nu^sigma (or nu^{sigma+1} for
/// the staggering branch) decides the sign of the trial energy at one eta.
inline double scan_value(double eta, double nu, const ModelParams& p, ScanBranch branch) {
    const double e2 = eta * eta;
    const double a = std::pow((1.0 - e2) / (1.0 + e2), p.dim);
    const double q = std::pow(std::abs(eta), 2.0 * p.sigma + 2.0);
    const double gfac = 2.0 * p.dim * (1.0 - eta) * (1.0 - eta) / (1.0 + e2);
    const double shape = std::pow(a, -(p.sigma + 1.0)) *
                         std::pow((1.0 - q) / (1.0 + q), p.dim);
    switch (branch) {
        case ScanBranch::Breather:
            // E < 0  iff  nu^sigma > value
            return (p.sigma + 1.0) / p.gamma * (gfac - p.v0 * a) * shape;
        case ScanBranch::DefocusingPersistence:
            // E <= 0  iff  nu^sigma <= value
            return (p.sigma + 1.0) / std::abs(p.gamma) * (p.v0 * a - gfac) * shape;
        case ScanBranch::StaggeringSurvival:
            // E > 4d  iff  nu^{sigma+1} < value
            return (p.sigma + 1.0) / p.gamma *
                   (nu * (gfac - p.v0 * a) - 4.0 * p.dim) * shape;
    }
    return 0.0;
}

inline double richardson_limit(double v1, double v2, double v3) {
    // values at eta = 1e-2, 1e-3, 1e-4 with leading O(eta) error, ratio 10
    const double l2 = (10.0 * v2 - v1) / 9.0;
    const double l3 = (10.0 * v3 - v2) / 9.0;
    return l3 + (l3 - l2) / 99.0;
}

}  // namespace detail

/// Evaluate the existence bound over an open uniform eta grid, report the
/// grid infimum, extrapolated endpoint limits, and the verdict at mass nu.
inline ThresholdReport eta_scan(const ModelParams& p, double nu, int grid,
                                std::optional<ScanBranch> branch_opt = std::nullopt) {
    require_valid(p);
    if (grid < 100) throw std::invalid_argument("eta_scan: grid must be >= 100");
    if (!(nu > 0.0)) throw std::invalid_argument("eta_scan: nu must be > 0");
    if (p.gamma == 0.0) throw std::invalid_argument("eta_scan: gamma must be nonzero");

    const ScanBranch branch = branch_opt.value_or(
        p.gamma > 0.0 ? ScanBranch::Breather : ScanBranch::DefocusingPersistence);
    if (branch == ScanBranch::Breather && p.gamma < 0.0)
        throw std::invalid_argument("eta_scan: breather branch needs gamma > 0");
    if (branch == ScanBranch::DefocusingPersistence && p.gamma > 0.0)
        throw std::invalid_argument("eta_scan: persistence branch needs gamma < 0");
    if (branch == ScanBranch::StaggeringSurvival) {
        if (!(p.gamma > 0.0 && p.v0 < 0.0))
            throw std::invalid_argument(
                "eta_scan: staggering branch needs gamma > 0 and V0 < 0");
        if (!detail::near_integer(2.0 * p.sigma + 2.0))
            throw std::invalid_argument(
                "eta_scan: staggering branch needs integer 2 sigma + 2");
    }

    ThresholdReport r = threshold_formulas(p);
    const double sgn = (branch == ScanBranch::StaggeringSurvival) ? -1.0 : 1.0;
    r.scan_curve.reserve(static_cast<std::size_t>(grid));
    double best = std::numeric_limits<double>::infinity();
    double best_eta = 0.0;
    for (int k = 1; k <= grid; ++k) {
        const double eta = sgn * static_cast<double>(k) / (grid + 1);
        const double v = detail::scan_value(eta, nu, p, branch);
        r.scan_curve.emplace_back(eta, v);
        if (v < best) {
            best = v;
            best_eta = eta;
        }
    }
    r.inf_value = best;
    r.inf_eta = best_eta;

    const double z1 = detail::scan_value(sgn * 1e-2, nu, p, branch);
    const double z2 = detail::scan_value(sgn * 1e-3, nu, p, branch);
    const double z3 = detail::scan_value(sgn * 1e-4, nu, p, branch);
    r.endpoint_zero_limit = detail::richardson_limit(z1, z2, z3);

    const double o1 = detail::scan_value(sgn * (1.0 - 1e-2), nu, p, branch);
    const double o2 = detail::scan_value(sgn * (1.0 - 1e-3), nu, p, branch);
    const double o3 = detail::scan_value(sgn * (1.0 - 1e-4), nu, p, branch);
    const double a1 = std::abs(o1), a2 = std::abs(o2), a3 = std::abs(o3);
    if (a3 > 5.0 * a2 && a2 > 5.0 * a1)
        r.endpoint_one_trend = EndpointTrend::Diverges;
    else if (a3 < 0.5 * a2 || a3 < 1e-10)
        r.endpoint_one_trend = EndpointTrend::TendsToZero;
    else
        r.endpoint_one_trend = EndpointTrend::Finite;

    switch (branch) {
        case ScanBranch::Breather:
            r.exists_at_nu = std::pow(nu, p.sigma) > best;
            break;
        case ScanBranch::DefocusingPersistence:
            r.exists_at_nu = std::pow(nu, p.sigma) <= best;
            break;
        case ScanBranch::StaggeringSurvival:
            r.exists_at_nu = std::pow(nu, p.sigma + 1.0) < best;
            break;
    }
    return r;
}

/// Empirical lower estimate of the discrete interpolation constant:
/// max over the sample of sum|u|^{2s+2} / ((sum|u|^2)^s <-Delta u, u>).
template <class Scalar>
double interpolation_check(const std::vector<BasicField<Scalar>>& fields,
                           const ModelParams& p) {
    require_valid(p);
    if (!(p.sigma >= 2.0 / p.dim))
        throw std::invalid_argument("interpolation_check: needs sigma >= 2/d");
    double best = 0.0;
    bool any = false;
    for (const auto& u : fields) {
        const double m = mass(u);
        if (m == 0.0) continue;
        const double quad = gradient_sq(u);
        if (quad <= 1e-14 * m) continue;  // constants on a periodic box
        const double ratio = nonlinear_sum(u, p.sigma) / (std::pow(m, p.sigma) * quad);
        best = std::max(best, ratio);
        any = true;
    }
    if (!any) throw std::invalid_argument("interpolation_check: no admissible field");
    return best;
}

/// Positive root of 1 + |V0|/2 nu - gamma C/(sigma+1) nu^sigma = 0, the
/// necessary-condition mass induced by an interpolation-constant estimate C.
inline double nu2_root(double C, const ModelParams& p) {
    require_valid(p);
    if (!(C > 0.0) || !(p.gamma > 0.0))
        throw std::invalid_argument("nu2_root: needs C > 0 and gamma > 0");
    auto f = [&](double nu) {
        return 1.0 + 0.5 * std::abs(p.v0) * nu -
               p.gamma * C / (p.sigma + 1.0) * std::pow(nu, p.sigma);
    };
    double hi = 1.0;
    int guard = 0;
    while (f(hi) > 0.0) {
        hi *= 2.0;
        if (++guard > 200) throw std::domain_error("nu2_root: no positive root");
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace dnls
