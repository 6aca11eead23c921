#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnls/defect_mode.hpp"
#include "dnls/field.hpp"
#include "dnls/functionals.hpp"
#include "dnls/solvers.hpp"

namespace dnls {

/// Thrown when a ray carries no Nehari projection (Q(x) <= 0); carries the
/// offending quadratic-form value.
class FiberingError : public std::domain_error {
public:
    explicit FiberingError(double q)
        : std::domain_error("fibering_scale: Q(x) = " + std::to_string(q) +
                            " <= 0, no Nehari projection along this ray"),
          q_(q) {}
    double q() const { return q_; }

private:
    double q_;
};

/// Q(x) = ||grad x||^2 - omega ||x||^2 - V0 x_0^2, the quadratic part of the
/// Nehari functional.
inline double quadratic_form(const RealField& x, double omega, const ModelParams& p) {
    return gradient_sq(x) - omega * mass(x) - p.v0 * abs2(x.origin_value());
}

/// Unique s > 0 with I(s x) = 0 along the ray through x (gamma > 0):
/// s = (Q(x) / (gamma ||x||_{2s+2}^{2s+2}))^{1/(2 sigma)}.
inline double fibering_scale(const RealField& x, double omega, const ModelParams& p) {
    require_valid(p);
    if (!(p.gamma > 0.0))
        throw std::invalid_argument("fibering_scale: needs focusing gamma > 0");
    const double nl = nonlinear_sum(x, p.sigma);
    if (nl == 0.0) throw std::invalid_argument("fibering_scale: x must be nonzero");
    const double q = quadratic_form(x, omega, p);
    if (!(q > 0.0)) throw FiberingError(q);
    return std::pow(q / (p.gamma * nl), 1.0 / (2.0 * p.sigma));
}

inline RealField project_to_nehari(const RealField& x, double omega, const ModelParams& p) {
    const double s = fibering_scale(x, omega, p);
    RealField y = x;
    for (auto& v : y.values) v *= s;
    return y;
}

/// Lower bounds valid for every x on the Nehari manifold:
///   ||x|| >= alpha,  J(x) >= beta_lb,
/// with mu = -omega - max(V0, 0),
///   alpha = (mu/gamma)^{1/(2 sigma)},
///   beta_lb = sigma/(2 sigma + 2) * mu^{1 + 1/sigma} * gamma^{-1/sigma}.
struct NehariCertificate {
    double alpha = 0.0;
    double beta_lb = 0.0;
};

inline NehariCertificate nehari_bounds(double omega, const ModelParams& p) {
    require_valid(p);
    if (!(p.gamma > 0.0)) throw std::invalid_argument("nehari_bounds: needs gamma > 0");
    if (!(omega < 0.0)) throw std::invalid_argument("nehari_bounds: needs omega < 0");
    if (!(p.v0 < -omega)) throw std::invalid_argument("nehari_bounds: needs V0 < -omega");
    const double mu = -omega - std::max(p.v0, 0.0);
    NehariCertificate c;
    c.alpha = std::pow(mu / p.gamma, 1.0 / (2.0 * p.sigma));
    c.beta_lb = 0.5 * (1.0 - 1.0 / (1.0 + p.sigma)) * mu * std::pow(mu / p.gamma, 1.0 / p.sigma);
    return c;
}

struct DecayFit {
    double eta_est = 0.0;
    double r2 = 0.0;
    std::size_t sites = 0;
};

/// Least-squares fit of log|x_n| against |n| over usable sites; returns
/// eta_est = exp(slope). Sites below 1e3 * eps * max(1, ||x||_inf) are
/// dropped as noise.
template <class Scalar>
DecayFit decay_fit(const BasicField<Scalar>& x) {
    double top = 0.0;
    for (const auto& v : x.values) top = std::max(top, std::sqrt(abs2(v)));
    if (top == 0.0) throw std::domain_error("decay_fit: zero field");
    const double thresh =
        1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, top);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::sqrt(abs2(x.values[i]));
        if (a > thresh) {
            xs.push_back(static_cast<double>(x.box.l1(i)));
            ys.push_back(std::log(a));
        }
    }
    if (xs.size() < 5) throw std::domain_error("decay_fit: fewer than 5 usable sites");
    auto f = fit_line(xs, ys);
    return {std::exp(f.slope), f.r2, f.count};
}

/// Converged stationary profile with its certificates.
struct GroundState {
    RealField profile;
    double omega = 0.0;
    double nu = 0.0;
    double actionJ = 0.0;
    double energyE = 0.0;
    double residual = 0.0;
    double decay_eta = 0.0;
    double decay_r2 = 0.0;
    double gamma2 = 0.0;  // fibering second derivative at s = 1

    explicit GroundState(RealField x) : profile(std::move(x)) {}
};

enum class SolveStatus { Converged, NotConverged, Collapsed };
enum class M2Outcome { NegativeEnergyMinimizer, NoNegativeMinimizer };

struct SolverOptions {
    double tol = 1e-10;      // stationary-gradient norm target
    int max_iter = 100000;   // descent iteration cap
    double step0 = 0.1;
    bool newton_polish = true;
};

struct M1Result {
    GroundState state;
    SolveStatus status = SolveStatus::NotConverged;
    int iterations = 0;
    double max_objective_increase = 0.0;  // over accepted descent steps

    explicit M1Result(GroundState s) : state(std::move(s)) {}
};

struct M2Result {
    GroundState state;
    SolveStatus status = SolveStatus::NotConverged;
    M2Outcome outcome = M2Outcome::NoNegativeMinimizer;
    int iterations = 0;
    double max_objective_increase = 0.0;

    explicit M2Result(GroundState s) : state(std::move(s)) {}
};

namespace detail {

inline void nonlinear_term(const std::vector<double>& x, double sigma, double gamma,
                           std::vector<double>& out) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m2 = x[i] * x[i];
        out[i] = (m2 > 0.0) ? gamma * std::pow(m2, sigma) * x[i] : 0.0;
    }
}

/// g = J'(x) = (-Delta - V)x - omega x - gamma |x|^{2 sigma} x.
inline void stationary_gradient(const DefectOperator& L, const std::vector<double>& x,
                                double omega, const ModelParams& p,
                                std::vector<double>& g, std::vector<double>& scratch) {
    L(x, g);
    nonlinear_term(x, p.sigma, p.gamma, scratch);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] -= omega * x[i] + scratch[i];
}

inline double field_action(const RealField& x, double omega, const ModelParams& p) {
    return action(x, omega, p);
}

inline void fill_certificates(GroundState& gs, const ModelParams& p) {
    gs.nu = mass(gs.profile);
    gs.actionJ = action(gs.profile, gs.omega, p);
    gs.energyE = 0.5 * hamiltonian(gs.profile, p);
    gs.gamma2 = -2.0 * p.sigma * p.gamma * nonlinear_sum(gs.profile, p.sigma);
    try {
        auto df = decay_fit(gs.profile);
        gs.decay_eta = df.eta_est;
        gs.decay_r2 = df.r2;
    } catch (const std::domain_error&) {
        gs.decay_eta = std::numeric_limits<double>::quiet_NaN();
        gs.decay_r2 = 0.0;
    }
}

}  // namespace detail

/// Action minimization on the Nehari manifold: projected gradient descent
/// with backtracking, then Newton refinement of the stationary system.
/// Default initial guess: single-site delta, projected to the manifold.
inline M1Result minimize_action_m1(double omega, const ModelParams& p, int radius,
                                   std::optional<RealField> init = std::nullopt,
                                   SolverOptions opts = {}) {
    require_valid(p);
    if (!(p.gamma > 0.0)) throw std::invalid_argument("minimize_action_m1: needs gamma > 0");
    if (!(omega < 0.0)) throw std::invalid_argument("minimize_action_m1: needs omega < 0");

    Box b(p.dim, radius);
    RealField x0 = init ? *init : RealField::delta(b, Boundary::Dirichlet);
    if (x0.box != b) throw std::invalid_argument("minimize_action_m1: init box mismatch");

    RealField x = project_to_nehari(x0, omega, p);  // throws FiberingError if Q <= 0
    DefectOperator L(b, p.v0, DefectShape::Point);
    const std::size_t n = b.size();
    std::vector<double> g(n), scratch(n), gy(n);

    M1Result out{GroundState(x)};
    double J = detail::field_action(x, omega, p);
    double step = opts.step0;
    const double gd_tol = opts.newton_polish ? std::max(opts.tol, 1e-7) : opts.tol;
    int it = 0;
    double gnorm = std::numeric_limits<double>::infinity();

    for (; it < opts.max_iter; ++it) {
        detail::stationary_gradient(L, x.values, omega, p, g, scratch);
        gnorm = vec::norm(g);
        if (gnorm <= gd_tol) break;
        bool accepted = false;
        while (step > 1e-18) {
            RealField y = x;
            vec::axpy(-step, g, y.values);
            double Jy;
            try {
                y = project_to_nehari(y, omega, p);
                Jy = detail::field_action(y, omega, p);
            } catch (const FiberingError&) {
                step *= 0.5;
                continue;
            }
            if (Jy <= J + 1e-14 * std::abs(J)) {
                out.max_objective_increase = std::max(out.max_objective_increase, Jy - J);
                x = std::move(y);
                J = Jy;
                step = std::min(step * 1.3, 1.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // stalled; hand over to Newton
    }

    // Newton refinement of J'(x) = 0.
    if (opts.newton_polish && gnorm > opts.tol) {
        std::vector<double> nl(n), delta(n), xt(n);
        for (int k = 0; k < 40; ++k) {
            detail::stationary_gradient(L, x.values, omega, p, g, scratch);
            gnorm = vec::norm(g);
            if (gnorm <= opts.tol) break;
            nl.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const double m2 = x.values[i] * x.values[i];
                nl[i] = (m2 > 0.0) ? p.gamma * (2.0 * p.sigma + 1.0) * std::pow(m2, p.sigma)
                                   : 0.0;
            }
            auto hess = [&](const std::vector<double>& v, std::vector<double>& hv) {
                L(v, hv);
                for (std::size_t i = 0; i < n; ++i) hv[i] -= (omega + nl[i]) * v[i];
            };
            auto lin = minres(hess, g, delta, 1e-12, 20000);
            (void)lin;
            double t = 1.0;
            bool ok = false;
            for (int ls = 0; ls < 40; ++ls) {
                for (std::size_t i = 0; i < n; ++i) xt[i] = x.values[i] - t * delta[i];
                detail::stationary_gradient(L, xt, omega, p, gy, scratch);
                if (vec::norm(gy) < gnorm) {
                    x.values = xt;
                    ok = true;
                    break;
                }
                t *= 0.5;
            }
            if (!ok) break;
        }
    }

    // Exact manifold membership for the reported state.
    try {
        x = project_to_nehari(x, omega, p);
    } catch (const FiberingError&) {
        out.state = GroundState(x);
        out.status = SolveStatus::Collapsed;
        out.iterations = it;
        return out;
    }
    detail::stationary_gradient(L, x.values, omega, p, g, scratch);
    gnorm = vec::norm(g);

    GroundState gs(x);
    gs.omega = omega;
    gs.residual = gnorm;
    detail::fill_certificates(gs, p);
    out.state = std::move(gs);
    out.iterations = it;

    if (p.v0 < -omega) {
        const auto cert = nehari_bounds(omega, p);
        if (std::sqrt(out.state.nu) < 0.5 * cert.alpha) {
            out.status = SolveStatus::Collapsed;
            return out;
        }
    }
    out.status = (gnorm <= opts.tol) ? SolveStatus::Converged : SolveStatus::NotConverged;
    return out;
}

/// Energy minimization at fixed mass: normalized gradient flow with
/// backtracking, then a bordered Newton solve of the stationary system with
/// the Lagrange multiplier as unknown. A converged flat state with E >= 0 is
/// reported as NoNegativeMinimizer, a finding rather than a failure.
inline M2Result minimize_energy_m2(double nu, const ModelParams& p, int radius,
                                   std::optional<RealField> init = std::nullopt,
                                   SolverOptions opts = {}) {
    require_valid(p);
    if (!(nu > 0.0)) throw std::invalid_argument("minimize_energy_m2: needs nu > 0");

    Box b(p.dim, radius);
    RealField x = init ? *init : RealField::delta(b, Boundary::Dirichlet);
    if (x.box != b) throw std::invalid_argument("minimize_energy_m2: init box mismatch");
    {
        const double m = mass(x);
        if (m == 0.0) throw std::invalid_argument("minimize_energy_m2: zero init");
        const double c = std::sqrt(nu / m);
        for (auto& v : x.values) v *= c;
    }

    DefectOperator L(b, p.v0, DefectShape::Point);
    const std::size_t n = b.size();
    std::vector<double> g(n), scratch(n), gy(n);

    M2Result out{GroundState(x)};
    auto energy = [&](const RealField& f) { return action(f, 0.0, p); };
    double E = energy(x);
    double step = opts.step0;
    const double gd_tol = opts.newton_polish ? std::max(opts.tol, 1e-7) : opts.tol;
    int it = 0;
    double rnorm = std::numeric_limits<double>::infinity();
    double omega = 0.0;

    for (; it < opts.max_iter; ++it) {
        detail::stationary_gradient(L, x.values, 0.0, p, g, scratch);  // E'(x)
        omega = vec::dot(g, x.values) / nu;
        rnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g[i] - omega * x.values[i];
            rnorm += r * r;
        }
        rnorm = std::sqrt(rnorm);
        if (rnorm <= gd_tol) break;
        bool accepted = false;
        while (step > 1e-18) {
            RealField y = x;
            vec::axpy(-step, g, y.values);
            const double m = mass(y);
            if (m == 0.0) {
                step *= 0.5;
                continue;
            }
            const double c = std::sqrt(nu / m);
            for (auto& v : y.values) v *= c;
            const double Ey = energy(y);
            if (Ey <= E + 1e-14 * std::max(1.0, std::abs(E))) {
                out.max_objective_increase = std::max(out.max_objective_increase, Ey - E);
                x = std::move(y);
                E = Ey;
                step = std::min(step * 1.3, 1.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }

    // Bordered Newton on F(x, w) = E'(x) - w x = 0, ||x||^2 = nu.
    if (opts.newton_polish && rnorm > opts.tol) {
        std::vector<double> nl(n), rhs(n + 1), sol(n + 1), xt(n);
        for (int k = 0; k < 40; ++k) {
            detail::stationary_gradient(L, x.values, 0.0, p, g, scratch);
            omega = vec::dot(g, x.values) / nu;
            double fn = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                rhs[i] = -(g[i] - omega * x.values[i]);
                fn += rhs[i] * rhs[i];
            }
            const double c = 0.5 * (mass(x) - nu);
            rhs[n] = -c;
            fn = std::sqrt(fn + c * c);
            rnorm = fn;
            if (fn <= opts.tol) break;

            for (std::size_t i = 0; i < n; ++i) {
                const double m2 = x.values[i] * x.values[i];
                nl[i] = (m2 > 0.0) ? p.gamma * (2.0 * p.sigma + 1.0) * std::pow(m2, p.sigma)
                                   : 0.0;
            }
            auto bordered = [&](const std::vector<double>& v, std::vector<double>& hv) {
                // [[E'' - w, x], [x^T, 0]], symmetric
                L(v, hv);  // uses first n entries of v
                double xtv = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    hv[i] -= (omega + nl[i]) * v[i];
                    hv[i] += x.values[i] * v[n];
                    xtv += x.values[i] * v[i];
                }
                hv[n] = xtv;
            };
            auto lin = minres(bordered, rhs, sol, 1e-12, 30000);
            (void)lin;
            double t = 1.0;
            bool ok = false;
            for (int ls = 0; ls < 40; ++ls) {
                for (std::size_t i = 0; i < n; ++i) xt[i] = x.values[i] + t * sol[i];
                const double w_t = omega - t * sol[n];  // mu = -delta w
                detail::stationary_gradient(L, xt, 0.0, p, gy, scratch);
                double fn2 = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = gy[i] - w_t * xt[i];
                    fn2 += r * r;
                }
                double mt = 0.0;
                for (std::size_t i = 0; i < n; ++i) mt += xt[i] * xt[i];
                const double ct = 0.5 * (mt - nu);
                fn2 = std::sqrt(fn2 + ct * ct);
                if (fn2 < fn) {
                    x.values = xt;
                    omega = w_t;
                    ok = true;
                    break;
                }
                t *= 0.5;
            }
            if (!ok) break;
        }
    }

    // Pin the mass exactly and read the multiplier off the converged state.
    {
        const double c = std::sqrt(nu / mass(x));
        for (auto& v : x.values) v *= c;
    }
    detail::stationary_gradient(L, x.values, 0.0, p, g, scratch);
    omega = vec::dot(g, x.values) / nu;
    rnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = g[i] - omega * x.values[i];
        rnorm += r * r;
    }
    rnorm = std::sqrt(rnorm);
    E = energy(x);

    GroundState gs(x);
    gs.omega = omega;
    gs.residual = rnorm;
    detail::fill_certificates(gs, p);
    out.state = std::move(gs);
    out.iterations = it;
    out.status = (rnorm <= opts.tol) ? SolveStatus::Converged : SolveStatus::NotConverged;
    out.outcome = (E < -1e-12) ? M2Outcome::NegativeEnergyMinimizer
                               : M2Outcome::NoNegativeMinimizer;
    return out;
}

struct CrossCheck {
    GroundState m2_state;
    GroundState m1_state;
    double profile_distance = 0.0;
    double mass_mismatch = 0.0;

    CrossCheck(GroundState a, GroundState b)
        : m2_state(std::move(a)), m1_state(std::move(b)) {}
};

/// Solve M2 at mass nu, then M1 at the recovered multiplier, and measure the
/// sign-aligned l2 distance between the two profiles.
inline CrossCheck m1_m2_crosscheck(const ModelParams& p, double nu, int radius,
                                   SolverOptions opts = {}) {
    auto m2 = minimize_energy_m2(nu, p, radius, std::nullopt, opts);
    if (m2.status != SolveStatus::Converged)
        throw std::runtime_error("m1_m2_crosscheck: M2 did not converge");
    if (m2.outcome != M2Outcome::NegativeEnergyMinimizer)
        throw std::runtime_error("m1_m2_crosscheck: no negative-energy minimizer at this nu");

    auto m1 = minimize_action_m1(m2.state.omega, p, radius, std::nullopt, opts);
    if (m1.status != SolveStatus::Converged)
        throw std::runtime_error("m1_m2_crosscheck: M1 did not converge");

    RealField a = m1.state.profile;
    if (real_dot(a, m2.state.profile) < 0.0)
        for (auto& v : a.values) v = -v;
    double ds = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.values[i] - m2.state.profile.values[i];
        ds += d * d;
    }
    CrossCheck out(std::move(m2.state), std::move(m1.state));
    out.profile_distance = std::sqrt(ds);
    out.mass_mismatch = std::abs(out.m1_state.nu - nu);
    return out;
}

}  // namespace dnls
