#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnls/defect_mode.hpp"
#include "dnls/fft.hpp"
#include "dnls/field.hpp"
#include "dnls/functionals.hpp"
#include "dnls/solvers.hpp"

namespace dnls {

namespace detail {
inline double pow_sigma(double m2, double sigma) {
    if (sigma == 1.0) return m2;
    if (sigma == 2.0) return m2 * m2;
    if (sigma == 3.0) return m2 * m2 * m2;
    return (m2 > 0.0) ? std::pow(m2, sigma) : 0.0;
}
}  // namespace detail

/// Strang-split integrator for i du/dt + Delta u + gamma |u|^{2 sigma} u
/// + V0 delta_{n,0} u = 0 on a periodic box. Both sub-flows are solved
/// exactly: the diagonal phase rotation pointwise, the linear hop in Fourier
/// space. Each sub-flow preserves |u_n| site-wise or the l2 norm exactly, so
/// mass is conserved to roundoff at any dt.
class Evolver {
public:
    Evolver(const ModelParams& p, const Box& box, double dt)
        : p_(p), dt_(dt), fft_(box), linear_phase_(box.size()) {
        require_valid(p);
        if (!(dt > 0.0)) throw std::invalid_argument("Evolver: dt must be > 0");
        const int N = box.side();
        const int d = box.dim();
        std::vector<double> axis(static_cast<std::size_t>(N));
        for (int m = 0; m < N; ++m) {
            const double s = std::sin(std::numbers::pi * m / N);
            axis[static_cast<std::size_t>(m)] = 4.0 * s * s;
        }
        for (std::size_t i = 0; i < box.size(); ++i) {
            double lambda = 0.0;
            std::size_t rest = i;
            for (int j = d - 1; j >= 0; --j) {
                lambda += axis[rest % static_cast<std::size_t>(N)];
                rest /= static_cast<std::size_t>(N);
            }
            linear_phase_[i] = std::polar(1.0, -lambda * dt);
        }
    }

    const Box& box() const { return fft_.box(); }
    double dt() const { return dt_; }

    void step(LatticeField& u) {
        half_phase(u);
        fft_.forward(u.values);
        for (std::size_t i = 0; i < u.size(); ++i) u.values[i] *= linear_phase_[i];
        fft_.inverse(u.values);
        half_phase(u);
    }

    void steps(LatticeField& u, long n) {
        for (long k = 0; k < n; ++k) step(u);
    }

private:
    void half_phase(LatticeField& u) const {
        const double h = 0.5 * dt_;
        const std::size_t org = u.box.origin();
        if (p_.gamma == 0.0) {
            if (p_.v0 != 0.0) u.values[org] *= std::polar(1.0, p_.v0 * h);
            return;
        }
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double m2 = std::norm(u.values[i]);
            double theta = p_.gamma * detail::pow_sigma(m2, p_.sigma) * h;
            if (i == org) theta += p_.v0 * h;
            if (theta != 0.0) u.values[i] *= std::polar(1.0, theta);
        }
    }

    ModelParams p_;
    double dt_;
    Fft fft_;
    std::vector<std::complex<double>> linear_phase_;
};

/// Observable time series of an evolution run.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> mass_series;
    std::vector<double> energy_series;
    std::map<double, std::vector<double>> lp_series;  // keys 2, 4, inf
    std::vector<double> core_mass_fraction;           // mass within |n| <= 5
    bool aborted_on_nan = false;
    double last_valid_time = 0.0;
};

inline TrajectoryRecord evolve(const LatticeField& u0, const ModelParams& p, double T,
                               double dt, int sample_every) {
    require_valid(p);
    if (u0.boundary != Boundary::Periodic)
        throw std::invalid_argument("evolve: periodic boundary required");
    if (!(dt > 0.0) || !(T >= dt)) throw std::invalid_argument("evolve: need T >= dt > 0");
    if (sample_every < 1) throw std::invalid_argument("evolve: sample_every must be >= 1");

    const double inf = std::numeric_limits<double>::infinity();
    Evolver ev(p, u0.box, dt);
    LatticeField u = u0;
    const long nsteps = std::lround(T / dt);

    std::vector<char> core(u.box.size(), 0);
    for (std::size_t i = 0; i < u.box.size(); ++i) core[i] = (u.box.l1(i) <= 5) ? 1 : 0;

    TrajectoryRecord rec;
    auto sample = [&](double t) -> bool {
        if (!u.all_finite()) {
            rec.aborted_on_nan = true;
            return false;
        }
        rec.times.push_back(t);
        rec.mass_series.push_back(mass(u));
        rec.energy_series.push_back(hamiltonian(u, p));
        rec.lp_series[2.0].push_back(lp_norm(u, 2.0));
        rec.lp_series[4.0].push_back(lp_norm(u, 4.0));
        rec.lp_series[inf].push_back(lp_norm(u, inf));
        KahanSum cm;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (core[i]) cm.add(std::norm(u.values[i]));
        rec.core_mass_fraction.push_back(cm.value() / rec.mass_series.back());
        rec.last_valid_time = t;
        return true;
    };

    if (!sample(0.0)) return rec;
    for (long k = 1; k <= nsteps; ++k) {
        ev.step(u);
        if (k % sample_every == 0 || k == nsteps) {
            if (!sample(k * dt)) return rec;
        }
    }
    return rec;
}

/// Remove the bound-state component: u - <phi, u> phi with phi the
/// box-normalized closed-form defect mode.
inline LatticeField deflate(const LatticeField& u0, const DefectMode& mode) {
    if (mode.dim != u0.box.dim())
        throw std::invalid_argument("deflate: mode/box dimension mismatch");
    auto phi = to_complex(materialize(mode, u0.box.radius(), u0.boundary));
    const double nrm = std::sqrt(mass(phi));
    for (auto& v : phi.values) v /= nrm;
    const auto overlap = cdot(phi, u0);
    LatticeField out = u0;
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] -= overlap * phi.values[i];
    return out;
}

struct PersistenceResult {
    double sup_error = 0.0;
    double bound = 0.0;
    double horizon_requested = 0.0;
    double horizon_used = 0.0;
    bool horizon_clamped = false;
    std::vector<double> times;
    std::vector<double> errors;
};

/// Linear-vs-nonlinear drift experiment: identical defect-mode initial data
/// of l2 norm eps evolved under gamma = 0 and gamma != 0 up to
/// T = cT eps^{-2 sigma}; the proof's integral bound is |gamma| eps^{2s+1} T.
/// Horizons beyond the reflection-safe window R/2 are clamped with a flag.
inline PersistenceResult persistence_experiment(const ModelParams& p, double eps, double cT,
                                                int radius, double dt = 0.01,
                                                int sample_every = 10) {
    require_valid(p);
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("persistence_experiment: need 0 < eps < 1");
    if (p.v0 == 0.0)
        throw std::invalid_argument("persistence_experiment: V0 must be nonzero");
    if (!(cT > 0.0)) throw std::invalid_argument("persistence_experiment: cT must be > 0");

    PersistenceResult out;
    out.horizon_requested = cT * std::pow(eps, -2.0 * p.sigma);
    out.horizon_used = out.horizon_requested;
    const double safe = 0.5 * radius;
    if (out.horizon_used > safe) {
        out.horizon_used = safe;
        out.horizon_clamped = true;
    }

    Box b(p.dim, radius);
    const auto branch = p.v0 > 0 ? DefectBranch::Attractive : DefectBranch::Repulsive;
    auto mode = defect_mode(p, branch);
    auto w0 = to_complex(materialize(mode, radius, Boundary::Periodic));
    const double nrm = std::sqrt(mass(w0));
    for (auto& v : w0.values) v *= eps / nrm;

    ModelParams lin = p;
    lin.gamma = 0.0;
    Evolver ev_lin(lin, b, dt);
    Evolver ev_non(p, b, dt);
    LatticeField v = w0, w = w0;

    const long nsteps = std::lround(out.horizon_used / dt);
    auto record = [&](double t) {
        double ds = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) ds += std::norm(v.values[i] - w.values[i]);
        const double err = std::sqrt(ds);
        out.times.push_back(t);
        out.errors.push_back(err);
        out.sup_error = std::max(out.sup_error, err);
    };
    record(0.0);
    for (long k = 1; k <= nsteps; ++k) {
        ev_lin.step(v);
        ev_non.step(w);
        if (k % sample_every == 0 || k == nsteps) record(k * dt);
    }
    out.bound = std::abs(p.gamma) * std::pow(eps, 2.0 * p.sigma + 1.0) * out.horizon_used;
    return out;
}

struct ScatterFit {
    double p = 2.0;  // lp exponent of the fitted norm (inf for the max norm)
    double fitted_exponent = 0.0;
    double predicted_exponent = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double r2 = 0.0;
    std::vector<double> times;
    std::vector<double> norms;
};

namespace detail {

/// Log-spaced sample times snapped to integer step multiples.
inline std::vector<long> log_spaced_steps(double t_lo, double t_hi, double dt, int count) {
    if (count < 2) throw std::invalid_argument("log_spaced_steps: need >= 2 samples");
    std::vector<long> steps;
    const double l0 = std::log(t_lo), l1 = std::log(t_hi);
    long prev = 0;
    for (int k = 0; k < count; ++k) {
        const double t = std::exp(l0 + (l1 - l0) * k / (count - 1));
        long s = std::lround(t / dt);
        if (s <= prev) s = prev + 1;
        steps.push_back(s);
        prev = s;
    }
    return steps;
}

}  // namespace detail

/// Power-law fit of the free/defect linear flow: evolves a (deflated) unit
/// delta under gamma = 0 and fits log ||u||_inf against log t on a
/// reflection-safe window. Predicted exponent d/3. For V0 = 0 the propagator
/// is applied exactly in Fourier space; with a defect the splitting steps.
inline ScatterFit linear_dispersive_fit(const ModelParams& p, int radius, double T,
                                        double window_lo = 20.0, double dt = 0.02,
                                        int samples = 30, bool deflate_mode = true) {
    require_valid(p);
    if (p.gamma != 0.0)
        throw std::invalid_argument("linear_dispersive_fit: gamma must be 0");
    if (!(window_lo > 0.0) || !(T > window_lo))
        throw std::invalid_argument("linear_dispersive_fit: bad window");
    if (T > 0.5 * radius)
        throw std::invalid_argument(
            "linear_dispersive_fit: radius too small for T (reflections reach the fit window)");

    Box b(p.dim, radius);
    LatticeField u0 = LatticeField::delta(b, Boundary::Periodic);
    if (p.v0 != 0.0 && deflate_mode) {
        const auto branch = p.v0 > 0 ? DefectBranch::Attractive : DefectBranch::Repulsive;
        u0 = deflate(u0, defect_mode(p, branch));
    }

    ScatterFit fit;
    fit.p = std::numeric_limits<double>::infinity();
    fit.predicted_exponent = p.dim / 3.0;
    fit.window_lo = window_lo;
    fit.window_hi = T;

    if (p.v0 == 0.0) {
        Fft fft(b);
        auto hat = u0.values;
        fft.forward(hat);
        const int N = b.side();
        std::vector<double> axis(static_cast<std::size_t>(N));
        for (int m = 0; m < N; ++m) {
            const double s = std::sin(std::numbers::pi * m / N);
            axis[static_cast<std::size_t>(m)] = 4.0 * s * s;
        }
        std::vector<double> lambda(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            double lam = 0.0;
            std::size_t rest = i;
            for (int j = b.dim() - 1; j >= 0; --j) {
                lam += axis[rest % static_cast<std::size_t>(N)];
                rest /= static_cast<std::size_t>(N);
            }
            lambda[i] = lam;
        }
        LatticeField u(b, Boundary::Periodic);
        for (int k = 0; k < samples; ++k) {
            const double t =
                std::exp(std::log(window_lo) +
                         (std::log(T) - std::log(window_lo)) * k / (samples - 1));
            for (std::size_t i = 0; i < b.size(); ++i)
                u.values[i] = hat[i] * std::polar(1.0, -lambda[i] * t);
            fft.inverse(u.values);
            fit.times.push_back(t);
            fit.norms.push_back(lp_norm(u, fit.p));
        }
    } else {
        Evolver ev(p, b, dt);
        LatticeField u = u0;
        auto marks = detail::log_spaced_steps(window_lo, T, dt, samples);
        long done = 0;
        for (long s : marks) {
            ev.steps(u, s - done);
            done = s;
            fit.times.push_back(s * dt);
            fit.norms.push_back(lp_norm(u, fit.p));
        }
    }

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < fit.times.size(); ++i) {
        lx.push_back(std::log(fit.times[i]));
        ly.push_back(std::log(fit.norms[i]));
    }
    auto line = fit_line(lx, ly);
    fit.fitted_exponent = -line.slope;
    fit.r2 = line.r2;
    return fit;
}

/// Named admissibility violation for the scattering experiment.
struct AdmissibilityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Nonlinear decay-rate experiment: deflated single-site data of mass nu,
/// fitted lp-norm decay against the dispersive prediction d(p-2)/(3p).
inline ScatterFit scatter_experiment(const ModelParams& p, double nu, double pexp, int radius,
                                     double T, double dt, double window_lo = 20.0,
                                     int samples = 30, bool enforce_admissibility = true) {
    require_valid(p);
    if (!(p.gamma > 0.0))
        throw std::invalid_argument("scatter_experiment: gamma must be > 0");
    if (!(nu > 0.0)) throw std::invalid_argument("scatter_experiment: nu must be > 0");
    if (T > 0.5 * radius)
        throw std::invalid_argument("scatter_experiment: radius too small for T");
    if (!(window_lo > 0.0) || !(T > window_lo))
        throw std::invalid_argument("scatter_experiment: bad fit window");
    if (!(pexp > 2.0)) throw std::invalid_argument("scatter_experiment: p must be > 2");

    if (enforce_admissibility) {
        const double d = p.dim;
        if (p.v0 < 0.0 && p.sigma < std::max(1.0, 2.0 / d))
            throw AdmissibilityError("scatter_experiment: sigma < max{1, 2/d} with V0 < 0");
        if (p.v0 == 0.0 && p.sigma < 2.0 / d)
            throw AdmissibilityError("scatter_experiment: sigma < 2/d with V0 = 0");
        if (2.0 * d * p.sigma <= 3.0)
            throw AdmissibilityError("scatter_experiment: 2 d sigma <= 3, no admissible p");
        if (!std::isinf(pexp)) {
            const double p_lo = 4.0 * d * p.sigma / (2.0 * d * p.sigma - 3.0);
            if (pexp < p_lo)
                throw AdmissibilityError(
                    "scatter_experiment: p < 4 d sigma / (2 d sigma - 3)");
            if (pexp > 2.0 * (p.sigma + 1.0))
                throw AdmissibilityError("scatter_experiment: p > 2 (sigma + 1)");
        }
    }

    Box b(p.dim, radius);
    LatticeField u0 = LatticeField::delta(b, Boundary::Periodic, std::sqrt(nu));
    if (p.v0 != 0.0) {
        const auto branch = p.v0 > 0 ? DefectBranch::Attractive : DefectBranch::Repulsive;
        u0 = deflate(u0, defect_mode(p, branch));
    }

    ScatterFit fit;
    fit.p = pexp;
    fit.predicted_exponent = std::isinf(pexp)
                                 ? p.dim / 3.0
                                 : p.dim * (pexp - 2.0) / (3.0 * pexp);
    fit.window_lo = window_lo;
    fit.window_hi = T;

    Evolver ev(p, b, dt);
    LatticeField u = u0;
    auto marks = detail::log_spaced_steps(window_lo, T, dt, samples);
    long done = 0;
    for (long s : marks) {
        ev.steps(u, s - done);
        done = s;
        if (!u.all_finite())
            throw std::runtime_error("scatter_experiment: non-finite state at t = " +
                                     std::to_string(done * dt));
        fit.times.push_back(s * dt);
        fit.norms.push_back(lp_norm(u, pexp));
    }

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < fit.times.size(); ++i) {
        lx.push_back(std::log(fit.times[i]));
        ly.push_back(std::log(fit.norms[i]));
    }
    auto line = fit_line(lx, ly);
    fit.fitted_exponent = -line.slope;
    fit.r2 = line.r2;
    return fit;
}

}  // namespace dnls
