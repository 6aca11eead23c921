#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dnls/field.hpp"
#include "dnls/functionals.hpp"
#include "dnls/solvers.hpp"

namespace dnls {

enum class DefectBranch { Attractive, Repulsive };

/// How the delta defect is realized on the lattice.
///
/// Point is the single-site potential V0 * delta_{n,0} of the evolution
/// equation. Separable spreads the same total strength as (V0/d) per
/// coordinate hyperplane {n_j = 0}; in d = 1 the two coincide. The
/// closed-form profiles A eta^{|n|} below are exact eigenfunctions of the
/// Separable realization in every dimension, but of the Point realization
/// only in d = 1 (the kink of |n| along a hyperplane acts as an extra
/// potential there, so the profile fails the point-defect eigenproblem at
/// sites with a vanishing coordinate).
enum class DefectShape { Point, Separable };

/// Closed-form linear bound state: profile x_n = A eta^{|n|} with
/// eta in (0,1) on the attractive branch and eta in (-1,0) (staggering,
/// sign (-1)^{|n|}) on the repulsive branch.
struct DefectMode {
    double eta = 0.0;
    double omega = 0.0;
    double amplitude = 1.0;
    bool staggering = false;
    int dim = 1;
};

inline DefectMode defect_mode(const ModelParams& p, DefectBranch branch,
                              double amplitude = 1.0) {
    require_valid(p);
    if (p.v0 == 0.0)
        throw std::invalid_argument(
            "defect_mode: V0 = 0 carries no bound state (mode delocalizes)");
    if (branch == DefectBranch::Attractive && p.v0 < 0.0)
        throw std::invalid_argument("defect_mode: Attractive branch needs V0 > 0");
    if (branch == DefectBranch::Repulsive && p.v0 > 0.0)
        throw std::invalid_argument("defect_mode: Repulsive branch needs V0 < 0");
    if (!(amplitude > 0.0)) throw std::invalid_argument("defect_mode: amplitude must be > 0");

    const double d = static_cast<double>(p.dim);
    const double S = std::sqrt(p.v0 * p.v0 + 4.0 * d * d);
    DefectMode m;
    m.dim = p.dim;
    m.amplitude = amplitude;
    if (branch == DefectBranch::Attractive) {
        m.eta = (S - p.v0) / (2.0 * d);
        m.omega = 2.0 * d - S;
        m.staggering = false;
    } else {
        m.eta = -(S + p.v0) / (2.0 * d);
        m.omega = 2.0 * d + S;
        m.staggering = true;
    }
    return m;
}

/// Conserved l2 mass of the infinite-lattice profile,
/// P = A^2 ((1+eta^2)/(1-eta^2))^d by direct summation of A^2 eta^{2|n|}.
inline double mode_mass(const DefectMode& m) {
    const double e2 = m.eta * m.eta;
    return m.amplitude * m.amplitude * std::pow((1.0 + e2) / (1.0 - e2), m.dim);
}

/// Amplitude that normalizes the infinite-lattice profile to unit mass.
inline double unit_mass_amplitude(double eta, int dim) {
    const double e2 = eta * eta;
    return std::pow((1.0 - e2) / (1.0 + e2), 0.5 * dim);
}

inline RealField materialize(const DefectMode& m, int radius, Boundary bc) {
    Box b(m.dim, radius);
    RealField f(b, bc);
    const double ae = std::abs(m.eta);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const int l = b.l1(i);
        double v = m.amplitude * std::pow(ae, l);
        if (m.eta < 0.0 && (l % 2)) v = -v;
        f.values[i] = v;
    }
    return f;
}

/// Diagonal of the defect potential on a box.
inline std::vector<double> defect_diagonal(const Box& b, double v0, DefectShape shape) {
    std::vector<double> diag(b.size(), 0.0);
    if (shape == DefectShape::Point) {
        diag[b.origin()] = v0;
        return diag;
    }
    const double per_plane = v0 / b.dim();
    for (std::size_t i = 0; i < b.size(); ++i) {
        int k = 0;
        for (int j = 0; j < b.dim(); ++j)
            if (b.coord(i, j) == 0) ++k;
        diag[i] = per_plane * k;
    }
    return diag;
}

/// Matrix-free y = (-Delta - V) x on a Dirichlet box, with precomputed
/// neighbor tables. Eigenvalues omega of this operator solve the stationary
/// system omega x + Delta x + V x = 0.
class DefectOperator {
public:
    DefectOperator(const Box& b, double v0, DefectShape shape)
        : box_(b), diag_(defect_diagonal(b, v0, shape)) {
        const int d = b.dim();
        const std::size_t n = b.size();
        nbr_.assign(static_cast<std::size_t>(2 * d) * n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                const int c = b.coord(i, j);
                if (c < b.radius())
                    nbr_[(2 * j) * n + i] = static_cast<std::ptrdiff_t>(i + b.stride(j));
                if (c > -b.radius())
                    nbr_[(2 * j + 1) * n + i] = static_cast<std::ptrdiff_t>(i - b.stride(j));
            }
        }
    }

    const Box& box() const { return box_; }

    void operator()(const std::vector<double>& x, std::vector<double>& y) const {
        const int d = box_.dim();
        const std::size_t n = box_.size();
        const double two_d = 2.0 * d;
        for (std::size_t i = 0; i < n; ++i) y[i] = (two_d - diag_[i]) * x[i];
        for (int j = 0; j < 2 * d; ++j) {
            const std::ptrdiff_t* nb = nbr_.data() + static_cast<std::size_t>(j) * n;
            for (std::size_t i = 0; i < n; ++i)
                if (nb[i] >= 0) y[i] -= x[static_cast<std::size_t>(nb[i])];
        }
    }

private:
    Box box_;
    std::vector<double> diag_;
    std::vector<std::ptrdiff_t> nbr_;
};

enum class EigenCheckStatus { Converged, NotConverged, NoEigenvalueOutsideBand };

struct EigenCheck {
    double omega_closed = 0.0;
    double omega_num = 0.0;
    double mismatch = 0.0;
    double eigen_residual = 0.0;
    int iterations = 0;
    EigenCheckStatus status = EigenCheckStatus::NotConverged;
    RealField vector;

    explicit EigenCheck(RealField v) : vector(std::move(v)) {}
};

/// Extremal eigenpair of -Delta - V on the Dirichlet box via shifted inverse
/// iteration, compared against the closed-form eigenvalue. The branch is
/// picked by the sign of V0 (below the band for V0 > 0, above for V0 < 0).
inline EigenCheck eigensolve_check(const ModelParams& p, int radius,
                                   DefectShape shape = DefectShape::Point,
                                   double tol = 1e-12, int max_outer = 200) {
    require_valid(p);
    if (p.v0 == 0.0) throw std::invalid_argument("eigensolve_check: V0 must be nonzero");
    if (radius < 20) throw std::invalid_argument("eigensolve_check: radius must be >= 20");

    const auto branch = p.v0 > 0.0 ? DefectBranch::Attractive : DefectBranch::Repulsive;
    const DefectMode m = defect_mode(p, branch);
    Box b(p.dim, radius);
    DefectOperator op(b, p.v0, shape);

    const double shift = (branch == DefectBranch::Attractive) ? m.omega - 1e-3 : m.omega + 1e-3;
    auto init = materialize(m, radius, Boundary::Dirichlet);
    auto pair = shifted_inverse_iteration(op, std::move(init.values), shift, tol, max_outer);

    EigenCheck out(RealField(b, Boundary::Dirichlet, std::move(pair.vector)));
    out.omega_closed = m.omega;
    out.omega_num = pair.value;
    out.mismatch = std::abs(pair.value - m.omega);
    out.eigen_residual = pair.residual;
    out.iterations = pair.iterations;
    if (pair.status != EigenStatus::Converged) {
        out.status = EigenCheckStatus::NotConverged;
        return out;
    }
    const double band_top = 4.0 * p.dim;
    const bool outside = (pair.value < -1e-8) || (pair.value > band_top + 1e-8);
    out.status = outside ? EigenCheckStatus::Converged
                         : EigenCheckStatus::NoEigenvalueOutsideBand;
    return out;
}

/// Relative l2 residual of the linear stationary system
/// omega x + Delta x + V x = 0 at the closed-form mode on a Dirichlet box.
inline double stationary_residual(const DefectMode& m, const ModelParams& p, int radius,
                                  DefectShape shape) {
    auto x = materialize(m, radius, Boundary::Dirichlet);
    DefectOperator op(x.box, p.v0, shape);
    std::vector<double> lx(x.size());
    op(x.values, lx);
    double rs = 0.0, xs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = lx[i] - m.omega * x.values[i];
        rs += r * r;
        xs += x.values[i] * x.values[i];
    }
    return std::sqrt(rs / xs);
}

}  // namespace dnls
