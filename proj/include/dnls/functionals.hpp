#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "dnls/field.hpp"

namespace dnls {

/// Neumaier compensated accumulator. All functionals below sum through this
/// so conservation diagnostics sit near machine epsilon instead of drifting
/// with the site count.
class KahanSum {
public:
    void add(double x) {
        const double t = s_ + x;
        if (std::abs(s_) >= std::abs(x))
            c_ += (s_ - t) + x;
        else
            c_ += (x - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

inline double abs2(double x) { return x * x; }
inline double abs2(const std::complex<double>& z) { return std::norm(z); }

namespace detail {

/// Forward neighbor of site i along `axis` under the field's boundary
/// policy. Returns false when the neighbor reads as zero (Dirichlet edge).
template <class Scalar>
inline bool forward_neighbor(const BasicField<Scalar>& f, std::size_t i, int axis,
                             std::size_t& out) {
    const Box& b = f.box;
    const int c = b.coord(i, axis);
    if (c == b.radius()) {
        if (f.boundary == Boundary::Dirichlet) return false;
        out = i - static_cast<std::size_t>(2 * b.radius()) * b.stride(axis);
        return true;
    }
    out = i + b.stride(axis);
    return true;
}

template <class Scalar>
inline bool backward_neighbor(const BasicField<Scalar>& f, std::size_t i, int axis,
                              std::size_t& out) {
    const Box& b = f.box;
    const int c = b.coord(i, axis);
    if (c == -b.radius()) {
        if (f.boundary == Boundary::Dirichlet) return false;
        out = i + static_cast<std::size_t>(2 * b.radius()) * b.stride(axis);
        return true;
    }
    out = i - b.stride(axis);
    return true;
}

}  // namespace detail

/// Discrete Laplacian (Delta f)_n = sum_j (f_{n+j} - 2 f_n + f_{n-j});
/// out-of-box neighbors read 0 under Dirichlet and wrap under Periodic.
template <class Scalar>
BasicField<Scalar> laplacian(const BasicField<Scalar>& f) {
    BasicField<Scalar> g(f.box, f.boundary);
    const int d = f.box.dim();
    for (std::size_t i = 0; i < f.size(); ++i) {
        Scalar acc = -2.0 * static_cast<double>(d) * f.values[i];
        for (int j = 0; j < d; ++j) {
            std::size_t k;
            if (detail::forward_neighbor(f, i, j, k)) acc += f.values[k];
            if (detail::backward_neighbor(f, i, j, k)) acc += f.values[k];
        }
        g.values[i] = acc;
    }
    return g;
}

/// Point-defect action (V_delta f)_n = V0 * delta_{n,0} * f_n.
template <class Scalar>
BasicField<Scalar> apply_delta(const BasicField<Scalar>& f, const ModelParams& p) {
    require_valid(p);
    BasicField<Scalar> g(f.box, f.boundary);
    g.values[f.box.origin()] = p.v0 * f.values[f.box.origin()];
    return g;
}

/// Mass nu = sum_n |f_n|^2 (the conserved l2 norm squared).
template <class Scalar>
double mass(const BasicField<Scalar>& f) {
    KahanSum s;
    for (const auto& v : f.values) s.add(abs2(v));
    return s.value();
}

/// Bond-sum gradient term sum_n sum_j |f_{n+j} - f_n|^2, one bond per axis
/// per site. Under Dirichlet both boundary bonds of every lattice line are
/// counted, which keeps the identity <-Delta f, f> = ||grad f||^2 exact.
template <class Scalar>
double gradient_sq(const BasicField<Scalar>& f) {
    KahanSum s;
    const int d = f.box.dim();
    const bool dirichlet = (f.boundary == Boundary::Dirichlet);
    for (int j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            std::size_t k;
            if (detail::forward_neighbor(f, i, j, k))
                s.add(abs2(f.values[k] - f.values[i]));
            else
                s.add(abs2(f.values[i]));  // bond into the upper Dirichlet ghost
            if (dirichlet && f.box.coord(i, j) == -f.box.radius())
                s.add(abs2(f.values[i]));  // bond from the lower Dirichlet ghost
        }
    }
    return s.value();
}

/// sum_n |f_n|^{2(sigma+1)}.
template <class Scalar>
double nonlinear_sum(const BasicField<Scalar>& f, double sigma) {
    KahanSum s;
    for (const auto& v : f.values) {
        const double m2 = abs2(v);
        if (m2 > 0.0) s.add(std::pow(m2, sigma + 1.0));
    }
    return s.value();
}

/// Hamiltonian H = ||grad f||^2 - gamma/(sigma+1) sum |f|^{2(sigma+1)} - V0 |f_0|^2.
template <class Scalar>
double hamiltonian(const BasicField<Scalar>& f, const ModelParams& p) {
    require_valid(p);
    return gradient_sq(f) - p.gamma / (p.sigma + 1.0) * nonlinear_sum(f, p.sigma) -
           p.v0 * abs2(f.values[f.box.origin()]);
}

/// Action J = 1/2 ||grad f||^2 - omega/2 ||f||^2
///            - gamma/(2 sigma + 2) ||f||_{2s+2}^{2s+2} - V0/2 |f_0|^2.
template <class Scalar>
double action(const BasicField<Scalar>& f, double omega, const ModelParams& p) {
    require_valid(p);
    return 0.5 * gradient_sq(f) - 0.5 * omega * mass(f) -
           p.gamma / (2.0 * p.sigma + 2.0) * nonlinear_sum(f, p.sigma) -
           0.5 * p.v0 * abs2(f.values[f.box.origin()]);
}

/// Nehari functional I = <J'(f), f>
///   = ||grad f||^2 - omega ||f||^2 - gamma ||f||_{2s+2}^{2s+2} - V0 |f_0|^2.
template <class Scalar>
double nehari(const BasicField<Scalar>& f, double omega, const ModelParams& p) {
    require_valid(p);
    return gradient_sq(f) - omega * mass(f) - p.gamma * nonlinear_sum(f, p.sigma) -
           p.v0 * abs2(f.values[f.box.origin()]);
}

/// lp norm; pexp may be std::numeric_limits<double>::infinity() for the max
/// norm. Scaled by the max modulus to dodge overflow/underflow of |f|^p.
template <class Scalar>
double lp_norm(const BasicField<Scalar>& f, double pexp) {
    if (std::isinf(pexp)) {
        double m = 0.0;
        for (const auto& v : f.values) m = std::max(m, std::sqrt(abs2(v)));
        return m;
    }
    if (!(pexp >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or inf");
    double m = 0.0;
    for (const auto& v : f.values) m = std::max(m, std::sqrt(abs2(v)));
    if (m == 0.0) return 0.0;
    KahanSum s;
    for (const auto& v : f.values) {
        const double r = std::sqrt(abs2(v)) / m;
        if (r > 0.0) s.add(std::pow(r, pexp));
    }
    return m * std::pow(s.value(), 1.0 / pexp);
}

/// Weighted norm sqrt(sum exp(beta |n|) |f_n|^2), evaluated in log space so
/// large beta*R cannot overflow before cancellation against decaying |f_n|.
template <class Scalar>
double weighted_l2(const BasicField<Scalar>& f, const WeightSpec& w) {
    require_valid(w);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double m2 = abs2(f.values[i]);
        if (m2 == 0.0) continue;
        top = std::max(top, w.beta * f.box.l1(i) + std::log(m2));
    }
    if (std::isinf(top)) return 0.0;
    KahanSum s;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double m2 = abs2(f.values[i]);
        if (m2 == 0.0) continue;
        s.add(std::exp(w.beta * f.box.l1(i) + std::log(m2) - top));
    }
    return std::exp(0.5 * (top + std::log(s.value())));
}

/// Real inner product Re<f, g>.
template <class Scalar>
double real_dot(const BasicField<Scalar>& f, const BasicField<Scalar>& g) {
    if (f.box != g.box) throw std::invalid_argument("real_dot: box mismatch");
    KahanSum s;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if constexpr (std::is_same_v<Scalar, double>)
            s.add(f.values[i] * g.values[i]);
        else
            s.add((std::conj(f.values[i]) * g.values[i]).real());
    }
    return s.value();
}

inline std::complex<double> cdot(const LatticeField& f, const LatticeField& g) {
    if (f.box != g.box) throw std::invalid_argument("cdot: box mismatch");
    KahanSum re, im;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto z = std::conj(f.values[i]) * g.values[i];
        re.add(z.real());
        im.add(z.imag());
    }
    return {re.value(), im.value()};
}

}  // namespace dnls
