#pragma once

// Brute-force reference implementations used as oracles by the test suites.
// These are written directly from the defining sums, independent of the
// library code paths they check: plain accumulation, no compensation, and
// explicit zero-extension of fields beyond the box.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "dnls/field.hpp"

namespace oracle {

using dnls::BasicField;
using dnls::Boundary;
using dnls::Box;

template <class Scalar>
Scalar value_at(const BasicField<Scalar>& f, std::vector<int> n) {
    const int R = f.box.radius();
    if (f.boundary == Boundary::Periodic) {
        const int side = 2 * R + 1;
        for (auto& c : n) {
            c = (c + R) % side;
            if (c < 0) c += side;
            c -= R;
        }
        return f.at(n);
    }
    for (int c : n)
        if (c < -R || c > R) return Scalar(0);
    return f.at(n);
}

inline double mod2(double x) { return x * x; }
inline double mod2(const std::complex<double>& z) {
    return z.real() * z.real() + z.imag() * z.imag();
}

template <class Scalar>
double naive_mass(const BasicField<Scalar>& f) {
    double s = 0;
    for (const auto& v : f.values) s += mod2(v);
    return s;
}

// One bond per axis per site over the (zero-extended or wrapped) lattice.
template <class Scalar>
double naive_gradient_sq(const BasicField<Scalar>& f) {
    const int d = f.box.dim();
    const int R = f.box.radius();
    const int lo = (f.boundary == Boundary::Dirichlet) ? -R - 1 : -R;
    const int hi = R;  // bonds (n, n+e_j); for periodic, n_j=R wraps
    double s = 0;
    std::vector<int> n(static_cast<std::size_t>(d), lo);
    const int hi_other = (f.boundary == Boundary::Dirichlet) ? R + 1 : R;
    while (true) {
        for (int j = 0; j < d; ++j) {
            if (n[static_cast<std::size_t>(j)] > hi) continue;
            auto m = n;
            m[static_cast<std::size_t>(j)] += 1;
            s += mod2(value_at(f, m) - value_at(f, n));
        }
        int j = d - 1;
        while (j >= 0) {
            auto& c = n[static_cast<std::size_t>(j)];
            if (c < hi_other) {
                ++c;
                break;
            }
            c = lo;
            --j;
        }
        if (j < 0) break;
    }
    return s;
}

template <class Scalar>
BasicField<Scalar> naive_laplacian(const BasicField<Scalar>& f) {
    BasicField<Scalar> g(f.box, f.boundary);
    const int d = f.box.dim();
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto n = f.box.coords(i);
        Scalar acc(0);
        for (int j = 0; j < d; ++j) {
            auto up = n, dn = n;
            up[static_cast<std::size_t>(j)] += 1;
            dn[static_cast<std::size_t>(j)] -= 1;
            acc += value_at(f, up) - 2.0 * f.values[i] + value_at(f, dn);
        }
        g.values[i] = acc;
    }
    return g;
}

template <class Scalar>
double naive_nonlinear_sum(const BasicField<Scalar>& f, double sigma) {
    double s = 0;
    for (const auto& v : f.values) s += std::pow(mod2(v), sigma + 1.0);
    return s;
}

template <class Scalar>
double naive_hamiltonian(const BasicField<Scalar>& f, const dnls::ModelParams& p) {
    return naive_gradient_sq(f) - p.gamma / (p.sigma + 1.0) * naive_nonlinear_sum(f, p.sigma) -
           p.v0 * mod2(f.values[f.box.origin()]);
}

template <class Scalar>
double naive_action(const BasicField<Scalar>& f, double omega, const dnls::ModelParams& p) {
    return 0.5 * naive_gradient_sq(f) - 0.5 * omega * naive_mass(f) -
           p.gamma / (2.0 * p.sigma + 2.0) * naive_nonlinear_sum(f, p.sigma) -
           0.5 * p.v0 * mod2(f.values[f.box.origin()]);
}

template <class Scalar>
double naive_nehari(const BasicField<Scalar>& f, double omega, const dnls::ModelParams& p) {
    return naive_gradient_sq(f) - omega * naive_mass(f) -
           p.gamma * naive_nonlinear_sum(f, p.sigma) - p.v0 * mod2(f.values[f.box.origin()]);
}

inline dnls::LatticeField random_complex_field(const Box& b, Boundary bc, std::uint64_t seed,
                                               double scale = 1.0) {
    dnls::LatticeField f(b, bc);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    for (auto& v : f.values) v = {g(rng), g(rng)};
    return f;
}

inline dnls::RealField random_real_field(const Box& b, Boundary bc, std::uint64_t seed,
                                         double scale = 1.0) {
    dnls::RealField f(b, bc);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    for (auto& v : f.values) v = g(rng);
    return f;
}

// Localized random field: gaussian amplitudes damped by exp(-|n|/2).
inline dnls::RealField random_localized_field(const Box& b, Boundary bc, std::uint64_t seed) {
    dnls::RealField f = random_real_field(b, bc, seed);
    for (std::size_t i = 0; i < f.size(); ++i)
        f.values[i] *= std::exp(-0.5 * f.box.l1(i));
    return f;
}

}  // namespace oracle
