#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "dnls/field.hpp"
#include "dnls/functionals.hpp"
#include "oracle_helpers.hpp"

using namespace dnls;
using Catch::Approx;
using std::complex;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

LatticeField geometric_field(const Box& b, Boundary bc, double eta) {
    LatticeField f(b, bc);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = std::pow(eta, b.l1(i));
    return f;
}
}  // namespace

TEST_CASE("laplacian stencil on a unit delta") {
    Box b(1, 4);
    auto f = LatticeField::delta(b, Boundary::Dirichlet);
    auto g = laplacian(f);
    CHECK(g.at({0}).real() == Approx(-2.0));
    CHECK(g.at({1}).real() == Approx(1.0));
    CHECK(g.at({-1}).real() == Approx(1.0));
    CHECK(std::abs(g.at({2})) == 0.0);
    CHECK(std::abs(g.at({-3})) == 0.0);
}

TEST_CASE("laplacian annihilates constants on a periodic box") {
    for (int d : {1, 2}) {
        Box b(d, 3);
        LatticeField f(b, Boundary::Periodic);
        for (auto& v : f.values) v = complex<double>(0.7, -0.2);
        auto g = laplacian(f);
        for (const auto& v : g.values) CHECK(std::abs(v) < 1e-15);
    }
}

TEST_CASE("periodic plane waves are laplacian eigenfields") {
    const int R = 6;
    Box b(1, R);
    const int N = 2 * R + 1;
    for (int k : {1, 3, 5}) {
        const double q = 2.0 * std::numbers::pi * k / N;
        LatticeField f(b, Boundary::Periodic);
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double phase = q * b.coord(i, 0);
            f.values[i] = std::polar(1.0, phase);
        }
        auto g = laplacian(f);
        const double lam = -4.0 * std::pow(std::sin(q / 2.0), 2);
        for (std::size_t i = 0; i < f.size(); ++i)
            CHECK(std::abs(g.values[i] - lam * f.values[i]) < 1e-13);
    }
}

TEST_CASE("apply_delta acts as a rank-one multiplication") {
    Box b(1, 3);
    ModelParams p{1, 1.0, 1.0, 2.0};
    auto f = LatticeField::delta(b, Boundary::Dirichlet);
    auto g = apply_delta(f, p);
    CHECK(g.at({0}).real() == Approx(2.0));
    CHECK(mass(g) == Approx(4.0));

    p.v0 = 0.0;
    auto z = apply_delta(f, p);
    CHECK(mass(z) == 0.0);

    p.v0 = -1.5;
    LatticeField h(b, Boundary::Dirichlet);
    h.at({0}) = complex<double>(0.0, 2.0);
    auto w = apply_delta(h, p);
    CHECK(w.at({0}).real() == Approx(0.0));
    CHECK(w.at({0}).imag() == Approx(-3.0));
}

TEST_CASE("mass of geometric profile approaches the series limit") {
    auto f = geometric_field(Box(1, 50), Boundary::Dirichlet, 0.5);
    const double limit = (1.0 + 0.25) / (1.0 - 0.25);
    CHECK(mass(f) == Approx(limit).epsilon(1e-12));
    // monotone in R
    auto f2 = geometric_field(Box(1, 10), Boundary::Dirichlet, 0.5);
    CHECK(mass(f2) < mass(f));
    CHECK(mass(LatticeField::delta(Box(1, 2), Boundary::Dirichlet)) == Approx(1.0));
}

TEST_CASE("mass is homogeneous of degree two") {
    auto f = oracle::random_complex_field(Box(2, 4), Boundary::Dirichlet, 11);
    auto g = f;
    for (auto& v : g.values) v *= 2.0;
    CHECK(mass(g) == Approx(4.0 * mass(f)).epsilon(1e-13));
}

TEST_CASE("hamiltonian on a unit delta") {
    Box b(1, 5);
    auto f = LatticeField::delta(b, Boundary::Dirichlet);
    ModelParams p{1, 1.0, 1.0, 0.0};
    CHECK(hamiltonian(f, p) == Approx(1.5));
    p.v0 = 1.0;
    CHECK(hamiltonian(f, p) == Approx(0.5));
    LatticeField z(b, Boundary::Dirichlet);
    CHECK(hamiltonian(z, p) == 0.0);
}

TEST_CASE("action on a unit delta and J = H/2 - (omega/2) nu identity") {
    Box b(1, 5);
    auto f = LatticeField::delta(b, Boundary::Dirichlet);
    ModelParams p{1, 1.0, 1.0, 0.0};
    CHECK(action(f, -1.0, p) == Approx(1.25));
    LatticeField z(b, Boundary::Dirichlet);
    CHECK(action(z, -1.0, p) == 0.0);

    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto u = oracle::random_complex_field(Box(1, 8), Boundary::Dirichlet, seed);
        ModelParams q{1, 0.8, 1.5, -0.4};
        const double omega = -0.7;
        CHECK(action(u, omega, q) ==
              Approx(0.5 * hamiltonian(u, q) - 0.5 * omega * mass(u)).epsilon(1e-12));
    }
}

TEST_CASE("nehari functional on a unit delta") {
    Box b(1, 5);
    auto f = LatticeField::delta(b, Boundary::Dirichlet);
    ModelParams p{1, 1.0, 1.0, 0.0};
    CHECK(nehari(f, -1.0, p) == Approx(2.0));
    LatticeField z(b, Boundary::Dirichlet);
    CHECK(nehari(z, -1.0, p) == 0.0);
}

TEST_CASE("functionals agree with direct-summation oracles") {
    for (int d : {1, 2, 3}) {
        for (auto bc : {Boundary::Dirichlet, Boundary::Periodic}) {
            Box b(d, d == 3 ? 2 : 4);
            auto f = oracle::random_complex_field(b, bc, 100 + d);
            ModelParams p{d, 1.3, 0.8, -0.6};
            const double omega = -1.1;
            CHECK(mass(f) == Approx(oracle::naive_mass(f)).epsilon(1e-12));
            CHECK(gradient_sq(f) == Approx(oracle::naive_gradient_sq(f)).epsilon(1e-12));
            CHECK(hamiltonian(f, p) == Approx(oracle::naive_hamiltonian(f, p)).epsilon(1e-12));
            CHECK(action(f, omega, p) ==
                  Approx(oracle::naive_action(f, omega, p)).epsilon(1e-12));
            CHECK(nehari(f, omega, p) ==
                  Approx(oracle::naive_nehari(f, omega, p)).epsilon(1e-12));
            auto L = laplacian(f);
            auto Lref = oracle::naive_laplacian(f);
            for (std::size_t i = 0; i < f.size(); ++i)
                CHECK(std::abs(L.values[i] - Lref.values[i]) < 1e-13);
        }
    }
}

TEST_CASE("gauge invariance of mass, hamiltonian, action, nehari") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> th(0.0, 2.0 * std::numbers::pi);
    for (int rep = 0; rep < 5; ++rep) {
        auto f = oracle::random_complex_field(Box(1, 10), Boundary::Dirichlet, 50 + rep);
        auto g = f;
        const auto phase = std::polar(1.0, th(rng));
        for (auto& v : g.values) v *= phase;
        ModelParams p{1, 1.0, 1.2, 0.7};
        CHECK(mass(g) == Approx(mass(f)).epsilon(1e-12));
        CHECK(hamiltonian(g, p) == Approx(hamiltonian(f, p)).margin(1e-12));
        CHECK(action(g, -0.9, p) == Approx(action(f, -0.9, p)).margin(1e-12));
        CHECK(nehari(g, -0.9, p) == Approx(nehari(f, -0.9, p)).margin(1e-12));
    }
}

TEST_CASE("norm homogeneity in the nonlinear term") {
    auto f = oracle::random_complex_field(Box(1, 6), Boundary::Dirichlet, 13);
    const double sigma = 1.3, s = 1.7;
    auto g = f;
    for (auto& v : g.values) v *= s;
    CHECK(nonlinear_sum(g, sigma) ==
          Approx(std::pow(s, 2.0 * sigma + 2.0) * nonlinear_sum(f, sigma)).epsilon(1e-12));
}

TEST_CASE("nehari equals the directional derivative of the action along f") {
    ModelParams p{1, 1.0, 1.0, 0.5};
    const double omega = -1.2;
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        auto f = oracle::random_complex_field(Box(1, 8), Boundary::Dirichlet, seed, 0.5);
        const double h = 1e-6;
        auto fp = f, fm = f;
        for (auto& v : fp.values) v *= (1.0 + h);
        for (auto& v : fm.values) v *= (1.0 - h);
        const double fd = (action(fp, omega, p) - action(fm, omega, p)) / (2.0 * h);
        const double I = nehari(f, omega, p);
        CHECK(I == Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("laplacian is symmetric and has spectrum in [-4d, 0]") {
    for (auto bc : {Boundary::Dirichlet, Boundary::Periodic}) {
        for (int d : {1, 2}) {
            Box b(d, 4);
            auto f = oracle::random_complex_field(b, bc, 31 + d);
            auto g = oracle::random_complex_field(b, bc, 41 + d);
            auto Lf = laplacian(f);
            auto Lg = laplacian(g);
            const auto a1 = cdot(Lf, g);
            const auto a2 = cdot(f, Lg);
            CHECK(std::abs(a1 - a2) < 1e-12 * std::sqrt(mass(f) * mass(g)));

            const double quad = -real_dot(Lf, f);
            CHECK(quad >= -1e-12);
            CHECK(quad <= 4.0 * d * mass(f) * (1.0 + 1e-12));
            // the quadratic form equals the bond sum
            CHECK(quad == Approx(gradient_sq(f)).epsilon(1e-12));
        }
    }
}

TEST_CASE("lp norms: delta, two-site, monotonicity, rejection") {
    Box b(1, 4);
    auto f = LatticeField::delta(b, Boundary::Dirichlet);
    for (double p : {1.0, 2.0, 4.0, kInf}) CHECK(lp_norm(f, p) == Approx(1.0));

    LatticeField two(b, Boundary::Dirichlet);
    two.at({0}) = 1.0;
    two.at({2}) = std::polar(1.0, 0.3);
    CHECK(lp_norm(two, 2.0) == Approx(std::sqrt(2.0)));

    auto r = oracle::random_complex_field(b, Boundary::Dirichlet, 77);
    CHECK(lp_norm(r, 4.0) <= lp_norm(r, 2.0) * (1.0 + 1e-12));
    CHECK(lp_norm(r, kInf) <= lp_norm(r, 6.0) * (1.0 + 1e-12));
    CHECK_THROWS_AS(lp_norm(r, 0.5), std::invalid_argument);
}

TEST_CASE("weighted_l2: beta=0 recovers l2, delta is weight-free") {
    auto f = oracle::random_complex_field(Box(1, 6), Boundary::Dirichlet, 5);
    CHECK(weighted_l2(f, {0.0}) == Approx(std::sqrt(mass(f))).epsilon(1e-12));
    auto d = LatticeField::delta(Box(2, 3), Boundary::Dirichlet);
    CHECK(weighted_l2(d, {3.7}) == Approx(1.0));
}

TEST_CASE("weighted_l2 of an exponential profile matches the series") {
    const double alpha = 0.8, beta = 1.0;  // beta < 2 alpha
    const int R = 40;
    Box b(1, R);
    LatticeField f(b, Boundary::Dirichlet);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = std::exp(-alpha * b.l1(i));
    // sum exp((beta - 2 alpha)|n|) = (1 + r) / (1 - r), r = exp(beta - 2 alpha)
    const double r = std::exp(beta - 2.0 * alpha);
    const double closed = std::sqrt((1.0 + r) / (1.0 - r) - std::pow(r, R + 1) *
                                        (2.0 / (1.0 - r)));
    const double got = weighted_l2(f, {beta});
    CHECK(got == Approx(closed).epsilon(1e-10));
}

TEST_CASE("weighted_l2 stays finite when beta*R would overflow naively") {
    const int R = 400;
    Box b(1, R);
    LatticeField f(b, Boundary::Dirichlet);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = std::exp(-3.0 * b.l1(i));
    const double beta = 4.0;  // beta*R = 1600; exp(1600) overflows, the norm must not
    const double got = weighted_l2(f, {beta});
    CHECK(std::isfinite(got));
    const double r = std::exp(beta - 6.0);
    CHECK(got == Approx(std::sqrt((1.0 + r) / (1.0 - r))).epsilon(1e-10));
}

TEST_CASE("field snapshot invariants: box size and finiteness") {
    Box b(2, 3);
    CHECK(b.size() == 49);
    CHECK(b.l1(b.origin()) == 0);
    CHECK(b.index({0, 0}) == b.origin());
    CHECK(b.coords(b.origin()) == std::vector<int>{0, 0});
    auto f = oracle::random_complex_field(b, Boundary::Dirichlet, 3);
    CHECK(f.all_finite());
    f.values[5] = complex<double>(std::nan(""), 0.0);
    CHECK(!f.all_finite());
}
