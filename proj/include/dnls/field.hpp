#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dnls {

enum class Boundary { Dirichlet, Periodic };

/// Truncated lattice box {-R..R}^d with row-major storage and the origin at
/// the center. Sites are addressed either by a flat index or by integer
/// coordinates n with n_j in [-R, R].
class Box {
public:
    Box(int dim, int radius) : dim_(dim), radius_(radius) {
        if (dim < 1 || dim > 8)
            throw std::invalid_argument("Box: dim must be in [1,8]");
        if (radius < 1)
            throw std::invalid_argument("Box: radius must be >= 1");
        side_ = 2 * radius + 1;
        stride_.assign(static_cast<std::size_t>(dim), 1);
        std::size_t total = 1;
        for (int j = dim - 1; j >= 0; --j) {
            stride_[static_cast<std::size_t>(j)] = total;
            const std::size_t next = total * static_cast<std::size_t>(side_);
            if (next / static_cast<std::size_t>(side_) != total)
                throw std::invalid_argument("Box: size overflow");
            total = next;
        }
        size_ = total;
    }

    int dim() const { return dim_; }
    int radius() const { return radius_; }
    int side() const { return side_; }
    std::size_t size() const { return size_; }
    std::size_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }

    /// Coordinate of site i along `axis`, in [-R, R].
    int coord(std::size_t i, int axis) const {
        return static_cast<int>((i / stride_[static_cast<std::size_t>(axis)]) %
                                static_cast<std::size_t>(side_)) -
               radius_;
    }

    std::size_t index(const std::vector<int>& n) const {
        if (static_cast<int>(n.size()) != dim_)
            throw std::invalid_argument("Box::index: coordinate rank mismatch");
        std::size_t i = 0;
        for (int j = 0; j < dim_; ++j) {
            const int c = n[static_cast<std::size_t>(j)];
            if (c < -radius_ || c > radius_)
                throw std::out_of_range("Box::index: coordinate outside box");
            i += static_cast<std::size_t>(c + radius_) * stride_[static_cast<std::size_t>(j)];
        }
        return i;
    }

    std::vector<int> coords(std::size_t i) const {
        std::vector<int> n(static_cast<std::size_t>(dim_));
        for (int j = 0; j < dim_; ++j) n[static_cast<std::size_t>(j)] = coord(i, j);
        return n;
    }

    /// Site norm |n| = sum_j |n_j|.
    int l1(std::size_t i) const {
        int s = 0;
        for (int j = 0; j < dim_; ++j) s += std::abs(coord(i, j));
        return s;
    }

    std::size_t origin() const { return (size_ - 1) / 2; }

    bool operator==(const Box& o) const { return dim_ == o.dim_ && radius_ == o.radius_; }
    bool operator!=(const Box& o) const { return !(*this == o); }

private:
    int dim_;
    int radius_;
    int side_;
    std::size_t size_;
    std::vector<std::size_t> stride_;
};

/// Field of per-site amplitudes on a Box. Scalar is double for real
/// stationary profiles and std::complex<double> for wavefunctions.
template <class Scalar>
struct BasicField {
    Box box;
    Boundary boundary = Boundary::Dirichlet;
    std::vector<Scalar> values;

    BasicField(const Box& b, Boundary bc)
        : box(b), boundary(bc), values(b.size(), Scalar(0)) {}
    BasicField(const Box& b, Boundary bc, std::vector<Scalar> v)
        : box(b), boundary(bc), values(std::move(v)) {
        if (values.size() != box.size())
            throw std::invalid_argument("BasicField: value count != box size");
    }

    Scalar& operator[](std::size_t i) { return values[i]; }
    const Scalar& operator[](std::size_t i) const { return values[i]; }

    Scalar& at(const std::vector<int>& n) { return values[box.index(n)]; }
    const Scalar& at(const std::vector<int>& n) const { return values[box.index(n)]; }

    Scalar& origin_value() { return values[box.origin()]; }
    const Scalar& origin_value() const { return values[box.origin()]; }

    std::size_t size() const { return values.size(); }

    static BasicField delta(const Box& b, Boundary bc, Scalar amp = Scalar(1)) {
        BasicField f(b, bc);
        f.values[b.origin()] = amp;
        return f;
    }

    bool all_finite() const {
        for (const auto& v : values)
            if (!is_finite_scalar(v)) return false;
        return true;
    }

private:
    static bool is_finite_scalar(double x) { return std::isfinite(x); }
    static bool is_finite_scalar(const std::complex<double>& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    }
};

using LatticeField = BasicField<std::complex<double>>;
using RealField = BasicField<double>;

inline LatticeField to_complex(const RealField& f) {
    LatticeField g(f.box, f.boundary);
    for (std::size_t i = 0; i < f.size(); ++i) g.values[i] = f.values[i];
    return g;
}

inline RealField real_part(const LatticeField& f) {
    RealField g(f.box, f.boundary);
    for (std::size_t i = 0; i < f.size(); ++i) g.values[i] = f.values[i].real();
    return g;
}

/// Equation coefficients of the delta-defect lattice model. The hopping
/// coefficient kappa is fixed to 1; gamma > 0 is focusing, gamma < 0
/// defocusing; v0 > 0 is an attractive point defect, v0 < 0 repulsive.
struct ModelParams {
    int dim = 1;
    double gamma = 1.0;
    double sigma = 1.0;
    double v0 = 0.0;
};

inline void require_valid(const ModelParams& p) {
    if (p.dim < 1) throw std::invalid_argument("ModelParams: dim must be >= 1");
    if (!(p.sigma > 0.0)) throw std::invalid_argument("ModelParams: sigma must be > 0");
    if (!std::isfinite(p.gamma) || !std::isfinite(p.v0))
        throw std::invalid_argument("ModelParams: non-finite coefficient");
}

/// Exponential weight w_n = exp(beta*|n|) defining the weighted l2 space.
struct WeightSpec {
    double beta = 0.0;
};

inline void require_valid(const WeightSpec& w) {
    if (!(w.beta >= 0.0)) throw std::invalid_argument("WeightSpec: beta must be >= 0");
}

}  // namespace dnls
