#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace dnls {

namespace vec {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::vector<double>& x, double s) {
    for (auto& v : x) v *= s;
}

}  // namespace vec

struct MinresResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// MINRES for symmetric (possibly indefinite) operators, matrix-free.
/// Solves A x = b starting from x = 0.
template <class Op>
MinresResult minres(const Op& apply, const std::vector<double>& b, std::vector<double>& x,
                    double rtol = 1e-12, int maxit = 20000) {
    const std::size_t n = b.size();
    x.assign(n, 0.0);
    std::vector<double> r1 = b, r2 = b, y = b, v(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0);

    double beta1 = vec::norm(b);
    MinresResult res;
    if (beta1 == 0.0) {
        res.converged = true;
        return res;
    }

    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
    double phibar = beta1, rhs1 = beta1;
    double cs = -1.0, sn = 0.0, oldeps = 0.0;
    (void)rhs1;

    for (int itn = 1; itn <= maxit; ++itn) {
        const double s = 1.0 / beta;
        for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
        apply(v, y);
        if (itn >= 2) vec::axpy(-beta / oldb, r1, y);
        const double alfa = vec::dot(v, y);
        vec::axpy(-alfa / beta, r2, y);
        r1 = r2;
        r2 = y;
        oldb = beta;
        beta = vec::norm(r2);

        oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        double gamma = std::sqrt(gbar * gbar + beta * beta);
        gamma = std::max(gamma, std::numeric_limits<double>::epsilon());
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        const double denom = 1.0 / gamma;
        w1 = w2;
        w2 = w;
        for (std::size_t i = 0; i < n; ++i)
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
        vec::axpy(phi, w, x);

        res.iterations = itn;
        res.relative_residual = phibar / beta1;
        if (res.relative_residual <= rtol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

enum class EigenStatus { Converged, NotConverged };

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;
    double residual = 0.0;
    int iterations = 0;
    EigenStatus status = EigenStatus::NotConverged;
};

/// Shifted inverse iteration with Rayleigh-quotient readout. The shift must
/// sit outside the spectrum on the side of the wanted extremal eigenvalue.
template <class Op>
EigenPair shifted_inverse_iteration(const Op& apply, std::vector<double> x0, double shift,
                                    double tol = 1e-12, int max_outer = 200,
                                    double inner_rtol = 1e-13, int inner_maxit = 50000) {
    EigenPair out;
    const std::size_t n = x0.size();
    double nrm = vec::norm(x0);
    if (nrm == 0.0) {
        x0.assign(n, 0.0);
        x0[n / 2] = 1.0;
        nrm = 1.0;
    }
    vec::scale(x0, 1.0 / nrm);

    std::vector<double> y(n), Ax(n);
    auto shifted = [&](const std::vector<double>& in, std::vector<double>& outv) {
        apply(in, outv);
        for (std::size_t i = 0; i < n; ++i) outv[i] -= shift * in[i];
    };

    for (int it = 1; it <= max_outer; ++it) {
        auto lin = minres(shifted, x0, y, inner_rtol, inner_maxit);
        if (!lin.converged && lin.relative_residual > 1e-6) {
            out.iterations = it;
            out.vector = std::move(x0);
            return out;  // inner solver stalled: NotConverged
        }
        const double ynrm = vec::norm(y);
        if (!(ynrm > 0.0) || !std::isfinite(ynrm)) {
            out.iterations = it;
            out.vector = std::move(x0);
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) x0[i] = y[i] / ynrm;

        apply(x0, Ax);
        const double theta = vec::dot(x0, Ax);
        double rs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = Ax[i] - theta * x0[i];
            rs += r * r;
        }
        out.value = theta;
        out.residual = std::sqrt(rs);
        out.iterations = it;
        if (out.residual <= tol) {
            out.status = EigenStatus::Converged;
            out.vector = std::move(x0);
            return out;
        }
    }
    out.vector = std::move(x0);
    return out;
}

/// Least-squares straight line fit y = a + b x; returns (intercept, slope, r2).
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
    std::size_t count = 0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    LineFit f;
    const std::size_t n = xs.size();
    f.count = n;
    if (n < 2) return f;
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

}  // namespace dnls
