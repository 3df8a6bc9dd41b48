#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "contractsolve/errors.hpp"

namespace contractsolve {

// Composite trapezoid on a uniform grid with spacing dp.
inline double trapezoid_uniform(std::span<const double> f, double dp) {
    if (f.size() < 2) throw SizeError("trapezoid: need at least two samples");
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * dp;
}

// Trapezoid with explicit abscissae (not necessarily uniform).
inline double trapezoid(std::span<const double> x, std::span<const double> f) {
    if (x.size() != f.size()) throw GridMismatch("trapezoid: size mismatch");
    if (x.size() < 2) throw SizeError("trapezoid: need at least two samples");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
    return s;
}

// Right-anchored running integral: out[i] = integral of f over [x_i, x_back],
// computed cell by cell so a constant integrand comes out exact.
inline std::vector<double> cumulative_from_right(std::span<const double> x,
                                                 std::span<const double> f) {
    if (x.size() != f.size()) throw GridMismatch("cumulative_from_right: size mismatch");
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t k = x.size() - 1; k-- > 0;)
        out[k] = out[k + 1] + 0.5 * (f[k] + f[k + 1]) * (x[k + 1] - x[k]);
    return out;
}

// Piecewise-linear evaluation of samples (xs, ys) at x, clamped to the ends.
inline double interp_linear(std::span<const double> xs, std::span<const double> ys, double x) {
    if (xs.size() != ys.size()) throw GridMismatch("interp_linear: size mismatch");
    if (xs.size() < 2) throw SizeError("interp_linear: need at least two samples");
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    // binary search for the cell containing x
    std::size_t lo = 0, hi = xs.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (xs[mid] <= x) lo = mid;
        else hi = mid;
    }
    const double t = (x - xs[lo]) / (xs[lo + 1] - xs[lo]);
    return ys[lo] + t * (ys[lo + 1] - ys[lo]);
}

// Same but for samples on the uniform grid i/(n-1).
inline double interp_uniform(std::span<const double> ys, double x) {
    const std::size_t n = ys.size();
    if (n < 2) throw SizeError("interp_uniform: need at least two samples");
    if (x <= 0.0) return ys.front();
    if (x >= 1.0) return ys.back();
    const double r = x * static_cast<double>(n - 1);
    std::size_t i = static_cast<std::size_t>(r);
    if (i >= n - 1) i = n - 2;
    const double t = r - static_cast<double>(i);
    return ys[i] + t * (ys[i + 1] - ys[i]);
}

// Bisection for increasing g on [lo, hi]; returns x with g(x) ~= target.
inline double bisect_increasing(const std::function<double(double)>& g, double lo, double hi,
                                double target, int iters = 200) {
    double glo = g(lo) - target;
    double ghi = g(hi) - target;
    if (glo > 0.0 || ghi < 0.0) throw InversionError("bisect: target not bracketed");
    for (int k = 0; k < iters; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid) - target;
        if (gm <= 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace contractsolve
