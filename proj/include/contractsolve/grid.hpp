#pragma once

#include <cstddef>
#include <vector>

#include "contractsolve/errors.hpp"

namespace contractsolve {

// Uniform grid on [0,1]. Nine nodes is the floor: the solver stencils need
// room for second-order one-sided boundary formulas.
struct Grid {
    std::vector<double> p;
    double dp = 0.0;

    static Grid uniform(std::size_t n) {
        if (n < 9) throw ValidationError("grid: need at least 9 nodes, got " + std::to_string(n));
        Grid g;
        g.p.resize(n);
        const double denom = static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) g.p[i] = static_cast<double>(i) / denom;
        g.p.front() = 0.0;
        g.p.back() = 1.0;
        g.dp = 1.0 / denom;
        return g;
    }

    std::size_t n() const { return p.size(); }
};

} // namespace contractsolve
