#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "contractsolve/transform.hpp"

namespace contractsolve {

// The two reference optimizers below attack the discretized Lagrangian
//   J(Q) = sum_i [ u(Q_i) - lambda Q_i phi_tilde'_i ] dq
// over quantiles built from increments c_j in [0, hbar_j dq], Q_{m-1} = beta,
// Q_j = beta - sum_{k >= j} c_k. They share no machinery with the
// variational solver and exist to check it.

struct OracleResult {
    std::vector<double> nodes;    // coarse abscissae
    std::vector<double> quantile; // maximizer found
    double objective = 0.0;
    long long evaluations = 0;    // candidates scored (exhaustive) or sweeps (ascent)
};

// Full enumeration of the increment lattice with `levels` values per
// increment, on an m-node coarsening of tp (exact subsampling whenever
// (n-1) is a multiple of (m-1)). Ties prefer the lexicographically largest
// increment vector. Cost is levels^(m-1); both m and levels are capped.
OracleResult oracle_exhaustive(const TransformedProblem& tp, double lambda,
                               std::size_t m, std::size_t levels);

// Cyclic coordinate ascent over the increments on the full grid of tp, each
// coordinate maximized exactly by a clipped scalar Newton step. Stops once a
// sweep improves the objective by less than 1e-12 and every coordinate
// satisfies its box first-order condition.
OracleResult oracle_projected(const TransformedProblem& tp, double lambda);

struct Comparison {
    double sup = 0.0;
    double mean = 0.0;
};

// Sup and mean absolute gap of two quantile vectors on the same grid.
Comparison compare(std::span<const double> a, std::span<const double> b);

} // namespace contractsolve
