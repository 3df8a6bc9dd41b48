#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "contractsolve/transform.hpp"

namespace contractsolve {

enum class Branch : std::uint8_t { Ode, Obstacle };

/// Discrete solution of the variational system
///   min{ delta'' - hbar(p) u''((u')^{-1}(delta')),  lambda phi_tilde - delta } = 0
///   delta(0) = 0,  delta'(1) = u'(beta)
/// on the uniform grid, with the optimal transformed quantile
/// Q(p) = (u')^{-1}(delta'(p)).
struct FbpSolution {
    double lambda = 0.0;
    std::vector<double> delta;
    std::vector<double> delta_prime;
    std::vector<double> quantile;
    std::vector<Branch> branch;
    double residual = 0.0; // scaled complementarity residual at exit
    int sweeps = 0;        // policy iterations used
};

struct FbpOptions {
    // 0 means automatic (2n + 100): the active set can only grow from the
    // terminal row inward, one node per sweep, so the cap scales with the
    // grid. CONTRACTSOLVE_MAX_ITERS overrides when set.
    int max_sweeps = 0;
    int max_newton = 60;
    double newton_floor = 9.5367431640625e-7; // 2^-20, smallest damping step
};

// Active-set iteration over the branch flags with a damped Newton solve of
// the flagged nonlinear system inside each sweep; a node changes branch only
// when the side it is not solving turns negative.
FbpSolution solve_fbp(const TransformedProblem& tp, double lambda, const FbpOptions& opt = {});

struct ResidualReport {
    double max_complementarity = 0.0;  // max_i |min{A_i, B_i}| / (1 + |lambda phi_tilde_i|)
    double mean_complementarity = 0.0;
    double max_product = 0.0;          // max_i |(Q'_i - hbar_i)(lambda phi_tilde_i - delta_i)| scaled
    double max_obstacle_violation = 0.0; // max_i (delta_i - lambda phi_tilde_i)+
    std::size_t worst_node = 0;
};

// Recomputes both residual forms from a solution; the quantile slope in the
// product identity comes from the inverse-function rule
// Q' = delta'' / u''((u')^{-1}(delta')).
ResidualReport residual_check(const FbpSolution& sol, const TransformedProblem& tp);

// Least concave majorant of the piecewise-linear interpolant of f on the
// grid, sampled back on the grid. Applying it twice reproduces the first
// output byte for byte.
std::vector<double> concave_envelope(std::span<const double> f, const Grid& grid);

} // namespace contractsolve
