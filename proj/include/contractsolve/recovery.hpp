#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "contractsolve/fbp.hpp"

namespace contractsolve {

// Pulls the solved quantile back to original rank coordinates:
// G_i = Q(nu^{-1}(p_i)) with nu^{-1}(p) = 1 - w(1-p), Q interpolated
// piecewise linearly. The terminal node is pinned to beta exactly.
std::vector<double> recover_quantile(const FbpSolution& sol, const WeightingSpec& w,
                                     const Grid& grid);

struct ViolationReport {
    std::size_t violations = 0;
    std::size_t worst_index = 0;
    double worst_magnitude = 0.0;
};

/// Indemnity schedule on a loss sample x_0 = 0 < ... < x_{m-1}.
/// retention R and indemnity I satisfy R + I = x exactly; slopes of R lie
/// in [0,1] by construction (raw increments are clipped into the box, the
/// largest clip applied is recorded).
struct Contract {
    std::vector<double> x;
    std::vector<double> retention;
    std::vector<double> indemnity;
    double premium = 0.0;        // E[I(X)]
    double max_increment_clip = 0.0;
    ViolationReport ic;          // check of the emitted samples
};

// Maps the recovered quantile to the contract R(x) = beta - G(1 - F_X(x))
// on a uniform loss sample of [0, ess sup X] (201 points unless another
// count is requested).
Contract recover_contract(std::span<const double> G, const Grid& grid, const LossModel& loss,
                          double beta, std::size_t samples = 201);

// 0 <= R(x_{j+1}) - R(x_j) <= x_{j+1} - x_j, each side within 1e-9.
ViolationReport validate_incentive_compatibility(std::span<const double> x,
                                                 std::span<const double> retention);

// Rank-dependent value int_0^1 u(G(p)) w'(1-p) dp, integrated as a
// Stieltjes trapezoid in the weight measure (so steep w' near the ends needs
// no special casing) on a refined subdivision of the grid. Evaluation points
// where u diverges at an endpoint are nudged half a subcell inward.
double rdut_value(std::span<const double> G, const Grid& grid, const UtilitySpec& u,
                  const WeightingSpec& w, std::size_t refine = 16);

} // namespace contractsolve
