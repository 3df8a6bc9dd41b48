#pragma once

#include <vector>

#include "contractsolve/grid.hpp"
#include "contractsolve/model.hpp"

namespace contractsolve {

struct NuEval {
    double nu;        // nu(p) = 1 - w^{-1}(1-p)
    double nu_prime;  // nu'(p) = 1 / w'(w^{-1}(1-p))
    bool singular;    // w' vanished at the evaluation point; nu_prime is +inf
};

// Rank change of variable induced by the weighting. nu is itself an
// increasing bijection of [0,1]; its inverse is p -> 1 - w(1-p).
NuEval nu_map(const WeightingSpec& w, double p);

/// Quantile problem after the rank change of variable: maximize
/// int u(Q) dp over absolutely continuous Q with Q(1) = beta and
/// 0 <= Q' <= hbar, subject to int Q phi_tilde' dp <= varpi, where
///   hbar(p)        = h(nu(p)) nu'(p)
///   phi_tilde(p)   = int_0^{nu(p)} phi(t) dt
///   phi_tilde'(p)  = phi(nu(p)) nu'(p)
struct TransformedProblem {
    Grid grid;
    std::vector<double> hbar;
    std::vector<double> phi_tilde;
    std::vector<double> phi_tilde_prime;
    double beta = 0.0;
    double varpi = 0.0;
    double phi_total = 0.0; // int_0^1 phi = phi_tilde(1)
    UtilitySpec utility = UtilitySpec::cara(1.0);
};

// Samples the transformed data on the grid. Indeterminate endpoint products
// (h or phi vanishing against a blowing-up nu') resolve to their one-sided
// limits; a genuinely unbounded hbar or phi_tilde' sample is reported as
// SingularDerivative rather than patched.
TransformedProblem transform_problem(const ProblemSpec& spec, const Grid& grid);

enum class Feasibility { Infeasible, UniqueSolution, Feasible };

struct Classification {
    Feasibility status = Feasibility::Feasible;
    double threshold = 0.0; // T = beta phi_tilde(1) - int phi_tilde hbar
    // Populated only in the UniqueSolution case: Q*(p) = beta - int_p^1 hbar.
    std::vector<double> unique_solution;
};

// Trichotomy in varpi against the threshold T with tolerance 1e-9 (1 + |T|):
// below is infeasible, at T the feasible set is the singleton Q*, above it
// has interior.
Classification feasibility_classify(const TransformedProblem& tp);

} // namespace contractsolve
