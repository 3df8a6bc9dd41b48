#pragma once

#include "contractsolve/fbp.hpp"

namespace contractsolve {

// Trapezoid value of int Q phi_tilde' dp for the solved quantile.
double budget_of(const FbpSolution& sol, const TransformedProblem& tp);
double budget_of(std::span<const double> quantile, const TransformedProblem& tp);

struct CalibrationOptions {
    double budget_rtol = 1e-7;   // accept when |budget - varpi| <= budget_rtol (1 + |varpi|)
    double bracket_width = 1e-12;
    double lambda_min = 8.673617379884035e-19;  // 2^-60
    double lambda_max = 1.152921504606847e18;   // 2^60
    int max_bisections = 400;
    FbpOptions fbp;
};

struct CalibrationResult {
    double lambda = 1.0;
    FbpSolution solution;
    double budget = 0.0;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    int solves = 0;
    bool budget_matched = false; // |budget - varpi| within tolerance
    bool flat = false;           // bracket collapsed on a flat or saturated stretch
};

// Monotone bisection on lambda for budget(lambda) = varpi. Doubling/halving
// from lambda = 1 finds the initial bracket; a MultiplierTooSmall solve
// counts as budget above target (the budget saturates at its supremum on
// that side). When the bracket collapses without matching the budget the
// result is returned flagged rather than forced.
CalibrationResult calibrate_lambda(const TransformedProblem& tp,
                                   const CalibrationOptions& opt = {});

} // namespace contractsolve
