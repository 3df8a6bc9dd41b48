#include "contractsolve/multiplier.hpp"

#include <cmath>
#include <limits>

#include "contractsolve/numerics.hpp"

namespace contractsolve {

double budget_of(std::span<const double> quantile, const TransformedProblem& tp) {
    const std::size_t n = tp.grid.n();
    if (quantile.size() != n) throw GridMismatch("budget: quantile does not match the grid");
    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) integrand[i] = quantile[i] * tp.phi_tilde_prime[i];
    return trapezoid_uniform(integrand, tp.grid.dp);
}

double budget_of(const FbpSolution& sol, const TransformedProblem& tp) {
    return budget_of(sol.quantile, tp);
}

namespace {

struct Probe {
    bool too_small = false;
    double budget = std::numeric_limits<double>::quiet_NaN();
    FbpSolution sol;
};

} // namespace

CalibrationResult calibrate_lambda(const TransformedProblem& tp, const CalibrationOptions& opt) {
    const double varpi = tp.varpi;
    const double accept = opt.budget_rtol * (1.0 + std::abs(varpi));

    CalibrationResult res;
    res.budget_matched = false;
    double best_gap = std::numeric_limits<double>::infinity();
    bool have_best = false;

    auto evaluate = [&](double lam) -> Probe {
        ++res.solves;
        Probe pr;
        try {
            pr.sol = solve_fbp(tp, lam, opt.fbp);
            pr.budget = budget_of(pr.sol, tp);
        } catch (const MultiplierTooSmall&) {
            pr.too_small = true;
            return pr;
        }
        const double gap = std::abs(pr.budget - varpi);
        if (gap < best_gap) {
            best_gap = gap;
            res.lambda = lam;
            res.solution = pr.sol;
            res.budget = pr.budget;
            have_best = true;
        }
        return pr;
    };

    // A MultiplierTooSmall outcome sits on the same side as budget > varpi:
    // smaller multipliers only push the budget further up, so the bracket
    // treats both as "above target".
    auto above_target = [&](const Probe& pr) { return pr.too_small || pr.budget > varpi; };
    auto matched = [&](const Probe& pr) {
        return !pr.too_small && std::abs(pr.budget - varpi) <= accept;
    };

    double hi = std::min(std::max(1.0, opt.lambda_min), opt.lambda_max);
    Probe pr_hi = evaluate(hi);
    while (above_target(pr_hi) && hi < opt.lambda_max) {
        if (matched(pr_hi)) break;
        hi = std::min(hi * 2.0, opt.lambda_max);
        pr_hi = evaluate(hi);
    }
    if (matched(pr_hi)) {
        res.bracket_lo = res.bracket_hi = hi;
        res.budget_matched = true;
        return res;
    }
    if (above_target(pr_hi)) {
        // even the largest multiplier leaves the budget above target
        if (!have_best) throw BracketError("calibrate: no solvable multiplier found");
        res.bracket_lo = res.bracket_hi = hi;
        return res;
    }

    double lo = hi;
    Probe pr_lo = pr_hi;
    while (!above_target(pr_lo) && lo > opt.lambda_min) {
        if (matched(pr_lo)) break;
        lo = std::max(lo * 0.5, opt.lambda_min);
        pr_lo = evaluate(lo);
    }
    if (matched(pr_lo)) {
        res.bracket_lo = res.bracket_hi = lo;
        res.budget_matched = true;
        return res;
    }
    if (!above_target(pr_lo)) {
        // attainable budgets top out below the target
        if (!have_best) throw BracketError("calibrate: no solvable multiplier found");
        res.bracket_lo = res.bracket_hi = lo;
        return res;
    }

    double lo_budget = pr_lo.too_small ? std::numeric_limits<double>::quiet_NaN()
                                       : pr_lo.budget;
    double hi_budget = pr_hi.budget;

    for (int it = 0; it < opt.max_bisections; ++it) {
        if (hi - lo <= opt.bracket_width * (1.0 + hi)) break;
        const double mid = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        const Probe pm = evaluate(mid);
        if (matched(pm)) {
            res.bracket_lo = lo;
            res.bracket_hi = hi;
            res.budget_matched = true;
            return res;
        }
        if (above_target(pm)) {
            lo = mid;
            lo_budget = pm.too_small ? lo_budget : pm.budget;
        } else {
            hi = mid;
            hi_budget = pm.budget;
        }
    }

    res.bracket_lo = lo;
    res.bracket_hi = hi;
    if (have_best) res.budget_matched = best_gap <= accept;
    else throw BracketError("calibrate: no solvable multiplier found");
    if (!res.budget_matched) {
        // a collapsed bracket means the target fell through: either the curve
        // is flat across it, or the lo side never solved and the budget
        // saturated at its supremum just above the floor
        if (!std::isfinite(lo_budget) || std::abs(lo_budget - hi_budget) <= accept)
            res.flat = true;
    }
    return res;
}

} // namespace contractsolve
