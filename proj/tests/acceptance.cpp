// Acceptance battery for the contract solver. Each numbered check prints one
// PASS/FAIL line; the process exits nonzero if any check fails.
//
// The test matrix spans utility {exponential, power, log} x weighting
// {identity, power, Prelec} x loss {uniform, atom at zero plus uniform},
// with budget targets chosen inside each configuration's attainable range
// (the power-0.5 weighting config has a degenerate, flat budget curve and
// exercises the flagged-flat calibration path instead).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "contractsolve/fbp.hpp"
#include "contractsolve/multiplier.hpp"
#include "contractsolve/oracle.hpp"
#include "contractsolve/recovery.hpp"
#include "contractsolve/numerics.hpp"

using namespace contractsolve;

namespace {

struct Config {
    std::string name;
    ProblemSpec ps;
};

std::vector<Config> make_matrix() {
    std::vector<Config> out;
    {
        ProblemSpec ps;
        ps.beta = 2.0;
        ps.varpi_direct = 1.7;
        ps.utility = UtilitySpec::cara(1.0);
        out.push_back({"cara/identity/uniform", ps});
    }
    {
        ProblemSpec ps;
        ps.beta = 3.0;
        ps.varpi_direct = 2.6;
        ps.utility = UtilitySpec::cara(1.0);
        ps.weighting = WeightingSpec::power(0.5);
        out.push_back({"cara/power/uniform", ps});
    }
    {
        ProblemSpec ps;
        ps.beta = 6.0;
        ps.varpi_direct = 5.42;
        ps.utility = UtilitySpec::crra(2.0);
        ps.weighting = WeightingSpec::prelec(0.65, 1.0);
        ps.phi = PhiSpec::power(0.65, -0.35);
        out.push_back({"crra/prelec/uniform", ps});
    }
    {
        ProblemSpec ps;
        ps.beta = 5.0;
        ps.varpi_direct = 4.8;
        ps.utility = UtilitySpec::crra(2.0);
        out.push_back({"crra/identity/uniform", ps});
    }
    {
        ProblemSpec ps;
        ps.beta = 20.0;
        // the budget curve for this family rises from its flat stretch to
        // exactly beta as the multiplier falls to u'(beta); targets above
        // beta only exist inside the terminal-piercing tolerance band
        ps.varpi_direct = 19.9;
        ps.utility = UtilitySpec::log_utility();
        ps.loss = LossModel::mass_at_zero_plus_uniform(0.5, 1.0);
        out.push_back({"log/identity/atom", ps});
    }
    {
        ProblemSpec ps;
        ps.beta = 20.0;
        ps.varpi_direct = 19.398;
        ps.utility = UtilitySpec::log_utility();
        ps.weighting = WeightingSpec::prelec(0.65, 1.0);
        ps.phi = PhiSpec::power(0.65, -0.35);
        out.push_back({"log/prelec/uniform", ps});
    }
    return out;
}

struct Verdict {
    bool ok = false;
    std::string detail;
};
std::map<int, Verdict> verdicts;

void report(int k, bool ok, const std::string& detail) { verdicts[k] = {ok, detail}; }

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double g = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] - b[i]));
    return g;
}

bool sampled_concave(const std::vector<double>& f, double dp) {
    for (std::size_t i = 1; i + 1 < f.size(); ++i)
        if ((f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dp * dp) > 1e-8) return false;
    return true;
}

// Shared accumulators fed by every converged solve in the battery.
struct Battery {
    double worst_comp = 0.0, worst_prod = 0.0;      // complementarity
    double worst_curv = -1e300;                      // delta'' where phi_tilde concave
    bool curvature_applies = false;
    std::size_t ic_violations = 0;                   // contract checks
    bool retention_anchored = true, split_exact = true;
    double worst_value_gap = 0.0;                    // rdut vs transformed objective
    std::string value_where;
};

void feed(Battery& bat, const Config& cfg, const TransformedProblem& tp,
          const FbpSolution& sol, bool with_contract) {
    const std::size_t n = tp.grid.n();
    const double dp = tp.grid.dp;

    const ResidualReport rr = residual_check(sol, tp);
    bat.worst_comp = std::max(bat.worst_comp, rr.max_complementarity);
    bat.worst_prod = std::max(bat.worst_prod, rr.max_product);

    if (sampled_concave(tp.phi_tilde, dp)) {
        bat.curvature_applies = true;
        for (std::size_t i = 1; i + 1 < n; ++i)
            bat.worst_curv = std::max(
                bat.worst_curv, (sol.delta[i + 1] - 2.0 * sol.delta[i] + sol.delta[i - 1]) /
                                    (dp * dp));
    }

    const std::vector<double> G = recover_quantile(sol, cfg.ps.weighting, tp.grid);

    std::vector<double> uq(n);
    for (std::size_t i = 0; i < n; ++i) uq[i] = cfg.ps.utility.value(sol.quantile[i]);
    const double transformed = trapezoid_uniform(uq, dp);
    const double direct = rdut_value(G, tp.grid, cfg.ps.utility, cfg.ps.weighting);
    const double rel = std::abs(direct - transformed) / (1.0 + std::abs(transformed));
    if (rel > 10.0 * dp * dp && rel > bat.worst_value_gap) bat.value_where = cfg.name;
    bat.worst_value_gap = std::max(bat.worst_value_gap, rel / (10.0 * dp * dp));

    if (!with_contract) return;
    const Contract ct = recover_contract(G, tp.grid, cfg.ps.loss, tp.beta);
    bat.ic_violations += ct.ic.violations;
    if (ct.retention.front() != 0.0) bat.retention_anchored = false;
    for (std::size_t j = 0; j < ct.x.size(); ++j)
        if (ct.retention[j] + ct.indemnity[j] != ct.x[j]) bat.split_exact = false;
}

} // namespace

int main() {
    const std::vector<Config> matrix = make_matrix();
    Battery bat;

    // 1: analytic reference case. With exponential utility, no reweighting,
    // a uniform loss and a unit multiplier the solution is Q(p) = 1 + p and
    // delta(p) = e^-1 (1 - e^-p).
    {
        ProblemSpec ps = matrix[0].ps;
        const auto t0 = std::chrono::steady_clock::now();
        const TransformedProblem tp = transform_problem(ps, Grid::uniform(1025));
        const FbpSolution sol = solve_fbp(tp, 1.0);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double eq = 0.0, ed = 0.0;
        for (std::size_t i = 0; i < tp.grid.n(); ++i) {
            const double p = tp.grid.p[i];
            eq = std::max(eq, std::abs(sol.quantile[i] - (1.0 + p)));
            ed = std::max(ed, std::abs(sol.delta[i] - std::exp(-1.0) * (1.0 - std::exp(-p))));
        }
        report(1, eq <= 1e-6 && ed <= 1e-6 && secs < 1.0,
               "sup|Q-(1+p)|=" + fmt(eq) + " sup|delta-ref|=" + fmt(ed) + " in " + fmt(secs) +
                   "s at n=1025");
        feed(bat, matrix[0], tp, sol, true);
    }

    // 2: dual-route agreement. Projected coordinate ascent on the fine grid,
    // full lattice enumeration on the 9-node grid; neither shares code with
    // the variational solver. The lattice locates the optimum to within the
    // resolution of one increment, max_j hbar_j * dq.
    {
        bool ok = true;
        double worst_proj = 0.0, worst_exh_ratio = 0.0;
        for (const Config& cfg : matrix) {
            const TransformedProblem tp = transform_problem(cfg.ps, Grid::uniform(257));
            const TransformedProblem tp9 = transform_problem(cfg.ps, Grid::uniform(9));
            double cap = 0.0;
            for (std::size_t j = 0; j + 1 < 9; ++j) cap = std::max(cap, tp9.hbar[j] * tp9.grid.dp);
            for (double lam : {0.2, 1.0, 3.0}) {
                const FbpSolution f = solve_fbp(tp, lam);
                const OracleResult pr = oracle_projected(tp, lam);
                const double gp = sup_diff(f.quantile, pr.quantile);
                worst_proj = std::max(worst_proj, gp);
                if (gp > 5e-3) ok = false;

                const FbpSolution f9 = solve_fbp(tp9, lam);
                const OracleResult ex = oracle_exhaustive(tp9, lam, 9, 7);
                const double ge = sup_diff(f9.quantile, ex.quantile);
                worst_exh_ratio = std::max(worst_exh_ratio, ge / cap);
                if (ge > cap) ok = false;

                feed(bat, cfg, tp, f, true);
                feed(bat, cfg, tp9, f9, false);
            }
        }
        report(2, ok,
               "6 configs x {0.2,1,3}: worst projected sup=" + fmt(worst_proj) +
                   " <= 5e-3 at n=257, worst lattice gap=" + fmt(worst_exh_ratio) +
                   " of one increment at n=9");
    }

    // 4: feasibility trichotomy for the beta=2, hbar==1, phi_tilde=p family.
    {
        auto classify = [&](double varpi) {
            ProblemSpec ps = matrix[0].ps;
            ps.varpi_direct = varpi;
            const TransformedProblem tp = transform_problem(ps, Grid::uniform(257));
            return feasibility_classify(tp);
        };
        const bool below = classify(1.5 - 2.6e-9).status == Feasibility::Infeasible;
        const bool above = classify(1.5 + 2.6e-9).status == Feasibility::Feasible;
        const Classification knife = classify(1.5);
        bool unique = knife.status == Feasibility::UniqueSolution;
        unique = unique && classify(1.5 - 1e-12).status == Feasibility::UniqueSolution;
        unique = unique && classify(1.5 + 1e-12).status == Feasibility::UniqueSolution;
        double eq = 0.0;
        if (unique) {
            const Grid g = Grid::uniform(257);
            for (std::size_t i = 0; i < g.n(); ++i)
                eq = std::max(eq, std::abs(knife.unique_solution[i] - (1.0 + g.p[i])));
        }
        report(4, below && above && unique && eq <= 1e-12,
               "flip bracketed within 2.6e-9 of 1.5, knife-edge Q* off by " + fmt(eq));
    }

    // 6: budget monotonicity across the multiplier ladder, then calibration.
    {
        bool ok = true;
        std::string note;
        int matched = 0, flat = 0;
        for (const Config& cfg : matrix) {
            const TransformedProblem tp = transform_problem(cfg.ps, Grid::uniform(257));
            double prev = 1e300;
            for (int k = -4; k <= 4; ++k) {
                const double lam = std::ldexp(1.0, k);
                try {
                    const FbpSolution sol = solve_fbp(tp, lam);
                    const double b = budget_of(sol, tp);
                    if (b > prev + 1e-8 * (1.0 + std::abs(prev))) {
                        ok = false;
                        note += cfg.name + " not monotone at lambda=" + fmt(lam) + "; ";
                    }
                    prev = b;
                    feed(bat, cfg, tp, sol, true);
                } catch (const MultiplierTooSmall&) {
                    // rung below the solvable floor: recorded and skipped
                }
            }
            const CalibrationResult cal = calibrate_lambda(tp);
            const double tol = 1e-7 * (1.0 + std::abs(tp.varpi));
            if (cal.budget_matched && std::abs(cal.budget - tp.varpi) <= tol) {
                ++matched;
                feed(bat, cfg, tp, cal.solution, true);
            } else if (cal.flat) {
                ++flat;
            } else {
                ok = false;
                note += cfg.name + " calibration missed (gap " +
                        fmt(std::abs(cal.budget - tp.varpi)) + "); ";
            }
        }
        report(6, ok,
               note.empty() ? "ladders non-increasing; " + std::to_string(matched) +
                                  " calibrated to tolerance, " + std::to_string(flat) +
                                  " flagged flat"
                            : note);
    }

    // 3: complementarity residuals over every converged solve above.
    report(3, bat.worst_comp <= 1e-8 && bat.worst_prod <= 1e-8,
           "max scaled residual=" + fmt(bat.worst_comp) + ", max product residual=" +
               fmt(bat.worst_prod));

    // 5: concavity of delta wherever the transformed weight is concave.
    report(5, bat.curvature_applies && bat.worst_curv <= 1e-8,
           "max interior delta'' = " + fmt(bat.worst_curv) + " over concave-weight configs");

    // 7: recovered contracts are incentive compatible with exact bookkeeping.
    report(7,
           bat.ic_violations == 0 && bat.retention_anchored && bat.split_exact,
           "violations=" + std::to_string(bat.ic_violations) + ", R(0)==0 " +
               (bat.retention_anchored ? "exact" : "BROKEN") + ", I+R==x " +
               (bat.split_exact ? "exact" : "BROKEN"));

    // 8: concave envelope against two analytic majorants, and idempotence.
    {
        const Grid g = Grid::uniform(1025);
        std::vector<double> sq(g.n()), vee(g.n());
        for (std::size_t i = 0; i < g.n(); ++i) {
            sq[i] = g.p[i] * g.p[i];
            vee[i] = std::abs(2.0 * g.p[i] - 1.0);
        }
        const std::vector<double> esq = concave_envelope(sq, g);
        const std::vector<double> evee = concave_envelope(vee, g);
        double e1 = 0.0, e2 = 0.0;
        for (std::size_t i = 0; i < g.n(); ++i) {
            e1 = std::max(e1, std::abs(esq[i] - g.p[i]));
            e2 = std::max(e2, std::abs(evee[i] - 1.0));
        }
        e2 = std::max(e2, std::abs(evee.front() - 1.0));
        const bool idem =
            concave_envelope(esq, g) == esq && concave_envelope(evee, g) == evee;
        report(8, e1 <= 1e-6 && e2 <= 1e-6 && idem,
               "|env(p^2)-p|=" + fmt(e1) + " |env(|2p-1|)-1|=" + fmt(e2) +
                   (idem ? ", idempotent exactly" : ", NOT idempotent"));
    }

    // 9: second-order grid convergence against the analytic case.
    {
        double prev = 0.0;
        bool ok = true;
        std::string rates;
        for (std::size_t n : {129u, 257u, 513u, 1025u}) {
            const TransformedProblem tp = transform_problem(matrix[0].ps, Grid::uniform(n));
            const FbpSolution sol = solve_fbp(tp, 1.0);
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                err = std::max(err, std::abs(sol.quantile[i] - (1.0 + tp.grid.p[i])));
            if (prev > 0.0) {
                const double ratio = prev / err;
                rates += fmt(ratio) + " ";
                if (ratio < 3.0) ok = false;
            }
            prev = err;
        }
        report(9, ok, "error reduction per doubling: " + rates);
    }

    // 10: the rank-dependent value of the recovered quantile agrees with the
    // transformed objective on every converged solve.
    report(10, bat.worst_value_gap <= 1.0,
           "worst relative gap = " + fmt(bat.worst_value_gap) + " of the 10*dp^2 allowance" +
               (bat.value_where.empty() ? "" : " (" + bat.value_where + ")"));

    int failures = 0;
    for (int k = 1; k <= 10; ++k) {
        const Verdict& v = verdicts[k];
        std::printf("[acceptance] criterion %d: %s  (%s)\n", k, v.ok ? "PASS" : "FAIL",
                    v.detail.c_str());
        if (!v.ok) ++failures;
    }
    if (failures == 0) std::printf("[acceptance] all criteria passed\n");
    else std::printf("[acceptance] %d criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
