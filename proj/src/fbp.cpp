#include "contractsolve/fbp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "contractsolve/numerics.hpp"

namespace contractsolve {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// u''((u')^{-1}(y)) with y clamped into the range where the inverse exists;
// intermediate Newton iterates can push difference quotients outside it.
double curvature_clamped(const UtilitySpec& u, double y) {
    switch (u.kind()) {
    case UtilityKind::Cara:
        return u.curvature_at_marginal(y);
    case UtilityKind::Crra:
    case UtilityKind::LogU:
        return u.curvature_at_marginal(std::max(y, 1e-300));
    case UtilityKind::Tabulated: {
        const double hi = u.marginal(u.domain_lower());
        const double lo = u.marginal(u.domain_upper());
        return u.curvature_at_marginal(std::clamp(y, lo, hi));
    }
    }
    throw Error("fbp: unreachable");
}

double curvature_slope_clamped(const UtilitySpec& u, double y) {
    switch (u.kind()) {
    case UtilityKind::Cara:
        return u.curvature_at_marginal_slope(y);
    case UtilityKind::Crra:
    case UtilityKind::LogU:
        return u.curvature_at_marginal_slope(std::max(y, 1e-300));
    case UtilityKind::Tabulated: {
        const double hi = u.marginal(u.domain_lower());
        const double lo = u.marginal(u.domain_upper());
        return u.curvature_at_marginal_slope(std::clamp(y, lo, hi));
    }
    }
    throw Error("fbp: unreachable");
}

struct System {
    const TransformedProblem& tp;
    double lambda;
    double uprime_beta;
    double dp, dp2;
    std::size_t n;

    explicit System(const TransformedProblem& t, double lam)
        : tp(t), lambda(lam), dp(t.grid.dp), dp2(t.grid.dp * t.grid.dp), n(t.grid.n()) {
        uprime_beta = tp.utility.marginal(tp.beta);
    }

    double obstacle(std::size_t i) const { return lambda * tp.phi_tilde[i]; }

    // second difference minus the nonlinearity, times dp^2 (keeps rows O(1))
    double ode_row(const std::vector<double>& d, std::size_t i) const {
        const double d1 = (d[i + 1] - d[i - 1]) / (2.0 * dp);
        return (d[i + 1] - 2.0 * d[i] + d[i - 1]) -
               dp2 * tp.hbar[i] * curvature_clamped(tp.utility, d1);
    }

    double terminal_row(const std::vector<double>& d) const {
        return 3.0 * d[n - 1] - 4.0 * d[n - 2] + d[n - 3] - 2.0 * dp * uprime_beta;
    }

    double residual(const std::vector<double>& d, const std::vector<Branch>& flag,
                    std::vector<double>& F) const {
        F[0] = d[0];
        double r = std::abs(F[0]);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            F[i] = flag[i] == Branch::Obstacle ? d[i] - obstacle(i) : ode_row(d, i);
            r = std::max(r, std::abs(F[i]));
        }
        F[n - 1] = terminal_row(d);
        r = std::max(r, std::abs(F[n - 1]));
        return std::isfinite(r) ? r : kNan;
    }
};

// Tridiagonal rows 0..n-2 plus a closing row with entries at n-3, n-2, n-1.
void solve_banded(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                  double e, double f, double g, std::vector<double>& rhs,
                  std::vector<double>& x) {
    const std::size_t n = rhs.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (diag[i - 1] == 0.0) throw NoConvergence("fbp: singular linear system", 0, 0.0);
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    const double w1 = e / diag[n - 3];
    f -= w1 * sup[n - 3];
    rhs[n - 1] -= w1 * rhs[n - 3];
    const double w2 = f / diag[n - 2];
    g -= w2 * sup[n - 2];
    rhs[n - 1] -= w2 * rhs[n - 2];
    if (g == 0.0) throw NoConvergence("fbp: singular closing row", 0, 0.0);
    x[n - 1] = rhs[n - 1] / g;
    for (std::size_t k = n - 1; k-- > 0;) x[k] = (rhs[k] - sup[k] * x[k + 1]) / diag[k];
}

// Newton on the flagged equality system. Returns the final residual norm;
// success when it fell under atol (or the stagnation floor after damping died).
bool newton_solve(const System& sys, const std::vector<Branch>& flag, std::vector<double>& delta,
                  const FbpOptions& opt, double atol, double stag_tol, double& out_residual) {
    const std::size_t n = sys.n;
    std::vector<double> F(n), Ft(n), s(n), trial(n);
    std::vector<double> sub(n - 1), diag(n - 1), sup(n - 1), rhs(n);

    double r = sys.residual(delta, flag, F);
    for (int it = 0; it < opt.max_newton; ++it) {
        if (std::isnan(r)) {
            out_residual = r;
            return false;
        }
        if (r <= atol) {
            out_residual = r;
            return true;
        }

        // assemble the Jacobian of the flagged system
        diag[0] = 1.0;
        sup[0] = 0.0;
        sub[0] = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (flag[i] == Branch::Obstacle) {
                sub[i] = 0.0;
                diag[i] = 1.0;
                sup[i] = 0.0;
            } else {
                const double d1 = (delta[i + 1] - delta[i - 1]) / (2.0 * sys.dp);
                const double ms = curvature_slope_clamped(sys.tp.utility, d1);
                const double c = 0.5 * sys.dp * sys.tp.hbar[i] * ms;
                sub[i] = 1.0 + c;
                diag[i] = -2.0;
                sup[i] = 1.0 - c;
            }
            rhs[i] = -F[i];
        }
        rhs[0] = -F[0];
        rhs[n - 1] = -F[n - 1];
        solve_banded(sub, diag, sup, 1.0, -4.0, 3.0, rhs, s);

        double t = 1.0;
        bool moved = false;
        while (t >= opt.newton_floor) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = delta[i] + t * s[i];
            const double rt = sys.residual(trial, flag, Ft);
            if (!std::isnan(rt) && rt < r) {
                delta.swap(trial);
                F.swap(Ft);
                r = rt;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) {
            out_residual = r;
            return r <= stag_tol;
        }
    }
    out_residual = r;
    return r <= stag_tol;
}

double scaled_comp(double a, double b, double obstacle) {
    return std::abs(std::min(a, b)) / (1.0 + std::abs(obstacle));
}

} // namespace

FbpSolution solve_fbp(const TransformedProblem& tp, double lambda, const FbpOptions& opt) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ValidationError("fbp: lambda must be positive and finite");
    const std::size_t n = tp.grid.n();
    if (tp.hbar.size() != n || tp.phi_tilde.size() != n)
        throw GridMismatch("fbp: transformed data does not match the grid");

    int max_sweeps = opt.max_sweeps > 0 ? opt.max_sweeps : static_cast<int>(2 * n + 100);
    if (const char* env = std::getenv("CONTRACTSOLVE_MAX_ITERS")) {
        const int v = std::atoi(env);
        if (v > 0) max_sweeps = v;
    }

    System sys(tp, lambda);
    const double dp = sys.dp;

    double phit_max = 0.0;
    for (double v : tp.phi_tilde) phit_max = std::max(phit_max, v);
    const double scale = 1.0 + lambda * phit_max + sys.uprime_beta;
    const double atol = 1e-15 * scale;
    const double stag_tol = 1e-13 * scale;

    // start from the pointwise minimum of the obstacle and the shallowest
    // admissible profile; flag by which side is active there
    std::vector<double> delta(n);
    std::vector<Branch> flag(n, Branch::Ode);
    for (std::size_t i = 0; i < n; ++i) {
        const double lin = sys.uprime_beta * tp.grid.p[i];
        const double obs = sys.obstacle(i);
        delta[i] = std::min(obs, lin);
        if (i > 0 && i + 1 < n && obs < lin) flag[i] = Branch::Obstacle;
    }

    double residual = kNan;
    bool newton_ok = false;
    bool flags_stable = false;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        newton_ok = newton_solve(sys, flag, delta, opt, atol, stag_tol, residual);

        // active-set update: a node changes branch only when the branch it is
        // not solving goes negative (each sweep solves its own branch to zero)
        flags_stable = true;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            Branch want = flag[i];
            if (flag[i] == Branch::Ode) {
                const double b = sys.obstacle(i) - delta[i];
                if (b < -1e-12 * (1.0 + std::abs(sys.obstacle(i)))) want = Branch::Obstacle;
            } else {
                const double a = sys.ode_row(delta, i);
                if (!std::isnan(a) && a < -1e-13) want = Branch::Ode;
            }
            if (want != flag[i]) {
                flag[i] = want;
                flags_stable = false;
            }
        }
        if (flags_stable && newton_ok) break;
    }
    if (!(flags_stable && newton_ok)) {
        std::ostringstream os;
        os << "fbp: policy iteration did not settle (lambda = " << lambda << ")";
        throw NoConvergence(os.str(), sweep, residual);
    }

    // The closing slope condition has no obstacle row of its own. When lambda
    // is too small the converged profile pierces the barrier exactly there,
    // which means the continuous problem has no solution for this multiplier.
    {
        const double viol = delta[n - 1] - sys.obstacle(n - 1);
        // the piercing grows like dp * (u'(beta) - lambda phi_tilde'(1)), so a
        // dp^2 threshold separates it from discretization noise
        const double tol = std::max(1e-9, dp * dp) * (1.0 + std::abs(sys.obstacle(n - 1)));
        if (viol > tol) {
            std::ostringstream os;
            os << "fbp: terminal slope condition pierces the barrier (lambda = " << lambda << ")";
            throw MultiplierTooSmall(os.str(), lambda, viol);
        }
    }

    FbpSolution sol;
    sol.lambda = lambda;
    sol.delta = delta;
    sol.sweeps = sweep + 1;

    sol.delta_prime.resize(n);
    sol.delta_prime[0] = (-3.0 * delta[0] + 4.0 * delta[1] - delta[2]) / (2.0 * dp);
    for (std::size_t i = 1; i + 1 < n; ++i)
        sol.delta_prime[i] = (delta[i + 1] - delta[i - 1]) / (2.0 * dp);
    sol.delta_prime[n - 1] = (3.0 * delta[n - 1] - 4.0 * delta[n - 2] + delta[n - 3]) / (2.0 * dp);

    sol.quantile.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(sol.delta_prime[i] > 0.0))
            throw NoConvergence("fbp: nonpositive marginal in the recovered slope",
                                sol.sweeps, residual);
        sol.quantile[i] = tp.utility.marginal_inverse(sol.delta_prime[i]);
    }

    sol.branch.assign(n, Branch::Ode);
    for (std::size_t i = 1; i + 1 < n; ++i) sol.branch[i] = flag[i];
    sol.branch[0] = sol.branch[1];
    sol.branch[n - 1] = sol.branch[n - 2];

    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d1 = (delta[i + 1] - delta[i - 1]) / (2.0 * dp);
        const double d2 = (delta[i + 1] - 2.0 * delta[i] + delta[i - 1]) / sys.dp2;
        const double a = d2 - tp.hbar[i] * curvature_clamped(tp.utility, d1);
        const double b = sys.obstacle(i) - delta[i];
        worst = std::max(worst, scaled_comp(a, b, sys.obstacle(i)));
    }
    sol.residual = worst;
    return sol;
}

ResidualReport residual_check(const FbpSolution& sol, const TransformedProblem& tp) {
    const std::size_t n = tp.grid.n();
    if (sol.delta.size() != n) throw GridMismatch("residual_check: solution grid mismatch");
    const double dp = tp.grid.dp;
    const double dp2 = dp * dp;

    ResidualReport rep;
    double sum = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double obstacle = sol.lambda * tp.phi_tilde[i];
        const double d1 = (sol.delta[i + 1] - sol.delta[i - 1]) / (2.0 * dp);
        const double d2 = (sol.delta[i + 1] - 2.0 * sol.delta[i] + sol.delta[i - 1]) / dp2;
        const double m = curvature_clamped(tp.utility, d1);
        const double a = d2 - tp.hbar[i] * m;
        const double b = obstacle - sol.delta[i];

        const double comp = scaled_comp(a, b, obstacle);
        sum += comp;
        if (comp >= rep.max_complementarity) {
            rep.max_complementarity = comp;
            rep.worst_node = i;
        }

        double qp;
        if (m != 0.0) qp = d2 / m;
        else qp = b == 0.0 ? tp.hbar[i] : std::numeric_limits<double>::infinity();
        const double prod =
            std::abs((qp - tp.hbar[i]) * b) / ((1.0 + std::abs(tp.hbar[i])) * (1.0 + std::abs(obstacle)));
        rep.max_product = std::max(rep.max_product, prod);
    }
    rep.mean_complementarity = sum / static_cast<double>(n - 2);

    for (std::size_t i = 0; i < n; ++i) {
        const double obstacle = sol.lambda * tp.phi_tilde[i];
        const double over = (sol.delta[i] - obstacle) / (1.0 + std::abs(obstacle));
        rep.max_obstacle_violation = std::max(rep.max_obstacle_violation, over);
    }
    rep.max_obstacle_violation = std::max(rep.max_obstacle_violation, 0.0);
    return rep;
}

std::vector<double> concave_envelope(std::span<const double> f, const Grid& grid) {
    const std::size_t n = f.size();
    if (grid.n() != n) throw GridMismatch("envelope: sample count does not match the grid");

    // upper hull in index coordinates; a point on or under the running chord
    // (within a relative slack so linear stretches collapse) is not a vertex
    std::vector<std::size_t> hull;
    hull.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const std::size_t i1 = hull[hull.size() - 2];
            const std::size_t i2 = hull.back();
            const double dx12 = static_cast<double>(i2 - i1);
            const double dx13 = static_cast<double>(i - i1);
            const double cross = (f[i] - f[i1]) * dx12 - (f[i2] - f[i1]) * dx13;
            const double tol =
                1e-12 * dx13 * (1.0 + std::abs(f[i1]) + std::abs(f[i2]) + std::abs(f[i]));
            if (cross >= -tol) hull.pop_back();
            else break;
        }
        hull.push_back(i);
    }

    std::vector<double> out(n);
    for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
        const std::size_t ia = hull[k], ib = hull[k + 1];
        out[ia] = f[ia];
        const double run = static_cast<double>(ib - ia);
        for (std::size_t i = ia + 1; i < ib; ++i)
            out[i] = f[ia] + (f[ib] - f[ia]) * (static_cast<double>(i - ia) / run);
    }
    out[n - 1] = f[n - 1];
    return out;
}

} // namespace contractsolve
