#include "contractsolve/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contractsolve/numerics.hpp"

namespace contractsolve {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double objective_of(const UtilitySpec& u, double lambda, std::span<const double> Q,
                    std::span<const double> pp, double dq) {
    double J = 0.0;
    for (std::size_t i = 0; i < Q.size(); ++i)
        J += (u.value(Q[i]) - lambda * Q[i] * pp[i]) * dq;
    return J;
}

} // namespace

OracleResult oracle_exhaustive(const TransformedProblem& tp, double lambda, std::size_t m,
                               std::size_t levels) {
    if (m < 2) throw ValidationError("oracle: need at least two nodes");
    if (levels < 2) throw ValidationError("oracle: need at least two levels");
    {
        double cost = 1.0;
        for (std::size_t j = 0; j + 1 < m; ++j) cost *= static_cast<double>(levels);
        if (cost > 2e7) throw ValidationError("oracle: increment lattice too large");
    }

    const std::size_t n = tp.grid.n();
    const double dq = 1.0 / static_cast<double>(m - 1);
    std::vector<double> nodes(m), hb(m), pp(m);
    const bool exact = (n - 1) % (m - 1) == 0;
    for (std::size_t j = 0; j < m; ++j) {
        nodes[j] = static_cast<double>(j) * dq;
        if (exact) {
            const std::size_t idx = j * ((n - 1) / (m - 1));
            hb[j] = tp.hbar[idx];
            pp[j] = tp.phi_tilde_prime[idx];
        } else {
            hb[j] = interp_uniform(tp.hbar, nodes[j]);
            pp[j] = interp_uniform(tp.phi_tilde_prime, nodes[j]);
        }
    }

    std::vector<std::size_t> idx(m - 1, 0);
    std::vector<double> c(m - 1, 0.0), Q(m), term(m), tail(m + 1, 0.0), bestC;
    double bestJ = kNegInf;
    long long evals = 0;

    // Incremental scoring: the odometer only changes digits 0..k, so only
    // Q_0..Q_k and their objective terms move; tail[j] holds the suffix sum
    // of terms from j up. A term outside the utility domain scores NaN,
    // which poisons the suffix sum and drops the candidate.
    auto term_of = [&](std::size_t j) {
        try {
            return (tp.utility.value(Q[j]) - lambda * Q[j] * pp[j]) * dq;
        } catch (const DomainError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    auto rescore_below = [&](std::size_t k) {
        for (std::size_t j = k + 1; j-- > 0;) {
            Q[j] = Q[j + 1] - c[j];
            term[j] = term_of(j);
            tail[j] = tail[j + 1] + term[j];
        }
    };
    Q[m - 1] = tp.beta;
    term[m - 1] = term_of(m - 1);
    tail[m - 1] = term[m - 1];
    rescore_below(m - 2);

    for (;;) {
        const double J = tail[0];
        ++evals;
        bool take = J > bestJ;
        if (!take && J == bestJ && !bestC.empty())
            take = std::lexicographical_compare(bestC.begin(), bestC.end(), c.begin(), c.end());
        if (take) {
            bestJ = J;
            bestC = c;
        }

        std::size_t k = 0;
        while (k + 1 < m && ++idx[k] == levels) idx[k++] = 0;
        if (k + 1 == m) break;
        for (std::size_t j = 0; j <= k; ++j)
            c[j] = hb[j] * dq * static_cast<double>(idx[j]) / static_cast<double>(levels - 1);
        rescore_below(k);
    }
    if (bestC.empty()) throw EvalError("oracle: every lattice candidate left the utility domain");

    OracleResult out;
    out.nodes = std::move(nodes);
    out.quantile.resize(m);
    out.quantile[m - 1] = tp.beta;
    for (std::size_t j = m - 1; j-- > 0;) out.quantile[j] = out.quantile[j + 1] - bestC[j];
    out.objective = bestJ;
    out.evaluations = evals;
    return out;
}

OracleResult oracle_projected(const TransformedProblem& tp, double lambda) {
    const std::size_t n = tp.grid.n();
    const double dp = tp.grid.dp;
    const UtilitySpec& u = tp.utility;
    const std::vector<double>& pp = tp.phi_tilde_prime;

    std::vector<double> cmax(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) cmax[j] = tp.hbar[j] * dp;

    // start at the pointwise target u'(Q) = lambda phi_tilde', folded into the
    // slope box by a backward pass
    std::vector<double> Q(n);
    Q[n - 1] = tp.beta;
    for (std::size_t i = n - 1; i-- > 0;) {
        double cand = Q[i + 1];
        const double y = lambda * pp[i];
        if (y > u.marginal(Q[i + 1])) {
            try {
                cand = u.marginal_inverse(y);
            } catch (const RangeError&) {
                cand = Q[i + 1] - cmax[i];
            }
        }
        Q[i] = std::clamp(cand, Q[i + 1] - cmax[i], Q[i + 1]);
        if (std::isfinite(u.domain_lower()) && Q[i] <= u.domain_lower())
            Q[i] = std::min(Q[i + 1], u.domain_lower() + 1e-9 * (1.0 + std::abs(tp.beta)));
    }
    std::vector<double> c(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) c[j] = Q[j + 1] - Q[j];

    std::vector<double> spp(n); // prefix sums of phi_tilde'
    spp[0] = pp[0];
    for (std::size_t i = 1; i < n; ++i) spp[i] = spp[i - 1] + pp[i];

    double ppmax = 0.0;
    for (double v : pp) ppmax = std::max(ppmax, v);

    long long evals = 0;
    // moving coordinate j by t lowers Q_0..Q_j by t; the directional
    // derivative is g(t) = sum_{i<=j} dp (lambda pp_i - u'(Q_i - t))
    auto grad = [&](std::size_t j, double t) {
        double s = 0.0;
        for (std::size_t i = 0; i <= j; ++i) s += u.marginal(Q[i] - t);
        ++evals;
        return dp * (lambda * spp[j] - s);
    };
    auto curv = [&](std::size_t j, double t) {
        double s = 0.0;
        for (std::size_t i = 0; i <= j; ++i) s += u.eval(Q[i] - t).curvature;
        return dp * s;
    };

    double J = objective_of(u, lambda, Q, pp, dp);
    const int max_sweeps = 5000;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        for (std::size_t j = 0; j + 1 < n; ++j) {
            double t_lo = -c[j];
            double t_hi = cmax[j] - c[j];
            if (std::isfinite(u.domain_lower()))
                t_hi = std::min(t_hi, Q[0] - u.domain_lower() -
                                          1e-12 * (1.0 + std::abs(u.domain_lower())));
            if (t_hi < t_lo) t_hi = t_lo;

            const double gtol =
                1e-13 * dp * static_cast<double>(j + 1) * (1.0 + lambda) * (1.0 + ppmax);
            double t = std::clamp(0.0, t_lo, t_hi);
            for (int it = 0; it < 60; ++it) {
                const double g = grad(j, t);
                if (std::abs(g) <= gtol) break;
                if (t >= t_hi && g > 0.0) break;
                if (t <= t_lo && g < 0.0) break;
                const double gp = curv(j, t);
                if (!(gp < 0.0)) break;
                double tn = t - g / gp;
                tn = std::clamp(tn, t_lo, t_hi);
                if (std::abs(tn - t) <= 1e-15 * (1.0 + std::abs(t))) {
                    t = tn;
                    break;
                }
                t = tn;
            }
            if (t != 0.0) {
                for (std::size_t i = 0; i <= j; ++i) Q[i] -= t;
                c[j] += t;
            }
        }

        const double Jn = objective_of(u, lambda, Q, pp, dp);
        const bool small_step = Jn - J < 1e-12 * (1.0 + std::abs(Jn));
        J = Jn;
        if (!small_step) continue;

        bool kkt = true;
        for (std::size_t j = 0; j + 1 < n && kkt; ++j) {
            const double g = grad(j, 0.0);
            const double tol = 1e-9 * (1.0 + lambda) * (1.0 + ppmax);
            const double room_up = cmax[j] - c[j];
            if (c[j] <= 1e-14 && g <= tol) continue;       // lower face, push down only
            if (room_up <= 1e-14 && g >= -tol) continue;   // upper face, push up only
            if (std::abs(g) <= tol) continue;              // interior stationarity
            kkt = false;
        }
        if (kkt) break;
    }
    if (sweep == max_sweeps)
        throw NoConvergence("oracle: coordinate ascent stalled", sweep, 0.0);

    OracleResult out;
    out.nodes = tp.grid.p;
    out.quantile = std::move(Q);
    out.objective = J;
    out.evaluations = evals;
    return out;
}

Comparison compare(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw SizeError("compare: length mismatch");
    if (a.empty()) throw SizeError("compare: empty input");
    Comparison c;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        c.sup = std::max(c.sup, d);
        sum += d;
    }
    c.mean = sum / static_cast<double>(a.size());
    return c;
}

} // namespace contractsolve
