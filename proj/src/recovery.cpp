#include "contractsolve/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contractsolve/numerics.hpp"

namespace contractsolve {

std::vector<double> recover_quantile(const FbpSolution& sol, const WeightingSpec& w,
                                     const Grid& grid) {
    const std::size_t n = grid.n();
    if (sol.quantile.size() != n) throw GridMismatch("recover: solution grid mismatch");
    std::vector<double> G(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - w.w(1.0 - grid.p[i]);
        G[i] = interp_uniform(sol.quantile, z);
    }
    G[n - 1] = sol.quantile.back();
    return G;
}

Contract recover_contract(std::span<const double> G, const Grid& grid, const LossModel& loss,
                          double beta, std::size_t samples) {
    if (samples < 2) throw ValidationError("recover: need at least two contract samples");
    if (G.size() != grid.n()) throw GridMismatch("recover: quantile grid mismatch");
    const double anchor = G.back();
    if (std::abs(anchor - beta) > 1e-6 * (1.0 + std::abs(beta)))
        throw ValidationError("recover: beta does not match the recovered quantile");

    const double xmax = loss.ess_sup();
    Contract ct;
    ct.x.resize(samples);
    ct.retention.resize(samples);
    ct.indemnity.resize(samples);

    std::vector<double> raw(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        ct.x[j] = xmax * static_cast<double>(j) / static_cast<double>(samples - 1);
        raw[j] = anchor - interp_uniform(G, 1.0 - loss.cdf(ct.x[j]));
    }

    // clip the raw increments into [0, dx]; interpolation wiggle would
    // otherwise leave slope excursions of the order of the grid error
    ct.retention[0] = raw[0];
    for (std::size_t j = 0; j + 1 < samples; ++j) {
        const double dx = ct.x[j + 1] - ct.x[j];
        const double d = raw[j + 1] - raw[j];
        const double dc = std::clamp(d, 0.0, dx);
        ct.max_increment_clip = std::max(ct.max_increment_clip, std::abs(dc - d));
        ct.retention[j + 1] = ct.retention[j] + dc;
    }
    for (std::size_t j = 0; j < samples; ++j) ct.indemnity[j] = ct.x[j] - ct.retention[j];

    // E[R(X)] = beta - int_0^1 G; the premium is the complementary mean
    const double mean_R = anchor - trapezoid_uniform(G, grid.dp);
    ct.premium = loss.mean() - mean_R;

    ct.ic = validate_incentive_compatibility(ct.x, ct.retention);
    return ct;
}

ViolationReport validate_incentive_compatibility(std::span<const double> x,
                                                 std::span<const double> retention) {
    if (x.size() != retention.size()) throw SizeError("ic: length mismatch");
    if (x.size() < 2) throw SizeError("ic: need at least two samples");
    ViolationReport rep;
    for (std::size_t j = 0; j + 1 < x.size(); ++j) {
        const double dx = x[j + 1] - x[j];
        const double d = retention[j + 1] - retention[j];
        const double tol = 1e-9 * (1.0 + dx);
        const double excess = std::max(-d, d - dx);
        if (excess > tol) {
            ++rep.violations;
            if (excess > rep.worst_magnitude) {
                rep.worst_magnitude = excess;
                rep.worst_index = j;
            }
        }
    }
    return rep;
}

double rdut_value(std::span<const double> G, const Grid& grid, const UtilitySpec& u,
                  const WeightingSpec& w, std::size_t refine) {
    if (refine == 0) throw ValidationError("rdut: refinement must be positive");
    if (G.size() != grid.n()) throw GridMismatch("rdut: quantile grid mismatch");
    const std::size_t K = (grid.n() - 1) * refine;
    const double sub = grid.dp / static_cast<double>(refine);

    auto eval_u = [&](double t) {
        auto once = [&](double tt) {
            const double v = u.value(interp_uniform(G, tt));
            if (!std::isfinite(v)) throw DomainError("rdut: utility diverged");
            return v;
        };
        try {
            return once(t);
        } catch (const DomainError&) {
            // integrable endpoint singularities get a half-subcell nudge
            if (t == 0.0) return once(0.5 * sub);
            if (t == 1.0) return once(1.0 - 0.5 * sub);
            throw EvalError("rdut: utility diverged inside the domain");
        }
    };

    double V = 0.0;
    double mu_prev = 0.0;
    double u_prev = eval_u(0.0);
    for (std::size_t k = 1; k <= K; ++k) {
        const double t = k == K ? 1.0 : static_cast<double>(k) * sub;
        const double mu = 1.0 - w.w(1.0 - t);
        const double uv = eval_u(t);
        V += 0.5 * (u_prev + uv) * (mu - mu_prev);
        mu_prev = mu;
        u_prev = uv;
    }
    return V;
}

} // namespace contractsolve
