#include "contractsolve/transform.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "contractsolve/numerics.hpp"

namespace contractsolve {

NuEval nu_map(const WeightingSpec& w, double p) {
    if (p < 0.0 || p > 1.0) throw DomainError("transform: p outside [0,1]");
    NuEval out;
    out.nu = w.inverse_reflected(p);
    const double slope = w.dw(1.0 - out.nu);
    out.nu_prime = 1.0 / slope;
    out.singular = !std::isfinite(out.nu_prime);
    return out;
}

namespace {

[[noreturn]] void singular_at(const char* what, double p) {
    std::ostringstream os;
    os << "transform: " << what << " unbounded at p = " << p;
    throw SingularDerivative(os.str());
}

// One-sided limit of the cumulative-phi slope at an endpoint of [0,1],
// taken when the pointwise product phi(nu) * nu' is indeterminate there.
// Secants at three scales must contract; a non-contracting sequence means
// the slope genuinely diverges and is reported, not patched.
double phi_slope_limit(const ProblemSpec& spec, double p_end) {
    const double eps = 1e-6;
    auto cum = [&](double p) { return spec.phi.cumulative(nu_map(spec.weighting, p).nu); };
    auto secant = [&](double e) {
        if (p_end == 0.0) return cum(e) / e;
        return (cum(1.0) - cum(1.0 - e)) / e;
    };
    const double s1 = secant(eps);
    const double s2 = secant(0.5 * eps);
    const double s4 = secant(0.25 * eps);
    if (!std::isfinite(s4) || std::abs(s4) > 1e12) singular_at("phi_tilde'", p_end);
    const double d1 = s2 - s1;
    const double d2 = s4 - s2;
    if (std::abs(d2) <= 1e-7 * (1.0 + std::abs(s4))) return 2.0 * s4 - s2;
    if (std::abs(d2) >= 0.9 * std::abs(d1)) singular_at("phi_tilde'", p_end);
    // geometric-tail estimate from the contraction ratio
    return s4 + d2 * d2 / (d1 - d2);
}

} // namespace

TransformedProblem transform_problem(const ProblemSpec& spec, const Grid& grid) {
    spec.validate();
    TransformedProblem tp;
    tp.grid = grid;
    tp.beta = spec.beta;
    tp.varpi = spec.varpi();
    tp.phi_total = spec.phi.cumulative(1.0);
    tp.utility = spec.utility;

    const std::size_t n = grid.n();
    tp.hbar.resize(n);
    tp.phi_tilde.resize(n);
    tp.phi_tilde_prime.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double p = grid.p[i];
        const NuEval nv = nu_map(spec.weighting, p);

        tp.phi_tilde[i] = spec.phi.cumulative(nv.nu);

        const double rate = spec.loss.quantile_with_rate(nv.nu).rate;
        if (rate == 0.0) {
            tp.hbar[i] = 0.0;
        } else if (!std::isfinite(nv.nu_prime)) {
            singular_at("hbar", p);
        } else {
            tp.hbar[i] = rate * nv.nu_prime;
            if (!std::isfinite(tp.hbar[i])) singular_at("hbar", p);
        }

        const double phiv = spec.phi.value(nv.nu);
        double slope = phiv * nv.nu_prime;
        if (!std::isfinite(slope)) {
            const bool indeterminate =
                (phiv == 0.0 && !std::isfinite(nv.nu_prime)) ||
                (!std::isfinite(phiv) && nv.nu_prime == 0.0) ||
                std::isnan(slope);
            if ((i == 0 || i + 1 == n) && indeterminate)
                slope = phi_slope_limit(spec, p);
            else
                singular_at("phi_tilde'", p);
        }
        tp.phi_tilde_prime[i] = slope;
    }
    return tp;
}

Classification feasibility_classify(const TransformedProblem& tp) {
    const std::size_t n = tp.grid.n();
    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) integrand[i] = tp.phi_tilde[i] * tp.hbar[i];
    const double threshold =
        tp.beta * tp.phi_tilde.back() - trapezoid_uniform(integrand, tp.grid.dp);

    Classification out;
    out.threshold = threshold;
    const double tol = 1e-9 * (1.0 + std::abs(threshold));
    if (tp.varpi < threshold - tol) {
        out.status = Feasibility::Infeasible;
    } else if (tp.varpi <= threshold + tol) {
        out.status = Feasibility::UniqueSolution;
        const std::vector<double> tail = cumulative_from_right(tp.grid.p, tp.hbar);
        out.unique_solution.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.unique_solution[i] = tp.beta - tail[i];
    } else {
        out.status = Feasibility::Feasible;
    }
    return out;
}

} // namespace contractsolve
