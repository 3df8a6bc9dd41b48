#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "contractsolve/errors.hpp"

namespace contractsolve {

// ---------------------------------------------------------------------------
// Utility
// ---------------------------------------------------------------------------

enum class UtilityKind { Cara, Crra, LogU, Tabulated };

struct UtilityEval {
    double value;     // u(x)
    double marginal;  // u'(x)
    double curvature; // u''(x)
};

/// Strictly increasing, strictly concave utility. Closed forms for the three
/// parametric families; a guarded piecewise-linear table otherwise.
///
/// Parametric members:
///   cara(alpha):  u(x) = (1 - exp(-alpha x)) / alpha          on all of R
///   crra(gamma):  u(x) = (x^(1-gamma) - 1) / (1-gamma)        on x > 0
///   log():        u(x) = ln x                                  on x > 0
class UtilitySpec {
public:
    static UtilitySpec cara(double alpha);
    static UtilitySpec crra(double gamma);
    static UtilitySpec log_utility();
    // Table of (x, u) samples, x strictly increasing, u strictly increasing
    // and concave. Derivatives come from centered secant slopes.
    static UtilitySpec tabulated(std::vector<double> x, std::vector<double> u);

    UtilityKind kind() const { return kind_; }
    double domain_lower() const { return lower_; }
    double domain_upper() const { return upper_; }

    UtilityEval eval(double x) const;
    double value(double x) const { return eval(x).value; }
    double marginal(double x) const;

    // Inverse of u'. Throws RangeError when y is not a marginal value.
    double marginal_inverse(double y) const;

    // u''((u')^{-1}(y)) and its derivative in y; the nonlinearity the interior
    // solver actually needs. Closed forms:
    //   cara(alpha): -alpha * y        crra(gamma): -gamma * y^((gamma+1)/gamma)
    //   log:         -y^2
    double curvature_at_marginal(double y) const;
    double curvature_at_marginal_slope(double y) const;

private:
    UtilitySpec() = default;

    UtilityKind kind_ = UtilityKind::Cara;
    double alpha_ = 1.0;
    double gamma_ = 2.0;
    double lower_ = -std::numeric_limits<double>::infinity();
    double upper_ = std::numeric_limits<double>::infinity();
    // tabulated data
    std::vector<double> tx_, tu_, td_; // nodes, values, node slopes (decreasing)
};

struct UtilityTriple {
    double u, du, d2u;
};

UtilityEval utility_eval(const UtilitySpec& spec, double x);
double utility_prime_inverse(const UtilitySpec& spec, double y);

// ---------------------------------------------------------------------------
// Probability weighting
// ---------------------------------------------------------------------------

enum class WeightingKind { Identity, Power, Prelec, TverskyKahneman };

struct WeightingEval {
    double w;       // w(p)
    double dw;      // w'(p)
    double inverse; // w^{-1}(p)
};

/// Continuously differentiable increasing bijection of [0,1].
///   power(g):      w(p) = p^g
///   prelec(a, b):  w(p) = exp(-b (-ln p)^a)
///   tk(g):         w(p) = p^g / (p^g + (1-p)^g)^(1/g)
class WeightingSpec {
public:
    static WeightingSpec identity();
    static WeightingSpec power(double gamma);
    static WeightingSpec prelec(double a, double b);
    static WeightingSpec tversky_kahneman(double gamma);

    WeightingKind kind() const { return kind_; }

    double w(double p) const;
    // Derivative in the interior; at the endpoints this is the one-sided
    // limit and may be +inf for some parameter ranges.
    double dw(double p) const;
    double inverse(double q) const; // closed form except TK (bisection)
    // 1 - inverse(1 - p), computed without cancellation near the ends.
    double inverse_reflected(double p) const;

    WeightingEval eval(double p) const;

private:
    WeightingSpec() = default;
    void check_monotone() const; // sampled check, used for TK construction

    WeightingKind kind_ = WeightingKind::Identity;
    double gamma_ = 1.0;
    double a_ = 1.0, b_ = 1.0;
};

WeightingEval weighting_eval(const WeightingSpec& spec, double p);

// ---------------------------------------------------------------------------
// Loss model
// ---------------------------------------------------------------------------

enum class LossKind { Uniform, MassAtZeroPlusUniform, TabulatedQuantile };

struct LossQuantile {
    double quantile;     // F_X^{-1}(p)
    double rate;         // h(p) = (F_X^{-1})'(1-p)
    bool one_sided;      // true when 1-p sits on a kink and rate is a one-sided value
};

/// Nonnegative loss with ess sup < beta, described through its quantile.
class LossModel {
public:
    static LossModel uniform(double b);
    // P(X = 0) = q, conditional Uniform(0, b) above. Quantile
    // F^{-1}(p) = max(0, b (p-q)/(1-q)).
    static LossModel mass_at_zero_plus_uniform(double q, double b);
    static LossModel tabulated_quantile(std::vector<double> p, std::vector<double> x);

    LossKind kind() const { return kind_; }

    double quantile(double p) const;
    // Quantile plus the derivative bound h(p); at kinks of the tabulated or
    // mixed models the rate is the limit from the left in p, flagged.
    LossQuantile quantile_with_rate(double p) const;

    double mean() const;    // exact for every kind
    double ess_sup() const; // quantile at 1

    // Distribution function matching the quantile: smallest p with
    // F^{-1}(p) >= x. Places the whole atom of a point mass below x = 0+.
    double cdf(double x) const;

    double atom_at_zero() const { return kind_ == LossKind::MassAtZeroPlusUniform ? q_ : 0.0; }

private:
    LossModel() = default;

    LossKind kind_ = LossKind::Uniform;
    double b_ = 1.0;
    double q_ = 0.0;
    std::vector<double> tp_, txv_; // tabulated quantile samples
};

LossQuantile loss_quantile(const LossModel& model, double p);

// ---------------------------------------------------------------------------
// Budget weight phi
// ---------------------------------------------------------------------------

enum class PhiKind { Constant, Power, Tabulated };

/// Nonnegative integrable weight on [0,1] entering the budget constraint.
/// power(c, k) means phi(t) = c t^k with k > -1 so the integral converges.
class PhiSpec {
public:
    static PhiSpec constant(double c = 1.0);
    static PhiSpec power(double c, double k);
    static PhiSpec tabulated(std::vector<double> t, std::vector<double> v);

    PhiKind kind() const { return kind_; }

    double value(double t) const;
    // Exact running integral int_0^t phi. Constant and power kinds integrate
    // in closed form; the piecewise-linear table integrates cell by cell.
    double cumulative(double t) const;
    double total() const { return cumulative(1.0); }

    // Composite trapezoid on a uniform refinement of [0, t]; kept as an
    // independent cross-check of cumulative().
    double cumulative_trapezoid(double t, std::size_t cells) const;

private:
    PhiSpec() = default;

    PhiKind kind_ = PhiKind::Constant;
    double c_ = 1.0;
    double k_ = 0.0;
    std::vector<double> tt_, tv_, tcum_; // table nodes, values, exact prefix integrals
};

// ---------------------------------------------------------------------------
// Problem
// ---------------------------------------------------------------------------

/// Full contract-design instance. The retention ceiling beta must dominate
/// the loss (ess sup X < beta). The budget level can be given directly
/// (varpi) or through a premium pi, in which case varpi = beta + pi - E[X].
struct ProblemSpec {
    double beta = 0.0;
    std::optional<double> premium;
    std::optional<double> varpi_direct;

    UtilitySpec utility = UtilitySpec::cara(1.0);
    WeightingSpec weighting = WeightingSpec::identity();
    LossModel loss = LossModel::uniform(1.0);
    PhiSpec phi = PhiSpec::constant(1.0);

    double varpi() const;
    void validate() const;
};

} // namespace contractsolve
