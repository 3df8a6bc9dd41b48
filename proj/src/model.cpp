#include "contractsolve/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contractsolve/numerics.hpp"

namespace contractsolve {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
        if (!(v[i + 1] > v[i])) return false;
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// UtilitySpec
// ---------------------------------------------------------------------------

UtilitySpec UtilitySpec::cara(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw ValidationError("utility: cara needs alpha > 0");
    UtilitySpec s;
    s.kind_ = UtilityKind::Cara;
    s.alpha_ = alpha;
    s.lower_ = -kInf;
    return s;
}

UtilitySpec UtilitySpec::crra(double gamma) {
    if (!(gamma > 0.0) || gamma == 1.0 || !std::isfinite(gamma))
        throw ValidationError("utility: crra needs gamma > 0, gamma != 1");
    UtilitySpec s;
    s.kind_ = UtilityKind::Crra;
    s.gamma_ = gamma;
    s.lower_ = 0.0;
    return s;
}

UtilitySpec UtilitySpec::log_utility() {
    UtilitySpec s;
    s.kind_ = UtilityKind::LogU;
    s.lower_ = 0.0;
    return s;
}

UtilitySpec UtilitySpec::tabulated(std::vector<double> x, std::vector<double> u) {
    if (x.size() != u.size()) throw ValidationError("utility: table size mismatch");
    if (x.size() < 3) throw ValidationError("utility: table needs at least 3 samples");
    if (!strictly_increasing(x)) throw ValidationError("utility: table abscissae must increase");
    if (!strictly_increasing(u)) throw ValidationError("utility: table values must increase");
    // secant slopes must decrease strictly: that is the concavity of the table
    std::vector<double> sec(x.size() - 1);
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        sec[i] = (u[i + 1] - u[i]) / (x[i + 1] - x[i]);
    for (std::size_t i = 0; i + 1 < sec.size(); ++i)
        if (!(sec[i + 1] < sec[i])) throw ValidationError("utility: table is not strictly concave");

    UtilitySpec s;
    s.kind_ = UtilityKind::Tabulated;
    s.lower_ = x.front();
    s.upper_ = x.back();
    s.td_.resize(x.size());
    s.td_.front() = sec.front();
    s.td_.back() = sec.back();
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
        s.td_[i] = (u[i + 1] - u[i - 1]) / (x[i + 1] - x[i - 1]);
    s.tx_ = std::move(x);
    s.tu_ = std::move(u);
    return s;
}

UtilityEval UtilitySpec::eval(double x) const {
    switch (kind_) {
    case UtilityKind::Cara: {
        const double e = std::exp(-alpha_ * x);
        return {(1.0 - e) / alpha_, e, -alpha_ * e};
    }
    case UtilityKind::Crra: {
        if (!(x > 0.0)) throw DomainError("utility: crra needs x > 0");
        const double du = std::pow(x, -gamma_);
        return {(std::pow(x, 1.0 - gamma_) - 1.0) / (1.0 - gamma_), du, -gamma_ * du / x};
    }
    case UtilityKind::LogU: {
        if (!(x > 0.0)) throw DomainError("utility: log needs x > 0");
        return {std::log(x), 1.0 / x, -1.0 / (x * x)};
    }
    case UtilityKind::Tabulated: {
        if (x < tx_.front() || x > tx_.back())
            throw DomainError("utility: x outside tabulated range");
        const double u = interp_linear(tx_, tu_, x);
        const double du = interp_linear(tx_, td_, x);
        // curvature of the interpolated marginal: slope of td_ on the cell
        std::size_t lo = 0, hi = tx_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (tx_[mid] <= x) lo = mid;
            else hi = mid;
        }
        const double d2u = (td_[lo + 1] - td_[lo]) / (tx_[lo + 1] - tx_[lo]);
        return {u, du, d2u};
    }
    }
    throw Error("utility: unreachable");
}

double UtilitySpec::marginal(double x) const { return eval(x).marginal; }

double UtilitySpec::marginal_inverse(double y) const {
    if (!(y > 0.0) || !std::isfinite(y))
        throw RangeError("utility: marginal inverse needs y > 0");
    switch (kind_) {
    case UtilityKind::Cara:
        return -std::log(y) / alpha_;
    case UtilityKind::Crra:
        return std::pow(y, -1.0 / gamma_);
    case UtilityKind::LogU:
        return 1.0 / y;
    case UtilityKind::Tabulated: {
        // td_ decreases along tx_; bisect the piecewise-linear marginal.
        if (y > td_.front() || y < td_.back())
            throw RangeError("utility: y outside tabulated marginal range");
        double lo = tx_.front(), hi = tx_.back();
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (interp_linear(tx_, td_, mid) >= y) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    }
    }
    throw Error("utility: unreachable");
}

double UtilitySpec::curvature_at_marginal(double y) const {
    switch (kind_) {
    case UtilityKind::Cara:
        return -alpha_ * y;
    case UtilityKind::Crra:
        return -gamma_ * std::pow(y, (gamma_ + 1.0) / gamma_);
    case UtilityKind::LogU:
        return -y * y;
    case UtilityKind::Tabulated:
        return eval(marginal_inverse(y)).curvature;
    }
    throw Error("utility: unreachable");
}

double UtilitySpec::curvature_at_marginal_slope(double y) const {
    switch (kind_) {
    case UtilityKind::Cara:
        return -alpha_;
    case UtilityKind::Crra:
        return -(gamma_ + 1.0) * std::pow(y, 1.0 / gamma_);
    case UtilityKind::LogU:
        return -2.0 * y;
    case UtilityKind::Tabulated: {
        // one-sided difference; the table has no better information
        const double h = 1e-6 * (1.0 + std::abs(y));
        return (curvature_at_marginal(y + h) - curvature_at_marginal(y)) / h;
    }
    }
    throw Error("utility: unreachable");
}

UtilityEval utility_eval(const UtilitySpec& spec, double x) { return spec.eval(x); }
double utility_prime_inverse(const UtilitySpec& spec, double y) { return spec.marginal_inverse(y); }

// ---------------------------------------------------------------------------
// WeightingSpec
// ---------------------------------------------------------------------------

WeightingSpec WeightingSpec::identity() { return WeightingSpec(); }

WeightingSpec WeightingSpec::power(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ValidationError("weighting: power needs gamma > 0");
    WeightingSpec s;
    s.kind_ = WeightingKind::Power;
    s.gamma_ = gamma;
    return s;
}

WeightingSpec WeightingSpec::prelec(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("weighting: prelec needs a, b > 0");
    WeightingSpec s;
    s.kind_ = WeightingKind::Prelec;
    s.a_ = a;
    s.b_ = b;
    return s;
}

WeightingSpec WeightingSpec::tversky_kahneman(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ValidationError("weighting: tk needs gamma > 0");
    WeightingSpec s;
    s.kind_ = WeightingKind::TverskyKahneman;
    s.gamma_ = gamma;
    s.check_monotone(); // small gamma makes the TK form non-monotone
    return s;
}

void WeightingSpec::check_monotone() const {
    const int K = 2000;
    double prev = w(0.0);
    for (int k = 1; k <= K; ++k) {
        const double cur = w(static_cast<double>(k) / K);
        if (!(cur > prev))
            throw ValidationError("weighting: not strictly increasing on [0,1]");
        prev = cur;
    }
}

double WeightingSpec::w(double p) const {
    if (p < 0.0 || p > 1.0) throw DomainError("weighting: p outside [0,1]");
    switch (kind_) {
    case WeightingKind::Identity:
        return p;
    case WeightingKind::Power:
        return std::pow(p, gamma_);
    case WeightingKind::Prelec:
        if (p == 0.0) return 0.0;
        if (p == 1.0) return 1.0;
        return std::exp(-b_ * std::pow(-std::log(p), a_));
    case WeightingKind::TverskyKahneman: {
        const double A = std::pow(p, gamma_);
        const double B = std::pow(1.0 - p, gamma_);
        return A / std::pow(A + B, 1.0 / gamma_);
    }
    }
    throw Error("weighting: unreachable");
}

double WeightingSpec::dw(double p) const {
    if (p < 0.0 || p > 1.0) throw DomainError("weighting: p outside [0,1]");
    switch (kind_) {
    case WeightingKind::Identity:
        return 1.0;
    case WeightingKind::Power:
        if (p == 0.0) return gamma_ < 1.0 ? kInf : (gamma_ == 1.0 ? 1.0 : 0.0);
        return gamma_ * std::pow(p, gamma_ - 1.0);
    case WeightingKind::Prelec: {
        if (p == 0.0 || p == 1.0) {
            // limits of w' at the endpoints depend on the curvature parameter
            if (a_ < 1.0) return kInf;
            if (a_ > 1.0) return 0.0;
            // a == 1 degenerates to the power family p^b
            if (p == 0.0) return b_ < 1.0 ? kInf : (b_ == 1.0 ? 1.0 : 0.0);
            return b_;
        }
        const double L = -std::log(p);
        return w(p) * a_ * b_ * std::pow(L, a_ - 1.0) / p;
    }
    case WeightingKind::TverskyKahneman: {
        if (p == 0.0 || p == 1.0)
            return gamma_ < 1.0 ? kInf : (gamma_ == 1.0 ? 1.0 : 0.0);
        const double A = std::pow(p, gamma_);
        const double B = std::pow(1.0 - p, gamma_);
        const double D = A + B;
        const double pa = std::pow(p, gamma_ - 1.0);
        const double pb = std::pow(1.0 - p, gamma_ - 1.0);
        return std::pow(D, -1.0 / gamma_ - 1.0) * (gamma_ * pa * D - A * (pa - pb));
    }
    }
    throw Error("weighting: unreachable");
}

double WeightingSpec::inverse(double q) const {
    if (q < 0.0 || q > 1.0) throw DomainError("weighting: q outside [0,1]");
    switch (kind_) {
    case WeightingKind::Identity:
        return q;
    case WeightingKind::Power:
        return std::pow(q, 1.0 / gamma_);
    case WeightingKind::Prelec:
        if (q == 0.0) return 0.0;
        if (q == 1.0) return 1.0;
        return std::exp(-std::pow(-std::log(q) / b_, 1.0 / a_));
    case WeightingKind::TverskyKahneman: {
        if (q == 0.0) return 0.0;
        if (q == 1.0) return 1.0;
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (w(mid) <= q) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    }
    }
    throw Error("weighting: unreachable");
}

double WeightingSpec::inverse_reflected(double p) const {
    if (p < 0.0 || p > 1.0) throw DomainError("weighting: p outside [0,1]");
    switch (kind_) {
    case WeightingKind::Identity:
        return p;
    case WeightingKind::Power:
        // 1 - (1-p)^(1/gamma) through expm1 so tiny p keeps full precision
        return -std::expm1(std::log1p(-p) / gamma_);
    case WeightingKind::Prelec: {
        if (p == 0.0) return 0.0;
        if (p == 1.0) return 1.0;
        return -std::expm1(-std::pow(-std::log1p(-p) / b_, 1.0 / a_));
    }
    case WeightingKind::TverskyKahneman:
        return 1.0 - inverse(1.0 - p);
    }
    throw Error("weighting: unreachable");
}

WeightingEval WeightingSpec::eval(double p) const { return {w(p), dw(p), inverse(p)}; }

WeightingEval weighting_eval(const WeightingSpec& spec, double p) { return spec.eval(p); }

// ---------------------------------------------------------------------------
// LossModel
// ---------------------------------------------------------------------------

LossModel LossModel::uniform(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("loss: uniform needs b > 0");
    LossModel m;
    m.kind_ = LossKind::Uniform;
    m.b_ = b;
    return m;
}

LossModel LossModel::mass_at_zero_plus_uniform(double q, double b) {
    if (!(q > 0.0) || !(q < 1.0)) throw ValidationError("loss: atom mass must lie in (0,1)");
    if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("loss: needs b > 0");
    LossModel m;
    m.kind_ = LossKind::MassAtZeroPlusUniform;
    m.q_ = q;
    m.b_ = b;
    return m;
}

LossModel LossModel::tabulated_quantile(std::vector<double> p, std::vector<double> x) {
    if (p.size() != x.size()) throw ValidationError("loss: table size mismatch");
    if (p.size() < 2) throw ValidationError("loss: table needs at least 2 samples");
    if (p.front() != 0.0 || p.back() != 1.0)
        throw ValidationError("loss: tabulated quantile must cover [0,1]");
    if (!strictly_increasing(p)) throw ValidationError("loss: table abscissae must increase");
    if (x.front() < 0.0) throw ValidationError("loss: losses are nonnegative");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (x[i + 1] < x[i]) throw ValidationError("loss: quantile must be nondecreasing");
    LossModel m;
    m.kind_ = LossKind::TabulatedQuantile;
    m.tp_ = std::move(p);
    m.txv_ = std::move(x);
    return m;
}

double LossModel::quantile(double p) const {
    if (p < 0.0 || p > 1.0) throw DomainError("loss: p outside [0,1]");
    switch (kind_) {
    case LossKind::Uniform:
        return b_ * p;
    case LossKind::MassAtZeroPlusUniform:
        return p <= q_ ? 0.0 : b_ * (p - q_) / (1.0 - q_);
    case LossKind::TabulatedQuantile:
        return interp_linear(tp_, txv_, p);
    }
    throw Error("loss: unreachable");
}

LossQuantile LossModel::quantile_with_rate(double p) const {
    const double value = quantile(p);
    const double s = 1.0 - p; // the rate reads the quantile slope at 1-p
    switch (kind_) {
    case LossKind::Uniform:
        return {value, b_, false};
    case LossKind::MassAtZeroPlusUniform: {
        const double slope = b_ / (1.0 - q_);
        if (s > q_) return {value, slope, false};
        if (s < q_) return {value, 0.0, false};
        // kink: report the limit from the left in p
        return {value, slope, true};
    }
    case LossKind::TabulatedQuantile: {
        // cell whose left end is s, i.e. the limit from the left in p
        std::size_t lo = 0, hi = tp_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (tp_[mid] <= s) lo = mid;
            else hi = mid;
        }
        if (s >= tp_.back()) lo = tp_.size() - 2;
        const double slope = (txv_[lo + 1] - txv_[lo]) / (tp_[lo + 1] - tp_[lo]);
        bool kink = false;
        for (std::size_t k = 1; k + 1 < tp_.size(); ++k)
            if (tp_[k] == s) kink = true;
        return {value, slope, kink};
    }
    }
    throw Error("loss: unreachable");
}

double LossModel::mean() const {
    switch (kind_) {
    case LossKind::Uniform:
        return 0.5 * b_;
    case LossKind::MassAtZeroPlusUniform:
        return 0.5 * b_ * (1.0 - q_);
    case LossKind::TabulatedQuantile:
        return trapezoid(tp_, txv_);
    }
    throw Error("loss: unreachable");
}

double LossModel::ess_sup() const { return quantile(1.0); }

double LossModel::cdf(double x) const {
    // smallest p with F^{-1}(p) >= x; at flat stretches this is the left edge
    switch (kind_) {
    case LossKind::Uniform:
        if (x <= 0.0) return 0.0;
        if (x >= b_) return 1.0;
        return x / b_;
    case LossKind::MassAtZeroPlusUniform:
        if (x <= 0.0) return 0.0;
        if (x >= b_) return 1.0;
        return q_ + x * (1.0 - q_) / b_;
    case LossKind::TabulatedQuantile: {
        if (x <= txv_.front()) return 0.0;
        if (x >= txv_.back()) return 1.0;
        std::size_t k = 0;
        while (txv_[k + 1] < x) ++k;
        const double run = txv_[k + 1] - txv_[k];
        if (run == 0.0) return tp_[k + 1];
        return tp_[k] + (x - txv_[k]) * (tp_[k + 1] - tp_[k]) / run;
    }
    }
    throw Error("loss: unreachable");
}

LossQuantile loss_quantile(const LossModel& model, double p) { return model.quantile_with_rate(p); }

// ---------------------------------------------------------------------------
// PhiSpec
// ---------------------------------------------------------------------------

PhiSpec PhiSpec::constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("phi: constant needs c >= 0");
    PhiSpec s;
    s.c_ = c;
    return s;
}

PhiSpec PhiSpec::power(double c, double k) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("phi: power needs c >= 0");
    if (!(k > -1.0)) throw ValidationError("phi: power exponent must exceed -1");
    PhiSpec s;
    s.kind_ = PhiKind::Power;
    s.c_ = c;
    s.k_ = k;
    return s;
}

PhiSpec PhiSpec::tabulated(std::vector<double> t, std::vector<double> v) {
    if (t.size() != v.size()) throw ValidationError("phi: table size mismatch");
    if (t.size() < 2) throw ValidationError("phi: table needs at least 2 samples");
    if (t.front() != 0.0 || t.back() != 1.0) throw ValidationError("phi: table must cover [0,1]");
    if (!strictly_increasing(t)) throw ValidationError("phi: table abscissae must increase");
    for (double y : v)
        if (!(y >= 0.0) || !std::isfinite(y)) throw ValidationError("phi: values must be >= 0");
    PhiSpec s;
    s.kind_ = PhiKind::Tabulated;
    s.tcum_.resize(t.size(), 0.0);
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        s.tcum_[i + 1] = s.tcum_[i] + 0.5 * (v[i] + v[i + 1]) * (t[i + 1] - t[i]);
    s.tt_ = std::move(t);
    s.tv_ = std::move(v);
    return s;
}

double PhiSpec::value(double t) const {
    if (t < 0.0 || t > 1.0) throw DomainError("phi: t outside [0,1]");
    switch (kind_) {
    case PhiKind::Constant:
        return c_;
    case PhiKind::Power:
        if (t == 0.0) return k_ < 0.0 ? kInf : (k_ == 0.0 ? c_ : 0.0);
        return c_ * std::pow(t, k_);
    case PhiKind::Tabulated:
        return interp_linear(tt_, tv_, t);
    }
    throw Error("phi: unreachable");
}

double PhiSpec::cumulative(double t) const {
    if (t < 0.0 || t > 1.0) throw DomainError("phi: t outside [0,1]");
    switch (kind_) {
    case PhiKind::Constant:
        return c_ * t;
    case PhiKind::Power:
        return c_ * std::pow(t, k_ + 1.0) / (k_ + 1.0);
    case PhiKind::Tabulated: {
        if (t == 0.0) return 0.0;
        std::size_t lo = 0, hi = tt_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (tt_[mid] <= t) lo = mid;
            else hi = mid;
        }
        const double vt = interp_linear(tt_, tv_, t);
        return tcum_[lo] + 0.5 * (tv_[lo] + vt) * (t - tt_[lo]);
    }
    }
    throw Error("phi: unreachable");
}

double PhiSpec::cumulative_trapezoid(double t, std::size_t cells) const {
    if (cells == 0) throw QuadratureError("phi: refinement needs at least one cell");
    if (t == 0.0) return 0.0;
    const double dt = t / static_cast<double>(cells);
    double sum = 0.0;
    double prev = value(0.0);
    if (!std::isfinite(prev)) throw QuadratureError("phi: integrand unbounded at 0");
    for (std::size_t i = 1; i <= cells; ++i) {
        const double cur = value(dt * static_cast<double>(i));
        sum += 0.5 * (prev + cur);
        prev = cur;
    }
    return sum * dt;
}

// ---------------------------------------------------------------------------
// ProblemSpec
// ---------------------------------------------------------------------------

double ProblemSpec::varpi() const {
    if (varpi_direct && premium)
        throw ValidationError("problem: give either varpi or premium, not both");
    if (varpi_direct) return *varpi_direct;
    if (premium) return beta + *premium - loss.mean();
    throw ValidationError("problem: varpi or premium required");
}

void ProblemSpec::validate() const {
    if (!std::isfinite(beta) || !(beta > 0.0))
        throw ValidationError("problem: beta must be positive and finite");
    if (!(loss.ess_sup() < beta))
        throw ValidationError("problem: retention level must dominate the loss (ess sup X < beta)");
    (void)varpi();
    // phi integrability is enforced by construction; spot-check the sign
    for (int k = 0; k <= 100; ++k) {
        const double t = static_cast<double>(k) / 100.0;
        const double v = phi.value(t);
        if (v < 0.0) throw ValidationError("problem: phi must be nonnegative");
    }
    if (utility.kind() != UtilityKind::Cara && beta <= utility.domain_lower())
        throw ValidationError("problem: beta must lie inside the utility domain");
}

} // namespace contractsolve
