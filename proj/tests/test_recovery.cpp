#include <doctest.h>

#include <cmath>
#include <vector>

#include "contractsolve/recovery.hpp"

using namespace contractsolve;

namespace {

FbpSolution synthetic(const Grid& g, double (*f)(double)) {
    FbpSolution s;
    s.quantile.resize(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) s.quantile[i] = f(g.p[i]);
    return s;
}

} // namespace

TEST_CASE("identity weighting leaves the quantile alone") {
    Grid g = Grid::uniform(101);
    FbpSolution s = synthetic(g, [](double p) { return 1.0 + p; });
    std::vector<double> G = recover_quantile(s, WeightingSpec::identity(), g);
    for (std::size_t i = 0; i < g.n(); ++i)
        CHECK(G[i] == doctest::Approx(s.quantile[i]).epsilon(1e-14));
    CHECK(G.back() == 2.0);
}

TEST_CASE("curved weighting resamples at reflected ranks") {
    // G(p) = Q(1 - w(1-p)); for Q = 1 + p and w = p^2 the midpoint maps to
    // 1 - 0.25 = 0.75.
    Grid g = Grid::uniform(101);
    FbpSolution s = synthetic(g, [](double p) { return 1.0 + p; });
    std::vector<double> G = recover_quantile(s, WeightingSpec::power(2.0), g);
    CHECK(G[50] == doctest::Approx(1.75).epsilon(1e-14));
    CHECK(G.front() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(G.back() == 2.0);
    FbpSolution bad = s;
    bad.quantile.pop_back();
    CHECK_THROWS_AS(recover_quantile(bad, WeightingSpec::identity(), g), GridMismatch);
}

TEST_CASE("unit-slope quantile is full retention") {
    Grid g = Grid::uniform(101);
    std::vector<double> G(101);
    for (std::size_t i = 0; i < 101; ++i) G[i] = 1.0 + g.p[i];
    Contract ct = recover_contract(G, g, LossModel::uniform(1.0), 2.0);
    CHECK(ct.retention.front() == 0.0);
    for (std::size_t j = 0; j < ct.x.size(); ++j) {
        CHECK(ct.retention[j] == doctest::Approx(ct.x[j]).epsilon(1e-12));
        CHECK(ct.indemnity[j] + ct.retention[j] == ct.x[j]);
    }
    CHECK(ct.premium == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ct.ic.violations == 0);
}

TEST_CASE("half-slope quantile splits the loss") {
    Grid g = Grid::uniform(101);
    std::vector<double> G(101);
    for (std::size_t i = 0; i < 101; ++i) G[i] = 1.5 + 0.5 * g.p[i];
    Contract ct = recover_contract(G, g, LossModel::uniform(1.0), 2.0);
    for (std::size_t j = 0; j < ct.x.size(); ++j)
        CHECK(ct.retention[j] == doctest::Approx(0.5 * ct.x[j]).epsilon(1e-12));
    CHECK(ct.premium == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(ct.max_increment_clip < 1e-12);
}

TEST_CASE("steep stretches are clipped to unit slope") {
    // R(x) = x^2 raw: admissible below x = 0.5, slope 2x > 1 beyond, so the
    // clipped schedule runs at slope one and ends at 0.25 + 0.5.
    Grid g = Grid::uniform(101);
    std::vector<double> G(101);
    for (std::size_t i = 0; i < 101; ++i) G[i] = 2.0 - (1.0 - g.p[i]) * (1.0 - g.p[i]);
    Contract ct = recover_contract(G, g, LossModel::uniform(1.0), 2.0);
    CHECK(ct.max_increment_clip > 1e-4);
    CHECK(ct.ic.violations == 0);
    CHECK(ct.retention.front() == 0.0);
    CHECK(ct.retention.back() == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(ct.premium == doctest::Approx(1.0 / 6.0).epsilon(1e-4));
    double smax = 0.0;
    for (std::size_t j = 0; j + 1 < ct.x.size(); ++j)
        smax = std::max(smax, (ct.retention[j + 1] - ct.retention[j]) / (ct.x[j + 1] - ct.x[j]));
    CHECK(smax <= 1.0 + 1e-12);
}

TEST_CASE("atom at zero still starts the schedule at zero") {
    Grid g = Grid::uniform(101);
    std::vector<double> G(101);
    for (std::size_t i = 0; i < 101; ++i) G[i] = 1.5 + 0.5 * g.p[i];
    Contract ct = recover_contract(G, g, LossModel::mass_at_zero_plus_uniform(0.5, 1.0), 2.0);
    CHECK(ct.retention.front() == 0.0);
    CHECK(ct.premium == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ct.ic.violations == 0);
}

TEST_CASE("contract guards") {
    Grid g = Grid::uniform(101);
    std::vector<double> G(101, 1.0);
    CHECK_THROWS_AS(recover_contract(G, g, LossModel::uniform(1.0), 2.0), ValidationError);
    std::vector<double> shorter(100, 2.0);
    CHECK_THROWS_AS(recover_contract(shorter, g, LossModel::uniform(1.0), 2.0), GridMismatch);
    std::vector<double> ok(101, 2.0);
    CHECK_THROWS_AS(recover_contract(ok, g, LossModel::uniform(1.0), 2.0, 1), ValidationError);
}

TEST_CASE("incentive check flags both slope violations") {
    std::vector<double> x{0.0, 0.5, 1.0};
    ViolationReport ok = validate_incentive_compatibility(x, {{0.0, 0.25, 0.5}});
    CHECK(ok.violations == 0);
    ViolationReport steep = validate_incentive_compatibility(x, {{0.0, 1.0, 2.0}});
    CHECK(steep.violations == 2);
    CHECK(steep.worst_magnitude == doctest::Approx(0.5).epsilon(1e-12));
    ViolationReport falling = validate_incentive_compatibility(x, {{0.0, -0.5, -1.0}});
    CHECK(falling.violations == 2);
    CHECK_THROWS_AS(validate_incentive_compatibility(x, {{0.0, 0.25}}), SizeError);
}

TEST_CASE("rank-dependent value of a constant is the utility") {
    Grid g = Grid::uniform(101);
    std::vector<double> G(101, 1.7);
    double v = rdut_value(G, g, UtilitySpec::cara(1.0), WeightingSpec::prelec(0.65, 1.0));
    CHECK(v == doctest::Approx(1.0 - std::exp(-1.7)).epsilon(1e-12));
}

TEST_CASE("rank-dependent value matches a closed form under reweighting") {
    // int_0^1 u(1+p) d(1-(1-p)^2) = 1 - 2 e^-2 for exponential utility
    Grid g = Grid::uniform(101);
    std::vector<double> G(101);
    for (std::size_t i = 0; i < 101; ++i) G[i] = 1.0 + g.p[i];
    double v = rdut_value(G, g, UtilitySpec::cara(1.0), WeightingSpec::power(2.0));
    CHECK(v == doctest::Approx(1.0 - 2.0 * std::exp(-2.0)).epsilon(1e-7));
}

TEST_CASE("integrable endpoint singularity is nudged, interior one throws") {
    Grid g = Grid::uniform(101);
    std::vector<double> G(101);
    for (std::size_t i = 0; i < 101; ++i) G[i] = g.p[i];
    double v = rdut_value(G, g, UtilitySpec::log_utility(), WeightingSpec::identity());
    CHECK(v == doctest::Approx(-1.0).epsilon(1e-3));
    double v64 = rdut_value(G, g, UtilitySpec::log_utility(), WeightingSpec::identity(), 64);
    CHECK(std::abs(v64 + 1.0) < std::abs(v + 1.0));
    std::vector<double> vee(101);
    for (std::size_t i = 0; i < 101; ++i) vee[i] = std::abs(2.0 * g.p[i] - 1.0);
    CHECK_THROWS_AS(rdut_value(vee, g, UtilitySpec::log_utility(), WeightingSpec::identity()),
                    EvalError);
    CHECK_THROWS_AS(rdut_value(G, g, UtilitySpec::log_utility(), WeightingSpec::identity(), 0),
                    ValidationError);
}
