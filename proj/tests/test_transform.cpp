#include <doctest.h>

#include <cmath>

#include "contractsolve/numerics.hpp"
#include "contractsolve/transform.hpp"

using namespace contractsolve;

namespace {

ProblemSpec base_problem() {
    ProblemSpec ps;
    ps.beta = 2.0;
    ps.varpi_direct = 1.7;
    ps.utility = UtilitySpec::cara(1.0);
    ps.loss = LossModel::uniform(1.0);
    return ps;
}

} // namespace

TEST_CASE("rank change of variable point values") {
    NuEval nv = nu_map(WeightingSpec::identity(), 0.7);
    CHECK(nv.nu == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(nv.nu_prime == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(!nv.singular);

    // w(p) = p^2: nu = 1 - sqrt(1-p)
    nv = nu_map(WeightingSpec::power(2.0), 0.75);
    CHECK(nv.nu == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(nv.nu_prime == doctest::Approx(1.0).epsilon(1e-14));

    CHECK(nu_map(WeightingSpec::power(2.0), 1.0).nu == 1.0);
    CHECK(nu_map(WeightingSpec::prelec(0.65, 1.0), 1.0).nu == 1.0);
    CHECK(nu_map(WeightingSpec::tversky_kahneman(0.61), 1.0).nu == 1.0);
    CHECK(nu_map(WeightingSpec::power(2.0), 0.0).nu == 0.0);

    // w' vanishes at the pulled-back endpoint
    nv = nu_map(WeightingSpec::power(2.0), 1.0);
    CHECK(nv.singular);
    CHECK(std::isinf(nv.nu_prime));
}

TEST_CASE("reflected inverse keeps precision near zero") {
    const WeightingSpec pr = WeightingSpec::prelec(0.65, 1.0);
    const double p = 2.5e-7;
    const double nu = pr.inverse_reflected(p);
    // nu ~ p^{1/a} near zero, so nu^a recovers p to full relative precision
    CHECK(std::pow(nu, 0.65) == doctest::Approx(p).epsilon(1e-9));
    CHECK(WeightingSpec::power(2.0).inverse_reflected(1e-12) ==
          doctest::Approx(5e-13).epsilon(1e-9));
}

TEST_CASE("transform is the identity when the weighting is") {
    ProblemSpec ps = base_problem();
    const Grid grid = Grid::uniform(129);
    const TransformedProblem tp = transform_problem(ps, grid);
    for (std::size_t i = 0; i < grid.n(); ++i) {
        CHECK(tp.hbar[i] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(tp.phi_tilde[i] == doctest::Approx(grid.p[i]).epsilon(1e-14));
        CHECK(tp.phi_tilde_prime[i] == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(tp.phi_total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tp.beta == 2.0);
    CHECK(tp.varpi == doctest::Approx(1.7));
}

TEST_CASE("cumulative weight under reweighted ranks") {
    // w(p) = sqrt(p): nu = 1 - (1-p)^2, phi == 1 makes phi_tilde = nu
    ProblemSpec ps = base_problem();
    ps.weighting = WeightingSpec::power(0.5);
    TransformedProblem tp = transform_problem(ps, Grid::uniform(1025));
    CHECK(tp.phi_tilde[512] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(tp.phi_tilde_prime.front() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(tp.phi_tilde_prime.back() == 0.0);
    CHECK(tp.hbar.back() == 0.0);

    // w(p) = p^2 pushes the midpoint to 1 - sqrt(1/2); the full transform
    // would blow up at p = 1 for this weighting, so check the map alone
    CHECK(nu_map(WeightingSpec::power(2.0), 0.5).nu ==
          doctest::Approx(1.0 - std::sqrt(0.5)).epsilon(1e-13));
}

TEST_CASE("linear phi gives a quadratic cumulative") {
    ProblemSpec ps = base_problem();
    ps.phi = PhiSpec::power(2.0, 1.0); // phi(t) = 2t
    const TransformedProblem tp = transform_problem(ps, Grid::uniform(9));
    CHECK(tp.phi_tilde[4] == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(tp.phi_tilde_prime[4] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tp.phi_total == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("unbounded transformed data is reported") {
    // uniform loss keeps its rate at p = 1 while nu' blows up
    ProblemSpec ps = base_problem();
    ps.weighting = WeightingSpec::power(2.0);
    CHECK_THROWS_AS(transform_problem(ps, Grid::uniform(65)), SingularDerivative);

    // killing the rate at the top is not enough: phi_tilde' still diverges
    ps.loss = LossModel::mass_at_zero_plus_uniform(0.5, 1.0);
    CHECK_THROWS_AS(transform_problem(ps, Grid::uniform(65)), SingularDerivative);
}

TEST_CASE("indeterminate endpoint products resolve to their limits") {
    // phi(1) = 0 against nu' = inf: slope of the cumulative tends to 1/2
    ProblemSpec ps = base_problem();
    ps.weighting = WeightingSpec::power(2.0);
    ps.loss = LossModel::mass_at_zero_plus_uniform(0.5, 1.0);
    ps.phi = PhiSpec::tabulated({0.0, 1.0}, {1.0, 0.0});
    const TransformedProblem tp = transform_problem(ps, Grid::uniform(65));
    CHECK(tp.phi_tilde_prime.back() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(tp.hbar.back() == 0.0);

    // phi(0) = inf against nu' = 0: phi_tilde ~ p/b near zero
    ProblemSpec pr = base_problem();
    pr.beta = 3.0;
    pr.varpi_direct = 2.0;
    pr.weighting = WeightingSpec::prelec(0.65, 1.0);
    pr.phi = PhiSpec::power(0.65, -0.35);
    const TransformedProblem t2 = transform_problem(pr, Grid::uniform(65));
    CHECK(t2.phi_tilde_prime.front() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(t2.hbar.front() == 0.0);
    CHECK(t2.hbar.back() == 0.0);
}

TEST_CASE("mass at zero empties the top slope") {
    ProblemSpec ps = base_problem();
    ps.loss = LossModel::mass_at_zero_plus_uniform(0.5, 1.0);
    const TransformedProblem tp = transform_problem(ps, Grid::uniform(129));
    CHECK(tp.hbar.back() == 0.0);
    CHECK(tp.hbar.front() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("feasibility trichotomy around the threshold") {
    ProblemSpec ps = base_problem();
    const Grid grid = Grid::uniform(257);

    ps.varpi_direct = 1.4;
    CHECK(feasibility_classify(transform_problem(ps, grid)).status == Feasibility::Infeasible);

    ps.varpi_direct = 1.6;
    CHECK(feasibility_classify(transform_problem(ps, grid)).status == Feasibility::Feasible);

    ps.varpi_direct = 1.5;
    const Classification cls = feasibility_classify(transform_problem(ps, grid));
    CHECK(cls.status == Feasibility::UniqueSolution);
    CHECK(cls.threshold == doctest::Approx(1.5).epsilon(1e-14));
    REQUIRE(cls.unique_solution.size() == grid.n());
    for (std::size_t i = 0; i < grid.n(); ++i)
        CHECK(cls.unique_solution[i] ==
              doctest::Approx(1.0 + grid.p[i]).epsilon(1e-12));

    // the knife edge is 1e-9 wide (scaled)
    ps.varpi_direct = 1.5 + 1e-12;
    CHECK(feasibility_classify(transform_problem(ps, grid)).status ==
          Feasibility::UniqueSolution);
    ps.varpi_direct = 1.5 + 1e-8;
    CHECK(feasibility_classify(transform_problem(ps, grid)).status == Feasibility::Feasible);
    ps.varpi_direct = 1.5 - 1e-8;
    CHECK(feasibility_classify(transform_problem(ps, grid)).status == Feasibility::Infeasible);
}

TEST_CASE("zero derivative bound forces the constant quantile") {
    ProblemSpec ps = base_problem();
    ps.loss = LossModel::tabulated_quantile({0.0, 1.0}, {0.0, 0.0}); // X == 0
    ps.varpi_direct = 2.0;                                           // T = beta * total phi
    const TransformedProblem tp = transform_problem(ps, Grid::uniform(65));
    for (double h : tp.hbar) CHECK(h == 0.0);
    const Classification cls = feasibility_classify(tp);
    CHECK(cls.status == Feasibility::UniqueSolution);
    CHECK(cls.threshold == doctest::Approx(2.0).epsilon(1e-14));
    for (double q : cls.unique_solution) CHECK(q == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("transformed slope integrates back to the cumulative") {
    ProblemSpec ps = base_problem();
    ps.beta = 3.0;
    ps.varpi_direct = 2.0;
    ps.weighting = WeightingSpec::prelec(0.65, 1.0);
    ps.phi = PhiSpec::power(0.65, -0.35);
    const TransformedProblem tp = transform_problem(ps, Grid::uniform(1025));
    const double integral = trapezoid_uniform(tp.phi_tilde_prime, tp.grid.dp);
    CHECK(integral == doctest::Approx(tp.phi_tilde.back()).epsilon(1e-4));
}
