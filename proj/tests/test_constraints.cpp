#include <doctest.h>

#include <cmath>
#include <random>

#include "bmc/arcs.hpp"
#include "bmc/constraints.hpp"
#include "helpers.hpp"

using namespace bmc;

namespace {

RelativeState make_rel(Vec2 r, Vec2 rdot) {
    RelativeState rel;
    rel.r = r;
    rel.rdot = rdot;
    rel.b = norm(r);
    rel.a = norm(rdot);
    if (rel.b > 0.0) rel.p_hat = r / rel.b;
    if (rel.a > 0.0) rel.q_hat = rdot / rel.a;
    return rel;
}

} // namespace

TEST_CASE("two-case constraint evaluation") {
    const BarycentricSpec spec{1.0, 0.5};

    SUBCASE("outside, approaching fast enough: feasible") {
        const auto [c, g] = eval_g(make_rel({2.0, 0.0}, {-1.0, 0.0}), spec);
        CHECK(c == ConstraintCase::CaseI);
        CHECK(g == doctest::Approx(-1.0).epsilon(1e-15));
    }
    SUBCASE("inside the disk: fixed-distance case") {
        const auto [c, g] = eval_g(make_rel({0.6, 0.0}, {5.0, 5.0}), spec);
        CHECK(c == ConstraintCase::CaseII);
        CHECK(g == doctest::Approx(-0.64).epsilon(1e-14));
    }
    SUBCASE("outside, receding: violated") {
        const auto [c, g] = eval_g(make_rel({2.0, 0.0}, {1.0, 0.0}), spec);
        CHECK(c == ConstraintCase::CaseI);
        CHECK(g == doctest::Approx(3.0).epsilon(1e-15));
    }
    SUBCASE("exactly on the boundary uses the inside case") {
        const auto [c, g] = eval_g(make_rel({1.0, 0.0}, {0.0, 1.0}), spec);
        CHECK(c == ConstraintCase::CaseII);
        CHECK(g == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("tangency entries per case") {
    const BarycentricSpec spec{1.0, 0.5};

    // On-surface spiral state: radial rate -a*kappa, tangential a*sqrt(1-k^2).
    const double a = 1.0, b = 2.0;
    const Vec2 r{b, 0.0};
    const Vec2 rdot{-a * spec.kappa, a * std::sqrt(1.0 - spec.kappa * spec.kappa)};
    const auto n1 = tangency(make_rel(r, rdot), spec, ConstraintCase::CaseI);
    REQUIRE(n1.entries.size() == 1);
    CHECK(n1.entries[0] == doctest::Approx(0.0).epsilon(1e-14));

    // On the circle moving tangentially: both entries vanish.
    const auto n2 = tangency(make_rel({1.0, 0.0}, {0.0, 1.0}), spec,
                             ConstraintCase::CaseII);
    REQUIRE(n2.entries.size() == 2);
    CHECK(n2.entries[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(n2.entries[1] == doctest::Approx(0.0).epsilon(1e-14));

    // On the circle with a radial rate: second entry is 2 r.rdot.
    const auto n3 = tangency(make_rel({1.0, 0.0}, {0.5, 0.0}), spec,
                             ConstraintCase::CaseII);
    REQUIRE(n3.entries.size() == 2);
    CHECK(n3.entries[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(n3.entries[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("multiplier slope closed forms at a = 1, b = 2, kappa = 0.5") {
    CHECK(mu_dot_plus_paper(1.0, 2.0, 0.5) == doctest::Approx(0.028125).epsilon(1e-12));
    CHECK(mu_dot_plus_derived(1.0, 2.0, 0.5) == doctest::Approx(0.084375).epsilon(1e-12));
    CHECK(mu_dot_plus(MuDotFormula::Paper, 1.0, 2.0, 0.5)
          == mu_dot_plus_paper(1.0, 2.0, 0.5));
    CHECK(mu_dot_plus(MuDotFormula::Derived, 1.0, 2.0, 0.5)
          == mu_dot_plus_derived(1.0, 2.0, 0.5));
}

TEST_CASE("multiplier slope scaling and domain") {
    // Both formulas scale as a^3 / b^3.
    for (const double k : {0.2, 0.5, 0.8}) {
        const double base_p = mu_dot_plus_paper(1.0, 1.0, k);
        const double base_d = mu_dot_plus_derived(1.0, 1.0, k);
        CHECK(mu_dot_plus_paper(2.0, 1.0, k) == doctest::Approx(8.0 * base_p).epsilon(1e-12));
        CHECK(mu_dot_plus_paper(1.0, 2.0, k) == doctest::Approx(base_p / 8.0).epsilon(1e-12));
        CHECK(mu_dot_plus_derived(2.0, 1.0, k) == doctest::Approx(8.0 * base_d).epsilon(1e-12));
        CHECK(mu_dot_plus_derived(1.0, 2.0, k) == doctest::Approx(base_d / 8.0).epsilon(1e-12));
        // The derived slope exceeds the paper slope by the factor (2-k)/k.
        CHECK(base_d / base_p == doctest::Approx((2.0 - k) / k).epsilon(1e-12));
    }
    CHECK_THROWS_AS(mu_dot_plus_paper(1.0, 0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(mu_dot_plus_derived(1.0, -1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(mu_ode_residuals(0, 0, 0, 1.0, 0.0, 0.5), std::domain_error);
}

TEST_CASE("multiplier ODE residuals at the reference point") {
    const double a = 1.0, b = 2.0, k = 0.5;
    const double om = 1.0 - k * k;
    const double muddot = -(a * a * a * a) * om * om / (b * b * b * b);

    // The derived slope zeroes both residuals with mu = 0 and the mu_ddot
    // obtained by differentiating the first ODE along the spiral.
    {
        const auto [r1, r2] =
            mu_ode_residuals(0.0, mu_dot_plus_derived(a, b, k), muddot, a, b, k);
        CHECK(std::abs(r1) < 1e-14);
        CHECK(std::abs(r2) < 1e-14);
    }
    // The published slope does not.
    {
        const auto [r1, r2] =
            mu_ode_residuals(0.0, mu_dot_plus_paper(a, b, k), muddot, a, b, k);
        CHECK(std::abs(r1) < 1e-14); // res1 does not involve mu_dot
        CHECK(std::abs(r2) > 1e-3);
    }
}

TEST_CASE("derived slope closes both ODEs for random parameters") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ua(0.2, 3.0);
    std::uniform_real_distribution<double> ub(0.5, 8.0);
    std::uniform_real_distribution<double> uk(0.05, 0.95);
    for (int i = 0; i < 500; ++i) {
        const double a = ua(rng), b = ub(rng), k = uk(rng);
        const double om = 1.0 - k * k;
        const double muddot = -(a * a * a * a) * om * om / (b * b * b * b);
        const auto [r1, r2] =
            mu_ode_residuals(0.0, mu_dot_plus_derived(a, b, k), muddot, a, b, k);
        const double scale = std::max(1.0, (a * a * a * a) / (b * b * b));
        CHECK(std::abs(r1) <= 1e-10 * scale);
        CHECK(std::abs(r2) <= 1e-10 * scale);
    }
}

TEST_CASE("control-continuity check on a jump-consistent junction") {
    using namespace testhelpers;
    const ReferenceTrajectory ref({0.5, 0.1, 0.01, 0.0}, {-0.2, 0.05, 0.0, 0.0});
    const auto fx = make_reverse_bary_fixture(3.0, 0.4, 1.2, 0.5, 1, 0.0, 2.0, ref,
                                              MuDotFormula::Paper);
    TrajectorySampler sampler = [&](double t) -> TrajectorySample {
        if (t < fx.exact.t1) return {fx.pre.state(t), fx.pre.control(t)};
        return {fx.post.state(t), fx.post.control(t)};
    };
    const double h = 1e-4 * std::max(1.0, fx.exact.t1); // default step scale
    const Theorem1Report rep =
        check_theorem1(sampler, 1, ref, fx.ctx.spec, fx.exact.t1, h);
    CHECK(rep.gap <= 1e-8);
    CHECK(rep.dndt_plus_norm <= 1e-6);
}

TEST_CASE("control-continuity check flags a mismatched junction") {
    const ReferenceTrajectory ref;
    const BarycentricSpec spec{1.0, 0.5};
    // Piecewise-constant control jumping from (1,0) to (2,0) at t1 = 1.
    TrajectorySampler sampler = [&](double t) -> TrajectorySample {
        const Vec2 u = t < 1.0 ? Vec2{1.0, 0.0} : Vec2{2.0, 0.0};
        return {{{5.0 + t, 0.0}, {1.0, 0.0}}, u};
    };
    const Theorem1Report rep = check_theorem1(sampler, 1, ref, spec, 1.0, 1e-4);
    CHECK(rep.gap == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("control-continuity check on a smooth arc reports zero gap") {
    const ReferenceTrajectory ref;
    const BarycentricSpec spec{1.0, 0.5};
    TrajectorySampler sampler = [&](double t) -> TrajectorySample {
        // Constant control (0.3, -0.2) from rest at (3, 0).
        const Vec2 u{0.3, -0.2};
        return {{{3.0 + 0.15 * t * t, -0.1 * t * t}, {0.3 * t, -0.2 * t}}, u};
    };
    const Theorem1Report rep = check_theorem1(sampler, 1, ref, spec, 0.7, 1e-4);
    CHECK(rep.gap <= 1e-12);
}

TEST_CASE("control-continuity check argument validation") {
    TrajectorySampler sampler = [](double) -> TrajectorySample {
        return {{{1.0, 0.0}, {0.0, 0.0}}, {0.0, 0.0}};
    };
    const ReferenceTrajectory ref;
    const BarycentricSpec spec{1.0, 0.5};
    CHECK_THROWS_AS(check_theorem1(sampler, 1, ref, spec, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(check_theorem1(sampler, 3, ref, spec, 1.0, 1e-4), std::domain_error);
    CHECK_THROWS_AS(check_theorem1(sampler, 0, ref, spec, 1.0, 1e-4), std::domain_error);
}
