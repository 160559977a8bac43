#include <doctest.h>

#include <cmath>
#include <random>

#include "bmc/arcs.hpp"
#include "bmc/constraints.hpp"
#include "helpers.hpp"

using namespace bmc;

TEST_CASE("rest-to-rest cubic: control and energy closed forms") {
    const AgentState x0{{0.0, 0.0}, {0.0, 0.0}};
    const AgentState x1{{1.0, 0.0}, {0.0, 0.0}};
    const UnconstrainedArc arc = UnconstrainedArc::connect(x0, 0.0, x1, 1.0);

    CHECK(norm(arc.state(0.0).p - x0.p) < 1e-14);
    CHECK(norm(arc.state(1.0).p - x1.p) < 1e-13);
    CHECK(norm(arc.state(1.0).v - x1.v) < 1e-13);
    // u_x(t) = 6 - 12 t for the unit rest-to-rest displacement.
    for (const double t : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        CHECK(arc.control(t).x == doctest::Approx(6.0 - 12.0 * t).epsilon(1e-12));
        CHECK(arc.control(t).y == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK(arc.energy(0.0, 1.0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("straight coasting connection has zero control") {
    const AgentState x0{{1.0, 2.0}, {0.5, -0.25}};
    const AgentState x1{{1.0 + 0.5 * 4.0, 2.0 - 0.25 * 4.0}, {0.5, -0.25}};
    const UnconstrainedArc arc = UnconstrainedArc::connect(x0, 1.0, x1, 5.0);
    for (double t = 1.0; t <= 5.0; t += 0.5) {
        CHECK(norm(arc.control(t)) < 1e-12);
    }
    CHECK(arc.energy(1.0, 5.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("state/control/rate pinning round-trips") {
    const AgentState x{{2.0, -1.0}, {0.3, 0.7}};
    const Vec2 u{1.5, -0.4};
    const Vec2 udot{-0.2, 0.9};
    const UnconstrainedArc arc =
        UnconstrainedArc::from_state_control(x, u, udot, 2.0, 6.0);
    CHECK(norm(arc.state(2.0).p - x.p) < 1e-14);
    CHECK(norm(arc.state(2.0).v - x.v) < 1e-14);
    CHECK(norm(arc.control(2.0) - u) < 1e-14);
    CHECK(norm(arc.control_rate() - udot) < 1e-14);
    // The control is affine: u(t) = u + udot (t - t0).
    CHECK(norm(arc.control(5.0) - (u + udot * 3.0)) < 1e-12);
}

TEST_CASE("cubic arc rejects an empty interval") {
    const AgentState x{{0.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(UnconstrainedArc::connect(x, 1.0, x, 1.0), std::domain_error);
    CHECK_THROWS_AS(UnconstrainedArc::connect(x, 2.0, x, 1.0), std::domain_error);
    CHECK_THROWS_AS(
        UnconstrainedArc::from_state_control(x, {0, 0}, {0, 0}, 3.0, 3.0),
        std::domain_error);
}

TEST_CASE("spiral radius, winding, and speed closed forms") {
    const double b0 = 5.0, a = 1.0, kappa = 0.5;
    const ReferenceTrajectory ref;
    const SpiralArc arc(b0, 0.0, a, kappa, 1, ref, 0.0, 7.9);

    SUBCASE("radius shrinks linearly; winding is logarithmic") {
        CHECK(arc.b(2.0) == doctest::Approx(4.0).epsilon(1e-15));
        const double dphi = std::sqrt(1.0 - kappa * kappa) / kappa * std::log(b0 / 4.0);
        CHECK(arc.phi(2.0) - arc.phi(0.0) == doctest::Approx(dphi).epsilon(1e-14));
        CHECK(dphi == doctest::Approx(0.3864957).epsilon(1e-6));
        CHECK(arc.time_at_radius(1.0) == doctest::Approx(8.0).epsilon(1e-14));
    }

    SUBCASE("winding matches a Runge-Kutta integration of the angle rate") {
        // phi_dot = s a sqrt(1-k^2) / b(t), integrated with classical RK4.
        double phi = arc.phi(0.0);
        const int n = 4000;
        const double h = 2.0 / n;
        auto f = [&](double t) {
            return a * std::sqrt(1.0 - kappa * kappa) / arc.b(t);
        };
        for (int i = 0; i < n; ++i) {
            const double t = i * h;
            const double k1 = f(t), k2 = f(t + h / 2), k3 = f(t + h / 2), k4 = f(t + h);
            phi += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        CHECK(std::abs(phi - arc.phi(2.0)) <= 1e-9);
    }

    SUBCASE("relative speed is constant and equals a") {
        for (const double t : {0.0, 1.0, 3.7, 6.0, 7.9}) {
            CHECK(norm(arc.relative(t).rdot) == doctest::Approx(a).epsilon(1e-12));
        }
    }

    SUBCASE("acceleration is tangential-free with the known radial magnitude") {
        const double t = 6.0; // b = 2 here
        const RelativeState rel = arc.relative(t);
        CHECK(rel.b == doctest::Approx(2.0).epsilon(1e-13));
        const Vec2 u = arc.control(t); // static reference: u is the relative accel
        CHECK(norm(u) == doctest::Approx(std::sqrt(0.75) / 2.0).epsilon(1e-10));
        CHECK(norm(u) == doctest::Approx(0.4330127).epsilon(1e-6));
        CHECK(dot(u, *rel.p_hat)
              == doctest::Approx(-a * a * (1 - kappa * kappa) / rel.b).epsilon(1e-10));
        CHECK(std::abs(dot(u, *rel.q_hat)) < 1e-10);
    }

    SUBCASE("the spiral rides the constraint surface exactly") {
        const BarycentricSpec spec{1.0, kappa};
        for (int i = 0; i <= 1000; ++i) {
            const double t = 7.9 * i / 1000.0;
            const auto [c, g] = eval_g(arc.relative(t), spec);
            CHECK(c == ConstraintCase::CaseI);
            CHECK(std::abs(g) <= 1e-9);
        }
    }

    SUBCASE("finite differences confirm db/dt and the approach-rate slope") {
        const BarycentricSpec spec{1.0, kappa};
        const double t = 3.0, h = 1e-5;
        const double dbdt = (arc.b(t + h) - arc.b(t - h)) / (2 * h);
        CHECK(dbdt == doctest::Approx(-a * kappa).epsilon(1e-8));
        auto beta_at = [&](double tt) { return beta(arc.relative(tt), spec); };
        const double dbeta = (beta_at(t + h) - beta_at(t - h)) / (2 * h);
        CHECK(std::abs(dbeta - (-(a * kappa) * (a * kappa))) <= 1e-6);
    }
}

TEST_CASE("spiral parameter validation") {
    const ReferenceTrajectory ref;
    CHECK_THROWS_AS(SpiralArc(5, 0, 0.0, 0.5, 1, ref, 0, 1), std::domain_error);
    CHECK_THROWS_AS(SpiralArc(5, 0, 1.0, 0.0, 1, ref, 0, 1), std::domain_error);
    CHECK_THROWS_AS(SpiralArc(5, 0, 1.0, 1.0, 1, ref, 0, 1), std::domain_error);
    CHECK_THROWS_AS(SpiralArc(5, 0, 1.0, 0.5, 2, ref, 0, 1), std::domain_error);
    CHECK_THROWS_AS(SpiralArc(5, 0, 1.0, 0.5, 1, ref, 1, 0), std::domain_error);
    // b collapses at t = 10; the interval must stop short of it.
    CHECK_THROWS_AS(SpiralArc(5, 0, 1.0, 0.5, 1, ref, 0, 10.5), std::domain_error);
}

TEST_CASE("boundary circle arc closed forms") {
    const double D = 1.0, a = 2.0;
    const ReferenceTrajectory ref;
    const DiskArc arc(D, a, 0.0, 1, ref, 0.0, 2.0);

    SUBCASE("uniform angular rate a/D") {
        const double quarter = (M_PI / 2.0) / (a / D);
        CHECK(arc.phi(quarter) == doctest::Approx(M_PI / 2.0).epsilon(1e-13));
        const RelativeState rel = arc.relative(quarter);
        CHECK(rel.r.x == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rel.r.y == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("motion is tangential with centripetal control") {
        for (const double t : {0.0, 0.3, 1.1, 2.0}) {
            const RelativeState rel = arc.relative(t);
            CHECK(std::abs(dot(rel.r, rel.rdot)) < 1e-12);
            CHECK(rel.b == doctest::Approx(D).epsilon(1e-13));
            CHECK(norm(rel.rdot) == doctest::Approx(a).epsilon(1e-13));
            // Static reference: u = -(a^2/D) p_hat.
            const Vec2 u = arc.control(t);
            CHECK(norm(u + *rel.p_hat * (a * a / D)) < 1e-12);
        }
        CHECK(arc.control(0.0).x == doctest::Approx(-4.0).epsilon(1e-13));
        CHECK(arc.control(0.0).y == doctest::Approx(0.0).epsilon(1e-13));
        CHECK(arc.mu() == doctest::Approx(4.0).epsilon(1e-14));
    }

    SUBCASE("energy of the constant-magnitude control") {
        CHECK(arc.energy(0.0, 1.0) == doctest::Approx(8.0).epsilon(1e-10));
    }
}

TEST_CASE("zero-speed circle arc just tracks the reference") {
    const ReferenceTrajectory ref({1.0, 0.5, 0.25, 0.0}, {0.0, -0.3, 0.0, 0.1});
    const DiskArc arc(1.0, 0.0, 0.7, -1, ref, 0.0, 3.0);
    for (const double t : {0.0, 1.0, 2.5}) {
        CHECK(norm(arc.control(t) - ref.acceleration(t)) < 1e-13);
        CHECK(arc.relative(t).b == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(norm(arc.relative(t).rdot) < 1e-13);
    }
}

TEST_CASE("circle arc superposes the reference acceleration") {
    const ReferenceTrajectory ref({2.0, 1.0, -0.2, 0.05}, {-1.0, 0.0, 0.3, 0.0});
    const double D = 1.5, a = 1.2;
    const DiskArc arc(D, a, 0.3, 1, ref, 0.5, 4.0);
    for (const double t : {0.5, 1.7, 3.9}) {
        const RelativeState rel = arc.relative(t);
        const Vec2 expected = ref.acceleration(t) - *rel.p_hat * (a * a / D);
        CHECK(norm(arc.control(t) - expected) < 1e-12);
    }
}

TEST_CASE("energy is additive over subintervals") {
    std::mt19937_64 rng(11);
    const ReferenceTrajectory ref = testhelpers::random_cubic_reference(rng, 2.0);
    const SpiralArc sp(4.0, 0.2, 1.1, 0.6, -1, ref, 1.0, 4.0);
    CHECK(sp.energy(1.0, 4.0)
          == doctest::Approx(sp.energy(1.0, 2.3) + sp.energy(2.3, 4.0)).epsilon(1e-10));
    const DiskArc dk(1.0, 0.8, 0.1, 1, ref, 0.0, 3.0);
    CHECK(dk.energy(0.0, 3.0)
          == doctest::Approx(dk.energy(0.0, 1.1) + dk.energy(1.1, 3.0)).epsilon(1e-10));
    const UnconstrainedArc cu = UnconstrainedArc::connect(
        {{0, 0}, {1, 0}}, 0.0, {{2, 1}, {0, 0.5}}, 2.0);
    CHECK(cu.energy(0.0, 2.0)
          == doctest::Approx(cu.energy(0.0, 0.7) + cu.energy(0.7, 2.0)).epsilon(1e-12));
}

TEST_CASE("cubic-arc control is affine in time") {
    const UnconstrainedArc arc = UnconstrainedArc::connect(
        {{0, 0}, {1, -1}}, 0.0, {{3, 2}, {0, 0}}, 2.0);
    const double h = 0.25;
    for (double t = 0.0; t + 2 * h <= 2.0; t += h) {
        const Vec2 second =
            arc.control(t) - arc.control(t + h) * 2.0 + arc.control(t + 2 * h);
        CHECK(norm(second) < 1e-12);
    }
}

TEST_CASE("variant dispatch helpers agree with the members") {
    const ReferenceTrajectory ref;
    Arc a1 = UnconstrainedArc::connect({{0, 0}, {0, 0}}, 0.0, {{1, 0}, {0, 0}}, 1.0);
    Arc a2 = SpiralArc(5.0, 0.0, 1.0, 0.5, 1, ref, 0.0, 7.0);
    Arc a3 = DiskArc(1.0, 2.0, 0.0, 1, ref, 0.0, 1.0);
    CHECK(arc_energy(a1, 0.0, 1.0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(arc_t_start(a2) == 0.0);
    CHECK(arc_t_end(a2) == 7.0);
    CHECK(norm(arc_control(a3, 0.0) - Vec2{-4.0, 0.0}) < 1e-13);
    CHECK(norm(arc_state(a2, 0.0).p - Vec2{5.0, 0.0}) < 1e-13);
}
