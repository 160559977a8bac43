#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bmc/oracle.hpp"

using namespace bmc;

namespace {

// Rest-to-rest unit displacement with the constraint pushed far away, so the
// discretized optimum must reproduce the analytic cubic.
Transcription rest_to_rest(int M) {
    const AgentState x0{{0.0, 0.0}, {0.0, 0.0}};
    const ReferenceTrajectory ref = ReferenceTrajectory::fixed_point({50.0, 0.0});
    const BarycentricSpec spec{1.0, 0.5};
    Transcription tr = transcribe(x0, ref, spec, 0.0, 1.0, M);
    tr.terminal = AgentState{{1.0, 0.0}, {0.0, 0.0}};
    return tr;
}

} // namespace

TEST_CASE("transcription validation and start-state screening") {
    const ReferenceTrajectory ref;
    const BarycentricSpec spec{1.0, 0.5};
    CHECK_THROWS_AS(transcribe({{5, 0}, {0, 0}}, ref, spec, 0.0, 1.0, 9),
                    std::domain_error);

    // Receding outside the disk: the constraint is violated at node 0.
    const Transcription bad = transcribe({{2.0, 0.0}, {1.0, 0.0}}, ref, spec,
                                         0.0, 1.0, 20);
    CHECK(bad.infeasible_at_start);
    CHECK(bad.g0 == doctest::Approx(3.0).epsilon(1e-12));

    const Transcription ok = transcribe({{2.0, 0.0}, {-1.0, 0.0}}, ref, spec,
                                        0.0, 1.0, 20);
    CHECK_FALSE(ok.infeasible_at_start);
    CHECK(ok.M == 20);
    CHECK(ok.dt == doctest::Approx(1.0 / 19.0).epsilon(1e-14));
    CHECK(ok.node_time(19) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero-length horizon costs nothing") {
    const ReferenceTrajectory ref = ReferenceTrajectory::fixed_point({50.0, 0.0});
    const Transcription tr =
        transcribe({{0, 0}, {0, 0}}, ref, BarycentricSpec{1.0, 0.5}, 2.0, 2.0, 20);
    const OracleResult res = solve_oracle(tr);
    CHECK(res.converged);
    CHECK(res.energy == 0.0);
}

TEST_CASE("pinned rest-to-rest solve recovers the analytic cubic") {
    const Transcription tr = rest_to_rest(200);
    const OracleResult res = solve_oracle(tr);
    CHECK(res.converged);
    CHECK(res.max_violation <= 1e-6);
    CHECK(res.energy == doctest::Approx(6.0).epsilon(0.01));
    // Controls track u_x = 6 - 12 t, u_y = 0.
    double max_err = 0.0;
    for (int k = 0; k < tr.M; ++k) {
        const double t = tr.node_time(k);
        max_err = std::max(max_err, std::abs(res.controls[k].x - (6.0 - 12.0 * t)));
        max_err = std::max(max_err, std::abs(res.controls[k].y));
    }
    CHECK(max_err <= 0.05);
}

TEST_CASE("energy readings settle as the mesh refines") {
    const double e50 = solve_oracle(rest_to_rest(50)).energy;
    const double e100 = solve_oracle(rest_to_rest(100)).energy;
    const double e200 = solve_oracle(rest_to_rest(200)).energy;
    CHECK(std::abs(e50 - 6.0) <= 0.06);
    CHECK(std::abs(e100 - 6.0) <= 0.03);
    CHECK(std::abs(e200 - 6.0) <= 0.015);
    CHECK(std::abs(e200 - 6.0) <= std::abs(e50 - 6.0) + 1e-9);
}

TEST_CASE("constrained free-endpoint solve respects the approach constraint") {
    // Head-on approach toward a static reference from outside the disk.
    const ReferenceTrajectory ref;
    const BarycentricSpec spec{1.0, 0.5};
    const Transcription tr =
        transcribe({{3.0, 0.0}, {-1.0, 0.0}}, ref, spec, 0.0, 2.0, 100);
    REQUIRE_FALSE(tr.infeasible_at_start);
    const OracleResult res = solve_oracle(tr);
    CHECK(res.converged);
    CHECK(res.max_violation <= 1e-6);
    CHECK(res.energy >= 0.0);
}

TEST_CASE("formula adjudication requires a minimum family size") {
    std::vector<Scenario> family(4);
    CHECK_THROWS_AS(adjudicate_mudot(family, 100), std::domain_error);
}
