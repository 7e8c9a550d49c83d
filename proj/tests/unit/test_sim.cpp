#include "doctest.h"
#include "oracles.hpp"
#include "toy_systems.hpp"

#include "bilinreg/sim.hpp"

using namespace bilinreg;

namespace {

const double kC = 273.15;

SimScenario base(Law law, double t_end) {
    SimScenario s;
    s.law = law;
    s.references = {{0.0, 26.5 + kC}};
    s.t_end = t_end;
    s.dt = 0.05;
    return s;
}

}  // namespace

TEST_CASE("open loop at equilibrium stays put") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::IntegralOnly, 50);
    s.k_i = 0.0;
    const SimResult r = run(h, s);
    const Vector x0 = r.x.front();
    for (const auto& x : r.x) CHECK((x - x0).cwiseAbs().maxCoeff() <= 1e-9);
    for (double u : r.u_sat) CHECK(u == r.u_sat.front());
}

TEST_CASE("open loop matches an independent integrator") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::IntegralOnly, 100);
    s.k_i = 0.0;
    const Equilibrium eq = invert_reference(h, 26.5 + kC);
    s.x0 = Vector(eq.x_ss.array() + 3.0);
    const SimResult r = run(h, s);
    const Vector ref = oracle::rk4([&](const Vector& x) { return dynamics(h, x, eq.u_ss); }, *s.x0, 0.05, 2000);
    CHECK((r.x.back() - ref).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("forwarding run: V non-increasing, temperatures bounded, error vanishes") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::Forwarding, 3000);
    const Equilibrium eq = invert_reference(h, 26.5 + kC);
    oracle::Rng rng(77);
    s.x0 = Vector(eq.x_ss + rng.vec(16, -5, 5));
    s.log_every = 1;
    const SimResult r = run(h, s);
    for (std::size_t k = 1; k < r.size(); ++k) CHECK(r.V[k] <= r.V[k - 1] + 1e-8 * (1 + r.V[k - 1]));
    // convex hull of the inlet temperatures and the initial state
    const double lo = std::min(286.0, s.x0->minCoeff()) - 0.1, hi = std::max(307.0, s.x0->maxCoeff()) + 0.1;
    for (const auto& x : r.x) {
        CHECK(x.minCoeff() >= lo);
        CHECK(x.maxCoeff() <= hi);
    }
    CHECK(std::abs(r.e.back()) < 1e-3);
    for (std::size_t k = 0; k < r.size(); ++k) {
        CHECK(r.u_sat[k] >= h.u_min);
        CHECK(r.u_sat[k] <= h.u_max);
    }
}

TEST_CASE("integrator state equals the quadrature of the error") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::Forwarding, 200);
    s.references.push_back({50.0, 26.0 + kC});
    s.switching = Switching::Hold;
    s.dt = 0.02;
    const SimResult r = run(h, s);
    double q = 0.0;
    // each step integrates against the reference active at its start
    for (std::size_t k = 1; k < r.size(); ++k)
        q += 0.5 * (r.e[k] + r.r[k] - r.r[k - 1] + r.e[k - 1]) * (r.times[k] - r.times[k - 1]);
    CHECK(r.z.back() == doctest::Approx(q).epsilon(1e-5));
}

TEST_CASE("output feedback with an exact initial estimate") {
    BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::OutputFeedback, 200);
    s.references.push_back({40.0, 26.0 + kC});
    s.sensors = Sensors::FiveAverage;
    s.allow_uncertified = true;
    const SimResult r = run(h, s);
    for (std::size_t k = 0; k < r.size(); ++k) {
        CHECK(r.U[k] == 0.0);
        CHECK(r.x_hat[k] == r.x[k]);
    }
    SimScenario strict = s;
    strict.allow_uncertified = false;
    CHECK_THROWS_AS(design_for_scenario(h, strict), Infeasible);
}

TEST_CASE("output feedback on a certified plant: U and W decrease") {
    const BilinearSystem s = toy::damped2();
    SimScenario scn;
    scn.law = Law::OutputFeedback;
    scn.k_p = 0.5;
    scn.k_i = 0.5;
    scn.references = {{0.0, output_map(s, 0.4)}};
    scn.t_end = 20;
    scn.dt = 0.01;
    const Equilibrium eq = invert_reference(s, scn.references[0].value);
    scn.x0 = Vector(eq.x_ss + Vector::Constant(2, 0.05));
    scn.x_hat0_offset = -0.1;
    const SimResult r = run(s, scn);
    for (std::size_t k = 1; k < r.size(); ++k) {
        CHECK(r.U[k] <= r.U[k - 1] + 1e-8 * (1 + r.U[k - 1]));
        CHECK(r.W[k] <= r.W[k - 1] + 1e-6 * (1 + r.W[k - 1]));
    }
    CHECK(std::abs(r.e.back()) < 1e-3);
}

TEST_CASE("pure-integral law converges on a certified plant") {
    const BilinearSystem s = toy::damped2();
    SimScenario scn;
    scn.law = Law::IntegralOnly;
    scn.ki_fraction_of_bound = 0.5;
    scn.references = {{0.0, output_map(s, 0.4)}, {200.0, output_map(s, 0.6)}};
    scn.t_end = 2000;
    scn.dt = 0.05;
    const SimResult r = run(s, scn);
    CHECK(std::abs(r.e.back()) < 1e-3);
}

TEST_CASE("bumpless switching keeps the command continuous") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::Forwarding, 100);
    s.references.push_back({50.0, 28.0 + kC});
    const SimResult r = run(h, s);
    std::size_t k = 0;
    while (r.times[k] < 50.0) ++k;
    CHECK(std::abs(r.u_raw[k] - r.u_raw[k - 1]) < 1e-4);

    s.switching = Switching::Hold;
    const SimResult rh = run(h, s);
    CHECK(std::abs(rh.u_raw[k] - rh.u_raw[k - 1]) > 1e-2);
}

TEST_CASE("determinism") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::Forwarding, 50);
    s.references.push_back({10.0, 25.0 + kC});
    s.disturbances.push_back({30.0, 0.5});
    const SimResult a = run(h, s), b = run(h, s);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a.x[k] == b.x[k]);
        CHECK(a.u_raw[k] == b.u_raw[k]);
    }
}

TEST_CASE("PI without anti-windup winds up while saturated") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::PiBaseline, 400);
    s.pi = PiGains{3e-3, 3e-4, 0.0};
    s.references.push_back({50.0, 17.0 + kC});
    const SimResult r = run(h, s);
    std::size_t first = 0, last = 0;
    for (std::size_t k = 0; k < r.size(); ++k)
        if (r.u_raw[k] > h.u_max) {
            if (!first) first = k;
            last = k;
        }
    REQUIRE(first > 0);
    CHECK(last > first);
    CHECK(r.z[last] > r.z[first]);
    CHECK(compute_metrics(r, s).duty_cycle > 0.0);
}

TEST_CASE("compare_pi") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario a = base(Law::PiBaseline, 100);
    a.pi = PiGains{1e-3, 1e-4, 0.0};
    a.references.push_back({20.0, 26.0 + kC});
    const ComparisonReport same = compare_pi(h, a, a, 2);
    CHECK(same.ours.iae == same.pi.iae);
    CHECK(same.ours.duty_cycle == same.pi.duty_cycle);
    SimScenario b = a;
    b.t_end = 120;
    CHECK_THROWS_AS(compare_pi(h, a, b), SchedulesDiffer);

    SimScenario tiny = a;
    tiny.pi = PiGains{1e-7, 1e-9, 0.0};
    const ComparisonReport c = compare_pi(h, a, tiny);
    CHECK(c.pi.iae > c.ours.iae);
}

TEST_CASE("settling time helper") {
    SimResult r;
    for (int k = 0; k <= 10; ++k) {
        r.times.push_back(k);
        r.e.push_back(k < 4 ? 1.0 : 0.01);
    }
    CHECK(*settling_time(r, 0, 11, 0.1) == 4.0);
    CHECK(*settling_time(r, 5, 11, 0.1) == 0.0);
    r.e.back() = 1.0;
    CHECK_FALSE(settling_time(r, 0, 11, 0.1).has_value());
}

TEST_CASE("scenario validation and failures") {
    const BilinearSystem h = build_hex(HexParams{});
    SimScenario s = base(Law::Forwarding, 10);
    s.references.clear();
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = base(Law::Forwarding, 10);
    s.references.push_back({20.0, 300.0});
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = base(Law::Forwarding, 10);
    s.dt = 0.0;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s = base(Law::Forwarding, 10);
    s.references = {{0.0, 40.0 + kC}};
    CHECK_THROWS_AS(run(h, s), ReferenceUnreachable);

    // an unstable plant blows up
    BilinearSystem u = toy::scalar();
    u.A(0, 0) = 5.0;
    u.u_min = -1;
    u.u_max = 1;
    SimScenario su;
    su.law = Law::IntegralOnly;
    su.k_i = 0.0;
    su.references = {{0.0, 0.0}};
    su.t_end = 400;
    su.dt = 0.1;
    su.x0 = Vector::Ones(1);
    DesignBundle b;
    b.references = {0.0};
    DesignArtifacts a;
    a.u_ss = 0;
    a.x_ss = Vector::Zero(1);
    a.g = Vector::Ones(1);
    a.P = Matrix::Identity(1, 1);
    a.M = RowVector::Zero(1);
    a.dc_sign = 1;
    b.designs = {a};
    b.monitors = {MonitorConstants{}};
    CHECK_THROWS_AS(run(u, su, b), NonFinite);
}
