#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pcap/capacity.hpp"

using namespace pcap;

namespace {

ModelManifold ball(int n) { return euclidean_model(n); }

ModelManifold funnel() {
    ModelManifold m;
    m.base_dim = 3;
    m.base_profile = parse_profile("sinh(t)");
    m.warp = make_const(1.0);
    return m;
}

// Collapsing cross-section: one-dimensional base with two flat fiber
// directions shrinking like exp(-t^2); cross-section area 4*pi*2*exp(-2 t^2).
ModelManifold pinched() {
    ModelManifold m;
    m.base_dim = 1;
    m.base_profile = make_const(1.0);
    m.warp = parse_profile("exp(-t^2)");
    m.fiber_dim = 2;
    m.fiber_volume = 12.566370614359172;
    return m;
}

// Cross-section area identically 3 (independent of the radius).
ModelManifold tube() {
    ModelManifold m;
    m.base_dim = 2;
    m.base_profile = parse_profile("3/6.283185307179586");
    m.warp = make_const(1.0);
    return m;
}

}  // namespace

TEST_CASE("flux capacity matches closed forms") {
    struct Row {
        ModelManifold m;
        double p, R, expected;
    };
    // Annulus capacities [r0, R] with closed-form antiderivatives.
    const std::vector<Row> rows = {
        {ball(3), 2.0, 10.0, 13.962634015954637},   // 4*pi/(1 - 1/10)
        {ball(2), 3.0, 10.0, 0.33596725753753042},  // pi/(2 (sqrt10 - 1)^2)
        {ball(4), 2.0, 10.0, 39.877189499350944},   // 2*pi^2/(1 - 10^-2)/0.5
        {ball(4), 3.0, 10.0, 10.554722681266157},
        {funnel(), 2.0, 10.0, 40.143623936191593},  // 4*pi/(coth1 - coth10)
        {funnel(), 3.0, 10.0, 21.093493390024302},
        {pinched(), 2.0, 2.0, 0.062729048795015827},
        {tube(), 2.0, 2.0, 3.0},
    };
    for (const auto& row : rows) {
        CapacityEstimate est = flux_capacity(row.m, row.p, row.R);
        CAPTURE(row.p);
        CAPTURE(row.R);
        CHECK(est.value == doctest::Approx(row.expected).epsilon(1e-9));
        CHECK(est.method == "flux");
        CHECK(est.p == row.p);
        CHECK(est.R == row.R);
        CHECK(est.grid_size == 0);
        CHECK(std::abs(est.value - row.expected) <= est.error_bound);
    }

    // Planar annulus to R = e: 2*pi / log(e).
    CapacityEstimate plane = flux_capacity(ball(2), 2.0, std::exp(1.0));
    CHECK(plane.value ==
          doctest::Approx(6.2831853071795865).epsilon(1e-9));

    // The integrand spans hundreds of orders of magnitude; the log form
    // keeps the tiny result exact even though intermediate cross-section
    // values overflow a plain double.
    CapacityEstimate tiny = flux_capacity(pinched(), 2.0, 10.0);
    CHECK(tiny.log_value ==
          doctest::Approx(-193.08946493959446).epsilon(1e-12));
    CHECK(tiny.value == doctest::Approx(std::exp(tiny.log_value)));
    CHECK(tiny.value > 0.0);
}

TEST_CASE("flux capacity scales with fiber volume and warp powers") {
    std::mt19937 rng(20240918);
    std::uniform_real_distribution<double> cdist(0.2, 8.0);
    for (int trial = 0; trial < 20; ++trial) {
        double c = cdist(rng);
        ModelManifold a = pinched();
        ModelManifold b = pinched();
        b.fiber_volume *= c;
        double base = flux_capacity(a, 2.0, 3.0).value;
        double scaled = flux_capacity(b, 2.0, 3.0).value;
        CHECK(scaled == doctest::Approx(c * base).epsilon(1e-10));
    }

    // Scaling the warp multiplies the cross-section by c^fiber_dim.
    ModelManifold w = pinched();
    w.warp = parse_profile("3*exp(-t^2)");
    double base = flux_capacity(pinched(), 2.0, 3.0).value;
    CHECK(flux_capacity(w, 2.0, 3.0).value ==
          doctest::Approx(9.0 * base).epsilon(1e-10));
}

TEST_CASE("capacity is monotone in the outer radius") {
    for (const ModelManifold& m : {ball(2), ball(3), funnel()}) {
        double prev = flux_capacity(m, 2.5, 2.0).value;
        for (double R : {4.0, 8.0, 16.0, 32.0}) {
            double cur = flux_capacity(m, 2.5, R).value;
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("variational capacity agrees with the flux route") {
    struct Row {
        ModelManifold m;
        double p, R;
        long grid;
        double rtol;
    };
    const std::vector<Row> rows = {
        {ball(3), 2.0, 10.0, 2000, 1e-3},
        {ball(2), 3.0, 10.0, 4000, 1e-5},
        {ball(4), 2.0, 10.0, 2000, 1e-4},
        {ball(2), 1.5, 10.0, 2000, 1e-4},
        {funnel(), 2.0, 10.0, 2000, 1e-4},
    };
    for (const auto& row : rows) {
        CapacityEstimate flux = flux_capacity(row.m, row.p, row.R);
        CapacityEstimate var =
            variational_capacity(row.m, row.p, row.R, row.grid);
        CAPTURE(row.p);
        CHECK(var.method == "variational");
        CHECK(var.grid_size == row.grid);
        CHECK(var.value ==
              doctest::Approx(flux.value).epsilon(row.rtol));
        // The discrete minimum cannot undercut the continuum infimum.
        CHECK(var.value >= flux.value * (1.0 - 1e-9));
        CHECK(std::abs(var.value - flux.value) <= var.error_bound);
    }

    // Severely collapsing cross-section: the whole computation lives far
    // below double underflow, so compare in log form.
    CapacityEstimate flux = flux_capacity(pinched(), 2.0, 10.0);
    CapacityEstimate var = variational_capacity(pinched(), 2.0, 10.0, 1000);
    CHECK(var.log_value ==
          doctest::Approx(flux.log_value).epsilon(1e-4));
    CHECK(var.log_value >= flux.log_value - 1e-9);
}

TEST_CASE("variational error bound shrinks under grid refinement") {
    const double exact = 13.962634015954637;
    double prev_bound = 1e300;
    for (long grid : {250L, 500L, 1000L, 2000L}) {
        CapacityEstimate est = variational_capacity(ball(3), 2.0, 10.0, grid);
        CHECK(std::abs(est.value - exact) <= est.error_bound);
        CHECK(est.error_bound < prev_bound);
        prev_bound = est.error_bound;
    }
}

TEST_CASE("variational minimizer is a monotone profile") {
    std::vector<double> u;
    variational_capacity(ball(3), 2.0, 10.0, 2000, &u);
    REQUIRE(u.size() == 2001);
    CHECK(u.front() == 1.0);
    CHECK(u.back() == 0.0);
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        CHECK(u[i + 1] < u[i]);
        CHECK(u[i] <= 1.0);
        CHECK(u[i + 1] >= 0.0);
    }
    // Node value at t = 2 approaches the continuum profile (1/t - 1/10)/0.9.
    double t2 = u[2000 / 9];  // node index for t = 2 on [1, 10]
    CHECK(t2 == doctest::Approx(4.0 / 9.0).epsilon(5e-3));
}

TEST_CASE("optimal profile reproduces the closed-form minimizer") {
    OptimalProfile u(ball(3), 2.0, 10.0);
    CHECK(u.inner_radius() == 1.0);
    CHECK(u.outer_radius() == 10.0);
    CHECK(u(1.0) == 1.0);
    CHECK(u(0.5) == 1.0);
    CHECK(u(10.0) == 0.0);
    CHECK(u(11.0) == 0.0);
    CHECK(u(2.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-9));
    CHECK(u(5.0) == doctest::Approx(1.0 / 9.0).epsilon(1e-9));

    // Constant cross-section: the minimizer is linear in t.
    OptimalProfile lin(tube(), 2.0, 2.0);
    CHECK(lin(1.25) == doctest::Approx(0.75).epsilon(1e-9));
    CHECK(lin(1.5) == doctest::Approx(0.5).epsilon(1e-9));

    // Batch evaluation matches pointwise evaluation and needs sorted input.
    std::vector<double> ts = {0.5, 1.0, 2.0, 5.0, 9.99, 10.0, 12.0};
    std::vector<double> batch = u.values(ts);
    REQUIRE(batch.size() == ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        CHECK(batch[i] == doctest::Approx(u(ts[i])).epsilon(1e-8));
    CHECK_THROWS_AS(u.values({2.0, 1.5}), PreconditionError);

    // Monotone decreasing along any ascending sample.
    for (std::size_t i = 0; i + 1 < batch.size(); ++i)
        CHECK(batch[i + 1] <= batch[i]);
}

TEST_CASE("capacity limit detects the exhaustion trend") {
    const std::vector<double> schedule = {10.0, 100.0, 1000.0, 10000.0};

    CapacityLimit hyper = capacity_limit(ball(3), 2.0, schedule);
    CHECK(hyper.trend == Trend::ToPositive);
    CHECK(hyper.limit_estimate ==
          doctest::Approx(12.566370614359172).epsilon(0.01));
    CHECK(hyper.values.size() == schedule.size());
    // Recorded values are the flux capacities at the schedule points.
    for (std::size_t i = 0; i < schedule.size(); ++i)
        CHECK(hyper.values[i] ==
              doctest::Approx(flux_capacity(ball(3), 2.0, schedule[i]).value)
                  .epsilon(1e-12));

    CapacityLimit para = capacity_limit(ball(2), 2.0, default_R_schedule());
    CHECK(para.trend == Trend::ToZero);
    CHECK(para.limit_estimate <= 1e-10);

    CapacityLimit cusp = capacity_limit(ball(3), 3.0, default_R_schedule());
    CHECK(cusp.trend == Trend::ToZero);

    CapacityLimit fun = capacity_limit(funnel(), 2.0, default_R_schedule());
    CHECK(fun.trend == Trend::ToPositive);
    CHECK(fun.limit_estimate == doctest::Approx(40.143623935).epsilon(1e-6));

    // Collapsing model: the first capacity already sits below the floor, so
    // the run short-circuits without evaluating the larger radii.
    CapacityLimit pin = capacity_limit(pinched(), 2.0, default_R_schedule());
    CHECK(pin.trend == Trend::ToZero);
    CHECK(pin.values.size() == 1);

    CapacityLimit flat = capacity_limit(tube(), 2.0, default_R_schedule());
    CHECK(flat.trend == Trend::ToZero);

    // A slowly decaying sequence with a fat tail stays undetermined.
    CapacityLimit slow = capacity_limit(ball(2), 2.0, {10.0, 100.0, 1000.0});
    CHECK(slow.trend == Trend::Undetermined);

    CHECK(to_string(Trend::ToZero) == std::string("to-zero"));
    CHECK(to_string(Trend::ToPositive) == std::string("to-positive"));
    CHECK(to_string(Trend::Undetermined) == std::string("undetermined"));
}

TEST_CASE("capacity domain guards") {
    CHECK_THROWS_WITH_AS(flux_capacity(ball(2), 2.0, 1.0),
                         "R must exceed the inner radius", PreconditionError);
    CHECK_THROWS_WITH_AS(flux_capacity(ball(2), 0.5, 2.0), "p must exceed 1",
                         PreconditionError);
    CHECK_THROWS_WITH_AS(flux_capacity(ball(2), 1.0, 2.0), "p must exceed 1",
                         PreconditionError);
    CHECK_THROWS_WITH_AS(variational_capacity(ball(2), 2.0, 2.0, 1),
                         "grid_size must be at least 2", PreconditionError);
    CHECK_THROWS_AS(capacity_limit(ball(2), 2.0, {}), PreconditionError);
    CHECK_THROWS_WITH_AS(capacity_limit(ball(2), 2.0, {10.0, 5.0, 20.0}),
                         "R_schedule must be strictly increasing",
                         PreconditionError);
    CHECK_THROWS_WITH_AS(capacity_limit(ball(2), 2.0, {0.5, 5.0, 20.0}),
                         "R_schedule must stay above inner_radius",
                         PreconditionError);
    CHECK_THROWS_AS(OptimalProfile(ball(2), 2.0, 0.5), PreconditionError);
}

TEST_CASE("capacity runs are deterministic") {
    CapacityEstimate a = flux_capacity(funnel(), 2.5, 25.0);
    CapacityEstimate b = flux_capacity(funnel(), 2.5, 25.0);
    CHECK(a.value == b.value);
    CHECK(a.log_value == b.log_value);
    CHECK(a.error_bound == b.error_bound);

    CapacityEstimate c = variational_capacity(funnel(), 2.5, 25.0, 800);
    CapacityEstimate d = variational_capacity(funnel(), 2.5, 25.0, 800);
    CHECK(c.value == d.value);
    CHECK(c.error_bound == d.error_bound);
}
