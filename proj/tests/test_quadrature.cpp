#include "pcap/quadrature.hpp"

#include <cmath>
#include <random>

#include <doctest.h>

#include "pcap/errors.hpp"
#include "pcap/regression.hpp"

using namespace pcap;

TEST_CASE("log-domain integration of elementary integrals") {
    QuadratureSpec q;

    // int_1^10 t^-2 dt = 9/10.
    auto r = integrate_log([](double t) { return -2.0 * std::log(t); }, 1.0,
                           10.0, q);
    CHECK(r.value == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(r.rel_error < 1e-9);

    // int_1^e t^-1 dt = 1.
    r = integrate_log([](double t) { return -std::log(t); }, 1.0,
                      std::exp(1.0), q);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));

    // int_0^1 e^t dt = e - 1.
    r = integrate_log([](double t) { return t; }, 0.0, 1.0, q);
    CHECK(r.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-10));
}

TEST_CASE("log-domain integration survives extreme scales") {
    QuadratureSpec q;

    // int_1^3 e^{2t^2} dt; the integrand spans e^2 .. e^18.
    auto r = integrate_log([](double t) { return 2.0 * t * t; }, 1.0, 3.0, q);
    CHECK(r.log_value == doctest::Approx(15.545137347558492).epsilon(1e-12));

    // int_1^100 e^{2t^2} dt overflows any double; its log does not.
    r = integrate_log([](double t) { return 2.0 * t * t; }, 1.0, 100.0, q);
    CHECK(r.log_value == doctest::Approx(19994.008560454455).epsilon(1e-12));

    // int_30^40 e^{-t^2} dt is far below the subnormal range.
    r = integrate_log([](double t) { return -t * t; }, 30.0, 40.0, q);
    CHECK(r.value == 0.0);  // underflow of exp is expected
    // log of the exact value: erfc-based reference, leading order
    // e^{-900}/(2*30).
    CHECK(r.log_value ==
          doctest::Approx(-900.0 - std::log(60.0)).epsilon(1e-3));

    // A zero integrand integrates to log 0.
    r = integrate_log(
        [](double) { return -std::numeric_limits<double>::infinity(); }, 1.0,
        2.0, q);
    CHECK(r.log_value == -std::numeric_limits<double>::infinity());
    CHECK(r.value == 0.0);
}

TEST_CASE("plain integration agrees with log-domain on moderate integrands") {
    QuadratureSpec lin;
    lin.log_domain = false;
    QuadratureSpec lg;

    auto logf = [](double t) { return std::log(1.0 + t * t) - t; };
    auto a = integrate_positive(logf, 1.0, 8.0, lg);
    auto b = integrate_positive(logf, 1.0, 8.0, lin);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));

    // Sign-changing integrand through the plain route only.
    auto r = integrate([](double t) { return std::sin(t); }, 0.0,
                       3.14159265358979323846, lin);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("subdivision budget is enforced") {
    QuadratureSpec q;
    q.max_subdivisions = 8;  // far too small for this integrand
    CHECK_THROWS_AS(integrate_log([](double t) { return std::sin(50.0 * t); },
                                  0.0, 50.0, q),
                    QuadratureError);
}

TEST_CASE("tolerance is honored across magnitudes") {
    // Integrands c * t^a for random a, c: exact value known in closed form.
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ua(-3.0, 2.0);
    std::uniform_real_distribution<double> uc(-200.0, 200.0);
    QuadratureSpec q;
    for (int i = 0; i < 40; ++i) {
        double a = ua(rng), logc = uc(rng);
        if (std::abs(a + 1.0) < 0.05) continue;
        auto r = integrate_log(
            [a, logc](double t) { return logc + a * std::log(t); }, 1.0,
            50.0, q);
        double exact_log =
            logc + std::log((std::pow(50.0, a + 1.0) - 1.0) / (a + 1.0));
        CHECK(r.log_value == doctest::Approx(exact_log).epsilon(1e-9));
    }
}

TEST_CASE("line fit recovers slopes and flags exact fits") {
    std::vector<double> xs, ys;
    for (int i = 1; i <= 20; ++i) {
        xs.push_back(i);
        ys.push_back(3.5 - 2.0 * i);
    }
    LineFit f = fit_line(xs, ys);
    CHECK(f.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(f.stderr_slope < 1e-10);

    // Constant data: perfect fit by convention, slope 0.
    std::fill(ys.begin(), ys.end(), 4.0);
    f = fit_line(xs, ys);
    CHECK(f.slope == 0.0);
    CHECK(f.r2 == 1.0);

    // Noisy data keeps r2 well below 1.
    std::mt19937 rng(7);
    std::normal_distribution<double> noise(0.0, 5.0);
    for (std::size_t i = 0; i < ys.size(); ++i)
        ys[i] = 0.3 * xs[i] + noise(rng);
    f = fit_line(xs, ys);
    CHECK(f.r2 < 0.9);
    CHECK(f.stderr_slope > 0.0);

    CHECK_THROWS_AS(fit_line({1.0}, {2.0}), PreconditionError);
    CHECK_THROWS_AS(fit_line({1.0, 1.0}, {2.0, 3.0}), PreconditionError);
}
