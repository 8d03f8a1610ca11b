// Filter families and the induced variational penalties.  Closed forms used
// as oracles: the cubic-core filter's two branches, soft thresholding,
// linear shrinkage phi = k^2 x / (k^2 + alpha) with penalty
// s(t) = alpha t^2 / (2 k^2), inverse x = y (k^2 + alpha) / k^2, and
// regularizer R_alpha(w) = alpha ||w||^2 / 2 independent of the kappas.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/filters.hpp"
#include "dfdreg/penalty.hpp"

using namespace dfdreg;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    g[n / 2] = 0.5 * (a + b);  // keep the midpoint exact
    return g;
}

}  // namespace

TEST_CASE("cubic-core filter branches, oddness and identity limit") {
    const Filter f = Filter::example_cubic();
    const double alpha = 0.7;

    // Inner branch |x| <= alpha.
    CHECK(f.eval(alpha, 1.0, 0.4) ==
          Catch::Approx(0.4 * 0.4 * 0.4 / (3.0 * alpha * alpha)).epsilon(1e-14));
    // Outer branch.
    const double x = 2.3;
    const double base = 3.0 * (1.0 + alpha) * x / alpha - (2.0 + 3.0 * alpha);
    CHECK(f.eval(alpha, 1.0, x) ==
          Catch::Approx((alpha / 3.0) * std::pow(base, 1.0 / (1.0 + alpha))).epsilon(1e-14));
    // Both branches meet at alpha with value alpha / 3 and unit slope.
    CHECK(f.eval(alpha, 1.0, alpha) == Catch::Approx(alpha / 3.0).epsilon(1e-12));
    const double h = 1e-6;
    const double slope_in = (f.eval(alpha, 1.0, alpha) - f.eval(alpha, 1.0, alpha - h)) / h;
    const double slope_out = (f.eval(alpha, 1.0, alpha + h) - f.eval(alpha, 1.0, alpha)) / h;
    CHECK(slope_in == Catch::Approx(1.0).margin(1e-4));
    CHECK(slope_out == Catch::Approx(1.0).margin(1e-4));

    for (double t : {0.1, 0.5, 1.0, 3.0})
        CHECK(f.eval(alpha, 1.0, -t) == Catch::Approx(-f.eval(alpha, 1.0, t)).margin(1e-15));

    // Deviation from the identity at a fixed point shrinks with alpha.
    const double d2 = std::abs(f.eval(1e-2, 1.0, 2.0) - 2.0);
    const double d4 = std::abs(f.eval(1e-4, 1.0, 2.0) - 2.0);
    const double d6 = std::abs(f.eval(1e-6, 1.0, 2.0) - 2.0);
    CHECK(d4 < d2);
    CHECK(d6 < d4);
    CHECK(d6 < 1e-4);
}

TEST_CASE("soft thresholding and linear shrinkage closed forms") {
    const Filter soft = Filter::soft_threshold();
    CHECK(soft.eval(0.3, 1.0, 0.2) == 0.0);
    CHECK(soft.eval(0.3, 1.0, -0.25) == 0.0);
    CHECK(soft.eval(0.3, 1.0, 1.0) == Catch::Approx(0.7).margin(1e-15));
    CHECK(soft.eval(0.3, 1.0, -2.0) == Catch::Approx(-1.7).margin(1e-15));
    CHECK_FALSE(soft.strictly_increasing());

    const Filter tik = Filter::linear_tikhonov();
    CHECK(tik.eval(0.25, 0.5, 2.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(tik.eval(1.0, 1.0, 3.0) == Catch::Approx(1.5).epsilon(1e-14));
    CHECK(tik.strictly_increasing());
    CHECK(Filter::identity().strictly_increasing());
    CHECK(Filter::example_cubic().strictly_increasing());

    CHECK_THROWS_AS(tik.eval(0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(tik.eval(1.0, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Filter::learned(nullptr), std::invalid_argument);
    CHECK(filter_kind_from_string("example_cubic") == FilterKind::example_cubic);
    CHECK_THROWS_AS(filter_kind_from_string("ramp"), std::invalid_argument);
}

TEST_CASE("filter inversion round trips and rejects flat stretches") {
    const Filter cubic = Filter::example_cubic();
    for (double x : {-6.0, -1.2, -0.3, 0.0, 0.2, 0.9, 4.5, 40.0}) {
        const double y = cubic.eval(0.8, 1.0, x);
        CHECK(invert_filter(cubic, 0.8, 1.0, y) ==
              Catch::Approx(x).margin(1e-9 * std::max(1.0, std::abs(x))));
    }

    const Filter tik = Filter::linear_tikhonov();
    const double alpha = 0.4, kappa = 0.7;
    const double y = 1.3;
    CHECK(invert_filter(tik, alpha, kappa, y) ==
          Catch::Approx(y * (kappa * kappa + alpha) / (kappa * kappa)).epsilon(1e-9));
    CHECK(invert_filter(Filter::identity(), 1.0, 1.0, -2.75) ==
          Catch::Approx(-2.75).margin(1e-10));

    const Filter soft = Filter::soft_threshold();
    CHECK(invert_filter(soft, 0.3, 1.0, 0.5) == Catch::Approx(0.8).margin(1e-9));
    CHECK_THROWS_AS(invert_filter(soft, 0.3, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(invert_filter(cubic, 1.0, 1.0,
                                  std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
}

TEST_CASE("adaptive quadrature hits classic integrals") {
    const double third = detail::adaptive_trapezoid([](double u) { return u * u; },
                                                    0.0, 1.0, 1e-10);
    CHECK(third == Catch::Approx(1.0 / 3.0).margin(1e-10));
    const double two = detail::adaptive_trapezoid([](double u) { return std::sin(u); },
                                                  0.0, 3.14159265358979323846, 1e-9);
    CHECK(two == Catch::Approx(2.0).margin(1e-8));
}

TEST_CASE("penalty of linear shrinkage matches its closed form") {
    const double alpha = 0.5, kappa = 0.8;
    const ScalarPenalty p =
        penalty_from_filter(Filter::linear_tikhonov(), alpha, kappa, linspace(-4.0, 4.0, 81));

    CHECK(p.alpha() == alpha);
    CHECK(p.kappa() == kappa);
    const double k2 = kappa * kappa;
    for (std::size_t i = 0; i < p.grid().size(); ++i) {
        const double t = p.grid()[i];
        CHECK(p.values()[i] == Catch::Approx(alpha * t * t / (2.0 * k2)).margin(1e-8));
        CHECK(p.derivs()[i] == Catch::Approx(alpha * t / k2).margin(1e-8));
    }
    CHECK(p.values()[40] == 0.0);  // s(0) = 0 exactly
    CHECK(p.eval(0.37) == Catch::Approx(alpha * 0.37 * 0.37 / (2.0 * k2)).margin(1e-8));
    CHECK(p.eval(-2.11) == Catch::Approx(alpha * 2.11 * 2.11 / (2.0 * k2)).margin(1e-8));
}

TEST_CASE("penalty grid validation") {
    const Filter f = Filter::linear_tikhonov();
    CHECK_THROWS_AS(penalty_from_filter(f, 1.0, 1.0, {-1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(penalty_from_filter(f, 1.0, 1.0, {-1.0, 0.5, 0.2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(penalty_from_filter(f, 1.0, 1.0, {-1.0, 0.5, 1.0}),
                    std::invalid_argument);
    const ScalarPenalty p = penalty_from_filter(f, 1.0, 1.0, linspace(-2.0, 2.0, 41));
    CHECK_THROWS_AS(prox_bruteforce(p, 3.0), std::range_error);
}

TEST_CASE("proximal map of the induced penalty reproduces the filter") {
    const std::vector<double> grid = linspace(-8.0, 8.0, 321);

    const double alpha = 0.6, kappa = 0.9;
    const ScalarPenalty tik =
        penalty_from_filter(Filter::linear_tikhonov(), alpha, kappa, grid);
    for (double x : {-2.0, -0.4, 0.0, 1.3, 3.1})
        CHECK(prox_bruteforce(tik, x) ==
              Catch::Approx(x / (1.0 + alpha / (kappa * kappa))).margin(1e-6));

    const Filter cubic = Filter::example_cubic();
    const ScalarPenalty pc = penalty_from_filter(cubic, 0.8, 1.0, grid);
    for (double x : {-3.0, -0.5, 0.7, 2.5})
        CHECK(prox_bruteforce(pc, x) ==
              Catch::Approx(cubic.eval(0.8, 1.0, x)).margin(1e-5 * std::max(1.0, std::abs(x))));
}

TEST_CASE("shifted penalty t^2/2 + s(t) is convex on the grid") {
    const std::vector<double> grid = linspace(-6.0, 6.0, 241);
    for (const Filter& f : {Filter::example_cubic(), Filter::linear_tikhonov()}) {
        const ScalarPenalty p = penalty_from_filter(f, 0.9, 1.0, grid);
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const auto shifted = [&](std::size_t j) {
                return 0.5 * grid[j] * grid[j] + p.values()[j];
            };
            CHECK(shifted(i + 1) - 2.0 * shifted(i) + shifted(i - 1) >= -1e-8);
        }
    }
}

TEST_CASE("coefficient regularizer for linear shrinkage is alpha/2 times the energy") {
    const double alpha = 0.35;
    const std::vector<double> kappas{0.6, 1.0, 1.4, 0.9};
    const std::vector<double> w{0.4, -1.1, 2.0, 0.0};
    double energy = 0.0;
    for (double v : w) energy += v * v;
    CHECK(kappa_regularizer(Filter::linear_tikhonov(), alpha, kappas, w) ==
          Catch::Approx(0.5 * alpha * energy).margin(1e-7));
    CHECK_THROWS_AS(kappa_regularizer(Filter::linear_tikhonov(), alpha, kappas,
                                      std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("analytic regularizer gradient agrees with central differences") {
    // Closed form for linear shrinkage: gradient is alpha * w.
    CHECK(regularizer_gradient(Filter::linear_tikhonov(), 0.45, 0.8, 1.7) ==
          Catch::Approx(0.45 * 1.7).margin(1e-9));

    Rng rng{RngSeed{31}};
    std::vector<double> kappas(6), w(6);
    for (double& k : kappas) k = 0.5 + 0.5 * rng.uniform();
    for (double& v : w) v = 2.0 * rng.gaussian();
    for (const Filter& f : {Filter::example_cubic(), Filter::linear_tikhonov()}) {
        const double worst =
            regularizer_gradient_check(f, 0.7, kappas, w, 1e-5, 10, RngSeed{77});
        CHECK(worst <= 1e-4);
    }
}
