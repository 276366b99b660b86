#include "ttdensity/coords.hpp"

#include "ttdensity/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ttdensity;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vector random_chart_point(SeededRng& rng, const PolarChart& chart) {
    Vector xhat(chart.dim);
    xhat[0] = rng.uniform(chart.rho_lo, chart.rho_hi);
    xhat[1] = rng.uniform(0.0, 2.0 * kPi);
    for (int j = 2; j < chart.dim; ++j) xhat[j] = rng.uniform(0.0, kPi);
    return xhat;
}
}  // namespace

TEST_CASE("polar_to_cartesian basics") {
    SUBCASE("d=2 unit direction") {
        auto part = equidistant_partition(1, 2.0, 2);
        Vector xhat(2);
        xhat << 1.0, 0.0;
        Vector x = polar_to_cartesian(part.chart(0), xhat);
        CHECK(x[0] == doctest::Approx(1.0));
        CHECK(x[1] == doctest::Approx(0.0));
    }
    SUBCASE("d=3 axis point") {
        auto part = equidistant_partition(1, 3.0, 3);
        Vector xhat(3);
        xhat << 2.0, kPi / 2.0, kPi / 2.0;
        Vector x = polar_to_cartesian(part.chart(0), xhat);
        CHECK(x[0] == doctest::Approx(0.0));
        CHECK(x[1] == doctest::Approx(2.0));
        CHECK(x[2] == doctest::Approx(0.0));
    }
    SUBCASE("d=5 norm preservation") {
        auto part = equidistant_partition(1, 4.0, 5);
        SeededRng rng(2);
        for (int rep = 0; rep < 50; ++rep) {
            Vector xhat = random_chart_point(rng, part.chart(0));
            Vector x = polar_to_cartesian(part.chart(0), xhat);
            CHECK(std::abs(x.norm() - xhat[0]) <= 1e-12 * (1.0 + xhat[0]));
        }
    }
    SUBCASE("out of chart raises") {
        auto part = equidistant_partition(2, 2.0, 2);
        Vector xhat(2);
        xhat << 1.7, 1.0;  // rho beyond layer 0
        CHECK_THROWS_AS(polar_to_cartesian(part.chart(0), xhat), OutOfChart);
    }
}

TEST_CASE("cartesian_to_polar round trips") {
    for (int d : {2, 3, 6}) {
        auto part = equidistant_partition(4, 5.0, d);
        SeededRng rng(100 + d);
        for (int rep = 0; rep < 1000; ++rep) {
            Vector x(d);
            for (int i = 0; i < d; ++i) x[i] = 1.2 * rng.normal();
            if (x.norm() >= part.outer_radius()) continue;
            auto [layer, xhat] = cartesian_to_polar(part, x);
            Vector back = polar_to_cartesian(part.chart(layer), xhat);
            CHECK((back - x).norm() <= 1e-10 * (1.0 + x.norm()));
        }
    }
}

TEST_CASE("cartesian_to_polar conventions") {
    auto part = equidistant_partition(4, 8.0, 3);
    SUBCASE("polar axis handled with theta0 = 0") {
        Vector x(3);
        x << 0.0, 0.0, 2.5;  // on the x3 axis, sin(theta1) = 0
        auto [layer, xhat] = cartesian_to_polar(part, x);
        CHECK(xhat[1] == doctest::Approx(0.0));
        Vector back = polar_to_cartesian(part.chart(layer), xhat);
        CHECK((back - x).norm() <= 1e-12);
    }
    SUBCASE("boundary radius goes to the upper shell") {
        Vector x(3);
        x << 2.0, 0.0, 0.0;  // ||x|| = rho_2 exactly (radii 0,2,4,6,8)
        auto [layer, xhat] = cartesian_to_polar(part, x);
        CHECK(layer == 1);
    }
    SUBCASE("tail point raises") {
        Vector x(3);
        x << 9.0, 0.0, 0.0;
        CHECK_THROWS_AS(cartesian_to_polar(part, x), OutsideCoveredRegion);
    }
}

TEST_CASE("jacobian_det") {
    SUBCASE("d=2 is rho") {
        auto part = equidistant_partition(1, 5.0, 2);
        Vector xhat(2);
        xhat << 3.0, 1.2;
        CHECK(jacobian_det(part.chart(0), xhat) == doctest::Approx(3.0));
    }
    SUBCASE("vanishes when an angle hits the boundary") {
        auto part = equidistant_partition(1, 5.0, 4);
        Vector xhat(4);
        xhat << 2.0, 1.0, kPi, 0.7;
        CHECK(jacobian_det(part.chart(0), xhat) == doctest::Approx(0.0));
    }
    SUBCASE("matches the finite-difference determinant (rank-1 stability)") {
        auto part = equidistant_partition(1, 5.0, 4);
        auto chart = part.chart(0);
        SeededRng rng(7);
        for (int rep = 0; rep < 20; ++rep) {
            Vector xhat = random_chart_point(rng, chart);
            // keep clear of the chart boundary for the FD stencil
            xhat[0] = std::clamp(xhat[0], 0.2, 4.8);
            for (int j = 2; j < 4; ++j)
                xhat[j] = std::clamp(xhat[j], 0.2, kPi - 0.2);
            const double h = 1e-6;
            Matrix J(4, 4);
            for (int j = 0; j < 4; ++j) {
                Vector xp = xhat, xm = xhat;
                xp[j] += h;
                xm[j] -= h;
                J.col(j) = (polar_to_cartesian(chart, xp) -
                            polar_to_cartesian(chart, xm)) /
                           (2.0 * h);
            }
            double fd = std::abs(J.determinant());
            double analytic = jacobian_det(chart, xhat);
            CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("layer_weight_mass") {
    SUBCASE("unit disk area") {
        auto part = equidistant_partition(1, 1.0, 2);
        CHECK(layer_weight_mass(part.chart(0)) == doctest::Approx(kPi));
    }
    SUBCASE("unit ball volume") {
        auto part = equidistant_partition(1, 1.0, 3);
        CHECK(layer_weight_mass(part.chart(0)) ==
              doctest::Approx(4.0 * kPi / 3.0));
    }
    SUBCASE("d=6 shell matches Monte Carlo within 3 standard errors") {
        const int d = 6;
        LayerPartition part;
        part.dim = d;
        part.center = Vector::Zero(d);
        part.radii = {0.0, 1.0, 2.0};
        double analytic = layer_weight_mass(part.chart(1));
        // hit-or-miss on the bounding cube [-2,2]^6
        SeededRng rng(99);
        const long n = 1000000;
        long hits = 0;
        for (long s = 0; s < n; ++s) {
            Vector x(d);
            for (int i = 0; i < d; ++i) x[i] = rng.uniform(-2.0, 2.0);
            double r = x.norm();
            if (r >= 1.0 && r < 2.0) ++hits;
        }
        double cube = std::pow(4.0, d);
        double p = static_cast<double>(hits) / n;
        double est = cube * p;
        double se = cube * std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(est - analytic) <= 3.0 * se);
    }
    SUBCASE("shell masses sum to the ball volume") {
        for (int d : {2, 3, 5, 9}) {
            auto part = equidistant_partition(7, 3.0, d);
            double total = 0.0;
            for (int l = 0; l < part.num_layers(); ++l)
                total += layer_weight_mass(part.chart(l));
            double ball = std::pow(kPi, 0.5 * d) * std::pow(3.0, d) /
                          std::tgamma(0.5 * d + 1.0);
            CHECK(total == doctest::Approx(ball).epsilon(1e-12));
        }
    }
}

TEST_CASE("equidistant_partition") {
    SUBCASE("paper layout: 19 layers to radius 10") {
        auto part = equidistant_partition(19, 10.0, 2);
        CHECK(part.num_layers() == 19);
        CHECK(part.radii.front() == doctest::Approx(0.0));
        CHECK(part.radii.back() == doctest::Approx(10.0));
        CHECK(part.radii[1] == doctest::Approx(10.0 / 19.0));
    }
    SUBCASE("single layer") {
        auto part = equidistant_partition(1, 1.0, 2);
        CHECK(part.radii == std::vector<double>{0.0, 1.0});
    }
    SUBCASE("radii strictly increasing for random L, R") {
        SeededRng rng(1);
        for (int rep = 0; rep < 20; ++rep) {
            int L = 1 + static_cast<int>(rng.uniform() * 30);
            double R = 0.1 + 20.0 * rng.uniform();
            auto part = equidistant_partition(L, R, 3);
            for (int l = 0; l + 1 < static_cast<int>(part.radii.size()); ++l)
                CHECK(part.radii[l] < part.radii[l + 1]);
        }
    }
}

TEST_CASE("layer assignment is unique over random points") {
    auto part = equidistant_partition(5, 4.0, 3);
    SeededRng rng(55);
    for (int rep = 0; rep < 200; ++rep) {
        Vector x(3);
        for (int i = 0; i < 3; ++i) x[i] = rng.normal();
        if (x.norm() >= 4.0) continue;
        auto [layer, xhat] = cartesian_to_polar(part, x);
        double rho = xhat[0];
        CHECK(rho >= part.radii[layer] - 1e-14);
        CHECK(rho < part.radii[layer + 1]);
    }
}
