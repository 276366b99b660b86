#include "ttdensity/basis.hpp"

#include "ttdensity/quadrature.hpp"
#include "support/oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace ttdensity;

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_gram_identity(const OrthonormalBasis1D& basis, double tol = 1e-10) {
    Matrix G = testing::gram_matrix(basis);
    for (int i = 0; i < basis.size; ++i) {
        for (int j = 0; j < basis.size; ++j) {
            double expected = (i == j) ? 1.0 : 0.0;
            CHECK(std::abs(G(i, j) - expected) <= tol);
        }
    }
}
}  // namespace

TEST_CASE("radial basis: shifted Legendre for constant weight") {
    auto basis = radial_basis(0.0, 1.0, 3, 1);
    // orthonormal shifted Legendre: 1, sqrt(3)(2x-1), sqrt(5)(6x^2-6x+1)
    CHECK(basis.eval(0, 0.3) == doctest::Approx(1.0));
    CHECK(basis.eval(1, 0.3) ==
          doctest::Approx(std::sqrt(3.0) * (2.0 * 0.3 - 1.0)));
    CHECK(basis.eval(2, 0.3) ==
          doctest::Approx(std::sqrt(5.0) *
                          (6.0 * 0.09 - 6.0 * 0.3 + 1.0)));
    check_gram_identity(basis);
}

TEST_CASE("radial basis: hand Gram-Schmidt oracle for weight rho on [0,1]") {
    // mass = 1/2 so P_0 = sqrt(2); orthogonalizing rho gives
    // rho - 2/3 with norm 1/6, so P_1 = 6 rho - 4
    auto basis = radial_basis(0.0, 1.0, 2, 2);
    CHECK(basis.eval(0, 0.77) == doctest::Approx(std::sqrt(2.0)));
    CHECK(basis.eval(1, 0.25) == doctest::Approx(6.0 * 0.25 - 4.0));
    CHECK(basis.eval(1, 0.9) == doctest::Approx(6.0 * 0.9 - 4.0));
}

TEST_CASE("radial basis: narrow shell at high weight power") {
    auto basis = radial_basis(0.5, 1.0, 8, 10);
    check_gram_identity(basis);
}

TEST_CASE("trig basis") {
    auto basis = trig_basis(5);
    SUBCASE("constant mode") {
        CHECK(basis.eval(0, 1.234) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)));
    }
    SUBCASE("fourier orthonormality") {
        // P_2 P_3 integrate to zero, P_2 to one (1-based indices)
        auto p2p3 = integrate_gl(
            [&](double t) { return basis.eval(1, t) * basis.eval(2, t); }, 0.0,
            2.0 * kPi, 64);
        auto p2p2 = integrate_gl(
            [&](double t) { return basis.eval(1, t) * basis.eval(1, t); }, 0.0,
            2.0 * kPi, 64);
        CHECK(std::abs(p2p3) <= 1e-14);
        CHECK(p2p2 == doctest::Approx(1.0));
    }
    SUBCASE("41 functions reach frequency 20") {
        auto big = trig_basis(41);
        CHECK(big.eval(39, 0.3) ==
              doctest::Approx(std::sin(20.0 * 0.3) / std::sqrt(kPi)));
        CHECK(big.eval(40, 0.3) ==
              doctest::Approx(std::cos(20.0 * 0.3) / std::sqrt(kPi)));
        check_gram_identity(big);
    }
}

TEST_CASE("angular basis") {
    SUBCASE("i=1, constant is 1/sqrt(2)") {
        auto basis = angular_basis(1, 1);
        CHECK(basis.eval(0, 0.4) == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
    SUBCASE("i=2: odd symmetry gives P_1 proportional to theta - pi/2") {
        auto basis = angular_basis(2, 2);
        // int (theta - pi/2)^2 sin^2 = pi^3/24 - pi/4
        double norm = std::sqrt(kPi * kPi * kPi / 24.0 - kPi / 4.0);
        CHECK(basis.eval(1, 1.0) == doctest::Approx((1.0 - kPi / 2.0) / norm));
        CHECK(basis.eval(1, kPi / 2.0) == doctest::Approx(0.0));
    }
    SUBCASE("i=3, n=6 gram identity") {
        auto basis = angular_basis(3, 6);
        check_gram_identity(basis);
    }
}

TEST_CASE("weighted_monomial_integral") {
    auto basis = radial_basis(0.25, 1.5, 5, 4);
    SUBCASE("constant basis function integrates to sqrt(mass)") {
        double mass = basis.weight_mass();
        CHECK(weighted_monomial_integral(basis, 0, 0) ==
              doctest::Approx(std::sqrt(mass)));
    }
    SUBCASE("higher functions are orthogonal to constants") {
        for (int j = 1; j < basis.size; ++j)
            CHECK(std::abs(weighted_monomial_integral(basis, 0, j)) <= 1e-13);
    }
    SUBCASE("hand oracle: d=2, [0,1], m=1, first function") {
        auto b2 = radial_basis(0.0, 1.0, 2, 2);
        // int rho sqrt(2) rho drho = sqrt(2)/3
        CHECK(weighted_monomial_integral(b2, 1, 0) ==
              doctest::Approx(std::sqrt(2.0) / 3.0));
    }
    SUBCASE("matches quadrature for larger m") {
        for (int m : {1, 3, 6}) {
            for (int j = 0; j < basis.size; ++j) {
                double quad = integrate_gl(
                    [&](double x) {
                        return std::pow(x, m) * basis.eval(j, x) *
                               basis.weight(x);
                    },
                    basis.a, basis.b, 80);
                CHECK(weighted_monomial_integral(basis, m, j) ==
                      doctest::Approx(quad).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("trig_power_integral closed forms") {
    CHECK(trig_power_integral(0, 0, true) == doctest::Approx(2.0 * kPi));
    CHECK(trig_power_integral(2, 0, true) == doctest::Approx(kPi));
    CHECK(trig_power_integral(1, 1, false) == doctest::Approx(0.0));
    CHECK(trig_power_integral(1, 0, false) == doctest::Approx(2.0));
    CHECK(trig_power_integral(0, 2, false) == doctest::Approx(kPi / 2.0));
    // quadrature cross-check on a non-trivial pair
    for (auto [a, b] : {std::pair{4, 2}, {3, 2}, {2, 6}}) {
        for (bool full : {true, false}) {
            double upper = full ? 2.0 * kPi : kPi;
            double quad = integrate_gl(
                [&](double t) {
                    return std::pow(std::sin(t), a) * std::pow(std::cos(t), b);
                },
                0.0, upper, 64);
            CHECK(trig_power_integral(a, b, full) ==
                  doctest::Approx(quad).epsilon(1e-12));
        }
    }
}

TEST_CASE("basis_times_trigpower_integral") {
    SUBCASE("constant function times unit integrand") {
        auto basis = trig_basis(3);
        CHECK(basis_times_trigpower_integral(basis, 0, 0, 0) ==
              doctest::Approx(2.0 * kPi / std::sqrt(2.0 * kPi)));
    }
    SUBCASE("hand oracle: cos mode against cos") {
        auto basis = trig_basis(3);
        // P_3 = cos(theta)/sqrt(pi); int cos^2 = pi -> sqrt(pi)
        CHECK(basis_times_trigpower_integral(basis, 2, 0, 1) ==
              doctest::Approx(std::sqrt(kPi)));
    }
    SUBCASE("odd integrands vanish") {
        auto basis = trig_basis(5);
        CHECK(std::abs(basis_times_trigpower_integral(basis, 0, 1, 0)) <= 1e-14);
        // sin(theta) against cos^3: odd in theta over the full circle
        CHECK(std::abs(basis_times_trigpower_integral(basis, 1, 0, 3)) <= 1e-14);
        auto ang = angular_basis(2, 3);
        // cos^odd on [0, pi] against even functions cancels
        CHECK(std::abs(basis_times_trigpower_integral(ang, 0, 0, 1)) <= 1e-14);
    }
    SUBCASE("matches quadrature for trig and angular families") {
        auto trig = trig_basis(9);
        auto ang = angular_basis(3, 5);
        for (int j = 0; j < 9; j += 2) {
            for (auto [a, b] : {std::pair{2, 1}, {1, 2}, {4, 0}}) {
                double quad = integrate_gl(
                    [&](double t) {
                        return trig.eval(j, t) * std::pow(std::sin(t), a) *
                               std::pow(std::cos(t), b);
                    },
                    0.0, 2.0 * kPi, 160);
                CHECK(basis_times_trigpower_integral(trig, j, a, b) ==
                      doctest::Approx(quad).epsilon(1e-11));
            }
        }
        for (int j = 0; j < 5; ++j) {
            for (auto [a, b] : {std::pair{2, 1}, {1, 2}, {3, 4}}) {
                double quad = integrate_gl(
                    [&](double t) {
                        return ang.eval(j, t) * std::pow(std::sin(t), a) *
                               std::pow(std::cos(t), b) * ang.weight(t);
                    },
                    0.0, kPi, 160);
                CHECK(basis_times_trigpower_integral(ang, j, a, b) ==
                      doctest::Approx(quad).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("completeness: low-degree monomials are reproduced") {
    auto bases = {radial_basis(0.2, 1.1, 6, 3), angular_basis(2, 6)};
    for (const auto& basis : bases) {
        for (int k = 0; k < basis.size; ++k) {
            std::vector<double> coeff(basis.size);
            for (int j = 0; j < basis.size; ++j)
                coeff[j] = weighted_monomial_integral(basis, k, j);
            // weighted L2 error of the reconstruction
            double err2 = integrate_gl(
                [&](double x) {
                    double recon = 0.0;
                    for (int j = 0; j < basis.size; ++j)
                        recon += coeff[j] * basis.eval(j, x);
                    double diff = std::pow(x, k) - recon;
                    return diff * diff * basis.weight(x);
                },
                basis.a, basis.b, 120);
            CHECK(std::sqrt(std::max(err2, 0.0)) <= 1e-9);
        }
    }
}

TEST_CASE("precision monotonicity: tau 50 vs 100") {
    auto lo = radial_basis(0.4, 1.3, 11, 5, 50);
    auto hi = radial_basis(0.4, 1.3, 11, 5, 100);
    for (double x : {0.41, 0.7, 0.99, 1.29}) {
        for (int j = 0; j < 11; ++j)
            CHECK(std::abs(lo.eval(j, x) - hi.eval(j, x)) <= 1e-12);
    }
    auto alo = angular_basis(2, 8, 50);
    auto ahi = angular_basis(2, 8, 100);
    for (double x : {0.2, 1.4, 2.9}) {
        for (int j = 0; j < 8; ++j)
            CHECK(std::abs(alo.eval(j, x) - ahi.eval(j, x)) <= 1e-12);
    }
}

TEST_CASE("basis json round trip") {
    auto basis = radial_basis(0.3, 0.9, 5, 7);
    auto restored = basis_from_json(basis_to_json(basis));
    CHECK(restored.size == basis.size);
    for (double x : {0.31, 0.6, 0.89}) {
        for (int j = 0; j < basis.size; ++j)
            CHECK(restored.eval(j, x) == doctest::Approx(basis.eval(j, x)));
    }
    auto trig = trig_basis(7);
    auto trig_restored = basis_from_json(basis_to_json(trig));
    CHECK(trig_restored.eval(3, 0.5) == doctest::Approx(trig.eval(3, 0.5)));
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(radial_basis(0.5, 0.5, 3, 2), ConfigError);
    CHECK_THROWS_AS(radial_basis(-0.1, 1.0, 3, 2), ConfigError);
    CHECK_THROWS_AS(radial_basis(0.0, 1.0, 3, 2, 20), ConfigError);
    CHECK_THROWS_AS(angular_basis(0, 3), ConfigError);
    CHECK_THROWS_AS(trig_basis(0), ConfigError);
}
