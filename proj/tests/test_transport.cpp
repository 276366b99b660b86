#include "ttdensity/transport.hpp"

#include "ttdensity/quadrature.hpp"
#include "ttdensity/rng.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ttdensity;

namespace {

TransportMap banana_t2() {
    // y1 = x1, y2 = x2 - (x1^2 + 1)
    std::vector<Matrix> quad(2);
    quad[0] = Matrix::Zero(2, 2);
    quad[1] = Matrix::Zero(2, 2);
    quad[1](0, 0) = -2.0;
    Vector M(2);
    M << 0.0, -1.0;
    return TransportMap::quadratic(quad, Matrix::Identity(2, 2), M);
}

TransportMap random_quadratic(SeededRng& rng, int d) {
    std::vector<Matrix> quad(d);
    for (int k = 0; k < d; ++k) {
        quad[k].resize(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) quad[k](i, j) = 0.3 * rng.normal();
    }
    Matrix H = Matrix::Identity(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) H(i, j) += 0.2 * rng.normal();
    Vector M(d);
    for (int i = 0; i < d; ++i) M[i] = rng.normal();
    return TransportMap::quadratic(quad, H, M);
}

}  // namespace

TEST_CASE("affine apply: identity") {
    auto map = TransportMap::affine(Matrix::Identity(2, 2), Vector::Zero(2));
    Vector x(2);
    x << 1.0, 2.0;
    CHECK((map.apply(x) - x).norm() == doctest::Approx(0.0));
}

TEST_CASE("banana T2 at origin") {
    Vector x = Vector::Zero(2);
    Vector y = banana_t2().apply(x);
    CHECK(y[0] == doctest::Approx(0.0));
    CHECK(y[1] == doctest::Approx(-1.0));
}

TEST_CASE("convex combination of identical maps is the map") {
    auto id = TransportMap::identity(1);
    auto map = TransportMap::convex_combination(0.5, id, id);
    Vector x(1);
    x << 3.0;
    CHECK(map.apply(x)[0] == doctest::Approx(3.0));
}

TEST_CASE("affine jacobian is constant H") {
    Matrix H(2, 2);
    H << 2.0, 1.0, 0.0, 3.0;
    auto map = TransportMap::affine(H, Vector::Ones(2));
    SeededRng rng(7);
    Vector x(2);
    x << rng.normal(), rng.normal();
    CHECK((map.jacobian(x) - H).norm() == doctest::Approx(0.0));
}

TEST_CASE("banana T2 jacobian is unit lower triangular") {
    Vector x(2);
    x << 1.7, -0.4;
    Matrix J = banana_t2().jacobian(x);
    CHECK(J(0, 0) == doctest::Approx(1.0));
    CHECK(J(0, 1) == doctest::Approx(0.0));
    CHECK(J(1, 0) == doctest::Approx(-2.0 * 1.7));
    CHECK(J(1, 1) == doctest::Approx(1.0));
    CHECK(banana_t2().log_abs_det_jacobian(x) == doctest::Approx(0.0));
}

TEST_CASE("analytic jacobians match central finite differences") {
    SeededRng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        int d = 2 + static_cast<int>(rng.uniform() * 3);
        auto map = random_quadratic(rng, d);
        Vector x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.normal();
        Matrix J = map.jacobian(x);
        Matrix J_fd = testing::fd_jacobian(map, x);
        CHECK((J - J_fd).norm() <= 1e-6 * (1.0 + J.norm()));
    }
}

TEST_CASE("log_abs_det_jacobian") {
    SUBCASE("diagonal affine") {
        auto map =
            TransportMap::affine(2.0 * Matrix::Identity(3, 3), Vector::Zero(3));
        CHECK(map.log_abs_det_jacobian(Vector::Ones(3)) ==
              doctest::Approx(3.0 * std::log(2.0)));
    }
    SUBCASE("matches finite-difference jacobian determinant") {
        SeededRng rng(11);
        for (int rep = 0; rep < 5; ++rep) {
            auto map = random_quadratic(rng, 3);
            Vector x(3);
            for (int i = 0; i < 3; ++i) x[i] = 0.5 * rng.normal();
            Matrix J_fd = testing::fd_jacobian(map, x);
            double expected = std::log(std::abs(J_fd.determinant()));
            CHECK(map.log_abs_det_jacobian(x) ==
                  doctest::Approx(expected).epsilon(1e-5));
        }
    }
    SUBCASE("singular jacobian throws") {
        Matrix H = Matrix::Identity(2, 2);
        std::vector<Matrix> quad(2, Matrix::Zero(2, 2));
        quad[0](0, 0) = 2.0;  // J(0,0) = 1 + 2 x1, singular at x1 = -1/2
        auto map = TransportMap::quadratic(quad, H, Vector::Zero(2));
        Vector x(2);
        x << -0.5, 0.0;
        CHECK_THROWS_AS(map.log_abs_det_jacobian(x), SingularJacobian);
    }
}

TEST_CASE("invert") {
    SUBCASE("affine analytic") {
        auto map =
            TransportMap::affine(2.0 * Matrix::Identity(2, 2), Vector::Ones(2));
        Vector y(2);
        y << 3.0, 3.0;
        Vector x = map.invert(y);
        CHECK(x[0] == doctest::Approx(1.0));
        CHECK(x[1] == doctest::Approx(1.0));
    }
    SUBCASE("banana round trip") {
        SeededRng rng(3);
        auto map = banana_t2();
        Vector x(2);
        x << rng.normal(), rng.normal();
        Vector back = map.invert(map.apply(x), 1e-12);
        CHECK((back - x).norm() <= 1e-10);
    }
    SUBCASE("convex banana round trip, 100 random points") {
        SeededRng rng(5);
        auto map = TransportMap::convex_combination(
            0.25, TransportMap::identity(2), banana_t2());
        for (int rep = 0; rep < 100; ++rep) {
            Vector x(2);
            x << rng.normal(), rng.normal();
            Vector back = map.invert(map.apply(x), 1e-10, 100);
            CHECK((back - x).norm() <= 1e-8);
        }
    }
}

TEST_CASE("round trip for every built-in map class") {
    SeededRng rng(19);
    std::vector<TransportMap> maps;
    Matrix H(2, 2);
    H << 1.5, 0.2, -0.1, 0.8;
    maps.push_back(TransportMap::affine(H, Vector::Ones(2)));
    maps.push_back(banana_t2());
    maps.push_back(TransportMap::convex_combination(
        0.4, TransportMap::affine(H, Vector::Ones(2)), banana_t2()));
    maps.push_back(TransportMap::composed(
        banana_t2(), TransportMap::affine(H, Vector::Zero(2))));
    for (const auto& map : maps) {
        for (int rep = 0; rep < 20; ++rep) {
            Vector x(2);
            x << rng.normal(), rng.normal();
            Vector back = map.invert(map.apply(x), 1e-12, 100);
            CHECK((back - x).norm() <= 1e-8);
        }
    }
}

TEST_CASE("chain rule for composed log determinants") {
    SeededRng rng(23);
    Matrix H(2, 2);
    H << 1.2, 0.3, 0.0, 0.9;
    auto f = banana_t2();
    auto g = TransportMap::affine(H, Vector::Ones(2));
    auto fg = TransportMap::composed(f, g);
    for (int rep = 0; rep < 10; ++rep) {
        Vector x(2);
        x << rng.normal(), rng.normal();
        double lhs = fg.log_abs_det_jacobian(x);
        double rhs = f.log_abs_det_jacobian(g.apply(x)) +
                     g.log_abs_det_jacobian(x);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("perturbed prior") {
    const int d = 2;
    auto std_normal_log = [](const Vector& x) {
        return -0.5 * x.squaredNorm() - std::log(6.283185307179586);
    };
    SUBCASE("identity pullback is the density itself") {
        LogDensity target{std_normal_log, d};
        auto prior = perturbed_prior(target, TransportMap::identity(d));
        Vector x(2);
        x << 0.3, -1.1;
        CHECK(prior(x) == doctest::Approx(std_normal_log(x)));
    }
    SUBCASE("exact affine transport of a scaled gaussian") {
        double sigma = 1e-3;
        Vector mu = Vector::Ones(d);
        LogDensity target{
            [=](const Vector& y) {
                return -0.5 * (y - mu).squaredNorm() / (sigma * sigma) -
                       d * std::log(sigma) - std::log(6.283185307179586);
            },
            d};
        auto map = TransportMap::affine(sigma * Matrix::Identity(d, d), mu);
        auto prior = perturbed_prior(target, map);
        SeededRng rng(31);
        for (int rep = 0; rep < 20; ++rep) {
            Vector x(2);
            x << rng.normal(), rng.normal();
            CHECK(prior(x) == doctest::Approx(std_normal_log(x)).epsilon(1e-12));
        }
    }
    SUBCASE("exact quadratic transport pulls the banana back to N(0,I)") {
        Matrix S(2, 2);
        S << 1.0, 0.9, 0.9, 1.0;
        Matrix S_inv = S.inverse();
        double log_norm =
            std::log(6.283185307179586) + 0.5 * std::log(S.determinant());
        LogDensity banana{
            [=](const Vector& y) {
                Vector z(2);
                z << y[0], y[1] + y[0] * y[0] + 1.0;
                return -0.5 * z.dot(S_inv * z) - log_norm;
            },
            2};
        // T = T2 o T_Sigma with the symmetric square root
        Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
        Matrix A = eig.eigenvectors() *
                   eig.eigenvalues().cwiseSqrt().asDiagonal() *
                   eig.eigenvectors().transpose();
        auto map = TransportMap::composed(
            banana_t2(), TransportMap::affine(A, Vector::Zero(2)));
        auto prior = perturbed_prior(banana, map);
        SeededRng rng(37);
        for (int rep = 0; rep < 100; ++rep) {
            Vector x(2);
            x << rng.normal(), rng.normal();
            CHECK(std::abs(prior(x) - std_normal_log(x)) <= 1e-10);
        }
    }
}

TEST_CASE("laplace_affine") {
    SUBCASE("anisotropic gaussian gives the matrix square root") {
        Vector diag(2);
        diag << 4.0, 1.0;
        Matrix Sigma = diag.asDiagonal();
        Matrix Sigma_inv = Sigma.inverse();
        LogDensity target{
            [Sigma_inv](const Vector& y) {
                Vector mu(2);
                mu << 1.0, -2.0;
                return -0.5 * (y - mu).dot(Sigma_inv * (y - mu));
            },
            2};
        auto map = laplace_affine(target, Vector::Zero(2));
        const AffineData* aff = map.as_affine();
        REQUIRE(aff != nullptr);
        CHECK(aff->M[0] == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(aff->M[1] == doctest::Approx(-2.0).epsilon(1e-5));
        Vector hdiag(2);
        hdiag << 2.0, 1.0;
        Matrix expected = hdiag.asDiagonal();
        CHECK((aff->H - expected).norm() <= 1e-4);
    }
    SUBCASE("standard normal gives identity") {
        LogDensity target{
            [](const Vector& y) { return -0.5 * y.squaredNorm(); }, 2};
        auto map = laplace_affine(target, Vector::Zero(2));
        const AffineData* aff = map.as_affine();
        CHECK(aff->M.norm() <= 1e-6);
        CHECK((aff->H - Matrix::Identity(2, 2)).norm() <= 1e-6);
    }
    SUBCASE("banana pullback variance within a factor 10 per coordinate") {
        Matrix S(2, 2);
        S << 1.0, 0.9, 0.9, 1.0;
        Matrix S_inv = S.inverse();
        LogDensity banana{
            [=](const Vector& y) {
                Vector z(2);
                z << y[0], y[1] + y[0] * y[0] + 1.0;
                return -0.5 * z.dot(S_inv * z);
            },
            2};
        auto map = laplace_affine(banana, Vector::Zero(2));
        auto prior = perturbed_prior(banana, map);
        // Monte Carlo variance of exp(prior) in each coordinate
        SeededRng rng(41);
        const int n = 1000;
        Vector mean = Vector::Zero(2), m2 = Vector::Zero(2);
        double wsum = 0.0;
        for (int s = 0; s < n; ++s) {
            Vector x(2);
            x << 3.0 * rng.normal(), 3.0 * rng.normal();
            double w = std::exp(prior(x) + 0.5 * x.squaredNorm() / 9.0);
            wsum += w;
            mean += w * x;
            m2 += w * x.cwiseProduct(x);
        }
        mean /= wsum;
        Vector var = m2 / wsum - mean.cwiseProduct(mean);
        for (int i = 0; i < 2; ++i) {
            CHECK(var[i] > 0.1);
            CHECK(var[i] < 10.0);
        }
    }
    SUBCASE("saddle point reports non-PD hessian") {
        LogDensity saddle{
            [](const Vector& y) {
                return -0.5 * y[0] * y[0] + 0.5 * y[1] * y[1] -
                       0.25 * y[1] * y[1] * y[1] * y[1];
            },
            2};
        Vector x0(2);
        x0 << 0.1, 0.0;  // ascent stalls on the saddle axis
        CHECK_THROWS_AS(laplace_affine(saddle, x0), HessianNotPD);
    }
}

TEST_CASE("mass conservation under exact transport (d=2 quadrature)") {
    const double sigma = 0.5;
    const Vector mu = Vector::Constant(2, 1.0);
    LogDensity target{
        [=](const Vector& y) {
            return -0.5 * (y - mu).squaredNorm() / (sigma * sigma) -
                   std::log(6.283185307179586 * sigma * sigma);
        },
        2};
    auto map = TransportMap::affine(sigma * Matrix::Identity(2, 2), mu);
    auto prior = perturbed_prior(target, map);
    auto integrand = [&](double x1, double x2) {
        Vector x(2);
        x << x1, x2;
        Vector v(1);
        v << std::exp(prior(x));
        return v;
    };
    auto result = adaptive_quad_2d(integrand, -9.0, 9.0, -9.0, 9.0, 1e-8, 0.0);
    CHECK(result.value[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("dimension mismatch raises") {
    auto map = TransportMap::identity(3);
    CHECK_THROWS_AS(map.apply(Vector::Zero(2)), DimensionMismatch);
    LogDensity f{[](const Vector&) { return 0.0; }, 2};
    CHECK_THROWS_AS(perturbed_prior(f, map), DimensionMismatch);
}
