#include "ttdensity/density.hpp"

#include "ttdensity/experiments.hpp"
#include "ttdensity/quadrature.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ttdensity;

namespace {
constexpr double kPi = 3.14159265358979323846;

LogDensity std_normal(int d) {
    return LogDensity{
        [d](const Vector& x) {
            return -0.5 * x.squaredNorm() - 0.5 * d * std::log(2.0 * kPi);
        },
        d};
}

/// Exact-transport standard-normal surrogate in the paper's validation
/// configuration, built once and shared across the checks below.
const LayeredDensity& normal_surrogate_d2() {
    static LayeredDensity ld = [] {
        BuildOptions opts;
        opts.radial_degree = 7;
        opts.trig_size = 1;
        opts.samples_per_layer = 1000;
        opts.seed = 2024;
        return build(std_normal(2), equidistant_partition(19, 10.0, 2), opts);
    }();
    return ld;
}

AffineData identity_affine(int d) {
    return AffineData{Matrix::Identity(d, d), Vector::Zero(d)};
}
}  // namespace

TEST_CASE("build: constant density over a single layer") {
    const double c = 0.35;
    LogDensity flat{[c](const Vector&) { return std::log(c); }, 2};
    BuildOptions opts;
    opts.radial_degree = 3;
    opts.samples_per_layer = 300;
    opts.seed = 5;
    auto ld = build(flat, equidistant_partition(1, 2.0, 2), opts);
    // mass inside = c * area of the disk of radius 2
    CHECK(ld.mass_inside() == doctest::Approx(c * kPi * 4.0).epsilon(1e-8));
}

TEST_CASE("build: exact-transport normal mass within 1e-6") {
    const auto& ld = normal_surrogate_d2();
    CHECK(std::abs(ld.mass_inside() + ld.mass_tail() - 1.0) <= 1e-6);
    // normalizer * (inside + tail) = 1 by construction
    CHECK(ld.normalizer() * (ld.mass_inside() + ld.mass_tail()) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build rejects empty partitions") {
    CHECK_THROWS_AS(equidistant_partition(0, 1.0, 2), ConfigError);
}

TEST_CASE("eval") {
    const auto& ld = normal_surrogate_d2();
    SUBCASE("tail region returns the scaled gaussian") {
        Vector x(2);
        x << 10.5, 0.0;
        double expected = ld.normalizer() *
                          std::exp(-0.5 * x.squaredNorm()) / (2.0 * kPi);
        CHECK(ld.eval(x) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("matches the standard normal inside") {
        SeededRng rng(9);
        for (int rep = 0; rep < 100; ++rep) {
            Vector x(2);
            x << rng.normal(), rng.normal();
            if (x.norm() > 3.0) continue;
            double expected = std::exp(-0.5 * x.squaredNorm()) / (2.0 * kPi);
            CHECK(ld.eval(x) == doctest::Approx(expected).epsilon(1e-4));
        }
    }
    SUBCASE("layer boundary ownership is deterministic") {
        const auto& radii = ld.partition().radii;
        Vector x(2);
        x << radii[3], 0.0;
        auto [layer, xhat] = cartesian_to_polar(ld.partition(), x);
        CHECK(layer == 3);
        CHECK(ld.eval(x) > 0.0);
    }
}

TEST_CASE("moment: zeroth equals covered mass") {
    const auto& ld = normal_surrogate_d2();
    std::vector<int> alpha{0, 0};
    double m0 = ld.moment(identity_affine(2), alpha);
    CHECK(m0 == doctest::Approx(1.0 - ld.normalizer() * ld.mass_tail())
                    .epsilon(1e-12));
}

TEST_CASE("moment: scaled-gaussian transport recovers mean and covariance") {
    // surrogate approximates N(0, I); pushing it through y = sigma x + mu
    // must give the N(mu, sigma^2 I) moments
    const auto& ld = normal_surrogate_d2();
    const double sigma = 1e-3;
    Vector mu(2);
    mu << 1.0, -2.0;
    auto map = TransportMap::affine(sigma * Matrix::Identity(2, 2), mu);
    auto [mean, cov] = ld.mean_and_cov(map);
    CHECK((mean - mu).norm() <= 1e-10 * mu.norm());
    Matrix expected = sigma * sigma * Matrix::Identity(2, 2);
    CHECK((cov - expected).norm() <= 1e-6 * expected.norm());
    // second moments against the analytic gaussian values
    const AffineData* aff = map.as_affine();
    std::vector<int> alpha{2, 0};
    double m20 = ld.moment(*aff, alpha);
    CHECK(m20 ==
          doctest::Approx(sigma * sigma + mu[0] * mu[0]).epsilon(1e-6));
    alpha = {1, 1};
    CHECK(ld.moment(*aff, alpha) ==
          doctest::Approx(mu[0] * mu[1]).epsilon(1e-6));
}

TEST_CASE("mean_and_cov: identity map on the normal surrogate") {
    const auto& ld = normal_surrogate_d2();
    auto [mean, cov] = ld.mean_and_cov(TransportMap::identity(2));
    CHECK(mean.norm() <= 1e-10);
    CHECK((cov - Matrix::Identity(2, 2)).norm() <= 1e-6);
    CHECK((cov - cov.transpose()).norm() <= 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("moment cap is enforced") {
    const auto& ld = normal_surrogate_d2();
    std::vector<int> alpha{3, 2};  // |alpha| = 5 > default cap 4
    CHECK_THROWS_AS(ld.moment(identity_affine(2), alpha), CapExceeded);
}

TEST_CASE("moment vs adaptive quadrature for |alpha| <= 3") {
    const auto& ld = normal_surrogate_d2();
    auto integrand = [&](double x1, double x2) {
        Vector x(2);
        x << x1, x2;
        double f = ld.eval(x);
        Vector v(10);
        int idx = 0;
        for (int total = 0; total <= 3; ++total)
            for (int a1 = total; a1 >= 0; --a1)
                v[idx++] = std::pow(x1, a1) * std::pow(x2, total - a1) * f;
        return v;
    };
    auto quad =
        adaptive_quad_2d(integrand, -10.0, 10.0, -10.0, 10.0, 1e-8, 0.0);
    int idx = 0;
    for (int total = 0; total <= 3; ++total) {
        for (int a1 = total; a1 >= 0; --a1) {
            std::vector<int> alpha{a1, total - a1};
            double m = ld.moment(identity_affine(2), alpha);
            double ref = quad.value[idx++];
            double scale = std::max(std::abs(ref), 1e-6);
            CHECK(std::abs(m - ref) <= 1e-5 * scale);
        }
    }
}

TEST_CASE("surrogate normalization via quadrature") {
    const auto& ld = normal_surrogate_d2();
    auto integrand = [&](double x1, double x2) {
        Vector x(2);
        x << x1, x2;
        Vector v(1);
        v << ld.eval(x);
        return v;
    };
    auto quad =
        adaptive_quad_2d(integrand, -10.0, 10.0, -10.0, 10.0, 1e-8, 0.0);
    double covered = quad.value[0];
    double total = covered + ld.normalizer() * ld.mass_tail();
    CHECK(std::abs(total - 1.0) <= 1e-5);
}

TEST_CASE("marginal moments") {
    const auto& ld = normal_surrogate_d2();
    auto raw = ld.marginal_moments(identity_affine(2), 0, 4);
    // beta_0 is the covered mass, odd moments vanish, beta_2 = 1, beta_4 = 3
    CHECK(raw[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(raw[1]) <= 1e-8);
    CHECK(std::abs(raw[3]) <= 1e-6);
    CHECK(raw[2] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(raw[4] == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("project_marginal reconstructs a gaussian marginal") {
    const auto& ld = normal_surrogate_d2();
    // moments up to degree 4 give a decent Legendre expansion on [-4, 4]
    auto raw = ld.marginal_moments(identity_affine(2), 1, 4);
    auto marginal = project_marginal(raw, -4.0, 4.0, 5);
    for (double y : {-1.0, 0.0, 0.5, 2.0}) {
        double expected = std::exp(-0.5 * y * y) / std::sqrt(2.0 * kPi);
        CHECK(std::abs(marginal.eval(y) - expected) <= 0.1);
    }
}

TEST_CASE("moment_qoi") {
    const auto& ld = normal_surrogate_d2();
    SUBCASE("unit quantity returns total mass") {
        auto est = ld.moment_qoi(
            TransportMap::identity(2),
            [](const Vector&) { return Vector::Ones(1); }, 1, 4000, 99);
        CHECK(std::abs(est.value[0] - 1.0) <= 3.0 * est.stderr[0] + 1e-10);
    }
    SUBCASE("odd quantity vanishes by symmetry") {
        auto est = ld.moment_qoi(
            TransportMap::identity(2),
            [](const Vector& y) { return Vector(y.head(1)); }, 1, 4000, 100);
        CHECK(std::abs(est.value[0]) <= 3.0 * est.stderr[0] + 1e-10);
    }
    SUBCASE("agrees with the closed-form moment within 4 SE") {
        auto map = TransportMap::affine(Matrix::Identity(2, 2), Vector::Ones(2));
        auto est = ld.moment_qoi(
            map,
            [](const Vector& y) {
                Vector v(2);
                v << y[0], y[0] * y[1];
                return v;
            },
            2, 20000, 101);
        const AffineData* aff = map.as_affine();
        std::vector<int> a10{1, 0};
        std::vector<int> a11{1, 1};
        CHECK(std::abs(est.value[0] - ld.moment(*aff, a10)) <=
              4.0 * est.stderr[0] + 1e-10);
        CHECK(std::abs(est.value[1] - ld.moment(*aff, a11)) <=
              4.0 * est.stderr[1] + 1e-10);
    }
}

TEST_CASE("banana moments through the qoi path") {
    // compact build: the t=1 exact transport makes the perturbed prior a
    // standard normal, so few layers suffice
    LogDensity target = experiments::banana_density();
    auto map = experiments::banana_exact_transport();
    auto prior = perturbed_prior(target, map);
    BuildOptions opts;
    opts.radial_degree = 7;
    opts.trig_size = 5;
    opts.samples_per_layer = 400;
    opts.seed = 31;
    auto ld = build(prior, equidistant_partition(8, 8.0, 2), opts);
    auto [mean, cov] = ld.mean_and_cov(map, 50000, 77);
    CHECK((mean - experiments::banana_reference_mean()).norm() <= 0.02);
    CHECK((cov - experiments::banana_reference_cov()).norm() <= 0.1);
}

TEST_CASE("exact rank-1 case rounds to rank 1") {
    const auto& ld = normal_surrogate_d2();
    for (const auto& layer : ld.layers()) {
        auto rounded = layer.tt.rounded(1e-8);
        for (int r : rounded.ranks()) CHECK(r == 1);
    }
}

TEST_CASE("layered density serialization round trip") {
    const auto& ld = normal_surrogate_d2();
    auto restored = LayeredDensity::from_json(ld.to_json());
    CHECK(restored.mass_inside() ==
          doctest::Approx(ld.mass_inside()).epsilon(1e-15));
    SeededRng rng(61);
    for (int rep = 0; rep < 20; ++rep) {
        Vector x(2);
        x << 2.5 * rng.normal(), 2.5 * rng.normal();
        CHECK(restored.eval(x) == doctest::Approx(ld.eval(x)).epsilon(1e-12));
    }
    std::vector<int> alpha{2, 0};
    CHECK(restored.moment(identity_affine(2), alpha) ==
          doctest::Approx(ld.moment(identity_affine(2), alpha))
              .epsilon(1e-12));
}

TEST_CASE("tail options") {
    SUBCASE("user-specified tail") {
        BuildOptions opts;
        opts.radial_degree = 4;
        opts.samples_per_layer = 200;
        opts.seed = 8;
        opts.tail.kind = TailSpec::Kind::user;
        opts.tail.mu = Vector::Zero(2);
        opts.tail.sigma = 2.0 * Matrix::Identity(2, 2);
        auto ld = build(std_normal(2), equidistant_partition(4, 6.0, 2), opts);
        // spherical tail with s^2 = 2 has analytic mass Q(1, R^2/4)
        CHECK(ld.tail_mass_stderr() == 0.0);
        CHECK(ld.mass_tail() ==
              doctest::Approx(std::exp(-36.0 / 4.0)).epsilon(1e-10));
    }
    SUBCASE("tail from surrogate moments") {
        BuildOptions opts;
        opts.radial_degree = 5;
        opts.samples_per_layer = 400;
        opts.seed = 9;
        opts.tail.kind = TailSpec::Kind::surrogate_moments;
        auto ld = build(std_normal(2), equidistant_partition(6, 7.0, 2), opts);
        CHECK(ld.tail_mu().norm() <= 1e-4);
        CHECK((ld.tail_sigma() - Matrix::Identity(2, 2)).norm() <= 1e-3);
    }
}
