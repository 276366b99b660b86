#include "ttdensity/coords.hpp"

#include <cmath>
#include <string>

namespace ttdensity {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kBoxTol = 1e-12;
}  // namespace

double PolarChart::box_hi(int coord) const {
    if (coord == 0) return rho_hi;
    if (coord == 1) return kTwoPi;
    return kPi;
}

PolarChart LayerPartition::chart(int layer) const {
    if (layer < 0 || layer >= num_layers())
        throw OutsideCoveredRegion("layer index " + std::to_string(layer) +
                                   " out of range");
    PolarChart c;
    c.layer_index = layer;
    c.dim = dim;
    c.rho_lo = radii[layer];
    c.rho_hi = radii[layer + 1];
    c.center = center;
    return c;
}

LayerPartition equidistant_partition(int L, double R, int d) {
    return equidistant_partition(L, R, d, Vector::Zero(d));
}

LayerPartition equidistant_partition(int L, double R, int d, Vector center) {
    if (L < 1) throw ConfigError("equidistant_partition: L must be >= 1");
    if (R <= 0.0) throw ConfigError("equidistant_partition: R must be > 0");
    if (d < 2) throw ConfigError("equidistant_partition: d must be >= 2");
    if (center.size() != d)
        throw DimensionMismatch("equidistant_partition: center dimension");
    LayerPartition p;
    p.dim = d;
    p.center = std::move(center);
    p.radii.resize(L + 1);
    for (int l = 0; l <= L; ++l) p.radii[l] = R * static_cast<double>(l) / L;
    return p;
}

namespace {

void check_in_box(const PolarChart& chart, const Vector& xhat) {
    if (xhat.size() != chart.dim)
        throw DimensionMismatch("polar chart: coordinate dimension mismatch");
    for (int j = 0; j < chart.dim; ++j) {
        double lo = chart.box_lo(j), hi = chart.box_hi(j);
        double slack = kBoxTol * (1.0 + std::abs(lo) + std::abs(hi));
        if (xhat[j] < lo - slack || xhat[j] > hi + slack)
            throw OutOfChart("coordinate " + std::to_string(j) + " = " +
                             std::to_string(xhat[j]) + " outside [" +
                             std::to_string(lo) + ", " + std::to_string(hi) +
                             "]");
    }
}

}  // namespace

Vector polar_to_cartesian(const PolarChart& chart, const Vector& xhat) {
    check_in_box(chart, xhat);
    const int d = chart.dim;
    const double rho = xhat[0];
    Vector u(d);
    // suffix[i] = prod of sin(theta_m) for m >= i (angles theta_1..theta_{d-2})
    double suffix = 1.0;
    u[d - 1] = (d >= 3) ? std::cos(xhat[d - 1]) : 0.0;
    for (int i = d - 2; i >= 2; --i) {
        suffix *= std::sin(xhat[i + 1]);
        u[i] = std::cos(xhat[i]) * suffix;
    }
    if (d >= 3) suffix *= std::sin(xhat[2]);
    u[0] = std::cos(xhat[1]) * suffix;
    u[1] = std::sin(xhat[1]) * suffix;
    return chart.center + rho * u;
}

std::pair<int, Vector> cartesian_to_polar(const LayerPartition& partition,
                                          const Vector& x) {
    auto result = try_cartesian_to_polar(partition, x);
    if (result.first < 0)
        throw OutsideCoveredRegion("point at radius " +
                                   std::to_string((x - partition.center).norm()) +
                                   " lies in the tail layer");
    return result;
}

std::pair<int, Vector> try_cartesian_to_polar(const LayerPartition& partition,
                                              const Vector& x) {
    if (x.size() != partition.dim)
        throw DimensionMismatch("cartesian_to_polar: dimension mismatch");
    const int d = partition.dim;
    Vector u = x - partition.center;
    const double rho = u.norm();
    if (rho >= partition.outer_radius()) return {-1, Vector()};
    int layer = partition.num_layers() - 1;
    for (int l = 0; l < partition.num_layers(); ++l) {
        if (rho < partition.radii[l + 1]) {
            layer = l;
            break;
        }
    }
    Vector xhat(d);
    xhat[0] = rho;
    // partial[i] = ||(u_0, ..., u_i)||, built in one forward pass
    Vector partial(d);
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        acc += u[i] * u[i];
        partial[i] = std::sqrt(acc);
    }
    for (int i = d - 2; i >= 1; --i)
        xhat[i + 1] = std::atan2(partial[i], u[i + 1]);  // in [0, pi]
    double theta0 = (partial[1] == 0.0) ? 0.0 : std::atan2(u[1], u[0]);
    if (theta0 < 0.0) theta0 += kTwoPi;
    xhat[1] = theta0;
    return {layer, xhat};
}

double jacobian_factor(const PolarChart& chart, int coord, double value) {
    if (coord == 0) return std::pow(value, chart.dim - 1);
    if (coord == 1) return 1.0;
    return std::pow(std::sin(value), coord - 1);
}

double jacobian_det(const PolarChart& chart, const Vector& xhat) {
    check_in_box(chart, xhat);
    double det = 1.0;
    for (int j = 0; j < chart.dim; ++j) det *= jacobian_factor(chart, j, xhat[j]);
    return det;
}

double sin_power_mass(int i) {
    if (i < 0) throw ConfigError("sin_power_mass: negative exponent");
    // Wallis recurrence W_i = W_{i-2} (i-1)/i with W_0 = pi, W_1 = 2
    double w = (i % 2 == 0) ? kPi : 2.0;
    for (int k = (i % 2 == 0) ? 2 : 3; k <= i; k += 2)
        w *= static_cast<double>(k - 1) / k;
    return w;
}

double layer_weight_mass(const PolarChart& chart) {
    const int d = chart.dim;
    double radial =
        (std::pow(chart.rho_hi, d) - std::pow(chart.rho_lo, d)) / d;
    double mass = radial * kTwoPi;
    for (int i = 1; i <= d - 2; ++i) mass *= sin_power_mass(i);
    return mass;
}

}  // namespace ttdensity
