#pragma once

#include "ttdensity/errors.hpp"
#include "ttdensity/types.hpp"

#include <utility>
#include <vector>

namespace ttdensity {

/// Transformed-domain box of one hyperspherical shell:
/// [rho_lo, rho_hi] x [0, 2pi] x [0, pi]^{d-2}. For d = 2 there are no
/// [0, pi] factors. Coordinates are xhat = (rho, theta_0, theta_1, ...).
struct PolarChart {
    int layer_index = 0;  // 0-based
    int dim = 2;
    double rho_lo = 0.0;
    double rho_hi = 1.0;
    Vector center;

    double box_lo(int coord) const { return coord == 0 ? rho_lo : 0.0; }
    double box_hi(int coord) const;
};

/// Radii 0 = rho_0 < rho_1 < ... < rho_L covering the ball of radius rho_L;
/// everything beyond the last radius belongs to the Gaussian tail layer.
struct LayerPartition {
    std::vector<double> radii;  // L + 1 entries
    int dim = 2;
    Vector center;

    int num_layers() const { return static_cast<int>(radii.size()) - 1; }
    double outer_radius() const { return radii.back(); }
    PolarChart chart(int layer) const;
};

LayerPartition equidistant_partition(int L, double R, int d);
LayerPartition equidistant_partition(int L, double R, int d, Vector center);

/// The multivariate polar map x = center + rho * (cos t0 sin t1 ... ).
Vector polar_to_cartesian(const PolarChart& chart, const Vector& xhat);

/// Layer lookup plus chart coordinates; shells are half-open [rho_l, rho_{l+1})
/// so boundary points resolve deterministically. Throws OutsideCoveredRegion
/// for points in the tail layer. On the polar axis theta_0 is set to 0.
std::pair<int, Vector> cartesian_to_polar(const LayerPartition& partition,
                                          const Vector& x);

/// Non-throwing variant: layer -1 marks the tail region.
std::pair<int, Vector> try_cartesian_to_polar(const LayerPartition& partition,
                                              const Vector& x);

/// |det J| = rho^{d-1} * prod_i sin^i(theta_i); the chart is rank-1 stable so
/// this equals the product of the per-coordinate factors below.
double jacobian_det(const PolarChart& chart, const Vector& xhat);

/// Per-coordinate Jacobian factor h_j: h_0 = rho^{d-1}, h_1 = 1,
/// h_{i+1} = sin^i for the [0, pi] coordinates.
double jacobian_factor(const PolarChart& chart, int coord, double value);

/// Closed form for int_0^pi sin^i theta dtheta (Wallis).
double sin_power_mass(int i);

/// int_box prod_j h_j = (rho_hi^d - rho_lo^d)/d * 2pi * prod sin_power_mass(i).
double layer_weight_mass(const PolarChart& chart);

}  // namespace ttdensity
