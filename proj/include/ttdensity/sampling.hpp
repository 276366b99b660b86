#pragma once

#include "ttdensity/coords.hpp"
#include "ttdensity/rng.hpp"
#include "ttdensity/types.hpp"

#include <iosfwd>
#include <vector>

namespace ttdensity {

/// Reconstruction samples of one layer. `values` hold
/// exp(log f - log_offset) with log_offset = max log f over the set, so the
/// stored numbers stay O(1) however concentrated the density is.
struct LayerSampleSet {
    int layer_index = 0;
    Matrix points;       // N x d chart coordinates
    Vector values;       // offset-scaled density values, >= 0
    Vector log_values;   // raw log f at the points
    double log_offset = 0.0;
};

/// Inverse-transform draws with density proportional to rho^{d-1} on [a, b].
std::vector<double> sample_radial(SeededRng& rng, double a, double b, int d,
                                  int N);

/// Draws with density proportional to sin^i on [0, pi]. i = 1 is analytic;
/// i >= 2 inverts the closed-form antiderivative of sin^i by bisection plus
/// Newton to 1e-12.
std::vector<double> sample_angular(SeededRng& rng, int i, int N);

/// Coordinate-wise draws from the normalized rank-1 weight w^l followed by
/// evaluation of the transformed perturbed prior at each point.
/// `prior` is the X-space log-density.
LayerSampleSet sample_layer(SeededRng& rng, const PolarChart& chart,
                            const LogDensity& prior, int N);

/// Debug export: layer, xhat_1..xhat_d, log-value.
void write_csv(const LayerSampleSet& samples, std::ostream& os);

}  // namespace ttdensity
