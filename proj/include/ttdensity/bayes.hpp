#pragma once

#include "ttdensity/rng.hpp"
#include "ttdensity/types.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <vector>

namespace ttdensity {

struct GaussianNoiseModel {
    Vector delta;       // observations
    double sigma;       // noise standard deviation, C_0 = sigma^2 I
    Vector y_truth;     // parameter the data was synthesized from, if known
};

/// Psi(y, delta) = ||delta - G(y)||^2 / (2 sigma^2).
double potential(const GaussianNoiseModel& noise, const Vector& g_of_y);

using ForwardModel = std::function<Vector(const Vector&)>;

struct LinearForward {
    Matrix A;
    Vector operator()(const Vector& y) const { return A * y; }
};

/// Desk-scale Darcy forward model on D = [0,1]^2: five-point finite volumes
/// with harmonic-mean face coefficients for -div(a(y) grad q) = 1, q = 0 on
/// the boundary, a(x, y) = exp(sum_k a_k(x) y_k) with planar Fourier cosine
/// modes a_k. Observations are bilinear interpolations at an equidistant
/// interior grid of sensors.
class DarcyLiteForward {
public:
    DarcyLiteForward(int grid_n, int d_modes, int obs_per_side = 12,
                     double amplitude = 0.25);

    Vector operator()(const Vector& y) const;  // J = obs_per_side^2 values
    int n_obs() const { return static_cast<int>(obs_.size()); }
    int dim() const { return d_; }
    int grid_n() const { return n_; }

    /// Full interior solution, row-major over the n x n grid (tests).
    Vector solve_field(const Vector& y) const;

    /// log a(x, y) at a physical point.
    double log_coefficient(double x1, double x2, const Vector& y) const;

private:
    int n_;
    int d_;
    double amplitude_;
    std::vector<std::pair<int, int>> modes_;       // (k1, k2) enumeration
    std::vector<std::pair<double, double>> obs_;   // sensor locations

    Vector interpolate(const Vector& field, double x1, double x2) const;
};

/// Unnormalized log posterior -Psi(y, delta) - ||y||^2 / 2 for a standard
/// normal prior. Forward-solver failures surface with the offending y.
LogDensity make_log_posterior(const GaussianNoiseModel& noise,
                              const ForwardModel& forward, int dim);

/// delta = G(y*) + sigma xi with standard normal xi.
GaussianNoiseModel synthesize_observations(const ForwardModel& forward,
                                           const Vector& y_star, double sigma,
                                           SeededRng& rng);

struct MCMCConfig {
    long steps = 100000;
    long burn_in = 1000;
    double proposal_scale = 0.5;
    std::uint64_t seed = 0;
    bool adapt = true;       // Robbins-Monro tuning during burn-in
    long store_every = 0;    // 0 = keep no chain states
};

struct MCMCResult {
    Vector mean;
    Matrix cov;
    double acceptance_rate = 0.0;
    long density_calls = 0;
    double proposal_scale = 0.0;  // after adaptation
    std::vector<Vector> chain;    // thinned by store_every
};

/// Gaussian random-walk Metropolis. Mean/covariance accumulate in streaming
/// form after burn-in; the proposal scale tunes toward 30% acceptance during
/// burn-in when adapt is set.
MCMCResult rwm_mcmc(const LogDensity& logdensity, const MCMCConfig& cfg,
                    const Vector& x0);

}  // namespace ttdensity
