#pragma once

#include "ttdensity/bayes.hpp"
#include "ttdensity/density.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ttdensity::experiments {

struct BasisConfig {
    int radial_degree = 7;
    int trig_size = 1;
    int angular_size = 1;
    unsigned tau_mant = 100;
};

// --- model problems -------------------------------------------------------

/// Normalized N(mu, sigma2 I) log-density.
LogDensity gaussian_density(const Vector& mu, double sigma2);

/// The curved, correlated banana posterior: the pushforward of N(0, Sigma)
/// with Sigma = [[1, 0.9], [0.9, 1]] through (y1, y2) = (z1, z2 - z1^2 - 1).
/// Normalized.
LogDensity banana_density();

/// Exact quadratic transport of N(0, I) to the banana density.
TransportMap banana_exact_transport();

/// Analytic banana mean (0, -2) and covariance [[1, 0.9], [0.9, 3]].
Vector banana_reference_mean();
Matrix banana_reference_cov();

// --- scenario runners ------------------------------------------------------

struct GaussianCellSpec {
    int d = 2;
    double sigma2 = 1e-2;
    double mu_value = 1.0;
    std::string transport = "exact";  // exact | laplace
    int L = 19;
    double R = 10.0;
    BasisConfig basis;
    FitOptions fit;
    int samples_per_layer = 1000;
    std::uint64_t seed = 1;
    int kl_samples = 10000;
};

struct GaussianCellResult {
    long calls = 0;
    double err_Z = 0.0;
    double err_mu = 0.0;
    double err_Sigma = 0.0;
    double kl = 0.0;
    double hellinger = 0.0;
    int max_rounded_rank = 1;  // over layers, after rounding at 1e-8
    std::vector<int> layer_ranks;
};

GaussianCellResult run_gaussian_cell(const GaussianCellSpec& spec,
                                    LayeredDensity* keep_surrogate = nullptr);

struct BananaSpec {
    double t = 1.0;  // transport interpolation weight
    int L = 10;
    double R = 8.0;
    int radial_degree = 9;
    int trig_size = 41;  // Fourier modes up to degree 20
    FitOptions fit;
    int samples_per_layer = 100;
    std::uint64_t seed = 1;
    int qoi_samples_per_layer = 200000;
    long mcmc_burn_in_fraction_denom = 5;  // burn-in = steps / denom
};

struct BananaResult {
    long calls = 0;
    double err_mu_tt = 0.0;
    double err_sigma_tt = 0.0;
    double err_mu_mc = 0.0;
    double err_sigma_mc = 0.0;
    double mcmc_acceptance = 0.0;
};

/// Builds the surrogate with the interpolated transport, then runs a
/// random-walk chain on the same posterior with an identical density-call
/// budget. Errors are against the analytic banana moments.
BananaResult run_banana_case(const BananaSpec& spec,
                             LayeredDensity* keep_surrogate = nullptr);

struct DarcySpec {
    int d = 2;
    double noise_sigma = 1e-7;
    int grid_n = 64;
    int obs_per_side = 12;
    int L = 5;
    double R = 8.0;
    BasisConfig basis;
    FitOptions fit;
    int samples_per_layer = 100;
    std::uint64_t seed = 1;
    std::string reference = "quadrature";  // quadrature (d = 2) | mcmc
    double quad_rel_tol = 1e-7;
    long mcmc_reference_steps = 100000;
    int kl_samples = 2000;
};

struct DarcyResult {
    long calls = 0;
    long reference_evals = 0;
    double err_Z = 0.0;       // reference Z only available from quadrature
    double err_mu = 0.0;
    double err_Sigma = 0.0;
    double kl = 0.0;
    double z_tt = 0.0;
    double z_ref = 0.0;
    Vector mu_tt;
    Vector mu_ref;
};

DarcyResult run_darcy_case(const DarcySpec& spec,
                           LayeredDensity* keep_surrogate = nullptr);

// --- config-driven CLI entry points ---------------------------------------

/// FNV-1a over the canonical (sorted-key) JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);

/// Validates a config document; throws ConfigError with a message naming the
/// offending key.
void validate_config(const nlohmann::json& config);

/// Runs the configured scenario, writing CSV tables, a run manifest and the
/// last surrogate into output_dir. Returns the manifest.
nlohmann::json run_experiment(const nlohmann::json& config,
                              const std::filesystem::path& output_dir);

/// Human-readable summary of a saved surrogate file.
std::string inspect_surrogate(const std::filesystem::path& file);

}  // namespace ttdensity::experiments
