#pragma once

#include "ttdensity/coords.hpp"
#include "ttdensity/transport.hpp"
#include "ttdensity/tt.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

namespace ttdensity {

struct TailSpec {
    enum class Kind {
        standard,           // N(center, I)
        user,               // given mu, sigma
        surrogate_moments,  // moments of the truncated surrogate
    };
    Kind kind = Kind::standard;
    Vector mu;
    Matrix sigma;
};

struct BuildOptions {
    int radial_degree = 7;  // polynomial degree; n_1 = radial_degree + 1
    int trig_size = 1;      // basis functions on theta_0 (1 = constant)
    int angular_size = 1;   // basis functions per [0, pi] coordinate
    unsigned tau_mant = 100;
    int samples_per_layer = 1000;
    std::vector<int> samples_override;  // optional per-layer sample counts
    FitOptions fit;
    TailSpec tail;
    int moment_cap = 4;
    std::uint64_t seed = 0;
    long tail_mc_points = 1000000;  // Monte Carlo fallback for C_L^<
};

struct LayerSurrogate {
    ExtendedTT tt;
    double log_offset = 0.0;
    double mass = 0.0;  // e^{offset} int_layer surrogate
    FitDiagnostics diagnostics;
};

struct QoiEstimate {
    Vector value;
    Vector stderr;
};

/// Hybrid layered surrogate of the perturbed prior: per-layer extended
/// tensor trains inside the covered ball, a Gaussian density outside, glued
/// by the normalization constants mass_tail (C_L^<) and mass_inside
/// (C_L^>), with normalizer = 1/(C_L^< + C_L^>).
class LayeredDensity {
public:
    const LayerPartition& partition() const { return partition_; }
    const std::vector<LayerSurrogate>& layers() const { return layers_; }
    const Vector& tail_mu() const { return tail_mu_; }
    const Matrix& tail_sigma() const { return tail_sigma_; }
    double mass_inside() const { return mass_inside_; }
    double mass_tail() const { return mass_tail_; }
    double tail_mass_stderr() const { return tail_mass_se_; }
    double normalizer() const { return normalizer_; }
    int moment_cap() const { return moment_cap_; }

    /// Normalized surrogate density at x: layer TT inside the covered ball
    /// (negative fit values clamp to zero and are counted), Gaussian tail
    /// outside.
    double eval(const Vector& x) const;
    long clamped_evals() const { return clamped_->load(); }

    /// Surrogate pushed to target space: log of
    /// eval(T^{-1}(y)) |det J_{T^{-1}}(y)|. Returns -inf where eval clamps
    /// to zero.
    double log_eval_target(const TransportMap& map, const Vector& y) const;

    /// Sampling-free moment int y^alpha f via the multinomial expansion of
    /// (H Phi(xhat) + M)^alpha and per-dimension weighted integrals. The
    /// tail layer is excluded by construction. Requires |alpha| <= cap.
    double moment(const AffineData& aff, const std::vector<int>& alpha) const;

    /// First/second moments assembled into mean and covariance. Affine maps
    /// use the closed-form moment path; general maps fall back to the
    /// stratified QoI estimator with qoi_samples draws per layer.
    std::pair<Vector, Matrix> mean_and_cov(const TransportMap& map,
                                           int qoi_samples = 0,
                                           std::uint64_t qoi_seed = 0) const;

    /// Raw marginal moments beta_j = int y_i^j f for j = 0..m_max. Monomials
    /// are not orthonormal on R; use project_marginal to turn these into an
    /// expansion over an orthonormal family on a chosen interval.
    std::vector<double> marginal_moments(const AffineData& aff, int i,
                                         int m_max) const;

    /// Stratified estimator of E[Q] = int Q(T(x)) f~(x) dx: per layer, draws
    /// from the normalized rank-1 weight, averages Q * surrogate * layer
    /// weight mass; the tail integral is estimated from Gaussian draws
    /// pushed through the map (skipped when its mass is negligible).
    QoiEstimate moment_qoi(const TransportMap& map,
                           const std::function<Vector(const Vector&)>& Q,
                           int q_dim, int samples_per_layer,
                           std::uint64_t seed, bool include_tail = true) const;

    nlohmann::json to_json() const;
    static LayeredDensity from_json(const nlohmann::json& j);

    nlohmann::json metadata;

private:
    friend LayeredDensity build(const LogDensity&, const LayerPartition&,
                                const BuildOptions&);

    LayerPartition partition_;
    std::vector<LayerSurrogate> layers_;
    Vector tail_mu_;
    Matrix tail_sigma_;
    double mass_inside_ = 0.0;
    double mass_tail_ = 0.0;
    double tail_mass_se_ = 0.0;
    double normalizer_ = 1.0;
    int moment_cap_ = 4;

    // Gaussian tail internals
    Matrix tail_chol_;       // lower Cholesky of sigma
    double tail_log_norm_ = 0.0;
    std::shared_ptr<std::atomic<long>> clamped_ =
        std::make_shared<std::atomic<long>>(0);

    // memoized per-dimension integral vectors and per-exponent contractions;
    // shared_ptr keeps the class movable and copies may share entries
    struct MomentCache {
        std::mutex mutex;
        std::map<std::pair<int, int>, Vector> radial_vec;
        std::map<std::tuple<int, int, int>, Vector> angular_vec;
        std::map<std::vector<int>, double> contract;
    };
    std::shared_ptr<MomentCache> cache_ = std::make_shared<MomentCache>();

    double tail_density(const Vector& x) const;
    double contract_all_layers(const std::vector<int>& beta) const;
    void finalize_tail(const BuildOptions& opts);
};

/// Runs the full per-layer pipeline (basis generation, weighted sampling,
/// tensor reconstruction) and assembles the normalization constants.
/// Layers are processed in parallel on independent rng streams.
LayeredDensity build(const LogDensity& prior, const LayerPartition& partition,
                     const BuildOptions& opts);

/// Expansion of a marginal density over the orthonormal Legendre family on
/// [a, b], obtained from raw monomial moments by a change of basis.
struct Marginal1D {
    OrthonormalBasis1D basis;
    Vector coeffs;
    double eval(double y) const;
};

Marginal1D project_marginal(const std::vector<double>& raw_moments, double a,
                            double b, int n);

}  // namespace ttdensity
