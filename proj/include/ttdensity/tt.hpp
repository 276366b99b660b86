#pragma once

#include "ttdensity/basis.hpp"
#include "ttdensity/sampling.hpp"
#include "ttdensity/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ttdensity {

struct FitOptions {
    int initial_rank = 1;
    int max_rank = 4;
    int max_sweeps = 40;
    double target_residual = 1e-10;   // relative RMS on training data
    double stagnation_factor = 0.02;  // min relative improvement per sweep
    double ridge = 1e-12;             // scaled by trace(A^T A)/n per solve
    double validation_fraction = 0.1;
    std::uint64_t seed = 17;
};

struct FitDiagnostics {
    std::vector<double> sweep_residuals;
    double train_residual = 0.0;
    double validation_residual = 0.0;
    std::vector<int> ranks;
    int rank_increases = 0;
    int sweeps = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Tensor-train coefficient cores bound to per-dimension orthonormal bases.
/// Core i is kept as n_i slices of shape r_{i-1} x r_i; the represented
/// function is g(x) = prod_i (sum_j P_j^i(x_i) G^i[:, j, :]).
/// Immutable in spirit: the query methods are const and reentrant.
class ExtendedTT {
public:
    using Core = std::vector<Matrix>;  // one slice per basis function

    ExtendedTT() = default;
    ExtendedTT(std::vector<Core> cores, std::vector<BasisPtr> bases);

    int dim() const { return static_cast<int>(cores_.size()); }
    std::vector<int> ranks() const;  // r_1..r_{d-1}
    std::vector<int> basis_sizes() const;
    const std::vector<Core>& cores() const { return cores_; }
    const std::vector<BasisPtr>& bases() const { return bases_; }

    /// Left-to-right contraction of basis-evaluated core matrices,
    /// O(d max(n) max(r)^2).
    double evaluate(const Vector& xhat) const;

    /// sum_k prod_i (sum_j G^i[k_{i-1}, j, k_i] v_i[j]); with
    /// v_i[j] = int P_j^i phi_i w_i this is the integral int g (x) phi w.
    double contract_rank1(const std::vector<Vector>& vectors) const;

    /// HOSVD rounding: right-orthogonalization sweep, then SVD truncation.
    /// Keeps singular values down to eps * ||g|| (distributed over the
    /// bonds), or truncates to target_ranks when given. `bound` receives
    /// sqrt(sum of discarded sigma^2), which dominates ||g - g_r||.
    ExtendedTT rounded(double eps, double* bound = nullptr,
                       const std::vector<int>* target_ranks = nullptr) const;

    /// Parseval norm ||g||_V = Frobenius norm of the coefficient tensor.
    double norm() const;

    nlohmann::json to_json() const;
    static ExtendedTT from_json(const nlohmann::json& j);

private:
    std::vector<Core> cores_;
    std::vector<BasisPtr> bases_;
};

/// Rank-adaptive alternating least squares on the empirical L2 functional
/// (1/N) sum |g(x^k) - v_k|^2. Ridge-regularized core solves with cached
/// interface stacks; when the residual stagnates above target and rank
/// growth is allowed, the bond with the largest projected-residual norm
/// gains one rank (with a small random orthogonal kick).
std::pair<ExtendedTT, FitDiagnostics> fit_als(const LayerSampleSet& samples,
                                              std::vector<BasisPtr> bases,
                                              const FitOptions& opts);

/// RMS of (predicted - actual).
double empirical_l2(const Vector& predicted, const Vector& actual);
double empirical_l2(const ExtendedTT& tt, const LayerSampleSet& samples);

/// Plugin KL estimate (1/N) sum (log f - log f_h); the sample points must be
/// drawn from f. Throws NonPositiveSurrogate when any f_h value is <= 0.
double empirical_kl(const Vector& log_f, const Vector& f_h);

}  // namespace ttdensity
