#pragma once

#include "ttdensity/errors.hpp"
#include "ttdensity/types.hpp"

#include <memory>
#include <vector>

namespace ttdensity {

struct AffineData {
    Matrix H;  // invertible; s.p.d. when built by laplace_affine
    Vector M;
};

struct QuadraticData {
    std::vector<Matrix> A;  // A[k] is the d x d block of the k-th output
    Matrix H;
    Vector M;
};

namespace detail {
class MapImpl;
}

/// Immutable, value-semantic transport map T: R^d -> R^d with analytic
/// Jacobian access. Safe to share across threads.
class TransportMap {
public:
    static TransportMap identity(int d);
    static TransportMap affine(Matrix H, Vector M);
    /// y_k = 1/2 x:A[k]:x + (Hx)_k + M_k
    static TransportMap quadratic(std::vector<Matrix> A, Matrix H, Vector M);
    static TransportMap convex_combination(double t, TransportMap a,
                                           TransportMap b);
    /// x -> outer(inner(x))
    static TransportMap composed(TransportMap outer, TransportMap inner);

    int dim() const;
    Vector apply(const Vector& x) const;
    Matrix jacobian(const Vector& x) const;
    double log_abs_det_jacobian(const Vector& x) const;
    /// x with ||apply(x) - y|| <= tol. Affine maps invert analytically,
    /// compositions invert component-wise, everything else runs a damped
    /// Newton started at y. Throws NoConvergence.
    Vector invert(const Vector& y, double tol = 1e-12, int max_iter = 50) const;

    /// Non-null when this map is affine.
    const AffineData* as_affine() const;

private:
    explicit TransportMap(std::shared_ptr<const detail::MapImpl> impl)
        : impl_(std::move(impl)) {}
    std::shared_ptr<const detail::MapImpl> impl_;
};

/// Pullback of `target` through `map` in log space:
/// x -> log f(T(x)) + log|det J_T(x)|.
LogDensity perturbed_prior(const LogDensity& target, const TransportMap& map);

struct LaplaceOptions {
    int max_iter = 300;
    double grad_tol = 1e-9;
    double hessian_step = 1e-4;  // scaled per-coordinate by (1 + |M_i|)
};

/// Affine transport from the Laplace approximation: M is the mode located by
/// quasi-Newton ascent from x0, H the inverse matrix square root of the
/// negative log-density Hessian at M (central differences, symmetrized).
TransportMap laplace_affine(const LogDensity& target, const Vector& x0,
                            const LaplaceOptions& opts = {});

}  // namespace ttdensity
