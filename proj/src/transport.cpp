#include "ttdensity/transport.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace ttdensity {

namespace detail {

class MapImpl {
public:
    virtual ~MapImpl() = default;
    virtual int dim() const = 0;
    virtual Vector apply(const Vector& x) const = 0;
    virtual Matrix jacobian(const Vector& x) const = 0;
    virtual Vector invert(const Vector& y, double tol, int max_iter) const;
    virtual const AffineData* as_affine() const { return nullptr; }

protected:
    void check_dim(const Vector& x) const {
        if (x.size() != dim())
            throw DimensionMismatch("transport map: expected dimension " +
                                    std::to_string(dim()) + ", got " +
                                    std::to_string(x.size()));
    }
};

namespace {

double log_abs_det(const Matrix& J) {
    Eigen::PartialPivLU<Matrix> lu(J);
    double log_det = 0.0;
    const auto& U = lu.matrixLU();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        double u = std::abs(U(i, i));
        if (u == 0.0 || !std::isfinite(u))
            throw SingularJacobian("transport jacobian is singular");
        log_det += std::log(u);
    }
    return log_det;
}

class AffineImpl final : public MapImpl {
public:
    AffineImpl(Matrix H, Vector M) : data_{std::move(H), std::move(M)} {
        if (data_.H.rows() != data_.H.cols() || data_.H.rows() != data_.M.size())
            throw DimensionMismatch("AffineMap: H must be d x d and M length d");
        lu_.compute(data_.H);
        log_det_ = 0.0;
        const auto& U = lu_.matrixLU();
        for (Eigen::Index i = 0; i < U.rows(); ++i) {
            double u = std::abs(U(i, i));
            if (u == 0.0 || !std::isfinite(u))
                throw SingularJacobian("AffineMap: H is singular");
            log_det_ += std::log(u);
        }
    }

    int dim() const override { return static_cast<int>(data_.M.size()); }
    Vector apply(const Vector& x) const override {
        check_dim(x);
        return data_.H * x + data_.M;
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(x);
        return data_.H;
    }
    Vector invert(const Vector& y, double, int) const override {
        check_dim(y);
        return lu_.solve(y - data_.M);
    }
    const AffineData* as_affine() const override { return &data_; }

    double cached_log_det() const { return log_det_; }

private:
    AffineData data_;
    Eigen::PartialPivLU<Matrix> lu_;
    double log_det_;
};

class QuadraticImpl final : public MapImpl {
public:
    QuadraticImpl(std::vector<Matrix> A, Matrix H, Vector M)
        : A_(std::move(A)), H_(std::move(H)), M_(std::move(M)) {
        const auto d = M_.size();
        if (static_cast<Eigen::Index>(A_.size()) != d || H_.rows() != d ||
            H_.cols() != d)
            throw DimensionMismatch("QuadraticMap: A must hold d blocks of d x d");
        for (auto& block : A_) {
            if (block.rows() != d || block.cols() != d)
                throw DimensionMismatch("QuadraticMap: bad A block shape");
            block = 0.5 * (block + block.transpose().eval());  // symmetrize once
        }
    }

    int dim() const override { return static_cast<int>(M_.size()); }
    Vector apply(const Vector& x) const override {
        check_dim(x);
        Vector y = H_ * x + M_;
        for (int k = 0; k < dim(); ++k) y[k] += 0.5 * x.dot(A_[k] * x);
        return y;
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(x);
        Matrix J = H_;
        for (int k = 0; k < dim(); ++k) J.row(k) += (A_[k] * x).transpose();
        return J;
    }

private:
    std::vector<Matrix> A_;
    Matrix H_;
    Vector M_;
};

class ConvexImpl final : public MapImpl {
public:
    ConvexImpl(double t, std::shared_ptr<const MapImpl> a,
               std::shared_ptr<const MapImpl> b)
        : t_(t), a_(std::move(a)), b_(std::move(b)) {
        if (t_ < 0.0 || t_ > 1.0)
            throw ConfigError("ConvexCombinationMap: t must lie in [0, 1]");
        if (a_->dim() != b_->dim())
            throw DimensionMismatch("ConvexCombinationMap: dimension mismatch");
    }

    int dim() const override { return a_->dim(); }
    Vector apply(const Vector& x) const override {
        check_dim(x);
        return (1.0 - t_) * a_->apply(x) + t_ * b_->apply(x);
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(x);
        return (1.0 - t_) * a_->jacobian(x) + t_ * b_->jacobian(x);
    }

private:
    double t_;
    std::shared_ptr<const MapImpl> a_, b_;
};

class ComposedImpl final : public MapImpl {
public:
    ComposedImpl(std::shared_ptr<const MapImpl> outer,
                 std::shared_ptr<const MapImpl> inner)
        : outer_(std::move(outer)), inner_(std::move(inner)) {
        if (outer_->dim() != inner_->dim())
            throw DimensionMismatch("ComposedMap: dimension mismatch");
    }

    int dim() const override { return inner_->dim(); }
    Vector apply(const Vector& x) const override {
        check_dim(x);
        return outer_->apply(inner_->apply(x));
    }
    Matrix jacobian(const Vector& x) const override {
        check_dim(x);
        Vector mid = inner_->apply(x);
        return outer_->jacobian(mid) * inner_->jacobian(x);
    }
    Vector invert(const Vector& y, double tol, int max_iter) const override {
        Vector mid = outer_->invert(y, tol, max_iter);
        Vector x = inner_->invert(mid, tol, max_iter);
        // component tolerances can compound through the chain
        if ((apply(x) - y).norm() > tol) x = MapImpl::invert(y, tol, max_iter);
        return x;
    }

private:
    std::shared_ptr<const MapImpl> outer_, inner_;
};

}  // namespace

Vector MapImpl::invert(const Vector& y, double tol, int max_iter) const {
    check_dim(y);
    Vector x = y;
    Vector r = apply(x) - y;
    for (int iter = 0; iter < max_iter; ++iter) {
        double rn = r.norm();
        if (rn <= tol) return x;
        Matrix J = jacobian(x);
        Eigen::PartialPivLU<Matrix> lu(J);
        Vector step = lu.solve(r);
        if (!step.allFinite())
            throw NoConvergence("invert: singular Jacobian during Newton", iter);
        double damping = 1.0;
        for (int h = 0; h <= 30; ++h) {
            Vector cand = x - damping * step;
            Vector rc = cand.allFinite() ? Vector(apply(cand) - y)
                                         : Vector::Constant(dim(), 1e300);
            if (rc.norm() < rn) {
                x = cand;
                r = rc;
                break;
            }
            damping *= 0.5;
            if (h == 30)
                throw NoConvergence("invert: line search stalled", iter);
        }
    }
    if (r.norm() <= tol) return x;
    throw NoConvergence("invert: no convergence within max_iter", max_iter);
}

}  // namespace detail

TransportMap TransportMap::identity(int d) {
    return affine(Matrix::Identity(d, d), Vector::Zero(d));
}

TransportMap TransportMap::affine(Matrix H, Vector M) {
    return TransportMap(
        std::make_shared<detail::AffineImpl>(std::move(H), std::move(M)));
}

TransportMap TransportMap::quadratic(std::vector<Matrix> A, Matrix H, Vector M) {
    return TransportMap(std::make_shared<detail::QuadraticImpl>(
        std::move(A), std::move(H), std::move(M)));
}

TransportMap TransportMap::convex_combination(double t, TransportMap a,
                                              TransportMap b) {
    return TransportMap(std::make_shared<detail::ConvexImpl>(
        t, std::move(a.impl_), std::move(b.impl_)));
}

TransportMap TransportMap::composed(TransportMap outer, TransportMap inner) {
    return TransportMap(std::make_shared<detail::ComposedImpl>(
        std::move(outer.impl_), std::move(inner.impl_)));
}

int TransportMap::dim() const { return impl_->dim(); }

Vector TransportMap::apply(const Vector& x) const { return impl_->apply(x); }

Matrix TransportMap::jacobian(const Vector& x) const {
    return impl_->jacobian(x);
}

double TransportMap::log_abs_det_jacobian(const Vector& x) const {
    if (const auto* aff = dynamic_cast<const detail::AffineImpl*>(impl_.get()))
        return aff->cached_log_det();
    return detail::log_abs_det(impl_->jacobian(x));
}

Vector TransportMap::invert(const Vector& y, double tol, int max_iter) const {
    return impl_->invert(y, tol, max_iter);
}

const AffineData* TransportMap::as_affine() const { return impl_->as_affine(); }

LogDensity perturbed_prior(const LogDensity& target, const TransportMap& map) {
    if (target.dim != map.dim())
        throw DimensionMismatch("perturbed_prior: density/map dimension mismatch");
    return LogDensity{
        [target, map](const Vector& x) {
            return target.log_eval(map.apply(x)) + map.log_abs_det_jacobian(x);
        },
        target.dim};
}

namespace {

Vector fd_gradient(const LogDensity& f, const Vector& x) {
    const int d = f.dim;
    Vector g(d);
    Vector xp = x, xm = x;
    for (int i = 0; i < d; ++i) {
        double h = 1e-6 * (1.0 + std::abs(x[i]));
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

Matrix fd_hessian(const LogDensity& f, const Vector& x, double step_scale) {
    const int d = f.dim;
    Matrix H(d, d);
    Vector h(d);
    for (int i = 0; i < d; ++i) h[i] = step_scale * (1.0 + std::abs(x[i]));
    double f0 = f(x);
    Vector work = x;
    for (int i = 0; i < d; ++i) {
        work[i] = x[i] + h[i];
        double fp = f(work);
        work[i] = x[i] - h[i];
        double fm = f(work);
        work[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            work[i] = x[i] + h[i];
            work[j] = x[j] + h[j];
            double fpp = f(work);
            work[j] = x[j] - h[j];
            double fpm = f(work);
            work[i] = x[i] - h[i];
            double fmm = f(work);
            work[j] = x[j] + h[j];
            double fmp = f(work);
            work[i] = x[i];
            work[j] = x[j];
            H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
        }
    }
    return 0.5 * (H + H.transpose().eval());
}

/// BFGS ascent with backtracking. Returns the located maximizer.
Vector bfgs_maximize(const LogDensity& f, const Vector& x0, int max_iter,
                     double grad_tol) {
    const int d = f.dim;
    Vector x = x0;
    double fx = f(x);
    if (!std::isfinite(fx))
        throw OptimizerFailed("laplace_affine: target not finite at x0");
    Matrix Binv = Matrix::Identity(d, d);  // inverse Hessian approx of -log f
    Vector g = fd_gradient(f, x);
    for (int iter = 0; iter < max_iter; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(fx)))
            return x;
        Vector dir = Binv * g;  // ascent direction
        if (dir.dot(g) <= 0.0) {
            Binv = Matrix::Identity(d, d);
            dir = g;
        }
        // first trial capped to a unit-scale move; concentrated targets have
        // gradients many orders larger than the distance to the mode
        double step = std::min(1.0, (1.0 + x.norm()) / dir.norm());
        double slope = g.dot(dir);
        bool moved = false;
        for (int h = 0; h < 80; ++h) {
            Vector xn = x + step * dir;
            double fn = f(xn);
            if (std::isfinite(fn) && fn >= fx + 1e-4 * step * slope) {
                Vector gn = fd_gradient(f, xn);
                Vector s = xn - x;
                Vector yk = g - gn;  // gradient of -f changes by -(gn - g)
                double sy = s.dot(yk);
                if (sy > 1e-14 * s.norm() * yk.norm()) {
                    Matrix I = Matrix::Identity(d, d);
                    Matrix V = I - (s * yk.transpose()) / sy;
                    Binv = V * Binv * V.transpose() + (s * s.transpose()) / sy;
                }
                x = xn;
                fx = fn;
                g = gn;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        // no improving step within line-search resolution: x is a numerical
        // stationary point; the Hessian check downstream rejects saddles
        if (!moved) return x;
    }
    return x;
}

}  // namespace

TransportMap laplace_affine(const LogDensity& target, const Vector& x0,
                            const LaplaceOptions& opts) {
    if (x0.size() != target.dim)
        throw DimensionMismatch("laplace_affine: x0 dimension mismatch");
    Vector mode = bfgs_maximize(target, x0, opts.max_iter, opts.grad_tol);
    Matrix hess = fd_hessian(target, mode, opts.hessian_step);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(-hess);  // ascending eigenvalues
    if (eig.info() != Eigen::Success)
        throw HessianNotPD("laplace_affine: eigendecomposition failed");
    Vector lambda = eig.eigenvalues();
    if (lambda.minCoeff() <= 0.0) {
        std::ostringstream oss;
        oss << "laplace_affine: negative log-density Hessian not positive "
               "definite (eigenvalues:";
        for (Eigen::Index i = 0; i < lambda.size(); ++i) oss << ' ' << lambda[i];
        oss << ") - multimodality or saddle point";
        throw HessianNotPD(oss.str());
    }
    Matrix H = eig.eigenvectors() *
               lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
               eig.eigenvectors().transpose();
    return TransportMap::affine(H, mode);
}

}  // namespace ttdensity
