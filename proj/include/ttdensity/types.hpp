#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <functional>
#include <memory>

namespace ttdensity {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Unnormalized log-density on R^d. `log_eval` must be reentrant: it is
/// called concurrently from layer workers.
struct LogDensity {
    std::function<double(const Vector&)> log_eval;
    int dim = 0;

    double operator()(const Vector& x) const { return log_eval(x); }
};

/// Wraps a density so that every evaluation bumps a shared counter.
/// Used to put surrogate construction and MCMC on the same call budget.
inline LogDensity with_call_counter(const LogDensity& f,
                                    std::shared_ptr<std::atomic<long>> counter) {
    return LogDensity{
        [f, counter](const Vector& x) {
            counter->fetch_add(1, std::memory_order_relaxed);
            return f.log_eval(x);
        },
        f.dim};
}

}  // namespace ttdensity
