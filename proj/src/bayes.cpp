#include "ttdensity/bayes.hpp"

#include "ttdensity/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ttdensity {

double potential(const GaussianNoiseModel& noise, const Vector& g_of_y) {
    if (g_of_y.size() != noise.delta.size())
        throw DimensionMismatch("potential: observation shape mismatch");
    if (noise.sigma <= 0.0) throw ConfigError("potential: sigma must be > 0");
    return 0.5 * (noise.delta - g_of_y).squaredNorm() /
           (noise.sigma * noise.sigma);
}

DarcyLiteForward::DarcyLiteForward(int grid_n, int d_modes, int obs_per_side,
                                   double amplitude)
    : n_(grid_n), d_(d_modes), amplitude_(amplitude) {
    if (n_ < 8) throw ConfigError("DarcyLiteForward: grid_n must be >= 8");
    if (d_ < 1) throw ConfigError("DarcyLiteForward: d_modes must be >= 1");
    // enumerate cosine modes (k1, k2) != (0, 0) by increasing k1^2 + k2^2
    std::vector<std::pair<int, int>> candidates;
    int limit = 1;
    while (static_cast<int>(candidates.size()) < d_) {
        candidates.clear();
        for (int k1 = 0; k1 <= limit; ++k1)
            for (int k2 = 0; k2 <= limit; ++k2)
                if (k1 + k2 > 0) candidates.emplace_back(k1, k2);
        ++limit;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) {
                  int na = a.first * a.first + a.second * a.second;
                  int nb = b.first * b.first + b.second * b.second;
                  if (na != nb) return na < nb;
                  return a < b;
              });
    modes_.assign(candidates.begin(), candidates.begin() + d_);
    for (int i = 1; i <= obs_per_side; ++i)
        for (int j = 1; j <= obs_per_side; ++j)
            obs_.emplace_back(static_cast<double>(i) / (obs_per_side + 1),
                              static_cast<double>(j) / (obs_per_side + 1));
}

double DarcyLiteForward::log_coefficient(double x1, double x2,
                                         const Vector& y) const {
    constexpr double two_pi = 6.28318530717958647692;
    double acc = 0.0;
    for (int k = 0; k < d_; ++k) {
        auto [k1, k2] = modes_[k];
        double mode = std::cos(two_pi * k1 * x1) * std::cos(two_pi * k2 * x2);
        acc += amplitude_ / ((k + 1.0) * (k + 1.0)) * mode * y[k];
    }
    return acc;
}

Vector DarcyLiteForward::solve_field(const Vector& y) const {
    if (y.size() != d_)
        throw DimensionMismatch("DarcyLiteForward: parameter dimension");
    const int n = n_;
    const double h = 1.0 / (n + 1);

    // coefficient at all nodes including the boundary ring
    Matrix a(n + 2, n + 2);
    for (int i = 0; i <= n + 1; ++i) {
        for (int j = 0; j <= n + 1; ++j) {
            double la = log_coefficient(i * h, j * h, y);
            if (!std::isfinite(la))
                throw SolverFailure("darcy_solve: non-finite coefficient field");
            a(i, j) = std::exp(la);
        }
    }
    auto harmonic = [](double u, double v) { return 2.0 * u * v / (u + v); };

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> triplets;
    triplets.reserve(5 * n * n);
    Vector rhs = Vector::Constant(n * n, h * h);  // g = 1
    auto idx = [n](int i, int j) { return (i - 1) * n + (j - 1); };
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            double aw = harmonic(a(i, j), a(i - 1, j));
            double ae = harmonic(a(i, j), a(i + 1, j));
            double as = harmonic(a(i, j), a(i, j - 1));
            double an = harmonic(a(i, j), a(i, j + 1));
            triplets.emplace_back(idx(i, j), idx(i, j), aw + ae + as + an);
            if (i > 1) triplets.emplace_back(idx(i, j), idx(i - 1, j), -aw);
            if (i < n) triplets.emplace_back(idx(i, j), idx(i + 1, j), -ae);
            if (j > 1) triplets.emplace_back(idx(i, j), idx(i, j - 1), -as);
            if (j < n) triplets.emplace_back(idx(i, j), idx(i, j + 1), -an);
        }
    }
    Eigen::SparseMatrix<double> A(n * n, n * n);
    A.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success)
        throw SolverFailure("darcy_solve: factorization failed");
    Vector q = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !q.allFinite())
        throw SolverFailure("darcy_solve: linear solve failed");
    return q;
}

Vector DarcyLiteForward::interpolate(const Vector& field, double x1,
                                     double x2) const {
    const int n = n_;
    const double h = 1.0 / (n + 1);
    // value on the closed grid with zero boundary
    auto value = [&](int i, int j) -> double {
        if (i <= 0 || j <= 0 || i >= n + 1 || j >= n + 1) return 0.0;
        return field[(i - 1) * n + (j - 1)];
    };
    double fi = x1 / h, fj = x2 / h;
    int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, n);
    int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, n);
    double ti = fi - i0, tj = fj - j0;
    Vector out(1);
    out[0] = (1 - ti) * (1 - tj) * value(i0, j0) +
             ti * (1 - tj) * value(i0 + 1, j0) +
             (1 - ti) * tj * value(i0, j0 + 1) +
             ti * tj * value(i0 + 1, j0 + 1);
    return out;
}

Vector DarcyLiteForward::operator()(const Vector& y) const {
    Vector field = solve_field(y);
    Vector out(n_obs());
    for (int k = 0; k < n_obs(); ++k)
        out[k] = interpolate(field, obs_[k].first, obs_[k].second)[0];
    return out;
}

LogDensity make_log_posterior(const GaussianNoiseModel& noise,
                              const ForwardModel& forward, int dim) {
    return LogDensity{
        [noise, forward](const Vector& y) {
            Vector g;
            try {
                g = forward(y);
            } catch (const std::exception& e) {
                std::ostringstream oss;
                oss << "forward model failed at y = [";
                for (Eigen::Index i = 0; i < y.size(); ++i)
                    oss << y[i] << (i + 1 < y.size() ? ", " : "]");
                oss << ": " << e.what();
                throw SolverFailure(oss.str());
            }
            return -potential(noise, g) - 0.5 * y.squaredNorm();
        },
        dim};
}

GaussianNoiseModel synthesize_observations(const ForwardModel& forward,
                                           const Vector& y_star, double sigma,
                                           SeededRng& rng) {
    GaussianNoiseModel noise;
    noise.sigma = sigma;
    noise.y_truth = y_star;
    Vector g = forward(y_star);
    noise.delta = g;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        noise.delta[i] += sigma * rng.normal();
    return noise;
}

MCMCResult rwm_mcmc(const LogDensity& logdensity, const MCMCConfig& cfg,
                    const Vector& x0) {
    if (cfg.steps <= cfg.burn_in || cfg.burn_in < 0)
        throw ConfigError("rwm_mcmc: need steps > burn_in >= 0");
    const int d = logdensity.dim;
    SeededRng rng(cfg.seed, 0x3C3C3C3Cu);
    Vector x = x0;
    double lx = logdensity(x);
    if (!std::isfinite(lx))
        throw ConfigError("rwm_mcmc: log density not finite at the start point");

    MCMCResult out;
    out.density_calls = 1;
    double scale = cfg.proposal_scale;
    long accepted = 0, counted = 0;

    Vector mean = Vector::Zero(d);
    Matrix m2 = Matrix::Zero(d, d);
    long kept = 0;
    const double target_acc = 0.3;

    Vector prop(d);
    for (long step = 0; step < cfg.steps; ++step) {
        for (int i = 0; i < d; ++i) prop[i] = x[i] + scale * rng.normal();
        double lp = logdensity(prop);
        ++out.density_calls;
        bool accept = std::isfinite(lp) &&
                      std::log(1.0 - rng.uniform() + 1e-300) < lp - lx;
        if (accept) {
            x = prop;
            lx = lp;
        }
        if (step < cfg.burn_in) {
            if (cfg.adapt) {
                // Robbins-Monro on log scale toward the target acceptance
                double gain = 1.0 / std::sqrt(step + 1.0);
                scale *= std::exp(gain * ((accept ? 1.0 : 0.0) - target_acc));
                scale = std::clamp(scale, 1e-8, 1e4);
            }
        } else {
            accepted += accept ? 1 : 0;
            ++counted;
            ++kept;
            Vector delta = x - mean;
            mean += delta / kept;
            m2 += delta * (x - mean).transpose();
            if (cfg.store_every > 0 && (step % cfg.store_every) == 0)
                out.chain.push_back(x);
        }
    }
    out.mean = mean;
    out.cov = kept > 1 ? Matrix(m2 / (kept - 1)) : Matrix::Zero(d, d);
    out.cov = 0.5 * (out.cov + out.cov.transpose().eval());
    out.acceptance_rate =
        counted > 0 ? static_cast<double>(accepted) / counted : 0.0;
    out.proposal_scale = scale;
    return out;
}

}  // namespace ttdensity
