#include "ttdensity/density.hpp"

#include "ttdensity/parallel.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace ttdensity {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

double int_pow(double base, int e) {
    double v = 1.0;
    for (int k = 0; k < e; ++k) v *= base;
    return v;
}

double binomial(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

double multinomial(int total, const std::vector<int>& parts) {
    double v = 1.0;
    int used = 0;
    for (int p : parts) {
        v *= binomial(used + p, p);
        used += p;
    }
    (void)total;
    return v;
}

/// All beta in N_0^d with |beta| = total, lexicographic.
void enumerate_compositions(int total, int parts,
                            const std::function<void(const std::vector<int>&)>& fn,
                            std::vector<int>& scratch, int pos = 0) {
    if (pos == parts - 1) {
        scratch[pos] = total;
        fn(scratch);
        return;
    }
    for (int v = 0; v <= total; ++v) {
        scratch[pos] = v;
        enumerate_compositions(total - v, parts, fn, scratch, pos + 1);
    }
}

/// Coefficient map of the multinomial expansion of (H Phi(xhat) + M)^alpha:
/// each surviving exponent tuple beta = sum_k beta_k is mapped to
/// sum prod_k binom(alpha_k, j_k) M_k^{alpha_k - j_k} multinom(j_k; beta_k)
/// prod_i H(k,i)^{beta_k[i]}.
std::map<std::vector<int>, double> expansion_coefficients(
    const AffineData& aff, const std::vector<int>& alpha) {
    const int d = static_cast<int>(alpha.size());
    std::map<std::vector<int>, double> acc;
    acc.emplace(std::vector<int>(d, 0), 1.0);
    std::vector<int> scratch(d, 0);
    for (int k = 0; k < d; ++k) {
        if (alpha[k] == 0) continue;
        std::map<std::vector<int>, double> next;
        for (int jk = 0; jk <= alpha[k]; ++jk) {
            double base = binomial(alpha[k], jk) * int_pow(aff.M[k], alpha[k] - jk);
            if (base == 0.0) continue;
            enumerate_compositions(
                jk, d,
                [&](const std::vector<int>& beta_k) {
                    double c = base * multinomial(jk, beta_k);
                    for (int i = 0; i < d && c != 0.0; ++i)
                        c *= int_pow(aff.H(k, i), beta_k[i]);
                    if (c == 0.0) return;
                    for (const auto& [key, val] : acc) {
                        std::vector<int> merged(d);
                        for (int i = 0; i < d; ++i) merged[i] = key[i] + beta_k[i];
                        next[merged] += val * c;
                    }
                },
                scratch);
        }
        acc = std::move(next);
    }
    return acc;
}

std::vector<Vector> unit_weight_vectors(const std::vector<BasisPtr>& bases) {
    std::vector<Vector> out;
    out.reserve(bases.size());
    for (const auto& basis : bases) {
        Vector v(basis->size);
        for (int j = 0; j < basis->size; ++j)
            v[j] = (basis->family == BasisFamily::trig)
                       ? basis_times_trigpower_integral(*basis, j, 0, 0)
                       : weighted_monomial_integral(*basis, 0, j);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

double LayeredDensity::tail_density(const Vector& x) const {
    Vector z = tail_chol_.triangularView<Eigen::Lower>().solve(x - tail_mu_);
    return std::exp(-0.5 * z.squaredNorm() - tail_log_norm_);
}

double LayeredDensity::eval(const Vector& x) const {
    if (!x.allFinite()) throw ConfigError("LayeredDensity::eval: non-finite point");
    auto [layer, xhat] = try_cartesian_to_polar(partition_, x);
    if (layer < 0) return normalizer_ * tail_density(x);
    const auto& surr = layers_[layer];
    double v = surr.tt.evaluate(xhat);
    if (v < 0.0) {
        clamped_->fetch_add(1, std::memory_order_relaxed);
        v = 0.0;
    }
    return normalizer_ * std::exp(surr.log_offset) * v;
}

double LayeredDensity::log_eval_target(const TransportMap& map,
                                       const Vector& y) const {
    Vector x = map.invert(y, 1e-10, 100);
    double v = eval(x);
    if (v <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(v) - map.log_abs_det_jacobian(x);
}

double LayeredDensity::contract_all_layers(const std::vector<int>& beta) const {
    const int d = partition_.dim;
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto it = cache_->contract.find(beta);
        if (it != cache_->contract.end()) return it->second;
    }
    int radial_exp = 0;
    for (int b : beta) radial_exp += b;

    // theta_0 carries cos^{beta_0} sin^{beta_1}; theta_i (coordinate c = i+1)
    // carries sin^{beta_0 + ... + beta_{c-1}} cos^{beta_c}
    std::vector<std::pair<int, int>> trig_exponents(d - 1);  // (sin a, cos b)
    trig_exponents[0] = {beta[1], beta[0]};
    int prefix = beta[0] + beta[1];
    for (int c = 2; c < d; ++c) {
        trig_exponents[c - 1] = {prefix, beta[c]};
        prefix += beta[c];
    }

    double total = 0.0;
    for (int l = 0; l < static_cast<int>(layers_.size()); ++l) {
        const auto& surr = layers_[l];
        const auto& bases = surr.tt.bases();
        std::vector<Vector> vectors(d);
        {
            std::lock_guard<std::mutex> lock(cache_->mutex);
            auto key = std::make_pair(l, radial_exp);
            auto it = cache_->radial_vec.find(key);
            if (it == cache_->radial_vec.end()) {
                Vector v(bases[0]->size);
                for (int j = 0; j < bases[0]->size; ++j)
                    v[j] = weighted_monomial_integral(*bases[0], radial_exp, j);
                it = cache_->radial_vec.emplace(key, std::move(v)).first;
            }
            vectors[0] = it->second;
            for (int c = 1; c < d; ++c) {
                auto [a, b] = trig_exponents[c - 1];
                // angular bases are shared across layers, key on dimension
                auto akey = std::make_tuple(c, a, b);
                auto ait = cache_->angular_vec.find(akey);
                if (ait == cache_->angular_vec.end()) {
                    Vector v(bases[c]->size);
                    for (int j = 0; j < bases[c]->size; ++j)
                        v[j] = basis_times_trigpower_integral(*bases[c], j, a, b);
                    ait = cache_->angular_vec.emplace(akey, std::move(v)).first;
                }
                vectors[c] = ait->second;
            }
        }
        total += std::exp(surr.log_offset) * surr.tt.contract_rank1(vectors);
    }
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->contract.emplace(beta, total);
    return total;
}

double LayeredDensity::moment(const AffineData& aff,
                              const std::vector<int>& alpha) const {
    const int d = partition_.dim;
    if (static_cast<int>(alpha.size()) != d)
        throw DimensionMismatch("moment: alpha size != dimension");
    int order = 0;
    for (int a : alpha) {
        if (a < 0) throw CapExceeded("moment: negative exponent");
        order += a;
    }
    if (order > moment_cap_)
        throw CapExceeded("moment: |alpha| = " + std::to_string(order) +
                          " exceeds cap " + std::to_string(moment_cap_));
    auto coeffs = expansion_coefficients(aff, alpha);
    double total = 0.0;
    for (const auto& [beta, c] : coeffs) total += c * contract_all_layers(beta);
    return normalizer_ * total;
}

std::pair<Vector, Matrix> LayeredDensity::mean_and_cov(
    const TransportMap& map, int qoi_samples, std::uint64_t qoi_seed) const {
    const int d = partition_.dim;
    if (const AffineData* aff = map.as_affine()) {
        Vector mean(d);
        std::vector<int> alpha(d, 0);
        for (int k = 0; k < d; ++k) {
            alpha.assign(d, 0);
            alpha[k] = 1;
            mean[k] = moment(*aff, alpha);
        }
        Matrix second(d, d);
        for (int k = 0; k < d; ++k) {
            for (int m = k; m < d; ++m) {
                alpha.assign(d, 0);
                alpha[k] += 1;
                alpha[m] += 1;
                second(k, m) = second(m, k) = moment(*aff, alpha);
            }
        }
        Matrix cov = second - mean * mean.transpose();
        cov = 0.5 * (cov + cov.transpose().eval());
        return {mean, cov};
    }
    if (qoi_samples <= 0)
        throw ConfigError(
            "mean_and_cov: non-affine map requires qoi_samples > 0");
    const int q_dim = d + d * (d + 1) / 2;
    auto Q = [d, q_dim](const Vector& y) {
        Vector out(q_dim);
        out.head(d) = y;
        int idx = d;
        for (int k = 0; k < d; ++k)
            for (int m = k; m < d; ++m) out[idx++] = y[k] * y[m];
        return out;
    };
    QoiEstimate est = moment_qoi(map, Q, q_dim, qoi_samples, qoi_seed);
    Vector mean = est.value.head(d);
    Matrix second(d, d);
    int idx = d;
    for (int k = 0; k < d; ++k)
        for (int m = k; m < d; ++m)
            second(k, m) = second(m, k) = est.value[idx++];
    Matrix cov = second - mean * mean.transpose();
    cov = 0.5 * (cov + cov.transpose().eval());
    return {mean, cov};
}

std::vector<double> LayeredDensity::marginal_moments(const AffineData& aff,
                                                     int i, int m_max) const {
    if (i < 0 || i >= partition_.dim)
        throw DimensionMismatch("marginal_moments: component out of range");
    std::vector<double> out(m_max + 1);
    std::vector<int> alpha(partition_.dim, 0);
    for (int j = 0; j <= m_max; ++j) {
        alpha[i] = j;
        out[j] = moment(aff, alpha);
    }
    return out;
}

QoiEstimate LayeredDensity::moment_qoi(
    const TransportMap& map, const std::function<Vector(const Vector&)>& Q,
    int q_dim, int samples_per_layer, std::uint64_t seed,
    bool include_tail) const {
    if (samples_per_layer < 1)
        throw ConfigError("moment_qoi: samples_per_layer must be >= 1");
    const int d = partition_.dim;
    const int L = static_cast<int>(layers_.size());
    std::vector<Vector> layer_mean(L), layer_var(L);

    parallel_for(L, [&](int l) {
        SeededRng rng(seed, 0xC0DE0000u + static_cast<std::uint64_t>(l));
        const PolarChart chart = partition_.chart(l);
        const auto& surr = layers_[l];
        const double mass_w = layer_weight_mass(chart);
        const double scale = std::exp(surr.log_offset);
        const int N = samples_per_layer;

        Matrix pts(N, d);
        auto radial = sample_radial(rng, chart.rho_lo, chart.rho_hi, d, N);
        for (int s = 0; s < N; ++s) pts(s, 0) = radial[s];
        for (int s = 0; s < N; ++s) pts(s, 1) = rng.uniform(0.0, kTwoPi);
        for (int i = 1; i <= d - 2; ++i) {
            auto theta = sample_angular(rng, i, N);
            for (int s = 0; s < N; ++s) pts(s, i + 1) = theta[s];
        }
        Vector acc = Vector::Zero(q_dim), acc2 = Vector::Zero(q_dim);
        for (int s = 0; s < N; ++s) {
            Vector xhat = pts.row(s);
            double g = surr.tt.evaluate(xhat);
            if (g < 0.0) g = 0.0;
            Vector y = map.apply(polar_to_cartesian(chart, xhat));
            Vector val = Q(y) * (g * scale);
            acc += val;
            acc2 += val.cwiseProduct(val);
        }
        layer_mean[l] = (mass_w / N) * acc;
        Vector var = acc2 / N - (acc / N).cwiseProduct(acc / N);
        layer_var[l] = (mass_w * mass_w / N) * var.cwiseMax(0.0);
    });

    Vector total = Vector::Zero(q_dim), var_total = Vector::Zero(q_dim);
    for (int l = 0; l < L; ++l) {
        total += layer_mean[l];
        var_total += layer_var[l];
    }

    // tail contribution by rejection from the Gaussian, skipped when its
    // mass cannot move the estimate
    if (include_tail && mass_tail_ > 1e-12 * (mass_tail_ + mass_inside_)) {
        SeededRng rng(seed, 0x7A11u);
        const double R = partition_.outer_radius();
        Vector acc = Vector::Zero(q_dim), acc2 = Vector::Zero(q_dim);
        long kept = 0;
        const long max_attempts = 200L * samples_per_layer;
        for (long attempt = 0;
             attempt < max_attempts && kept < samples_per_layer; ++attempt) {
            Vector z(d);
            for (int i = 0; i < d; ++i) z[i] = rng.normal();
            Vector x = tail_mu_ + tail_chol_ * z;
            if ((x - partition_.center).norm() < R) continue;
            Vector val = Q(map.apply(x));
            acc += val;
            acc2 += val.cwiseProduct(val);
            ++kept;
        }
        if (kept > 0) {
            Vector mean = acc / kept;
            total += mass_tail_ * mean;
            Vector var = acc2 / kept - mean.cwiseProduct(mean);
            var_total += (mass_tail_ * mass_tail_ / kept) * var.cwiseMax(0.0);
        }
    }

    QoiEstimate est;
    est.value = normalizer_ * total;
    est.stderr = normalizer_ * var_total.cwiseSqrt();
    return est;
}

void LayeredDensity::finalize_tail(const BuildOptions& opts) {
    const int d = partition_.dim;
    switch (opts.tail.kind) {
        case TailSpec::Kind::standard:
            tail_mu_ = partition_.center;
            tail_sigma_ = Matrix::Identity(d, d);
            break;
        case TailSpec::Kind::user:
            if (opts.tail.mu.size() != d || opts.tail.sigma.rows() != d ||
                opts.tail.sigma.cols() != d)
                throw ConfigError("tail spec: wrong shapes");
            tail_mu_ = opts.tail.mu;
            tail_sigma_ = opts.tail.sigma;
            break;
        case TailSpec::Kind::surrogate_moments: {
            // unnormalized covered moments under the identity map
            double m0 = mass_inside_;
            if (m0 <= 0.0)
                throw NegativeLayerMass(
                    "tail from surrogate moments: covered mass not positive");
            Vector m1(d);
            Matrix m2(d, d);
            std::vector<int> beta(d, 0);
            for (int k = 0; k < d; ++k) {
                beta.assign(d, 0);
                beta[k] = 1;
                m1[k] = contract_all_layers(beta);
            }
            for (int k = 0; k < d; ++k) {
                for (int m = k; m < d; ++m) {
                    beta.assign(d, 0);
                    beta[k] += 1;
                    beta[m] += 1;
                    m2(k, m) = m2(m, k) = contract_all_layers(beta);
                }
            }
            tail_mu_ = m1 / m0;
            tail_sigma_ = m2 / m0 - tail_mu_ * tail_mu_.transpose();
            tail_sigma_ = 0.5 * (tail_sigma_ + tail_sigma_.transpose().eval());
            break;
        }
    }
    Eigen::LLT<Matrix> llt(tail_sigma_);
    if (llt.info() != Eigen::Success)
        throw SolverFailure("tail covariance is not positive definite");
    tail_chol_ = llt.matrixL();
    tail_log_norm_ = 0.5 * d * std::log(kTwoPi);
    for (int i = 0; i < d; ++i)
        tail_log_norm_ += std::log(tail_chol_(i, i));

    const double R = partition_.outer_radius();
    const bool spherical =
        tail_sigma_.isApprox(tail_sigma_(0, 0) * Matrix::Identity(d, d),
                             1e-14) &&
        (tail_mu_ - partition_.center).norm() <= 1e-14 * (1.0 + R);
    if (spherical) {
        const double s2 = tail_sigma_(0, 0);
        mass_tail_ = boost::math::gamma_q(0.5 * d, 0.5 * R * R / s2);
        tail_mass_se_ = 0.0;
    } else {
        SeededRng rng(opts.seed, 0x7A11AA55u);
        long outside = 0;
        const long n = opts.tail_mc_points;
        Vector z(d);
        for (long s = 0; s < n; ++s) {
            for (int i = 0; i < d; ++i) z[i] = rng.normal();
            Vector x = tail_mu_ + tail_chol_ * z;
            if ((x - partition_.center).norm() >= R) ++outside;
        }
        double p = static_cast<double>(outside) / n;
        mass_tail_ = p;
        tail_mass_se_ = std::sqrt(std::max(p * (1.0 - p), 0.0) / n);
    }
    normalizer_ = 1.0 / (mass_tail_ + mass_inside_);
}

LayeredDensity build(const LogDensity& prior, const LayerPartition& partition,
                     const BuildOptions& opts) {
    const int d = partition.dim;
    if (prior.dim != d)
        throw DimensionMismatch("build: prior/partition dimension mismatch");
    if (partition.num_layers() < 1)
        throw ConfigError("build: partition needs at least one layer");
    if (opts.radial_degree < 0 || opts.trig_size < 1 || opts.angular_size < 1)
        throw ConfigError("build: invalid basis sizes");

    LayeredDensity ld;
    ld.partition_ = partition;
    ld.moment_cap_ = opts.moment_cap;

    // angular bases coincide on every layer; generate once and share
    auto trig = std::make_shared<const OrthonormalBasis1D>(
        trig_basis(opts.trig_size));
    std::vector<BasisPtr> angular;
    for (int i = 1; i <= d - 2; ++i)
        angular.push_back(std::make_shared<const OrthonormalBasis1D>(
            angular_basis(i, opts.angular_size, opts.tau_mant)));

    const int L = partition.num_layers();
    ld.layers_.resize(L);
    parallel_for(L, [&](int l) {
        const PolarChart chart = partition.chart(l);
        auto radial = std::make_shared<const OrthonormalBasis1D>(radial_basis(
            chart.rho_lo, chart.rho_hi, opts.radial_degree + 1, d,
            opts.tau_mant));
        std::vector<BasisPtr> bases;
        bases.push_back(radial);
        bases.push_back(trig);
        for (const auto& ab : angular) bases.push_back(ab);

        int N = opts.samples_per_layer;
        if (!opts.samples_override.empty()) {
            if (static_cast<int>(opts.samples_override.size()) != L)
                throw ConfigError("build: samples_override must have one entry "
                                  "per layer");
            N = opts.samples_override[l];
        }
        SeededRng rng(opts.seed, static_cast<std::uint64_t>(l));
        LayerSampleSet samples;
        try {
            samples = sample_layer(rng, chart, prior, N);
        } catch (const std::exception& e) {
            throw SolverFailure("layer " + std::to_string(l) +
                                " sampling failed: " + e.what());
        }
        FitOptions fit = opts.fit;
        fit.seed = opts.fit.seed ^ (0x9E3779B97F4A7C15ULL * (l + 1));
        std::pair<ExtendedTT, FitDiagnostics> fitted;
        try {
            fitted = fit_als(samples, bases, fit);
        } catch (const std::exception& e) {
            throw SolverFailure("layer " + std::to_string(l) +
                                " reconstruction failed: " + e.what());
        }
        auto base_vectors = unit_weight_vectors(bases);
        LayerSurrogate surr;
        surr.tt = std::move(fitted.first);
        surr.diagnostics = std::move(fitted.second);
        surr.log_offset = samples.log_offset;
        surr.mass =
            std::exp(surr.log_offset) * surr.tt.contract_rank1(base_vectors);
        ld.layers_[l] = std::move(surr);
    });

    double total = 0.0;
    for (const auto& surr : ld.layers_) total += surr.mass;
    for (int l = 0; l < L; ++l) {
        if (ld.layers_[l].mass < -1e-10 * std::abs(total))
            throw NegativeLayerMass("layer " + std::to_string(l) +
                                    " integral is negative: " +
                                    std::to_string(ld.layers_[l].mass));
    }
    ld.mass_inside_ = total;
    ld.finalize_tail(opts);
    return ld;
}

double Marginal1D::eval(double y) const {
    double v = 0.0;
    for (int m = 0; m < basis.size; ++m) v += coeffs[m] * basis.eval(m, y);
    return v;
}

Marginal1D project_marginal(const std::vector<double>& raw_moments, double a,
                            double b, int n) {
    if (static_cast<int>(raw_moments.size()) < n)
        throw ConfigError("project_marginal: need at least n raw moments");
    Marginal1D out;
    out.basis = radial_basis(a, b, n, 1);  // Legendre family, unit weight
    out.coeffs = Vector::Zero(n);
    const double c1 = 0.5 * (a + b);
    const double gamma = 2.0 / (b - a);
    for (int m = 0; m < n; ++m) {
        const auto& coeff = out.basis.polys[m].coeff_d;
        // phi_m(y) = sum_k coeff[k] (gamma (y - c1))^k -> monomial expansion
        double total = 0.0;
        for (int k = 0; k < static_cast<int>(coeff.size()); ++k) {
            double gk = std::pow(gamma, k);
            for (int j = 0; j <= k; ++j) {
                double w = coeff[k] * gk * binomial(k, j) *
                           int_pow(-c1, k - j);
                total += w * raw_moments[j];
            }
        }
        out.coeffs[m] = total;
    }
    return out;
}

nlohmann::json LayeredDensity::to_json() const {
    nlohmann::json j;
    j["format"] = "layered-density";
    j["version"] = 1;
    j["partition"] = {{"radii", partition_.radii},
                      {"dim", partition_.dim},
                      {"center", std::vector<double>(
                                     partition_.center.data(),
                                     partition_.center.data() + partition_.dim)}};
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& surr : layers_) {
        nlohmann::json lj;
        lj["tt"] = surr.tt.to_json();
        lj["log_offset"] = surr.log_offset;
        lj["mass"] = surr.mass;
        lj["train_residual"] = surr.diagnostics.train_residual;
        lj["validation_residual"] = surr.diagnostics.validation_residual;
        lj["ranks"] = surr.diagnostics.ranks;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    j["tail"] = {{"mu", std::vector<double>(tail_mu_.data(),
                                            tail_mu_.data() + tail_mu_.size())},
                 {"sigma", std::vector<double>(
                               tail_sigma_.data(),
                               tail_sigma_.data() + tail_sigma_.size())}};
    j["mass_inside"] = mass_inside_;
    j["mass_tail"] = mass_tail_;
    j["tail_mass_stderr"] = tail_mass_se_;
    j["moment_cap"] = moment_cap_;
    j["metadata"] = metadata;
    return j;
}

LayeredDensity LayeredDensity::from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != "layered-density")
        throw ConfigError("LayeredDensity::from_json: unexpected format tag");
    LayeredDensity ld;
    const auto& pj = j.at("partition");
    ld.partition_.radii = pj.at("radii").get<std::vector<double>>();
    ld.partition_.dim = pj.at("dim").get<int>();
    auto center = pj.at("center").get<std::vector<double>>();
    ld.partition_.center =
        Eigen::Map<const Vector>(center.data(), center.size());
    for (const auto& lj : j.at("layers")) {
        LayerSurrogate surr;
        surr.tt = ExtendedTT::from_json(lj.at("tt"));
        surr.log_offset = lj.at("log_offset").get<double>();
        surr.mass = lj.at("mass").get<double>();
        surr.diagnostics.train_residual = lj.at("train_residual").get<double>();
        surr.diagnostics.validation_residual =
            lj.at("validation_residual").get<double>();
        surr.diagnostics.ranks = lj.at("ranks").get<std::vector<int>>();
        ld.layers_.push_back(std::move(surr));
    }
    auto mu = j.at("tail").at("mu").get<std::vector<double>>();
    auto sigma = j.at("tail").at("sigma").get<std::vector<double>>();
    const int d = ld.partition_.dim;
    ld.tail_mu_ = Eigen::Map<const Vector>(mu.data(), mu.size());
    ld.tail_sigma_ = Eigen::Map<const Matrix>(sigma.data(), d, d);
    ld.mass_inside_ = j.at("mass_inside").get<double>();
    ld.mass_tail_ = j.at("mass_tail").get<double>();
    ld.tail_mass_se_ = j.at("tail_mass_stderr").get<double>();
    ld.moment_cap_ = j.at("moment_cap").get<int>();
    ld.normalizer_ = 1.0 / (ld.mass_inside_ + ld.mass_tail_);
    if (j.contains("metadata")) ld.metadata = j.at("metadata");
    Eigen::LLT<Matrix> llt(ld.tail_sigma_);
    if (llt.info() != Eigen::Success)
        throw SolverFailure("from_json: tail covariance not positive definite");
    ld.tail_chol_ = llt.matrixL();
    ld.tail_log_norm_ = 0.5 * d * std::log(kTwoPi);
    for (int i = 0; i < d; ++i)
        ld.tail_log_norm_ += std::log(ld.tail_chol_(i, i));
    return ld;
}

}  // namespace ttdensity
