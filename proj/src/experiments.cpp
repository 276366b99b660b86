#include "ttdensity/experiments.hpp"

#include "ttdensity/errors.hpp"
#include "ttdensity/parallel.hpp"
#include "ttdensity/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ttdensity::experiments {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double rel_err(const Vector& value, const Vector& reference) {
    double den = reference.norm();
    return den > 0 ? (value - reference).norm() / den
                   : (value - reference).norm();
}

double rel_err(const Matrix& value, const Matrix& reference) {
    double den = reference.norm();
    return den > 0 ? (value - reference).norm() / den
                   : (value - reference).norm();
}

Matrix symmetric_sqrt(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    return eig.eigenvectors() *
           eig.eigenvalues().cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return 0.0;
    double pos = q * (values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(pos));
    size_t hi = std::min(lo + 1, values.size() - 1);
    double w = pos - lo;
    return (1.0 - w) * values[lo] + w * values[hi];
}

struct SurrogateMetrics {
    double kl = 0.0;
    double hellinger = 0.0;
};

/// Empirical KL and squared Hellinger distance from samples of the target.
SurrogateMetrics divergence_metrics(const LayeredDensity& ld,
                                    const TransportMap& map,
                                    const LogDensity& target_log,
                                    const std::vector<Vector>& samples,
                                    double log_z_reference = 0.0) {
    SurrogateMetrics out;
    double kl = 0.0, hell = 0.0;
    for (const auto& y : samples) {
        double lf = target_log(y) - log_z_reference;
        double lfh = ld.log_eval_target(map, y);
        if (!std::isfinite(lfh))
            throw NonPositiveSurrogate(
                "divergence_metrics: surrogate vanished at a target sample");
        kl += lf - lfh;
        double ratio = std::exp(0.5 * (lfh - lf));
        hell += (1.0 - ratio) * (1.0 - ratio);
    }
    out.kl = kl / samples.size();
    out.hellinger = hell / samples.size();
    return out;
}

}  // namespace

LogDensity gaussian_density(const Vector& mu, double sigma2) {
    const int d = static_cast<int>(mu.size());
    const double log_norm = 0.5 * d * std::log(kTwoPi * sigma2);
    return LogDensity{
        [mu, sigma2, log_norm](const Vector& y) {
            return -0.5 * (y - mu).squaredNorm() / sigma2 - log_norm;
        },
        d};
}

namespace {

const Matrix& banana_sigma() {
    static const Matrix S = (Matrix(2, 2) << 1.0, 0.9, 0.9, 1.0).finished();
    return S;
}

}  // namespace

LogDensity banana_density() {
    const Matrix S = banana_sigma();
    const Matrix S_inv = S.inverse();
    const double log_norm =
        std::log(kTwoPi) + 0.5 * std::log(S.determinant());
    return LogDensity{
        [S_inv, log_norm](const Vector& y) {
            // T2^{-1}(y) has unit Jacobian, so the pullback is exact
            Vector z(2);
            z[0] = y[0];
            z[1] = y[1] + y[0] * y[0] + 1.0;
            return -0.5 * z.dot(S_inv * z) - log_norm;
        },
        2};
}

TransportMap banana_exact_transport() {
    const Matrix A = symmetric_sqrt(banana_sigma());
    // y1 = (Ax)_1, y2 = (Ax)_2 - (Ax)_1^2 - 1
    Vector a1 = A.row(0);
    std::vector<Matrix> quad(2);
    quad[0] = Matrix::Zero(2, 2);
    quad[1] = -2.0 * (a1 * a1.transpose());
    Vector M(2);
    M << 0.0, -1.0;
    return TransportMap::quadratic(quad, A, M);
}

Vector banana_reference_mean() {
    Vector mu(2);
    mu << 0.0, -2.0;
    return mu;
}

Matrix banana_reference_cov() {
    // z ~ N(0, S): E y2 = -(S11 + 1), Var y2 = S22 + 2 S11^2,
    // Cov(y1, y2) = S12
    Matrix C(2, 2);
    C << 1.0, 0.9, 0.9, 3.0;
    return C;
}

GaussianCellResult run_gaussian_cell(const GaussianCellSpec& spec,
                                    LayeredDensity* keep_surrogate) {
    const int d = spec.d;
    const double sigma = std::sqrt(spec.sigma2);
    const Vector mu = Vector::Constant(d, spec.mu_value);
    LogDensity target = gaussian_density(mu, spec.sigma2);
    auto counter = std::make_shared<std::atomic<long>>(0);
    LogDensity counted = with_call_counter(target, counter);

    TransportMap map = TransportMap::identity(d);
    if (spec.transport == "exact") {
        map = TransportMap::affine(sigma * Matrix::Identity(d, d), mu);
    } else if (spec.transport == "laplace") {
        map = laplace_affine(counted, Vector::Zero(d));
    } else {
        throw ConfigError("gaussian: unknown transport " + spec.transport);
    }

    LogDensity prior = perturbed_prior(counted, map);
    LayerPartition partition = equidistant_partition(spec.L, spec.R, d);
    BuildOptions opts;
    opts.radial_degree = spec.basis.radial_degree;
    opts.trig_size = spec.basis.trig_size;
    opts.angular_size = spec.basis.angular_size;
    opts.tau_mant = spec.basis.tau_mant;
    opts.samples_per_layer = spec.samples_per_layer;
    opts.fit = spec.fit;
    opts.seed = spec.seed;
    LayeredDensity ld = build(prior, partition, opts);

    if (keep_surrogate) *keep_surrogate = ld;

    GaussianCellResult out;
    out.calls = counter->load();
    const double z_h = ld.mass_inside() + ld.mass_tail();
    out.err_Z = std::abs(1.0 - z_h);

    auto [mean, cov] = ld.mean_and_cov(map);
    out.err_mu = rel_err(mean, mu);
    out.err_Sigma =
        rel_err(cov, Matrix(spec.sigma2 * Matrix::Identity(d, d)));

    out.max_rounded_rank = 1;
    for (const auto& layer : ld.layers()) {
        double bound = 0.0;
        ExtendedTT rounded = layer.tt.rounded(1e-8, &bound);
        auto ranks = rounded.ranks();
        int rmax = ranks.empty() ? 1 : *std::max_element(ranks.begin(), ranks.end());
        out.layer_ranks.push_back(rmax);
        out.max_rounded_rank = std::max(out.max_rounded_rank, rmax);
    }

    if (spec.kl_samples > 0) {
        SeededRng rng(spec.seed, 0x4B4Cu);
        std::vector<Vector> samples(spec.kl_samples, Vector(d));
        for (auto& y : samples)
            for (int i = 0; i < d; ++i) y[i] = mu[i] + sigma * rng.normal();
        auto metrics = divergence_metrics(ld, map, target, samples);
        out.kl = metrics.kl;
        out.hellinger = metrics.hellinger;
    }
    return out;
}

BananaResult run_banana_case(const BananaSpec& spec,
                             LayeredDensity* keep_surrogate) {
    LogDensity target = banana_density();
    auto counter = std::make_shared<std::atomic<long>>(0);
    LogDensity counted = with_call_counter(target, counter);

    TransportMap exact = banana_exact_transport();
    TransportMap affine = laplace_affine(counted, Vector::Zero(2));
    TransportMap map = TransportMap::convex_combination(spec.t, affine, exact);

    LogDensity prior = perturbed_prior(counted, map);
    LayerPartition partition = equidistant_partition(spec.L, spec.R, 2);
    BuildOptions opts;
    opts.radial_degree = spec.radial_degree;
    opts.trig_size = spec.trig_size;
    opts.samples_per_layer = spec.samples_per_layer;
    opts.fit = spec.fit;
    opts.seed = spec.seed;
    LayeredDensity ld = build(prior, partition, opts);
    if (keep_surrogate) *keep_surrogate = ld;

    BananaResult out;
    out.calls = counter->load();

    auto [mean, cov] =
        ld.mean_and_cov(map, spec.qoi_samples_per_layer, spec.seed ^ 0x9E37u);
    out.err_mu_tt = rel_err(mean, banana_reference_mean());
    out.err_sigma_tt = rel_err(cov, banana_reference_cov());

    // matched-budget baseline on the same posterior
    MCMCConfig mcfg;
    mcfg.steps = std::max<long>(out.calls, 10);
    mcfg.burn_in = std::max<long>(
        1, mcfg.steps / std::max<long>(spec.mcmc_burn_in_fraction_denom, 2));
    mcfg.proposal_scale = 1.0;
    mcfg.seed = spec.seed ^ 0xAC5u;
    Vector start(2);
    start << 0.0, -1.0;  // banana mode
    MCMCResult mc = rwm_mcmc(target, mcfg, start);
    out.err_mu_mc = rel_err(mc.mean, banana_reference_mean());
    out.err_sigma_mc = rel_err(mc.cov, banana_reference_cov());
    out.mcmc_acceptance = mc.acceptance_rate;
    return out;
}

DarcyResult run_darcy_case(const DarcySpec& spec,
                           LayeredDensity* keep_surrogate) {
    DarcyLiteForward forward(spec.grid_n, spec.d, spec.obs_per_side);
    SeededRng star_rng(spec.seed, 0xDA7Au);
    Vector y_star(spec.d);
    for (int i = 0; i < spec.d; ++i) y_star[i] = star_rng.normal();
    SeededRng noise_rng(spec.seed, 0x0B5u);
    GaussianNoiseModel noise = synthesize_observations(
        [&forward](const Vector& y) { return forward(y); }, y_star,
        spec.noise_sigma, noise_rng);

    LogDensity posterior = make_log_posterior(
        noise, [&forward](const Vector& y) { return forward(y); }, spec.d);
    auto counter = std::make_shared<std::atomic<long>>(0);
    LogDensity counted = with_call_counter(posterior, counter);

    TransportMap map = laplace_affine(counted, Vector::Zero(spec.d));
    LogDensity prior = perturbed_prior(counted, map);
    LayerPartition partition = equidistant_partition(spec.L, spec.R, spec.d);
    BuildOptions opts;
    opts.radial_degree = spec.basis.radial_degree;
    opts.trig_size = spec.basis.trig_size;
    opts.angular_size = spec.basis.angular_size;
    opts.tau_mant = spec.basis.tau_mant;
    opts.samples_per_layer = spec.samples_per_layer;
    opts.fit = spec.fit;
    opts.seed = spec.seed;
    LayeredDensity ld = build(prior, partition, opts);
    if (keep_surrogate) *keep_surrogate = ld;

    DarcyResult out;
    out.calls = counter->load();
    out.z_tt = ld.mass_inside() + ld.mass_tail();
    auto [mean, cov] = ld.mean_and_cov(map);
    out.mu_tt = mean;

    auto ref_counter = std::make_shared<std::atomic<long>>(0);
    LogDensity ref_counted = with_call_counter(posterior, ref_counter);
    LogDensity ref_prior = perturbed_prior(ref_counted, map);

    Vector mu_ref;
    Matrix cov_ref;
    double z_ref = 0.0;
    double log_z_ref = 0.0;
    if (spec.reference == "quadrature") {
        if (spec.d != 2)
            throw ConfigError("darcy: quadrature reference requires d = 2");
        auto integrand = [&](double x1, double x2) {
            Vector x(2);
            x << x1, x2;
            double f = std::exp(ref_prior(x));
            Vector y = map.apply(x);
            Vector v(6);
            v << f, y[0] * f, y[1] * f, y[0] * y[0] * f, y[0] * y[1] * f,
                y[1] * y[1] * f;
            return v;
        };
        auto quad = adaptive_quad_2d(integrand, -spec.R, spec.R, -spec.R,
                                     spec.R, spec.quad_rel_tol, 0.0, 16);
        out.reference_evals = quad.evals;
        z_ref = quad.value[0];
        mu_ref = quad.value.segment(1, 2) / z_ref;
        Matrix sec(2, 2);
        sec << quad.value[3], quad.value[4], quad.value[4], quad.value[5];
        cov_ref = sec / z_ref - mu_ref * mu_ref.transpose();
        log_z_ref = std::log(z_ref);
        out.err_Z = std::abs(out.z_tt - z_ref) / z_ref;
    } else if (spec.reference == "mcmc") {
        // preconditioned chain on the perturbed prior, pushed through the map
        MCMCConfig mcfg;
        mcfg.steps = spec.mcmc_reference_steps;
        mcfg.burn_in = std::min<long>(1000, mcfg.steps / 10);
        mcfg.proposal_scale = 0.5;
        mcfg.seed = spec.seed ^ 0x5EEDu;
        mcfg.store_every = std::max<long>(1, mcfg.steps / 20000);
        MCMCResult mc = rwm_mcmc(ref_prior, mcfg, Vector::Zero(spec.d));
        out.reference_evals = mc.density_calls;
        Vector acc = Vector::Zero(spec.d);
        Matrix acc2 = Matrix::Zero(spec.d, spec.d);
        for (const auto& x : mc.chain) {
            Vector y = map.apply(x);
            acc += y;
            acc2 += y * y.transpose();
        }
        const double n = static_cast<double>(mc.chain.size());
        mu_ref = acc / n;
        cov_ref = acc2 / n - mu_ref * mu_ref.transpose();
        z_ref = out.z_tt;  // evidence not identifiable from a chain
        log_z_ref = std::log(z_ref);
        out.err_Z = 0.0;
    } else {
        throw ConfigError("darcy: unknown reference " + spec.reference);
    }
    out.z_ref = z_ref;
    out.mu_ref = mu_ref;
    out.err_mu = rel_err(mean, mu_ref);
    out.err_Sigma = rel_err(cov, cov_ref);

    if (spec.kl_samples > 0) {
        // posterior samples via a short preconditioned chain (not billed to
        // either budget above)
        MCMCConfig kcfg;
        kcfg.steps = std::max<long>(20L * spec.kl_samples, 2000);
        kcfg.burn_in = kcfg.steps / 10;
        kcfg.proposal_scale = 0.5;
        kcfg.seed = spec.seed ^ 0x4B4Cu;
        kcfg.store_every =
            std::max<long>(1, (kcfg.steps - kcfg.burn_in) / spec.kl_samples);
        LogDensity free_prior = perturbed_prior(posterior, map);
        MCMCResult kc = rwm_mcmc(free_prior, kcfg, Vector::Zero(spec.d));
        std::vector<Vector> samples;
        samples.reserve(kc.chain.size());
        for (const auto& x : kc.chain) samples.push_back(map.apply(x));
        auto metrics =
            divergence_metrics(ld, map, posterior, samples, log_z_ref);
        out.kl = metrics.kl;
    }
    return out;
}

// ---------------------------------------------------------------------------
// config handling
// ---------------------------------------------------------------------------

std::uint64_t config_hash(const nlohmann::json& config) {
    const std::string dump = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

FitOptions parse_fit(const nlohmann::json& j) {
    FitOptions fit;
    if (!j.contains("fit")) return fit;
    const auto& f = j.at("fit");
    fit.initial_rank = get_or(f, "initial_rank", fit.initial_rank);
    fit.max_rank = get_or(f, "max_rank", fit.max_rank);
    fit.max_sweeps = get_or(f, "max_sweeps", fit.max_sweeps);
    fit.target_residual = get_or(f, "target_residual", fit.target_residual);
    fit.stagnation_factor =
        get_or(f, "stagnation_factor", fit.stagnation_factor);
    fit.ridge = get_or(f, "ridge", fit.ridge);
    fit.validation_fraction =
        get_or(f, "validation_fraction", fit.validation_fraction);
    return fit;
}

BasisConfig parse_basis(const nlohmann::json& j) {
    BasisConfig basis;
    if (!j.contains("basis")) return basis;
    const auto& b = j.at("basis");
    basis.radial_degree = get_or(b, "radial_degree", basis.radial_degree);
    basis.trig_size = get_or(b, "trig_size", basis.trig_size);
    basis.angular_size = get_or(b, "angular_size", basis.angular_size);
    basis.tau_mant = get_or(b, "tau_mant", basis.tau_mant);
    return basis;
}

struct CsvTable {
    std::string header;
    std::vector<std::string> rows;

    void write(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ConfigError("cannot open " + path.string());
        os << header << '\n';
        for (const auto& row : rows) os << row << '\n';
    }
};

std::vector<int> layer_list(const nlohmann::json& config, int fallback_L) {
    if (config.contains("layers_list"))
        return config.at("layers_list").get<std::vector<int>>();
    return {fallback_L};
}

}  // namespace

void validate_config(const nlohmann::json& config) {
    if (!config.contains("scenario"))
        throw ConfigError("config: missing 'scenario'");
    const std::string scenario = config.at("scenario").get<std::string>();
    if (scenario != "gaussian" && scenario != "banana" && scenario != "darcy")
        throw ConfigError("config: scenario must be gaussian, banana or darcy");
    if (scenario != "banana") {
        std::vector<int> ds = config.contains("d_list")
                                  ? config.at("d_list").get<std::vector<int>>()
                                  : std::vector<int>{get_or(config, "d", 2)};
        for (int d : ds)
            if (d < 2) throw ConfigError("config: d must be >= 2");
    }
    if (config.contains("partition")) {
        const auto& p = config.at("partition");
        if (get_or(p, "L", 1) < 1) throw ConfigError("config: partition.L >= 1");
        if (get_or(p, "R", 1.0) <= 0.0)
            throw ConfigError("config: partition.R > 0");
    }
    if (get_or(config, "samples_per_layer", 1) < 1)
        throw ConfigError("config: samples_per_layer >= 1");
    if (get_or(config, "repetitions", 1) < 1)
        throw ConfigError("config: repetitions >= 1");
    if (config.contains("basis")) {
        const auto& b = config.at("basis");
        if (get_or(b, "radial_degree", 0) < 0)
            throw ConfigError("config: basis.radial_degree >= 0");
        if (get_or(b, "trig_size", 1) < 1)
            throw ConfigError("config: basis.trig_size >= 1");
        if (get_or(b, "tau_mant", 100u) < 50u)
            throw ConfigError("config: basis.tau_mant >= 50");
    }
    if (scenario == "darcy") {
        std::string ref = get_or<std::string>(config, "reference", "quadrature");
        if (ref != "quadrature" && ref != "mcmc")
            throw ConfigError("config: reference must be quadrature or mcmc");
        if (ref == "quadrature" && get_or(config, "d", 2) != 2)
            throw ConfigError("config: quadrature reference requires d = 2");
    }
}

nlohmann::json run_experiment(const nlohmann::json& config,
                              const std::filesystem::path& output_dir) {
    validate_config(config);
    std::filesystem::create_directories(output_dir);
    const std::string scenario = config.at("scenario").get<std::string>();
    const std::string hash = hash_hex(config_hash(config));
    const std::uint64_t base_seed = get_or<std::uint64_t>(config, "seed", 1);
    const int repetitions = get_or(config, "repetitions", 1);
    const auto partition = config.contains("partition")
                               ? config.at("partition")
                               : nlohmann::json::object();
    const int cfg_L = get_or(partition, "L", 19);
    const double cfg_R = get_or(partition, "R", 10.0);
    const BasisConfig basis = parse_basis(config);
    const FitOptions fit = parse_fit(config);
    const int samples_per_layer = get_or(config, "samples_per_layer", 1000);

    nlohmann::json manifest;
    manifest["config"] = config;
    manifest["config_hash"] = hash;
    manifest["scenario"] = scenario;
    std::vector<std::string> outputs;
    LayeredDensity last_surrogate;
    bool have_surrogate = false;

    if (scenario == "gaussian") {
        std::vector<int> ds = config.contains("d_list")
                                  ? config.at("d_list").get<std::vector<int>>()
                                  : std::vector<int>{get_or(config, "d", 2)};
        std::vector<double> sigmas =
            config.contains("sigma2_list")
                ? config.at("sigma2_list").get<std::vector<double>>()
                : std::vector<double>{get_or(config, "sigma2", 1e-2)};
        const double mu_value = get_or(config, "mu", 1.0);
        const int kl_samples = get_or(config, "kl_samples", 10000);
        const std::string transport =
            get_or<std::string>(config, "transport", "exact");

        CsvTable table;
        table.header =
            "d,sigma2,L,N,repetition,seed,calls,err_Z,err_mu,err_Sigma,kl,"
            "hellinger,max_rank,config_hash";
        CsvTable quantiles;
        quantiles.header = "d,sigma2,L,N,metric,q05,q50,q95,config_hash";

        for (int d : ds) {
            for (double sigma2 : sigmas) {
                for (int L : layer_list(config, cfg_L)) {
                    std::vector<GaussianCellResult> reps(repetitions);
                    std::vector<std::uint64_t> seeds(repetitions);
                    for (int rep = 0; rep < repetitions; ++rep) {
                        GaussianCellSpec spec;
                        spec.d = d;
                        spec.sigma2 = sigma2;
                        spec.mu_value = mu_value;
                        spec.transport = transport;
                        spec.L = L;
                        spec.R = cfg_R;
                        spec.basis = basis;
                        spec.fit = fit;
                        spec.samples_per_layer = samples_per_layer;
                        seeds[rep] = base_seed + 1000003ULL * rep;
                        spec.seed = seeds[rep];
                        spec.kl_samples = kl_samples;
                        reps[rep] = run_gaussian_cell(spec, &last_surrogate);
                        have_surrogate = true;
                        std::ostringstream row;
                        row << d << ',' << fmt(sigma2) << ',' << L << ','
                            << samples_per_layer << ',' << rep << ','
                            << seeds[rep] << ',' << reps[rep].calls << ','
                            << fmt(reps[rep].err_Z) << ','
                            << fmt(reps[rep].err_mu) << ','
                            << fmt(reps[rep].err_Sigma) << ','
                            << fmt(reps[rep].kl) << ','
                            << fmt(reps[rep].hellinger) << ','
                            << reps[rep].max_rounded_rank << ',' << hash;
                        table.rows.push_back(row.str());
                    }
                    if (repetitions > 1) {
                        auto emit = [&](const std::string& name,
                                        auto member) {
                            std::vector<double> vals;
                            for (const auto& r : reps)
                                vals.push_back(r.*member);
                            std::ostringstream row;
                            row << d << ',' << fmt(sigma2) << ',' << L << ','
                                << samples_per_layer << ',' << name << ','
                                << fmt(quantile(vals, 0.05)) << ','
                                << fmt(quantile(vals, 0.50)) << ','
                                << fmt(quantile(vals, 0.95)) << ',' << hash;
                            quantiles.rows.push_back(row.str());
                        };
                        emit("err_Z", &GaussianCellResult::err_Z);
                        emit("err_mu", &GaussianCellResult::err_mu);
                        emit("err_Sigma", &GaussianCellResult::err_Sigma);
                        emit("kl", &GaussianCellResult::kl);
                        emit("hellinger", &GaussianCellResult::hellinger);
                    }
                }
            }
        }
        table.write(output_dir / "gaussian.csv");
        outputs.push_back("gaussian.csv");
        if (repetitions > 1) {
            quantiles.write(output_dir / "gaussian_quantiles.csv");
            outputs.push_back("gaussian_quantiles.csv");
        }
    } else if (scenario == "banana") {
        std::vector<double> ts =
            config.contains("t_list")
                ? config.at("t_list").get<std::vector<double>>()
                : std::vector<double>{0.0, 0.25, 0.5, 1.0};
        CsvTable table;
        table.header =
            "t,L,N,repetition,seed,calls,method,err_mu,err_Sigma,config_hash";
        for (double t : ts) {
            for (int L : layer_list(config, get_or(partition, "L", 10))) {
                for (int rep = 0; rep < repetitions; ++rep) {
                    BananaSpec spec;
                    spec.t = t;
                    spec.L = L;
                    spec.R = get_or(partition, "R", 8.0);
                    spec.radial_degree = basis.radial_degree;
                    spec.trig_size = basis.trig_size;
                    spec.fit = fit;
                    spec.samples_per_layer = samples_per_layer;
                    spec.seed = base_seed + 1000003ULL * rep;
                    spec.qoi_samples_per_layer =
                        get_or(config, "qoi_samples_per_layer", 200000);
                    BananaResult r = run_banana_case(spec, &last_surrogate);
                    have_surrogate = true;
                    std::ostringstream tt_row;
                    tt_row << fmt(t) << ',' << L << ',' << samples_per_layer
                           << ',' << rep << ',' << spec.seed << ',' << r.calls
                           << ",tt," << fmt(r.err_mu_tt) << ','
                           << fmt(r.err_sigma_tt) << ',' << hash;
                    table.rows.push_back(tt_row.str());
                    std::ostringstream mc_row;
                    mc_row << fmt(t) << ',' << L << ',' << samples_per_layer
                           << ',' << rep << ',' << spec.seed << ',' << r.calls
                           << ",mcmc," << fmt(r.err_mu_mc) << ','
                           << fmt(r.err_sigma_mc) << ',' << hash;
                    table.rows.push_back(mc_row.str());
                }
            }
        }
        table.write(output_dir / "banana.csv");
        outputs.push_back("banana.csv");
    } else {  // darcy
        CsvTable table;
        table.header =
            "d,L,N,repetition,seed,calls,reference,reference_evals,err_Z,"
            "err_mu,err_Sigma,kl,config_hash";
        std::vector<int> ds = config.contains("d_list")
                                  ? config.at("d_list").get<std::vector<int>>()
                                  : std::vector<int>{get_or(config, "d", 2)};
        for (int d : ds) {
            for (int L : layer_list(config, get_or(partition, "L", 5))) {
                for (int rep = 0; rep < repetitions; ++rep) {
                    DarcySpec spec;
                    spec.d = d;
                    spec.noise_sigma = get_or(config, "noise_sigma", 1e-7);
                    spec.grid_n = get_or(config, "grid_n", 64);
                    spec.obs_per_side = get_or(config, "obs_per_side", 12);
                    spec.L = L;
                    spec.R = get_or(partition, "R", 8.0);
                    spec.basis = basis;
                    spec.fit = fit;
                    spec.samples_per_layer = samples_per_layer;
                    spec.seed = base_seed + 1000003ULL * rep;
                    spec.reference = get_or<std::string>(
                        config, "reference", d == 2 ? "quadrature" : "mcmc");
                    spec.quad_rel_tol = get_or(config, "quad_rel_tol", 1e-7);
                    spec.mcmc_reference_steps =
                        get_or<long>(config, "mcmc_reference_steps", 100000);
                    spec.kl_samples = get_or(config, "kl_samples", 2000);
                    DarcyResult r = run_darcy_case(spec, &last_surrogate);
                    have_surrogate = true;
                    std::ostringstream row;
                    row << d << ',' << L << ',' << samples_per_layer << ','
                        << rep << ',' << spec.seed << ',' << r.calls << ','
                        << spec.reference << ',' << r.reference_evals << ','
                        << fmt(r.err_Z) << ',' << fmt(r.err_mu) << ','
                        << fmt(r.err_Sigma) << ',' << fmt(r.kl) << ',' << hash;
                    table.rows.push_back(row.str());
                }
            }
        }
        table.write(output_dir / "darcy.csv");
        outputs.push_back("darcy.csv");
    }

    if (have_surrogate) {
        last_surrogate.metadata = {{"config_hash", hash},
                                   {"scenario", scenario},
                                   {"seed", base_seed}};
        std::ofstream os(output_dir / "surrogate.json", std::ios::binary);
        os << last_surrogate.to_json().dump() << '\n';
        outputs.push_back("surrogate.json");
    }
    manifest["outputs"] = outputs;
    {
        std::ofstream os(output_dir / "manifest.json", std::ios::binary);
        os << manifest.dump(2) << '\n';
    }
    return manifest;
}

std::string inspect_surrogate(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open " + file.string());
    nlohmann::json j;
    is >> j;
    LayeredDensity ld = LayeredDensity::from_json(j);
    std::ostringstream os;
    const auto& part = ld.partition();
    os << "layered density surrogate\n";
    os << "  dimension:    " << part.dim << "\n";
    os << "  layers:       " << part.num_layers() << " (outer radius "
       << part.outer_radius() << ")\n";
    os << "  mass inside:  " << fmt(ld.mass_inside()) << "\n";
    os << "  mass tail:    " << fmt(ld.mass_tail()) << "\n";
    os << "  normalizer:   " << fmt(ld.normalizer()) << "\n";
    os << "  layers (index, ranks, train residual, mass):\n";
    int idx = 0;
    for (const auto& layer : ld.layers()) {
        os << "    " << idx++ << ": ranks [";
        const auto ranks = layer.tt.ranks();
        for (size_t i = 0; i < ranks.size(); ++i)
            os << ranks[i] << (i + 1 < ranks.size() ? " " : "");
        os << "], residual " << fmt(layer.diagnostics.train_residual)
           << ", mass " << fmt(layer.mass) << "\n";
    }
    if (!ld.metadata.is_null()) os << "  metadata: " << ld.metadata.dump() << "\n";
    return os.str();
}

}  // namespace ttdensity::experiments
