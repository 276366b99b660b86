#include "ttdensity/sampling.hpp"

#include "ttdensity/errors.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace ttdensity {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Antiderivative S_i(theta) = int_0^theta sin^i, by the stable downward
/// recurrence S_i = -cos sin^{i-1}/i + (i-1)/i S_{i-2}.
double sin_power_antiderivative(int i, double theta) {
    double s0 = theta;               // S_0
    double s1 = 1.0 - std::cos(theta);  // S_1
    if (i == 0) return s0;
    if (i == 1) return s1;
    double sin_t = std::sin(theta), cos_t = std::cos(theta);
    double prev = (i % 2 == 0) ? s0 : s1;
    for (int k = (i % 2 == 0) ? 2 : 3; k <= i; k += 2) {
        double sk = -cos_t * std::pow(sin_t, k - 1) / k +
                    (k - 1.0) / k * prev;
        prev = sk;
    }
    return prev;
}

double invert_angular_cdf(int i, double u, double total) {
    // F(theta) = S_i(theta)/total is strictly increasing on (0, pi)
    double target = u * total;
    double lo = 0.0, hi = kPi;
    double theta = kPi * u;  // decent start
    for (int iter = 0; iter < 200; ++iter) {
        double f = sin_power_antiderivative(i, theta) - target;
        if (f > 0)
            hi = theta;
        else
            lo = theta;
        double deriv = std::pow(std::sin(theta), i);
        double next = theta - f / deriv;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisect
        if (std::abs(next - theta) < 1e-12) return next;
        theta = next;
    }
    return theta;
}

}  // namespace

std::vector<double> sample_radial(SeededRng& rng, double a, double b, int d,
                                  int N) {
    if (!(0.0 <= a && a < b)) throw ConfigError("sample_radial: need 0 <= a < b");
    if (d < 1) throw ConfigError("sample_radial: d >= 1");
    std::vector<double> out(N);
    const double ad = std::pow(a, d), bd = std::pow(b, d);
    for (int s = 0; s < N; ++s) {
        double u = rng.uniform();
        out[s] = std::pow(ad + u * (bd - ad), 1.0 / d);
    }
    return out;
}

std::vector<double> sample_angular(SeededRng& rng, int i, int N) {
    if (i < 1) throw ConfigError("sample_angular: need i >= 1");
    std::vector<double> out(N);
    if (i == 1) {
        for (int s = 0; s < N; ++s)
            out[s] = std::acos(1.0 - 2.0 * rng.uniform());
        return out;
    }
    const double total = sin_power_antiderivative(i, kPi);
    for (int s = 0; s < N; ++s)
        out[s] = invert_angular_cdf(i, rng.uniform(), total);
    return out;
}

LayerSampleSet sample_layer(SeededRng& rng, const PolarChart& chart,
                            const LogDensity& prior, int N) {
    if (N < 1) throw ConfigError("sample_layer: N must be >= 1");
    if (prior.dim != chart.dim)
        throw DimensionMismatch("sample_layer: density/chart dimension mismatch");
    const int d = chart.dim;
    LayerSampleSet set;
    set.layer_index = chart.layer_index;
    set.points.resize(N, d);

    // coordinate-wise inverse transform sampling; valid because the weight
    // w^l factors over the coordinates
    auto radial = sample_radial(rng, chart.rho_lo, chart.rho_hi, d, N);
    for (int s = 0; s < N; ++s) set.points(s, 0) = radial[s];
    for (int s = 0; s < N; ++s)
        set.points(s, 1) = rng.uniform(0.0, 2.0 * kPi);
    for (int i = 1; i <= d - 2; ++i) {
        auto theta = sample_angular(rng, i, N);
        for (int s = 0; s < N; ++s) set.points(s, i + 1) = theta[s];
    }

    set.log_values.resize(N);
    for (int s = 0; s < N; ++s) {
        Vector x = polar_to_cartesian(chart, set.points.row(s));
        double lv = prior.log_eval(x);
        if (std::isnan(lv)) {
            std::ostringstream oss;
            oss << "sample_layer: density evaluation returned NaN at xhat = [";
            for (int j = 0; j < d; ++j)
                oss << set.points(s, j) << (j + 1 < d ? ", " : "]");
            throw SolverFailure(oss.str());
        }
        set.log_values[s] = lv;
    }
    set.log_offset = set.log_values.maxCoeff();
    if (!std::isfinite(set.log_offset)) set.log_offset = 0.0;  // all -inf layer
    set.values.resize(N);
    for (int s = 0; s < N; ++s) {
        double scaled = set.log_values[s] - set.log_offset;
        set.values[s] = scaled < -745.0 ? 0.0 : std::exp(scaled);
    }
    return set;
}

void write_csv(const LayerSampleSet& samples, std::ostream& os) {
    const int d = static_cast<int>(samples.points.cols());
    os << "layer";
    for (int j = 0; j < d; ++j) os << ",xhat_" << (j + 1);
    os << ",log_value\n";
    char buf[32];
    for (Eigen::Index s = 0; s < samples.points.rows(); ++s) {
        os << samples.layer_index;
        for (int j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", samples.points(s, j));
            os << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", samples.log_values[s]);
        os << ',' << buf << '\n';
    }
}

}  // namespace ttdensity
