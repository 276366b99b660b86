#include "ttdensity/basis.hpp"

#include "ttdensity/coords.hpp"
#include "ttdensity/quadrature.hpp"

#include <boost/math/constants/constants.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>

namespace ttdensity {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

BigFloat big_pi() { return boost::math::constants::pi<BigFloat>(); }

/// Clenshaw-Curtis nodes/weights on [-1, 1], m + 1 points (m even).
struct CCRule {
    std::vector<BigFloat> nodes;
    std::vector<BigFloat> weights;
};

const CCRule& cc_rule(int m, unsigned digits10) {
    static std::mutex mutex;
    static std::map<std::pair<int, unsigned>, CCRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(m, digits10);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    PrecisionGuard guard(digits10);
    CCRule rule;
    rule.nodes.resize(m + 1);
    rule.weights.resize(m + 1);
    const BigFloat pi = big_pi();
    for (int j = 0; j <= m; ++j) {
        BigFloat theta = pi * j / m;
        rule.nodes[j] = cos(theta);
        // w_j = (c_j/m) (1 - sum_k b_k cos(2k theta_j)/(4k^2 - 1)),
        // Chebyshev recurrence for cos(2k theta_j)
        BigFloat cos2 = cos(2 * theta);
        BigFloat ckm1 = 1, ck = cos2;
        BigFloat sum = 0;
        for (int k = 1; k <= m / 2; ++k) {
            BigFloat bk = (k == m / 2) ? 1 : 2;
            sum += bk * ck / BigFloat(4 * k * k - 1);
            BigFloat next = 2 * cos2 * ck - ckm1;
            ckm1 = ck;
            ck = next;
        }
        BigFloat cj = (j == 0 || j == m) ? 1 : 2;
        rule.weights[j] = (cj / m) * (1 - sum);
    }
    return cache.emplace(key, std::move(rule)).first->second;
}

/// Moments int_{-1}^{1} t^k sin^i(pi (1+t)/2) (pi/2) dt for k = 0..k_max,
/// refined until two successive Clenshaw-Curtis levels agree to
/// tau_mant/2 digits.
std::vector<BigFloat> angular_raw_moments(int i, int k_max, unsigned tau_mant) {
    PrecisionGuard guard(tau_mant);
    const BigFloat pi = big_pi();
    BigFloat tol = pow(BigFloat(10), -static_cast<int>(tau_mant / 2));
    std::vector<BigFloat> prev;
    for (int m = 32; m <= (1 << 14); m *= 2) {
        const CCRule& rule = cc_rule(m, tau_mant);
        std::vector<BigFloat> mom(k_max + 1, BigFloat(0));
        for (int j = 0; j <= m; ++j) {
            const BigFloat& t = rule.nodes[j];
            BigFloat s = sin(pi * (1 + t) / 2);
            BigFloat si = 1;
            for (int p = 0; p < i; ++p) si *= s;
            BigFloat base = rule.weights[j] * si;
            BigFloat tk = 1;
            for (int k = 0; k <= k_max; ++k) {
                mom[k] += base * tk;
                tk *= t;
            }
        }
        for (auto& v : mom) v *= pi / 2;
        if (!prev.empty()) {
            bool ok = true;
            for (int k = 0; k <= k_max; ++k) {
                if (abs(mom[k] - prev[k]) > tol * (1 + abs(mom[k]))) {
                    ok = false;
                    break;
                }
            }
            if (ok) return mom;
        }
        prev = std::move(mom);
    }
    throw PrecisionLoss(
        "angular_raw_moments: Clenshaw-Curtis refinement did not converge");
}

/// Moments int_a^b t(x)^k x^{d-1} dx, exact via binomial expansion of
/// x = c1 + c2 t and int_{-1}^1 t^m dt.
std::vector<BigFloat> radial_raw_moments(double a, double b, int d, int k_max,
                                         unsigned tau_mant) {
    PrecisionGuard guard(tau_mant);
    BigFloat c1 = (BigFloat(a) + BigFloat(b)) / 2;
    BigFloat c2 = (BigFloat(b) - BigFloat(a)) / 2;
    const int e = d - 1;
    // binomial expansion coefficients of (c1 + c2 t)^{d-1}
    std::vector<BigFloat> expand(e + 1);
    BigFloat binom = 1;
    for (int q = 0; q <= e; ++q) {
        expand[q] = binom * pow(c1, e - q) * pow(c2, q);
        binom = binom * (e - q) / (q + 1);
    }
    std::vector<BigFloat> mom(k_max + 1, BigFloat(0));
    for (int k = 0; k <= k_max; ++k) {
        BigFloat sum = 0;
        for (int q = 0; q <= e; ++q) {
            int p = k + q;
            if (p % 2 == 0) sum += expand[q] * 2 / BigFloat(p + 1);
        }
        mom[k] = c2 * sum;
    }
    return mom;
}

using PolyCoeffs = std::vector<BigFloat>;

BigFloat weighted_inner(const PolyCoeffs& p, const PolyCoeffs& q,
                        const std::vector<BigFloat>& moments) {
    BigFloat s = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0) continue;
        for (size_t j = 0; j < q.size(); ++j)
            s += p[i] * q[j] * moments[i + j];
    }
    return s;
}

/// Degree-graded modified Gram-Schmidt with one reorthogonalization pass.
/// Sign convention: positive leading coefficient.
std::vector<PolyCoeffs> gram_schmidt(int n, const std::vector<BigFloat>& moments,
                                     unsigned tau_mant) {
    std::vector<PolyCoeffs> basis;
    BigFloat loss_floor = pow(BigFloat(10), -static_cast<int>(tau_mant));
    for (int k = 0; k < n; ++k) {
        PolyCoeffs p(k + 1, BigFloat(0));
        p[k] = 1;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                BigFloat c = weighted_inner(p, q, moments);
                for (size_t i = 0; i < q.size(); ++i) p[i] -= c * q[i];
            }
        }
        BigFloat nrm2 = weighted_inner(p, p, moments);
        if (nrm2 < loss_floor)
            throw PrecisionLoss(
                "gram_schmidt: norm underflow at degree " + std::to_string(k) +
                "; raise tau_mant or lower the degree");
        BigFloat inv = 1 / sqrt(nrm2);
        if (p[k] < 0) inv = -inv;
        for (auto& c : p) c *= inv;
        basis.push_back(std::move(p));
    }
    return basis;
}

BigPolynomial make_big_polynomial(PolyCoeffs coeff, double a, double b) {
    BigPolynomial poly;
    poly.a = a;
    poly.b = b;
    poly.coeff_d.reserve(coeff.size());
    for (const auto& c : coeff)
        poly.coeff_d.push_back(static_cast<double>(c));
    poly.coeff = std::move(coeff);
    return poly;
}

int trig_frequency(int j) { return (j % 2 == 1) ? (j + 1) / 2 : j / 2; }

}  // namespace

double OrthonormalBasis1D::eval(int j, double x) const {
    if (j < 0 || j >= size)
        throw DimensionMismatch("basis eval: index out of range");
    if (family == BasisFamily::trig) {
        if (j == 0) return 1.0 / std::sqrt(kTwoPi);
        int k = trig_frequency(j);
        double v = (j % 2 == 1) ? std::sin(k * x) : std::cos(k * x);
        return v / std::sqrt(kTwoPi / 2.0);
    }
    return polys[j].eval(x);
}

void OrthonormalBasis1D::eval_all(double x, double* out) const {
    if (family == BasisFamily::trig) {
        const double inv_sqrt_pi = 1.0 / std::sqrt(kTwoPi / 2.0);
        out[0] = 1.0 / std::sqrt(kTwoPi);
        if (size == 1) return;
        double s1 = std::sin(x), c1 = std::cos(x);
        double sk = s1, ck = c1;
        for (int j = 1; j < size; ++j) {
            out[j] = ((j % 2 == 1) ? sk : ck) * inv_sqrt_pi;
            if (j % 2 == 0) {  // advance to the next frequency
                double sn = sk * c1 + ck * s1;
                double cn = ck * c1 - sk * s1;
                sk = sn;
                ck = cn;
            }
        }
        return;
    }
    // shared Horner sweep over the t powers
    double t = (2.0 * x - a - b) / (b - a);
    std::vector<double> tp(size, 1.0);
    for (int k = 1; k < size; ++k) tp[k] = tp[k - 1] * t;
    for (int j = 0; j < size; ++j) {
        const auto& c = polys[j].coeff_d;
        double v = 0.0;
        for (size_t k = 0; k < c.size(); ++k) v += c[k] * tp[k];
        out[j] = v;
    }
}

double OrthonormalBasis1D::weight(double x) const {
    switch (family) {
        case BasisFamily::radial:
            return std::pow(x, weight_exponent);
        case BasisFamily::angular:
            return std::pow(std::sin(x), weight_exponent);
        case BasisFamily::trig:
            return 1.0;
    }
    return 1.0;
}

double OrthonormalBasis1D::weight_mass() const {
    switch (family) {
        case BasisFamily::radial: {
            int d = weight_exponent + 1;
            return (std::pow(b, d) - std::pow(a, d)) / d;
        }
        case BasisFamily::angular:
            return sin_power_mass(weight_exponent);
        case BasisFamily::trig:
            return kTwoPi;
    }
    return 0.0;
}

OrthonormalBasis1D radial_basis(double a, double b, int n, int d,
                                unsigned tau_mant) {
    if (!(a < b)) throw ConfigError("radial_basis: need a < b");
    if (d > 1 && a < 0.0)
        throw ConfigError("radial_basis: need a >= 0 for the radial weight");
    if (n < 1 || d < 1) throw ConfigError("radial_basis: need n >= 1, d >= 1");
    if (tau_mant < 50) throw ConfigError("radial_basis: tau_mant must be >= 50");
    PrecisionGuard guard(tau_mant);
    OrthonormalBasis1D basis;
    basis.family = BasisFamily::radial;
    basis.a = a;
    basis.b = b;
    basis.weight_exponent = d - 1;
    basis.size = n;
    basis.tau_mant = tau_mant;
    basis.raw_moments = radial_raw_moments(a, b, d, 2 * n + 64, tau_mant);
    auto polys = gram_schmidt(n, basis.raw_moments, tau_mant);
    basis.polys.reserve(n);
    for (auto& p : polys) basis.polys.push_back(make_big_polynomial(std::move(p), a, b));
    return basis;
}

OrthonormalBasis1D trig_basis(int n) {
    if (n < 1) throw ConfigError("trig_basis: need n >= 1");
    OrthonormalBasis1D basis;
    basis.family = BasisFamily::trig;
    basis.a = 0.0;
    basis.b = kTwoPi;
    basis.weight_exponent = 0;
    basis.size = n;
    return basis;
}

OrthonormalBasis1D angular_basis(int i, int n, unsigned tau_mant) {
    if (i < 1) throw ConfigError("angular_basis: need i >= 1");
    if (n < 1) throw ConfigError("angular_basis: need n >= 1");
    if (tau_mant < 50) throw ConfigError("angular_basis: tau_mant must be >= 50");
    PrecisionGuard guard(tau_mant);
    OrthonormalBasis1D basis;
    basis.family = BasisFamily::angular;
    basis.a = 0.0;
    basis.b = 3.14159265358979323846;
    basis.weight_exponent = i;
    basis.size = n;
    basis.tau_mant = tau_mant;
    basis.raw_moments = angular_raw_moments(i, 2 * n + 64, tau_mant);
    auto polys = gram_schmidt(n, basis.raw_moments, tau_mant);
    basis.polys.reserve(n);
    for (auto& p : polys)
        basis.polys.push_back(make_big_polynomial(std::move(p), basis.a, basis.b));
    return basis;
}

double weighted_monomial_integral(const OrthonormalBasis1D& basis, int m,
                                  int j) {
    if (m < 0) throw ConfigError("weighted_monomial_integral: m >= 0 required");
    if (j < 0 || j >= basis.size)
        throw DimensionMismatch("weighted_monomial_integral: index out of range");
    if (basis.family == BasisFamily::trig) {
        // rarely needed; quadrature with margin for the highest mode
        int nodes = m + 2 * basis.size + 64;
        return integrate_gl(
            [&](double x) { return std::pow(x, m) * basis.eval(j, x); }, basis.a,
            basis.b, nodes);
    }
    PrecisionGuard guard(basis.tau_mant);
    const auto& poly = basis.polys[j];
    const int deg = poly.degree();
    const std::vector<BigFloat>* moments = &basis.raw_moments;
    std::vector<BigFloat> extended;
    if (m + deg >= static_cast<int>(basis.raw_moments.size())) {
        if (basis.family == BasisFamily::radial) {
            extended = radial_raw_moments(basis.a, basis.b,
                                          basis.weight_exponent + 1, m + deg,
                                          basis.tau_mant);
        } else {
            extended = angular_raw_moments(basis.weight_exponent, m + deg,
                                           basis.tau_mant);
        }
        moments = &extended;
    }
    // x^m = (c1 + c2 t)^m expanded exactly
    BigFloat c1 = (BigFloat(basis.a) + BigFloat(basis.b)) / 2;
    BigFloat c2 = (BigFloat(basis.b) - BigFloat(basis.a)) / 2;
    BigFloat binom = 1;
    BigFloat total = 0;
    for (int q = 0; q <= m; ++q) {
        BigFloat factor = binom * pow(c1, m - q) * pow(c2, q);
        BigFloat inner = 0;
        for (int c = 0; c <= deg; ++c)
            inner += poly.coeff[c] * (*moments)[q + c];
        total += factor * inner;
        binom = binom * (m - q) / (q + 1);
    }
    return static_cast<double>(total);
}

double trig_power_integral(int a, int b, bool full_circle) {
    if (a < 0 || b < 0)
        throw ConfigError("trig_power_integral: exponents must be >= 0");
    if (full_circle) {
        if (a % 2 == 1 || b % 2 == 1) return 0.0;
        // 2pi (a-1)!!(b-1)!! / (a+b)!!
        double v = kTwoPi;
        for (int k = a - 1; k >= 2; k -= 2) v *= k;
        for (int k = b - 1; k >= 2; k -= 2) v *= k;
        for (int k = a + b; k >= 2; k -= 2) v /= k;
        return v;
    }
    if (b % 2 == 1) return 0.0;
    // Beta function: int_0^pi sin^a cos^b = G((a+1)/2) G((b+1)/2) / G((a+b)/2 + 1)
    return std::tgamma(0.5 * (a + 1)) * std::tgamma(0.5 * (b + 1)) /
           std::tgamma(0.5 * (a + b) + 1.0);
}

namespace {

/// Complex Fourier coefficients of sin^a(t) cos^b(t); index m + (a+b).
std::vector<std::complex<double>> trig_power_fourier(int a, int b) {
    const std::complex<double> I(0.0, 1.0);
    std::vector<std::complex<double>> sin_part(a + 1), cos_part(b + 1);
    // (e^{it} - e^{-it})^a / (2i)^a: term p has frequency 2p - a
    double binom = 1.0;
    for (int p = 0; p <= a; ++p) {
        double sign = ((a - p) % 2 == 0) ? 1.0 : -1.0;
        sin_part[p] = binom * sign;
        binom = binom * (a - p) / (p + 1.0);
    }
    std::complex<double> scale_s = std::pow(2.0 * I, -a);
    for (auto& c : sin_part) c *= scale_s;
    binom = 1.0;
    for (int q = 0; q <= b; ++q) {
        cos_part[q] = binom;
        binom = binom * (b - q) / (q + 1.0);
    }
    double scale_c = std::pow(2.0, -b);
    for (auto& c : cos_part) c *= scale_c;
    // convolution over frequencies; slot m + (a+b) holds frequency m
    std::vector<std::complex<double>> out(2 * (a + b) + 1, 0.0);
    for (int p = 0; p <= a; ++p) {
        int fp = 2 * p - a;
        for (int q = 0; q <= b; ++q) {
            int fq = 2 * q - b;
            out[fp + fq + a + b] += sin_part[p] * cos_part[q];
        }
    }
    return out;
}

}  // namespace

double basis_times_trigpower_integral(const OrthonormalBasis1D& basis, int j,
                                      int a, int b) {
    if (j < 0 || j >= basis.size)
        throw DimensionMismatch(
            "basis_times_trigpower_integral: index out of range");
    if (a < 0 || b < 0)
        throw ConfigError("basis_times_trigpower_integral: exponents >= 0");
    if (basis.family == BasisFamily::trig) {
        auto fourier = trig_power_fourier(a, b);
        const int off = a + b;
        auto coeff = [&](int m) -> std::complex<double> {
            if (m < -off || m > off) return {0.0, 0.0};
            return fourier[m + off];
        };
        const double pi = kTwoPi / 2.0;
        if (j == 0) return kTwoPi * coeff(0).real() / std::sqrt(kTwoPi);
        int k = trig_frequency(j);
        std::complex<double> v;
        if (j % 2 == 1) {  // sin(k theta)/sqrt(pi)
            v = pi * std::complex<double>(0.0, 1.0) * (coeff(k) - coeff(-k));
        } else {  // cos(k theta)/sqrt(pi)
            v = pi * (coeff(k) + coeff(-k));
        }
        return v.real() / std::sqrt(pi);
    }
    int nodes = basis.polys[j].degree() + a + b + basis.weight_exponent + 16;
    return integrate_gl(
        [&](double x) {
            return basis.eval(j, x) * std::pow(std::sin(x), a) *
                   std::pow(std::cos(x), b) * basis.weight(x);
        },
        basis.a, basis.b, nodes);
}

nlohmann::json basis_to_json(const OrthonormalBasis1D& basis) {
    nlohmann::json j;
    switch (basis.family) {
        case BasisFamily::radial: j["family"] = "radial"; break;
        case BasisFamily::trig: j["family"] = "trig"; break;
        case BasisFamily::angular: j["family"] = "angular"; break;
    }
    j["interval"] = {basis.a, basis.b};
    j["weight_exponent"] = basis.weight_exponent;
    j["size"] = basis.size;
    j["tau_mant"] = basis.tau_mant;
    if (basis.family != BasisFamily::trig) {
        nlohmann::json coeffs = nlohmann::json::array();
        for (const auto& poly : basis.polys) {
            nlohmann::json pc = nlohmann::json::array();
            for (const auto& c : poly.coeff) pc.push_back(c.str());
            coeffs.push_back(std::move(pc));
        }
        j["coefficients"] = std::move(coeffs);
    }
    return j;
}

OrthonormalBasis1D basis_from_json(const nlohmann::json& j) {
    std::string family = j.at("family").get<std::string>();
    int size = j.at("size").get<int>();
    unsigned tau = j.at("tau_mant").get<unsigned>();
    if (family == "trig") return trig_basis(size);

    OrthonormalBasis1D basis;
    basis.a = j.at("interval")[0].get<double>();
    basis.b = j.at("interval")[1].get<double>();
    basis.weight_exponent = j.at("weight_exponent").get<int>();
    basis.size = size;
    basis.tau_mant = tau;
    PrecisionGuard guard(tau);
    if (family == "radial") {
        basis.family = BasisFamily::radial;
        basis.raw_moments = radial_raw_moments(
            basis.a, basis.b, basis.weight_exponent + 1, 2 * size + 64, tau);
    } else if (family == "angular") {
        basis.family = BasisFamily::angular;
        basis.raw_moments =
            angular_raw_moments(basis.weight_exponent, 2 * size + 64, tau);
    } else {
        throw ConfigError("basis_from_json: unknown family " + family);
    }
    for (const auto& pc : j.at("coefficients")) {
        PolyCoeffs coeff;
        for (const auto& s : pc) coeff.emplace_back(s.get<std::string>());
        basis.polys.push_back(
            make_big_polynomial(std::move(coeff), basis.a, basis.b));
    }
    return basis;
}

}  // namespace ttdensity
