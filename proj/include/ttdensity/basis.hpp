#pragma once

#include "ttdensity/bigfloat.hpp"
#include "ttdensity/errors.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>
#include <vector>

namespace ttdensity {

enum class BasisFamily {
    radial,   // polynomials on [a, b], weight x^{d-1} (d = 1 gives Legendre)
    trig,     // Fourier modes on [0, 2pi], unit weight
    angular,  // polynomials on [0, pi], weight sin^i
};

/// Polynomial stored in the shifted variable t = (2x - a - b)/(b - a); the
/// monomial basis in t keeps double evaluation well conditioned on narrow
/// shells far from the origin. Big coefficients are retained for exact
/// integral tables, doubles for runtime evaluation.
struct BigPolynomial {
    std::vector<BigFloat> coeff;
    std::vector<double> coeff_d;
    double a = -1.0, b = 1.0;

    int degree() const { return static_cast<int>(coeff.size()) - 1; }
    double eval(double x) const {
        double t = (2.0 * x - a - b) / (b - a);
        double v = 0.0;
        for (auto it = coeff_d.rbegin(); it != coeff_d.rend(); ++it)
            v = v * t + *it;
        return v;
    }
};

/// Univariate basis orthonormal under the weighted inner product
/// <f, g> = int_a^b f g w. Immutable after generation.
class OrthonormalBasis1D {
public:
    BasisFamily family = BasisFamily::radial;
    double a = 0.0, b = 1.0;
    int weight_exponent = 0;  // radial: d-1, angular: i, trig: unused
    int size = 0;
    unsigned tau_mant = 100;

    std::vector<BigPolynomial> polys;   // polynomial families
    std::vector<BigFloat> raw_moments;  // int t^k w dx, shifted variable

    double eval(int j, double x) const;          // j in [0, size)
    void eval_all(double x, double* out) const;  // writes size values
    double weight(double x) const;
    double weight_mass() const;  // int_a^b w
};

using BasisPtr = std::shared_ptr<const OrthonormalBasis1D>;

/// Polynomials P_0..P_{n-1} with int_a^b P_j P_k x^{d-1} dx = delta_jk.
/// Monomial inner products are exact in tau_mant-digit arithmetic; modified
/// Gram-Schmidt runs a second orthogonalization pass. Throws PrecisionLoss
/// when a pre-normalization norm drops below 10^{-tau_mant/2}.
OrthonormalBasis1D radial_basis(double a, double b, int n, int d,
                                unsigned tau_mant = 100);

/// 1/sqrt(2pi), then sin(k theta)/sqrt(pi) and cos(k theta)/sqrt(pi) in
/// increasing frequency; n functions cover modes up to degree (n-1)/2.
OrthonormalBasis1D trig_basis(int n);

/// Polynomials orthonormal under int_0^pi P_j P_k sin^i theta dtheta.
/// Monomial moments come from arbitrary-precision Clenshaw-Curtis quadrature
/// refined until successive levels agree to tau_mant/2 digits.
OrthonormalBasis1D angular_basis(int i, int n, unsigned tau_mant = 100);

/// int x^m P_j(x) w(x) dx. Exact (big arithmetic) for polynomial families,
/// quadrature for trig.
double weighted_monomial_integral(const OrthonormalBasis1D& basis, int m,
                                  int j);

/// Closed-form int sin^a cos^b over [0, 2pi] (full_circle) or [0, pi].
double trig_power_integral(int a, int b, bool full_circle);

/// int P_j(x) sin^a(x) cos^b(x) w(x) dx. Exact Fourier expansion for the trig
/// family; Gauss-Legendre with node count >= (deg + a + b + i)/2 + 8 for
/// polynomial families.
double basis_times_trigpower_integral(const OrthonormalBasis1D& basis, int j,
                                      int a, int b);

nlohmann::json basis_to_json(const OrthonormalBasis1D& basis);
OrthonormalBasis1D basis_from_json(const nlohmann::json& j);

}  // namespace ttdensity
