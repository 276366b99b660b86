#include "ttdensity/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace ttdensity {

namespace {

QuadRule compute_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = 3.14159265358979323846;
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const QuadRule& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, QuadRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

QuadRule gauss_legendre_on(int n, double a, double b) {
    const QuadRule& base = gauss_legendre(n);
    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = mid + half * base.nodes[i];
        rule.weights[i] = half * base.weights[i];
    }
    return rule;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n) {
    QuadRule rule = gauss_legendre_on(n, a, b);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(rule.nodes[i]);
    return sum;
}

namespace {

struct Cell2D {
    double ax, bx, ay, by;
};

Vector cell_integral(const std::function<Vector(double, double)>& f,
                     const Cell2D& c, const QuadRule& g, long& evals) {
    const int n = static_cast<int>(g.nodes.size());
    double mx = 0.5 * (c.ax + c.bx), hx = 0.5 * (c.bx - c.ax);
    double my = 0.5 * (c.ay + c.by), hy = 0.5 * (c.by - c.ay);
    Vector acc;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Vector v = f(mx + hx * g.nodes[i], my + hy * g.nodes[j]);
            ++evals;
            double w = g.weights[i] * g.weights[j] * hx * hy;
            if (acc.size() == 0) acc = Vector::Zero(v.size());
            acc += w * v;
        }
    }
    return acc;
}

void refine(const std::function<Vector(double, double)>& f, const Cell2D& c,
            const Vector& coarse, const QuadRule& g, double rel_tol,
            double abs_tol, int depth, int max_depth, const Vector& scale,
            AdaptiveQuadResult& out) {
    double mx = 0.5 * (c.ax + c.bx), my = 0.5 * (c.ay + c.by);
    Cell2D kids[4] = {{c.ax, mx, c.ay, my},
                      {mx, c.bx, c.ay, my},
                      {c.ax, mx, my, c.by},
                      {mx, c.bx, my, c.by}};
    Vector fine = Vector::Zero(coarse.size());
    Vector kid_vals[4];
    for (int k = 0; k < 4; ++k) {
        kid_vals[k] = cell_integral(f, kids[k], g, out.evals);
        fine += kid_vals[k];
    }
    out.max_depth_reached = std::max(out.max_depth_reached, depth);
    bool ok = true;
    for (Eigen::Index i = 0; i < fine.size(); ++i) {
        double err = std::abs(fine[i] - coarse[i]);
        if (err > abs_tol + rel_tol * scale[i]) ok = false;
    }
    if (ok || depth >= max_depth) {
        if (!ok) out.converged = false;
        out.value += fine;
        return;
    }
    for (int k = 0; k < 4; ++k)
        refine(f, kids[k], kid_vals[k], g, rel_tol, abs_tol, depth + 1,
               max_depth, scale, out);
}

}  // namespace

AdaptiveQuadResult adaptive_quad_2d(
    const std::function<Vector(double, double)>& f, double ax, double bx,
    double ay, double by, double rel_tol, double abs_tol, int max_depth) {
    const QuadRule& g = gauss_legendre(8);
    AdaptiveQuadResult out;
    Cell2D root{ax, bx, ay, by};
    Vector coarse = cell_integral(f, root, g, out.evals);
    out.value = Vector::Zero(coarse.size());
    // error scale: magnitude of the first (typically mass) component, applied
    // to every component so relative tolerances stay meaningful near zeros
    Vector scale = Vector::Constant(coarse.size(),
                                    std::max(coarse.cwiseAbs().maxCoeff(), 1e-300));
    refine(f, root, coarse, g, rel_tol, abs_tol, 0, max_depth, scale, out);
    return out;
}

}  // namespace ttdensity
