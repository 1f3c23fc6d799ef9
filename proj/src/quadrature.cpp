#include "hermeq/quadrature.hpp"

#include <cmath>
#include <string>

#include "hermeq/errors.hpp"

namespace hermeq {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;

// Nodes and weights of the q-point Gauss-Legendre rule on [-1, 1] by
// Newton iteration on the Legendre recurrence.
void gauss_legendre_unit(int q, Eigen::VectorXd& x, Eigen::VectorXd& w) {
    x.resize(q);
    w.resize(q);
    const int half = (q + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Chebyshev initial guess
        double z = std::cos(M_PI * (i + 0.75) / (q + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= q; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = q * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[q - 1 - i] = z;
        const double wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[q - 1 - i] = wi;
    }
}

}  // namespace

QuadratureRule QuadratureRule::gauss_hermite(int order) {
    if (order < 1) throw ConfigError("quadrature order must be >= 1");
    if (order > 2048) throw ConfigError("gauss_hermite order capped at 2048");
    // Jacobi matrix for probabilists' Hermite: zero diagonal, off-diagonal sqrt(i)
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(order - 1 > 0 ? order - 1 : 0);
    for (int i = 1; i < order; ++i) sub[i - 1] = std::sqrt(static_cast<double>(i));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalError("gauss_hermite: tridiagonal eigensolver failed");

    QuadratureRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights.resize(order);
    // Christoffel weights: w_i = 1 / sum_j p_j(x_i)^2 over the
    // orthonormal polynomials p_j, j < order
    for (int i = 0; i < order; ++i) {
        const double x = rule.nodes[i];
        double pm = 0.0, p = 1.0;  // p_0 = 1 (weight already normalized to N(0,1))
        double s = p * p;
        for (int j = 0; j < order - 1; ++j) {
            const double pn = (x * p - std::sqrt(static_cast<double>(j)) * pm) /
                              std::sqrt(static_cast<double>(j + 1));
            pm = p;
            p = pn;
            s += p * p;
        }
        rule.weights[i] = 1.0 / s;
    }
    return rule;
}

QuadratureRule QuadratureRule::panel_legendre(int min_nodes, double half_width) {
    if (min_nodes < 1) throw ConfigError("quadrature order must be >= 1");
    if (half_width <= 0.0) throw ConfigError("panel half_width must be positive");
    const int q = 16;
    const int half_panels = std::max(1, (min_nodes + 2 * q - 1) / (2 * q));
    Eigen::VectorXd xg, wg;
    gauss_legendre_unit(q, xg, wg);

    const int total = 2 * half_panels * q;
    QuadratureRule rule;
    rule.nodes.resize(total);
    rule.weights.resize(total);
    const double dx = half_width / half_panels;
    int idx = 0;
    for (int p = -half_panels; p < half_panels; ++p) {
        const double a = p * dx;
        const double mid = a + 0.5 * dx;
        for (int j = 0; j < q; ++j) {
            const double x = mid + 0.5 * dx * xg[j];
            rule.nodes[idx] = x;
            rule.weights[idx] = wg[j] * 0.5 * dx * kInvSqrt2Pi * std::exp(-0.5 * x * x);
            ++idx;
        }
    }
    return rule;
}

void QuadratureRule::validate() const {
    const double w_sum = weights.sum();
    const double m1 = weights.dot(nodes);
    const double m2 = weights.dot(nodes.cwiseProduct(nodes).eval());
    if (std::abs(w_sum - 1.0) > 1e-12)
        throw NumericalError("quadrature weights sum to " + std::to_string(w_sum) + ", expected 1");
    if (std::abs(m1) > 1e-10 || std::abs(m2 - 1.0) > 1e-10)
        throw NumericalError("quadrature rule fails the first two normal moments");
}

}  // namespace hermeq
