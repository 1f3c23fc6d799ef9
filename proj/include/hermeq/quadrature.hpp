#pragma once

#include <Eigen/Dense>

namespace hermeq {

/// Nodes and weights for expectations against the standard normal:
/// E[f(z)] ~ sum_i weights[i] * f(nodes[i]),  sum weights = 1.
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    int order() const { return static_cast<int>(nodes.size()); }

    /// Gauss-Hermite transformed to the standard-normal weight
    /// (Golub-Welsch on the probabilists' Jacobi matrix). Exact for
    /// polynomials up to degree 2*order-1. Converges slowly for
    /// integrands with a kink, e.g. ReLU.
    static QuadratureRule gauss_hermite(int order);

    /// Composite Gauss-Legendre against the normal density on [-L, L]
    /// with a panel boundary at 0, 16 points per panel. At least
    /// min_nodes nodes. Machine precision for piecewise-smooth
    /// integrands whose only kink is at the origin.
    static QuadratureRule panel_legendre(int min_nodes, double half_width = 12.0);

    /// Default rule for Hermite coefficient extraction.
    static QuadratureRule default_rule(int min_nodes = 200) { return panel_legendre(min_nodes); }

    /// Checks sum of weights and the first two moments; throws on failure.
    void validate() const;
};

}  // namespace hermeq
