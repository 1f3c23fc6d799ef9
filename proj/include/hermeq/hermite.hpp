#pragma once

#include <Eigen/Dense>

#include "hermeq/activation.hpp"
#include "hermeq/quadrature.hpp"
#include "hermeq/random.hpp"

namespace hermeq {

/// H_j(x), probabilists' Hermite polynomial via the three-term
/// recurrence H_{j+1} = x H_j - j H_{j-1}. Guarded at j <= 64.
double hermite_eval(int j, double x);

/// h_j = E[H_j(z) sigma(b z)] for j = 0..l-1, evaluated with the given rule.
/// Requires rule order >= 4*l.
Eigen::VectorXd hermite_coefficients(const Activation& sigma, double b, int l,
                                     const QuadratureRule& rule);

/// h*_l = sqrt(E[sigma(b z)^2] - sum_j h_j^2 / j!). Deficits within
/// -1e-10 are clamped to zero; anything more negative is an error.
double residual_coefficient(const Activation& sigma, double b,
                            const Eigen::VectorXd& coeffs, const QuadratureRule& rule);

/// Degree-(l-1) Hermite polynomial plus calibrated Gaussian noise:
/// sigma_hat(x) = sum_{j<l} (h_j/j!) H_j(x/b) + h* z.
struct HermiteActivation {
    int degree_l = 0;
    Eigen::VectorXd coeffs;  // h_0 .. h_{l-1}
    double residual = 0.0;   // h*_l
    double scale_b = 1.0;

    /// Polynomial part only, no noise.
    double poly_value(double x) const;

    /// E[sigma_hat(b z)^2] = sum h_j^2/j! + residual^2.
    double second_moment() const;
};

HermiteActivation build_equivalent_activation(const Activation& sigma, double b, int l,
                                              const QuadratureRule& rule);
HermiteActivation build_equivalent_activation(const Activation& sigma, double b, int l);

/// Entrywise sigma_hat over a matrix of preactivations; residual noise
/// is drawn fresh per entry from the stream.
Eigen::MatrixXd apply_equivalent(const HermiteActivation& act, const Eigen::MatrixXd& pre,
                                 RandomStream& noise);

/// Polynomial part applied entrywise (the noise-free component).
Eigen::MatrixXd apply_equivalent_poly(const HermiteActivation& act, const Eigen::MatrixXd& pre);

}  // namespace hermeq
