#include "hermeq/hermite.hpp"

#include <cmath>
#include <string>

#include "hermeq/errors.hpp"

namespace hermeq {

double hermite_eval(int j, double x) {
    if (j < 0) throw ConfigError("hermite_eval: degree must be nonnegative");
    if (j > 64) throw ConfigError("hermite_eval: degree " + std::to_string(j) +
                                  " exceeds the recurrence guard (64)");
    if (j == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int i = 1; i < j; ++i) {
        const double next = x * cur - static_cast<double>(i) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

Eigen::VectorXd hermite_coefficients(const Activation& sigma, double b, int l,
                                     const QuadratureRule& rule) {
    if (b <= 0.0) throw ConfigError("hermite_coefficients: b must be positive");
    if (l < 1) throw ConfigError("hermite_coefficients: l must be >= 1");
    if (rule.order() < 4 * l)
        throw ConfigError("hermite_coefficients: rule order " + std::to_string(rule.order()) +
                          " < 4*l = " + std::to_string(4 * l));

    const int n = rule.order();
    Eigen::VectorXd sig_vals(n);
    for (int i = 0; i < n; ++i) {
        sig_vals[i] = sigma.value(b * rule.nodes[i]);
        if (!std::isfinite(sig_vals[i]))
            throw NumericalError("hermite_coefficients: non-finite activation value at node x=" +
                                 std::to_string(rule.nodes[i]));
    }

    Eigen::VectorXd h(l);
    Eigen::VectorXd h_prev = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd h_cur = rule.nodes;
    for (int j = 0; j < l; ++j) {
        const Eigen::VectorXd& hj = (j == 0) ? h_prev : h_cur;
        h[j] = rule.weights.dot(hj.cwiseProduct(sig_vals).eval());
        if (j >= 1 && j < l - 1) {
            const Eigen::VectorXd next =
                rule.nodes.cwiseProduct(h_cur) - static_cast<double>(j) * h_prev;
            h_prev = h_cur;
            h_cur = next;
        }
    }
    return h;
}

double residual_coefficient(const Activation& sigma, double b,
                            const Eigen::VectorXd& coeffs, const QuadratureRule& rule) {
    if (b <= 0.0) throw ConfigError("residual_coefficient: b must be positive");
    const int n = rule.order();
    double m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double s = sigma.value(b * rule.nodes[i]);
        if (!std::isfinite(s))
            throw NumericalError("residual_coefficient: non-finite activation value at node x=" +
                                 std::to_string(rule.nodes[i]));
        m2 += rule.weights[i] * s * s;
    }
    double tail = m2;
    double fact = 1.0;
    for (int j = 0; j < coeffs.size(); ++j) {
        if (j > 0) fact *= j;
        tail -= coeffs[j] * coeffs[j] / fact;
    }
    if (tail < -1e-10)
        throw NumericalError("residual_coefficient: expansion exceeds the second moment by " +
                             std::to_string(-tail) + " (inconsistent coefficients)");
    // |tail| at or below the clamp tolerance is quadrature noise, not a
    // real residual; snap it to zero so exact expansions stay exact
    if (tail <= 1e-10) return 0.0;
    return std::sqrt(tail);
}

double HermiteActivation::poly_value(double x) const {
    const double z = x / scale_b;
    double out = 0.0;
    double prev = 1.0, cur = z, fact = 1.0;
    for (int j = 0; j < degree_l; ++j) {
        if (j > 0) fact *= j;
        const double hj = (j == 0) ? 1.0 : cur;
        out += coeffs[j] / fact * hj;
        if (j >= 1) {
            const double next = z * cur - static_cast<double>(j) * prev;
            prev = cur;
            cur = next;
        }
    }
    return out;
}

double HermiteActivation::second_moment() const {
    double m2 = residual * residual;
    double fact = 1.0;
    for (int j = 0; j < degree_l; ++j) {
        if (j > 0) fact *= j;
        m2 += coeffs[j] * coeffs[j] / fact;
    }
    return m2;
}

HermiteActivation build_equivalent_activation(const Activation& sigma, double b, int l,
                                              const QuadratureRule& rule) {
    HermiteActivation act;
    act.degree_l = l;
    act.scale_b = b;
    act.coeffs = hermite_coefficients(sigma, b, l, rule);
    act.residual = residual_coefficient(sigma, b, act.coeffs, rule);
    return act;
}

HermiteActivation build_equivalent_activation(const Activation& sigma, double b, int l) {
    const auto rule = QuadratureRule::default_rule(std::max(200, 4 * l));
    return build_equivalent_activation(sigma, b, l, rule);
}

Eigen::MatrixXd apply_equivalent_poly(const HermiteActivation& act, const Eigen::MatrixXd& pre) {
    if (!pre.allFinite()) throw NumericalError("apply_equivalent: non-finite preactivations");
    Eigen::MatrixXd out(pre.rows(), pre.cols());
    for (Eigen::Index c = 0; c < pre.cols(); ++c)
        for (Eigen::Index r = 0; r < pre.rows(); ++r) out(r, c) = act.poly_value(pre(r, c));
    return out;
}

Eigen::MatrixXd apply_equivalent(const HermiteActivation& act, const Eigen::MatrixXd& pre,
                                 RandomStream& noise) {
    Eigen::MatrixXd out = apply_equivalent_poly(act, pre);
    if (act.residual > 0.0) {
        // row-major draw order, matching RandomStream::normal_matrix
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) += act.residual * noise.normal();
    }
    return out;
}

}  // namespace hermeq
