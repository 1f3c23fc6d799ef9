#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "hermeq/errors.hpp"

namespace hermeq {

/// Pointwise activation with a value and a first derivative everywhere.
/// ReLU's derivative at 0 is taken as 0 (subgradient convention).
class Activation {
public:
    enum class Kind { ReLU, Tanh, Sigmoid, Identity, CustomPolynomial };

    Activation() : kind_(Kind::Identity) {}
    explicit Activation(Kind kind) : kind_(kind) {
        if (kind == Kind::CustomPolynomial)
            throw ConfigError("CustomPolynomial activation requires coefficients");
    }
    explicit Activation(std::vector<double> poly_coeffs)
        : kind_(Kind::CustomPolynomial), poly_(std::move(poly_coeffs)) {
        if (poly_.empty()) throw ConfigError("CustomPolynomial needs at least one coefficient");
        for (double c : poly_)
            if (!std::isfinite(c)) throw ConfigError("CustomPolynomial coefficient is not finite");
    }

    static Activation parse(const std::string& name) {
        if (name == "relu") return Activation(Kind::ReLU);
        if (name == "tanh") return Activation(Kind::Tanh);
        if (name == "sigmoid") return Activation(Kind::Sigmoid);
        if (name == "identity") return Activation(Kind::Identity);
        throw ConfigError("unknown activation '" + name + "' (expected relu|tanh|sigmoid|identity)");
    }

    Kind kind() const { return kind_; }
    const std::vector<double>& poly_coeffs() const { return poly_; }

    std::string name() const {
        switch (kind_) {
            case Kind::ReLU: return "relu";
            case Kind::Tanh: return "tanh";
            case Kind::Sigmoid: return "sigmoid";
            case Kind::Identity: return "identity";
            case Kind::CustomPolynomial: return "polynomial";
        }
        return "?";
    }

    double value(double x) const {
        switch (kind_) {
            case Kind::ReLU: return x > 0.0 ? x : 0.0;
            case Kind::Tanh: return std::tanh(x);
            case Kind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
            case Kind::Identity: return x;
            case Kind::CustomPolynomial: {
                double acc = 0.0;
                for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) acc = acc * x + *it;
                return acc;
            }
        }
        return 0.0;
    }

    double deriv(double x) const {
        switch (kind_) {
            case Kind::ReLU: return x > 0.0 ? 1.0 : 0.0;
            case Kind::Tanh: {
                const double t = std::tanh(x);
                return 1.0 - t * t;
            }
            case Kind::Sigmoid: {
                const double s = 1.0 / (1.0 + std::exp(-x));
                return s * (1.0 - s);
            }
            case Kind::Identity: return 1.0;
            case Kind::CustomPolynomial: {
                double acc = 0.0;
                for (std::size_t i = poly_.size(); i-- > 1;)
                    acc = acc * x + static_cast<double>(i) * poly_[i];
                return acc;
            }
        }
        return 0.0;
    }

    Eigen::MatrixXd value(const Eigen::MatrixXd& x) const {
        return x.unaryExpr([this](double v) { return value(v); });
    }
    Eigen::MatrixXd deriv(const Eigen::MatrixXd& x) const {
        return x.unaryExpr([this](double v) { return deriv(v); });
    }
    Eigen::VectorXd value(const Eigen::VectorXd& x) const {
        return x.unaryExpr([this](double v) { return value(v); });
    }

private:
    Kind kind_;
    std::vector<double> poly_;
};

}  // namespace hermeq
