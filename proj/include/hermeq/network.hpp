#pragma once

#include <Eigen/Dense>

#include <optional>
#include <variant>

#include "hermeq/activation.hpp"
#include "hermeq/hermite.hpp"
#include "hermeq/mixture.hpp"
#include "hermeq/quadrature.hpp"
#include "hermeq/random.hpp"

namespace hermeq {

struct NetworkInit {
    Eigen::MatrixXd F;  // k x n, rows ~ N(0, I/Tr(Sigma))
    Eigen::VectorXd w;  // k, ~ N(0, I/k)
    double trace_sigma = 0.0;
};

NetworkInit init_network(int n, int k, double trace_sigma, RandomStream& stream);

struct GradientStepResult {
    Eigen::MatrixXd G;      // k x n
    Eigen::MatrixXd F_hat;  // F + eta G
};

/// One squared-loss gradient step on the first layer with w frozen:
///   G = (1/m) ((1/sqrt(k)) (w y~^T - (1/sqrt(k)) w w^T sigma(F X~^T))
///       .* sigma'(F X~^T)) X~
GradientStepResult gradient_step(const NetworkInit& init, const Eigen::MatrixXd& X_tilde,
                                 const Eigen::VectorXd& y_tilde, double eta,
                                 const Activation& sigma);

/// Ridge regression for the second layer:
///   w_hat = argmin (1/2m) sum_i (y_i - w^T phi_i / sqrt(k))^2 + (lambda/2) ||w||^2.
/// Solved in primal form for k <= m, dual form otherwise.
Eigen::VectorXd ridge_second_layer(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                   double lambda);

using AnyActivation = std::variant<Activation, HermiteActivation>;

struct TrainedNetwork {
    Eigen::MatrixXd F_hat;
    Eigen::VectorXd w_hat;
    double eta = 0.0;
    double lambda = 0.0;
    AnyActivation activation;
};

/// y_hat_i = (1/sqrt(k)) w_hat^T act(F_hat x_i). Hermite activations
/// need a noise stream; noise is fresh per call.
Eigen::VectorXd predict(const TrainedNetwork& net, const Eigen::MatrixXd& X,
                        RandomStream* noise = nullptr);

/// (1/2m) sum (y - y_hat)^2 + (lambda/2) ||w_hat||^2 from precomputed predictions.
double ridge_objective(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat, double lambda,
                       const Eigen::VectorXd& w_hat);

double training_error(const TrainedNetwork& net, const Dataset& train,
                      RandomStream* noise = nullptr);

/// Monte Carlo estimate of the expected prediction half-loss on a fresh
/// test set of n_test points.
double generalization_error(const TrainedNetwork& net, const MixtureSpec& spec,
                            const TargetSpec& target, int n_test, RandomStream& stream);

/// h~_1 = E[sigma'(z)], z ~ N(0,1).
double mean_derivative(const Activation& sigma, const QuadratureRule& rule);

}  // namespace hermeq
