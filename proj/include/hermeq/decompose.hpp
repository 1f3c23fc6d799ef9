#pragma once

#include <Eigen/Dense>

#include "hermeq/activation.hpp"
#include "hermeq/mixture.hpp"
#include "hermeq/quadrature.hpp"

namespace hermeq {

/// Spectral norm by power iteration on M^T M with a seeded start vector.
/// Throws with the last residual if it fails to settle.
double spectral_norm(const Eigen::MatrixXd& m, double tol = 1e-6, int max_iters = 500,
                     std::uint64_t seed = 0x5eed);

/// G = u v^T + Delta with u = h~_1 w and v = X~^T y~ / (m sqrt(k)).
struct GradientDecomposition {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    Eigen::MatrixXd delta;
    double u_norm = 0.0;
    double v_norm = 0.0;
    double delta_norm = 0.0;  // spectral
};

GradientDecomposition spike_bulk_decompose(const Eigen::MatrixXd& G, const Eigen::VectorXd& w,
                                           const Eigen::MatrixXd& X_tilde,
                                           const Eigen::VectorXd& y_tilde, const Activation& sigma,
                                           const QuadratureRule& rule);

/// z = Gamma kappa + z_perp with Gamma = [v, gamma_1, ..., gamma_d];
/// a_struct = F_hat Sigma^{1/2} Gamma kappa, and the bulk operator
/// F_perp = F_hat - eta u v^T (= F + eta Delta).
struct StructureBulkSplit {
    Eigen::MatrixXd gamma;    // n x (d+1)
    Eigen::VectorXd kappa;    // d+1
    Eigen::VectorXd z_perp;   // n
    Eigen::VectorXd a_struct; // k
    Eigen::MatrixXd f_perp;   // k x n bulk operator
};

StructureBulkSplit structure_bulk_split(const Eigen::MatrixXd& F_hat,
                                        const Eigen::VectorXd& eta_u, const CovarianceSpec& cov,
                                        const Eigen::VectorXd& v, const Eigen::VectorXd& z);

}  // namespace hermeq
