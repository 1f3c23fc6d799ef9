#pragma once

#include <Eigen/Dense>

#include "hermeq/decompose.hpp"
#include "hermeq/network.hpp"

namespace hermeq {

/// Conditional moments of the feature map sigma(F_hat x) given the
/// component and its structure coordinates kappa_c (Monte Carlo over
/// z_perp). phi is the covariance remainder Cov - Psi Psi^T, symmetrized
/// and clamped to PSD.
struct ConditionalMoments {
    Eigen::VectorXd nu;          // k
    Eigen::MatrixXd psi;         // k x n
    Eigen::MatrixXd phi;         // k x k, PSD
    Eigen::MatrixXd phi_sqrt;    // symmetric square root of phi
    Eigen::VectorXd second_moment_diag;  // E[feat_i^2 | c, kappa]
    long sample_count = 0;
    double psd_shift_rel = 0.0;  // relative Frobenius change from the PSD projection
    bool psd_shift_flagged = false;  // projection moved phi by more than 1%
};

/// n_mc Monte Carlo draws of z_perp = (I - P_Gamma) z. For Hermite
/// activations the residual noise enters analytically (variance on the
/// covariance diagonal), not by simulation.
ConditionalMoments conditional_moments_mc(const Eigen::MatrixXd& F_hat, const CovarianceSpec& cov,
                                          const Eigen::MatrixXd& gamma,
                                          const Eigen::VectorXd& kappa, const AnyActivation& act,
                                          long n_mc, RandomStream& stream);

/// One draw of the equivalent conditional feature map
/// nu + Psi z_perp + phi^{1/2} g with g ~ N(0, I_k).
Eigen::VectorXd conditional_feature_sample(const ConditionalMoments& moments,
                                           const Eigen::VectorXd& z_perp, RandomStream& stream);

}  // namespace hermeq
