#include "hermeq/moments.hpp"

#include <cmath>

#include "hermeq/errors.hpp"

namespace hermeq {

ConditionalMoments conditional_moments_mc(const Eigen::MatrixXd& F_hat, const CovarianceSpec& cov,
                                          const Eigen::MatrixXd& gamma,
                                          const Eigen::VectorXd& kappa, const AnyActivation& act,
                                          long n_mc, RandomStream& stream) {
    const Eigen::Index k = F_hat.rows();
    const Eigen::Index n = F_hat.cols();
    if (k > 512) throw ConfigError("conditional_moments_mc: k capped at 512 (dense k x k covariance)");
    if (n_mc < 10000) throw ConfigError("conditional_moments_mc: n_mc must be >= 1e4");
    if (gamma.rows() != n || kappa.size() != gamma.cols())
        throw ConfigError("conditional_moments_mc: dimension mismatch");

    // projector data for z_perp = z - Gamma (Gamma^T Gamma)^{-1} Gamma^T z
    const Eigen::MatrixXd gtg = gamma.transpose() * gamma;
    const Eigen::LDLT<Eigen::MatrixXd> gtg_ldlt(gtg);

    // features are sigma(M z) with M = F_hat Sigma_c^{1/2} (low-rank update of F_hat)
    Eigen::MatrixXd M = F_hat;
    for (int i = 0; i < cov.rank(); ++i) {
        const double c = std::sqrt(1.0 + cov.thetas[i]) - 1.0;
        M += c * (F_hat * cov.directions.col(i)) * cov.directions.col(i).transpose();
    }
    const Eigen::VectorXd a_struct = M * (gamma * kappa);

    const Activation* plain = std::get_if<Activation>(&act);
    const HermiteActivation* herm = std::get_if<HermiteActivation>(&act);

    Eigen::VectorXd sum_s = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd sum_sz = Eigen::MatrixXd::Zero(k, n);
    Eigen::MatrixXd sum_ss = Eigen::MatrixXd::Zero(k, k);

    const long batch = 512;
    long done = 0;
    while (done < n_mc) {
        const long b = std::min(batch, n_mc - done);
        Eigen::MatrixXd z = stream.normal_matrix(n, b);
        // project columns off span(Gamma)
        z -= gamma * gtg_ldlt.solve((gamma.transpose() * z).eval());
        Eigen::MatrixXd pre = (M * z).colwise() + a_struct;  // k x b
        Eigen::MatrixXd s = plain ? plain->value(pre) : apply_equivalent_poly(*herm, pre);
        sum_s += s.rowwise().sum();
        sum_sz.noalias() += s * z.transpose();
        sum_ss.noalias() += s * s.transpose();
        done += b;
    }

    const double inv = 1.0 / static_cast<double>(n_mc);
    ConditionalMoments out;
    out.sample_count = n_mc;
    out.nu = sum_s * inv;
    out.psi = sum_sz * inv;
    out.second_moment_diag = sum_ss.diagonal() * inv;

    Eigen::MatrixXd covariance = sum_ss * inv - out.nu * out.nu.transpose();
    if (herm && herm->residual > 0.0) {
        const double var = herm->residual * herm->residual;
        covariance.diagonal().array() += var;
        out.second_moment_diag.array() += var;
    }

    Eigen::MatrixXd phi = covariance - out.psi * out.psi.transpose();
    phi = 0.5 * (phi + phi.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi);
    if (es.info() != Eigen::Success)
        throw NumericalError("conditional_moments_mc: eigendecomposition of phi failed");
    const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
    out.phi = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    out.phi_sqrt =
        es.eigenvectors() * clamped.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    const double before = phi.norm();
    out.psd_shift_rel = before > 0.0 ? (out.phi - phi).norm() / before : 0.0;
    out.psd_shift_flagged = out.psd_shift_rel > 0.01;
    return out;
}

Eigen::VectorXd conditional_feature_sample(const ConditionalMoments& moments,
                                           const Eigen::VectorXd& z_perp, RandomStream& stream) {
    if (z_perp.size() != moments.psi.cols())
        throw ConfigError("conditional_feature_sample: z_perp dimension mismatch");
    const Eigen::VectorXd g = stream.normal_vector(moments.phi_sqrt.rows());
    return moments.nu + moments.psi * z_perp + moments.phi_sqrt * g;
}

}  // namespace hermeq
