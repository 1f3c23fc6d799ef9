#include "hermeq/decompose.hpp"

#include <cmath>
#include <string>

#include "hermeq/errors.hpp"
#include "hermeq/network.hpp"
#include "hermeq/random.hpp"

namespace hermeq {

double spectral_norm(const Eigen::MatrixXd& m, double tol, int max_iters, std::uint64_t seed) {
    if (m.size() == 0) return 0.0;
    RandomStream stream(seed);
    Eigen::VectorXd x = stream.normal_vector(m.cols());
    x.normalize();
    double last = 0.0;
    double residual = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd y = m * x;
        Eigen::VectorXd z = m.transpose() * y;
        const double nz = z.norm();
        if (nz == 0.0) return 0.0;
        x = z / nz;
        const double s = std::sqrt(nz);
        residual = std::abs(s - last);
        if (residual <= tol * std::max(1.0, s)) return s;
        last = s;
    }
    throw NumericalError("spectral_norm: power iteration did not converge (last residual " +
                         std::to_string(residual) + ")");
}

GradientDecomposition spike_bulk_decompose(const Eigen::MatrixXd& G, const Eigen::VectorXd& w,
                                           const Eigen::MatrixXd& X_tilde,
                                           const Eigen::VectorXd& y_tilde, const Activation& sigma,
                                           const QuadratureRule& rule) {
    const Eigen::Index k = G.rows();
    const Eigen::Index m = X_tilde.rows();
    if (w.size() != k || X_tilde.cols() != G.cols() || y_tilde.size() != m)
        throw ConfigError("spike_bulk_decompose: dimension mismatch");

    GradientDecomposition out;
    const double h1 = mean_derivative(sigma, rule);
    out.u = h1 * w;
    out.v = X_tilde.transpose() * y_tilde /
            (static_cast<double>(m) * std::sqrt(static_cast<double>(k)));
    out.delta = G - out.u * out.v.transpose();
    out.u_norm = out.u.norm();
    out.v_norm = out.v.norm();
    out.delta_norm = spectral_norm(out.delta);
    return out;
}

StructureBulkSplit structure_bulk_split(const Eigen::MatrixXd& F_hat,
                                        const Eigen::VectorXd& eta_u, const CovarianceSpec& cov,
                                        const Eigen::VectorXd& v, const Eigen::VectorXd& z) {
    const Eigen::Index n = v.size();
    if (F_hat.cols() != n || z.size() != n || eta_u.size() != F_hat.rows())
        throw ConfigError("structure_bulk_split: dimension mismatch");
    const int d = cov.rank();

    StructureBulkSplit out;
    out.gamma.resize(n, d + 1);
    out.gamma.col(0) = v;
    for (int i = 0; i < d; ++i) out.gamma.col(i + 1) = cov.directions.col(i);

    const Eigen::MatrixXd gtg = out.gamma.transpose() * out.gamma;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gtg);
    lu.setThreshold(1e-8);
    if (lu.rank() < d + 1)
        throw NumericalError("structure_bulk_split: Gamma_c is rank deficient (v nearly in the spike span)");

    out.kappa = lu.solve((out.gamma.transpose() * z).eval());
    out.z_perp = z - out.gamma * out.kappa;
    out.a_struct = F_hat * cov.sqrt_apply((out.gamma * out.kappa).eval());
    out.f_perp = F_hat - eta_u * v.transpose();
    return out;
}

}  // namespace hermeq
