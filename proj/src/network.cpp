#include "hermeq/network.hpp"

#include <cmath>
#include <string>

#include "hermeq/errors.hpp"

namespace hermeq {

NetworkInit init_network(int n, int k, double trace_sigma, RandomStream& stream) {
    if (n < 1 || k < 1) throw ConfigError("init_network: n and k must be >= 1");
    if (!(trace_sigma > 0.0)) throw ConfigError("init_network: trace_sigma must be positive");
    NetworkInit init;
    init.trace_sigma = trace_sigma;
    init.F = stream.normal_matrix(k, n) / std::sqrt(trace_sigma);
    init.w = stream.normal_vector(k) / std::sqrt(static_cast<double>(k));
    return init;
}

GradientStepResult gradient_step(const NetworkInit& init, const Eigen::MatrixXd& X_tilde,
                                 const Eigen::VectorXd& y_tilde, double eta,
                                 const Activation& sigma) {
    const Eigen::Index k = init.F.rows();
    const Eigen::Index n = init.F.cols();
    const Eigen::Index m = X_tilde.rows();
    if (X_tilde.cols() != n || y_tilde.size() != m)
        throw ConfigError("gradient_step: dimension mismatch");

    const double sqrt_k = std::sqrt(static_cast<double>(k));

    Eigen::MatrixXd Z = init.F * X_tilde.transpose();  // k x m preactivations
    if (!Z.allFinite()) throw NumericalError("gradient_step: non-finite preactivations");

    const Eigen::RowVectorXd ws = init.w.transpose() * sigma.value(Z);  // 1 x m
    Eigen::MatrixXd R =
        (1.0 / sqrt_k) * (init.w * y_tilde.transpose() - (1.0 / sqrt_k) * init.w * ws);
    R.array() *= sigma.deriv(Z).array();
    if (!R.allFinite()) throw NumericalError("gradient_step: non-finite residual matrix");

    GradientStepResult out;
    out.G = (R * X_tilde) / static_cast<double>(m);
    if (!out.G.allFinite()) throw NumericalError("gradient_step: non-finite gradient");
    out.F_hat = init.F + eta * out.G;
    return out;
}

Eigen::VectorXd ridge_second_layer(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                   double lambda) {
    const Eigen::Index m = features.rows();
    const Eigen::Index k = features.cols();
    if (y.size() != m) throw ConfigError("ridge_second_layer: label count mismatch");
    if (lambda < 0.0) throw ConfigError("ridge_second_layer: lambda must be nonnegative");

    const double mk = static_cast<double>(m) * static_cast<double>(k);
    const double m_sqrt_k = static_cast<double>(m) * std::sqrt(static_cast<double>(k));

    if (lambda == 0.0) {
        Eigen::MatrixXd gram = features.transpose() * features / mk;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
        if (qr.rank() < k)
            throw NumericalError(
                "ridge_second_layer: singular normal equations at lambda = 0; use a positive lambda");
        return qr.solve((features.transpose() * y / m_sqrt_k).eval());
    }

    if (k <= m) {
        Eigen::MatrixXd gram = features.transpose() * features / mk;
        gram.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success)
            throw NumericalError("ridge_second_layer: factorization failed (primal)");
        return llt.solve((features.transpose() * y / m_sqrt_k).eval());
    }

    // dual: w_hat = Phi^T (Phi Phi^T / (mk) + lambda I)^{-1} y / (m sqrt(k))
    Eigen::MatrixXd kern = features * features.transpose() / mk;
    kern.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(kern);
    if (llt.info() != Eigen::Success)
        throw NumericalError("ridge_second_layer: factorization failed (dual)");
    return features.transpose() * llt.solve(y) / m_sqrt_k;
}

Eigen::VectorXd predict(const TrainedNetwork& net, const Eigen::MatrixXd& X,
                        RandomStream* noise) {
    const Eigen::Index k = net.F_hat.rows();
    const double sqrt_k = std::sqrt(static_cast<double>(k));
    Eigen::MatrixXd pre = net.F_hat * X.transpose();  // k x batch
    if (std::holds_alternative<Activation>(net.activation)) {
        const auto& act = std::get<Activation>(net.activation);
        return act.value(pre).transpose() * net.w_hat / sqrt_k;
    }
    const auto& act = std::get<HermiteActivation>(net.activation);
    if (act.residual > 0.0 && noise == nullptr)
        throw ConfigError("predict: Hermite activation with residual noise needs a stream");
    Eigen::MatrixXd feats =
        (act.residual > 0.0) ? apply_equivalent(act, pre, *noise) : apply_equivalent_poly(act, pre);
    return feats.transpose() * net.w_hat / sqrt_k;
}

double ridge_objective(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat, double lambda,
                       const Eigen::VectorXd& w_hat) {
    const double m = static_cast<double>(y.size());
    return (y - y_hat).squaredNorm() / (2.0 * m) + 0.5 * lambda * w_hat.squaredNorm();
}

double training_error(const TrainedNetwork& net, const Dataset& train, RandomStream* noise) {
    const Eigen::VectorXd y_hat = predict(net, train.X, noise);
    return ridge_objective(train.y, y_hat, net.lambda, net.w_hat);
}

double generalization_error(const TrainedNetwork& net, const MixtureSpec& spec,
                            const TargetSpec& target, int n_test, RandomStream& stream) {
    if (n_test < 1) throw ConfigError("generalization_error: n_test must be >= 1");
    Dataset test = sample_batch(spec, n_test, stream);
    test.y = label(target, test.X, test.comp);
    RandomStream noise = stream.derive(0x6e6f697365ull);
    const Eigen::VectorXd y_hat = predict(net, test.X, &noise);
    return (test.y - y_hat).squaredNorm() / (2.0 * static_cast<double>(n_test));
}

double mean_derivative(const Activation& sigma, const QuadratureRule& rule) {
    double acc = 0.0;
    for (int i = 0; i < rule.order(); ++i)
        acc += rule.weights[i] * sigma.deriv(rule.nodes[i]);
    return acc;
}

}  // namespace hermeq
