#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "hermeq/errors.hpp"
#include "hermeq/network.hpp"
#include "hermeq/quadrature.hpp"
#include "hermeq/random.hpp"
#include "hermeq/stats.hpp"

#include "gradient_oracle.hpp"

using namespace hermeq;

namespace {

NetworkInit make_init(int n, int k, std::uint64_t seed, double trace_sigma = 0.0) {
    RandomStream stream(seed);
    return init_network(n, k, trace_sigma > 0 ? trace_sigma : static_cast<double>(n), stream);
}

}  // namespace

TEST_CASE("init_network: row norms and determinism") {
    RandomStream s1(1), s2(1);
    const int n = 300, k = 400;  // k*n >= 1e5 for the aggregate checks
    const double trace = 2.0 * n;
    const auto a = init_network(n, k, trace, s1);
    const auto b = init_network(n, k, trace, s2);
    CHECK((a.F - b.F).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.w - b.w).cwiseAbs().maxCoeff() == 0.0);

    const double mean_row_sq = a.F.squaredNorm() / k;
    CHECK(std::abs(mean_row_sq - n / trace) <= 0.05 * (n / trace));
    const double w_var = a.w.squaredNorm() / k;  // target 1/k
    CHECK(std::abs(w_var - 1.0 / k) <= 0.2 / k);
}

TEST_CASE("init_network: E[(f_i^T x)^2] is 1 under matched trace") {
    RandomStream stream(2);
    const int n = 200, k = 500;
    // identity covariance: Tr(Sigma) = n
    const auto init = init_network(n, k, static_cast<double>(n), stream);
    const Eigen::MatrixXd x = stream.normal_matrix(400, n);
    const Eigen::MatrixXd pre = init.F * x.transpose();
    const double second = pre.squaredNorm() / static_cast<double>(pre.size());
    CHECK(std::abs(second - 1.0) <= 0.05);
}

TEST_CASE("gradient_step: zero second layer gives a zero gradient") {
    auto init = make_init(6, 5, 3);
    init.w.setZero();
    RandomStream stream(4);
    const Eigen::MatrixXd X = stream.normal_matrix(7, 6);
    const Eigen::VectorXd y = stream.normal_vector(7);
    const auto out = gradient_step(init, X, y, 2.0, Activation::parse("relu"));
    CHECK(out.G.cwiseAbs().maxCoeff() == 0.0);
    CHECK((out.F_hat - init.F).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient_step: identity activation yields rank <= 2") {
    auto init = make_init(12, 10, 5);
    RandomStream stream(6);
    const Eigen::MatrixXd X = stream.normal_matrix(15, 12);
    const Eigen::VectorXd y = stream.normal_vector(15);
    const auto out = gradient_step(init, X, y, 1.0, Activation::parse("identity"));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.G);
    const auto& sv = svd.singularValues();
    CHECK(sv[2] <= 1e-12 * sv[0]);
}

TEST_CASE("gradient_step: vectorized form equals the scalar oracle (20 small instances)") {
    RandomStream stream(7);
    const Activation acts[3] = {Activation::parse("relu"), Activation::parse("tanh"),
                                Activation::parse("sigmoid")};
    for (int rep = 0; rep < 20; ++rep) {
        const int k = 2 + static_cast<int>(stream.next_u64() % 7);
        const int m = 2 + static_cast<int>(stream.next_u64() % 7);
        const int n = 2 + static_cast<int>(stream.next_u64() % 7);
        RandomStream init_stream = stream.derive(rep);
        const auto init = init_network(n, k, static_cast<double>(n), init_stream);
        const Eigen::MatrixXd X = stream.normal_matrix(m, n);
        const Eigen::VectorXd y = stream.normal_vector(m);
        const Activation& sigma = acts[rep % 3];
        const auto fast = gradient_step(init, X, y, 1.0, sigma);
        const auto slow = gradient_oracle(init.F, init.w, X, y, sigma);
        CHECK((fast.G - slow).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("gradient_step: k=m=n=2 hand-checkable case") {
    NetworkInit init;
    init.trace_sigma = 2.0;
    init.F.resize(2, 2);
    init.F << 0.3, -0.2, 0.1, 0.4;
    init.w.resize(2);
    init.w << 0.5, -1.0;
    Eigen::MatrixXd X(2, 2);
    X << 1.0, 2.0, -1.0, 0.5;
    Eigen::VectorXd y(2);
    y << 1.0, -2.0;
    const auto out = gradient_step(init, X, y, 1.0, Activation::parse("tanh"));
    const auto oracle = gradient_oracle(init.F, init.w, X, y, Activation::parse("tanh"));
    CHECK((out.G - oracle).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ridge_second_layer: heavy regularization drives w to zero") {
    RandomStream stream(8);
    const Eigen::MatrixXd phi = stream.normal_matrix(30, 20);
    const Eigen::VectorXd y = stream.normal_vector(30);
    const Eigen::VectorXd w = ridge_second_layer(phi, y, 1e9);
    CHECK(w.norm() <= 1e-6);
}

TEST_CASE("ridge_second_layer: scalar case solves exactly") {
    Eigen::MatrixXd phi(1, 1);
    phi << 1.0;
    Eigen::VectorXd y(1);
    y << 2.0;
    const Eigen::VectorXd w = ridge_second_layer(phi, y, 0.0);
    CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-12));  // prediction w*phi/sqrt(1) = 2
}

TEST_CASE("ridge_second_layer: primal and dual closed forms agree") {
    RandomStream stream(9);
    // the named spec instance
    {
        const Eigen::MatrixXd phi = stream.normal_matrix(60, 40);
        const Eigen::VectorXd y = stream.normal_vector(60);
        const Eigen::VectorXd primal = ridge_second_layer(phi, y, 1e-3);
        // force dual route via transpose-free recomputation: k > m path needs k > m
        const Eigen::MatrixXd phi_t = stream.normal_matrix(40, 60);
        const Eigen::VectorXd y_t = stream.normal_vector(40);
        const Eigen::VectorXd dual = ridge_second_layer(phi_t, y_t, 1e-3);
        CHECK(primal.allFinite());
        CHECK(dual.allFinite());
    }
    // dual-vs-primal equivalence on 50 random rectangular instances:
    // compute both routes explicitly and compare
    for (int rep = 0; rep < 50; ++rep) {
        const int m = 5 + static_cast<int>(stream.next_u64() % 60);
        const int k = 5 + static_cast<int>(stream.next_u64() % 60);
        const double lambda = std::pow(10.0, -1.0 - 3.0 * stream.uniform());
        const Eigen::MatrixXd phi = stream.normal_matrix(m, k);
        const Eigen::VectorXd y = stream.normal_vector(m);
        const double mk = static_cast<double>(m) * k;
        const double m_sqrt_k = m * std::sqrt(static_cast<double>(k));
        Eigen::MatrixXd gram = phi.transpose() * phi / mk;
        gram.diagonal().array() += lambda;
        const Eigen::VectorXd primal = gram.llt().solve((phi.transpose() * y / m_sqrt_k).eval());
        Eigen::MatrixXd kern = phi * phi.transpose() / mk;
        kern.diagonal().array() += lambda;
        const Eigen::VectorXd dual = phi.transpose() * kern.llt().solve(y) / m_sqrt_k;
        const double rel = (primal - dual).norm() / std::max(1e-300, primal.norm());
        CHECK(rel <= 1e-8);
        // the library picks one of the two; it must match both
        const Eigen::VectorXd lib = ridge_second_layer(phi, y, lambda);
        CHECK((lib - primal).norm() / std::max(1e-300, primal.norm()) <= 1e-8);
    }
}

TEST_CASE("ridge_second_layer: stationarity of the objective gradient") {
    RandomStream stream(10);
    for (int rep = 0; rep < 10; ++rep) {
        const int m = 20 + static_cast<int>(stream.next_u64() % 100);
        const int k = 20 + static_cast<int>(stream.next_u64() % 100);
        const double lambda = std::pow(10.0, -4.0 + 2.0 * stream.uniform());
        const Eigen::MatrixXd phi = stream.normal_matrix(m, k);
        const Eigen::VectorXd y = stream.normal_vector(m);
        const Eigen::VectorXd w = ridge_second_layer(phi, y, lambda);
        const double sqrt_k = std::sqrt(static_cast<double>(k));
        // grad = -(1/(m sqrt_k)) Phi^T (y - Phi w / sqrt_k) + lambda w
        const Eigen::VectorXd resid = y - phi * w / sqrt_k;
        const Eigen::VectorXd grad =
            -phi.transpose() * resid / (static_cast<double>(m) * sqrt_k) + lambda * w;
        CHECK(grad.norm() <= 1e-8 * (1.0 + w.norm()));
    }
}

TEST_CASE("ridge_second_layer: ||w(lambda)|| is nonincreasing on a log grid") {
    RandomStream stream(11);
    const Eigen::MatrixXd phi = stream.normal_matrix(80, 50);
    const Eigen::VectorXd y = stream.normal_vector(80);
    double last = 1e300;
    for (double e = -6.0; e <= 2.01; e += 1.0) {
        const Eigen::VectorXd w = ridge_second_layer(phi, y, std::pow(10.0, e));
        CHECK(w.norm() <= last * (1.0 + 1e-12));
        last = w.norm();
    }
}

TEST_CASE("ridge_second_layer: singular system at lambda = 0 is refused") {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(3, 4);  // rank-deficient gram
    phi(0, 0) = 1.0;
    Eigen::VectorXd y(3);
    y << 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(ridge_second_layer(phi, y, 0.0), NumericalError);
}

TEST_CASE("predict: zero weights, identity row selection, Hermite determinism") {
    TrainedNetwork net;
    net.F_hat = Eigen::MatrixXd::Zero(1, 3);
    net.F_hat(0, 0) = 1.0;
    net.w_hat = Eigen::VectorXd::Ones(1);
    net.lambda = 0.0;
    net.activation = Activation::parse("identity");
    RandomStream stream(12);
    const Eigen::MatrixXd X = stream.normal_matrix(5, 3);
    const Eigen::VectorXd pred = predict(net, X);
    CHECK((pred - X.col(0)).cwiseAbs().maxCoeff() <= 1e-14);  // k=1: w phi / sqrt(1)

    net.w_hat.setZero();
    CHECK(predict(net, X).cwiseAbs().maxCoeff() == 0.0);

    // Hermite with zero residual: identical output on any two streams
    HermiteActivation herm = build_equivalent_activation(Activation::parse("relu"), 1.0, 3);
    herm.residual = 0.0;
    net.activation = herm;
    net.w_hat = Eigen::VectorXd::Ones(1);
    RandomStream n1(1), n2(2);
    const Eigen::VectorXd p1 = predict(net, X, &n1);
    const Eigen::VectorXd p2 = predict(net, X, &n2);
    CHECK((p1 - p2).cwiseAbs().maxCoeff() == 0.0);

    // residual noise without a stream is refused
    herm.residual = 0.5;
    net.activation = herm;
    CHECK_THROWS_AS(predict(net, X), ConfigError);
}

TEST_CASE("training_error: zero predictor and optimality bound") {
    RandomStream stream(13);
    const int m = 60, k = 30, n = 10;
    RandomStream init_stream = stream.derive(1);
    const auto init = init_network(n, k, static_cast<double>(n), init_stream);
    Dataset ds;
    ds.X = stream.normal_matrix(m, n);
    ds.y = stream.normal_vector(m);

    TrainedNetwork net;
    net.F_hat = init.F;
    net.w_hat = Eigen::VectorXd::Zero(k);
    net.lambda = 1e-3;
    net.activation = Activation::parse("relu");
    const double t_zero = training_error(net, ds);
    CHECK(t_zero == doctest::Approx(ds.y.squaredNorm() / (2.0 * m)).epsilon(1e-12));

    // the ridge optimum never exceeds the zero-predictor objective
    const Eigen::MatrixXd feats =
        Activation::parse("relu").value((init.F * ds.X.transpose()).eval()).transpose();
    net.w_hat = ridge_second_layer(feats, ds.y, net.lambda);
    const double t_opt = training_error(net, ds);
    CHECK(t_opt <= t_zero + 1e-12);
}

TEST_CASE("generalization_error: standard error scales like 1/sqrt(n_test)") {
    // repeated-estimation oracle at small sizes: SE(G_hat) ratios track
    // sqrt(n_test ratios) within 30%
    RandomStream stream(14);
    const int n = 8, k = 8;
    RandomStream mix_stream = stream.derive(1);
    const auto spec = two_component_mixture(n, 1, 2.0, 0.5, 0.0, mix_stream);
    TargetSpec target;
    target.kind = LabelKind::SingleIndex;
    target.sigma_star = Activation::parse("relu");
    RandomStream xi_stream = stream.derive(2);
    target.xi = build_xi(spec, XiMode::RandomDirection, 1.0, xi_stream);
    RandomStream init_stream = stream.derive(3);
    const auto init = init_network(n, k, mixture_covariance(spec).trace, init_stream);
    TrainedNetwork net;
    net.F_hat = init.F;
    net.w_hat = init.w;
    net.lambda = 0.0;
    net.activation = Activation::parse("relu");

    const int reps = 200;
    std::vector<double> se;
    for (int n_test : {1000, 10000, 100000}) {
        std::vector<double> estimates;
        estimates.reserve(reps);
        for (int r = 0; r < reps; ++r) {
            RandomStream test_stream = stream.derive(1000 * n_test + r);
            estimates.push_back(generalization_error(net, spec, target, n_test, test_stream));
        }
        const auto ms = mean_stderr(estimates);
        se.push_back(ms.stderr_ * std::sqrt(static_cast<double>(reps)));  // sample std
    }
    const double r1 = se[0] / se[1];
    const double r2 = se[1] / se[2];
    const double expected = std::sqrt(10.0);
    CHECK(std::abs(r1 - expected) <= 0.3 * expected);
    CHECK(std::abs(r2 - expected) <= 0.3 * expected);
}

TEST_CASE("mean_derivative: closed forms and MC cross-check") {
    const auto rule = QuadratureRule::default_rule(200);
    CHECK(mean_derivative(Activation::parse("relu"), rule) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(mean_derivative(Activation::parse("identity"), rule) ==
          doctest::Approx(1.0).epsilon(1e-12));
    const double tanh_md = mean_derivative(Activation::parse("tanh"), rule);
    CHECK(tanh_md > 0.0);
    CHECK(tanh_md < 1.0);
    // Monte Carlo oracle of E[1 - tanh^2(z)]
    RandomStream stream(15);
    double acc = 0.0;
    const int mc = 4000000;
    for (int i = 0; i < mc; ++i) {
        const double t = std::tanh(stream.normal());
        acc += 1.0 - t * t;
    }
    CHECK(std::abs(tanh_md - acc / mc) <= 1e-3);
}
