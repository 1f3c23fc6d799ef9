// Acceptance suite: runs every gate criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code 1 if any fail.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gradient_oracle.hpp"
#include "hermeq/decompose.hpp"
#include "hermeq/diagnostics.hpp"
#include "hermeq/experiment.hpp"
#include "hermeq/hermite.hpp"
#include "hermeq/moments.hpp"
#include "hermeq/network.hpp"
#include "hermeq/quadrature.hpp"
#include "hermeq/random.hpp"
#include "hermeq/stats.hpp"

using namespace hermeq;

namespace {

struct Checker {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void require_le(double value, double bound, const std::string& what) {
        if (!(value <= bound)) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s: %.6g > %.6g", what.c_str(), value, bound);
            failures.push_back(buf);
        }
    }
};

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;

ExperimentConfig figure1_config() {
    ExperimentConfig cfg;
    cfg.n = cfg.m = cfg.k = 500;
    cfg.alpha = 0.5;
    cfg.beta = 0.74;
    cfg.lambda = 1e-4;
    cfg.l_degree = 5;
    cfg.activation = "relu";
    cfg.target.kind = "single_index";
    cfg.target.sigma_star = "relu";
    cfg.mixture.components = 2;
    cfg.mixture.rho = {0.5, 0.5};
    cfg.mixture.ranks = {1, 1};
    cfg.mixture.alignment = 0.0;
    cfg.mixture.theta_mode = "fixed";
    cfg.trials = 20;
    cfg.base_seed = 20250809;
    return cfg;
}

double cell_mean(const SweepTable& t, double value, const std::string& act,
                 const std::string& metric) {
    for (const auto& row : t.rows)
        if (row.value == value && row.activation == act && row.metric == metric) return row.mean;
    return std::nan("");
}

// pooled per-activation (axis value, per-trial G_nn) pairs
SpearmanResult trend_over_trials(const SweepTable& t, const std::vector<double>& values,
                                 const std::string& act) {
    std::vector<double> xs, ys;
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        const auto it = t.cells.find({static_cast<int>(vi), act});
        if (it == t.cells.end()) continue;
        for (const auto& r : it->second) {
            if (r.failed()) continue;
            xs.push_back(values[vi]);
            ys.push_back(r.G_nn);
        }
    }
    return spearman(xs, ys);
}

void note_failures(const SweepTable& t, Checker& c) {
    for (const auto& note : t.notes)
        if (note.find("failed trial") != std::string::npos) c.require(false, note);
}

// --------------------------------------------------------------------
// criteria
// --------------------------------------------------------------------

void criterion1_coefficient_oracle(Checker& c) {
    const auto rule = QuadratureRule::default_rule(200);
    const auto relu = hermite_coefficients(Activation::parse("relu"), 1.0, 4, rule);
    c.require_le(std::abs(relu[0] - kInvSqrt2Pi), 1e-8, "relu h0 vs 1/sqrt(2pi)");
    c.require_le(std::abs(relu[1] - 0.5), 1e-8, "relu h1 vs 1/2");
    c.require_le(std::abs(relu[2] - kInvSqrt2Pi), 1e-8, "relu h2 vs 1/sqrt(2pi)");
    c.require_le(std::abs(relu[3]), 1e-8, "relu h3 vs 0");
    const auto ident = hermite_coefficients(Activation::parse("identity"), 1.0, 3, rule);
    c.require_le(std::abs(ident[0]), 1e-12, "identity h0");
    c.require_le(std::abs(ident[1] - 1.0), 1e-12, "identity h1");
    c.require_le(std::abs(ident[2]), 1e-12, "identity h2");
}

void criterion2_orthogonality(Checker& c) {
    for (const auto& rule :
         {QuadratureRule::default_rule(200), QuadratureRule::gauss_hermite(200)}) {
        double fact_i = 1.0;
        for (int i = 0; i <= 8; ++i) {
            if (i > 0) fact_i *= i;
            for (int j = 0; j <= 8; ++j) {
                double acc = 0.0;
                for (int s = 0; s < rule.order(); ++s)
                    acc += rule.weights[s] * hermite_eval(i, rule.nodes[s]) *
                           hermite_eval(j, rule.nodes[s]);
                const double expected = (i == j) ? fact_i : 0.0;
                c.require_le(std::abs(acc - expected), 1e-6,
                             "E[H_" + std::to_string(i) + " H_" + std::to_string(j) + "]");
            }
        }
    }
}

void criterion3_gradient_oracle(Checker& c) {
    RandomStream stream(31337);
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
        const auto fast = gradient_step(init, X, y, 1.0, acts[rep % 3]);
        const auto slow = gradient_oracle(init.F, init.w, X, y, acts[rep % 3]);
        c.require_le((fast.G - slow).cwiseAbs().maxCoeff(), 1e-12,
                     "gradient oracle instance " + std::to_string(rep));
    }
}

void criterion4_ridge(Checker& c) {
    RandomStream stream(4242);
    for (int rep = 0; rep < 50; ++rep) {
        const int m = 5 + static_cast<int>(stream.next_u64() % 80);
        const int k = 5 + static_cast<int>(stream.next_u64() % 80);
        const double lambda = std::pow(10.0, -1.0 - 3.0 * stream.uniform());
        const Eigen::MatrixXd phi = stream.normal_matrix(m, k);
        const Eigen::VectorXd y = stream.normal_vector(m);
        const Eigen::VectorXd w = ridge_second_layer(phi, y, lambda);

        const double sqrt_k = std::sqrt(static_cast<double>(k));
        const Eigen::VectorXd grad =
            -phi.transpose() * (y - phi * w / sqrt_k) / (static_cast<double>(m) * sqrt_k) +
            lambda * w;
        c.require_le(grad.norm(), 1e-8 * (1.0 + w.norm()),
                     "stationarity instance " + std::to_string(rep));

        const double mk = static_cast<double>(m) * k;
        const double m_sqrt_k = m * sqrt_k;
        Eigen::MatrixXd gram = phi.transpose() * phi / mk;
        gram.diagonal().array() += lambda;
        const Eigen::VectorXd primal = gram.llt().solve((phi.transpose() * y / m_sqrt_k).eval());
        Eigen::MatrixXd kern = phi * phi.transpose() / mk;
        kern.diagonal().array() += lambda;
        const Eigen::VectorXd dual = phi.transpose() * kern.llt().solve(y) / m_sqrt_k;
        c.require_le((primal - dual).norm(), 1e-8 * std::max(1.0, primal.norm()),
                     "primal-dual instance " + std::to_string(rep));
    }
}

void criterion5_alpha_equivalence(Checker& c) {
    ExperimentConfig cfg = figure1_config();
    const std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
    const SweepTable t = run_sweep(cfg, SweepAxis::Alpha, alphas);
    note_failures(t, c);
    for (const auto& act : {"relu", "tanh", "sigmoid"}) {
        for (double a : alphas) {
            const double gap = cell_mean(t, a, act, "gen_gap_rel");
            c.require_le(gap, 0.05, std::string("hermite gap, ") + act + " alpha=" +
                                        std::to_string(a));
        }
        const auto trend = trend_over_trials(t, alphas, act);
        c.require(trend.rho > 0.0,
                  std::string("G_nn increasing in alpha (") + act + "): rho=" +
                      std::to_string(trend.rho));
        c.require_le(trend.p_value, 0.05,
                     std::string("alpha trend significance (") + act + ")");
        std::printf("    [c5 %s] gaps", act);
        for (double a : alphas) std::printf(" %.3f", cell_mean(t, a, act, "gen_gap_rel"));
        std::printf(" | rho=%.3f p=%.2g\n", trend.rho, trend.p_value);
    }
}

void criterion6_beta_trend(Checker& c) {
    ExperimentConfig cfg = figure1_config();
    cfg.alpha = 0.5;
    cfg.l_auto = true;  // match l to the (l-2)/(l-1) < beta < (l-1)/l window
    const std::vector<double> betas = {0.1, 0.3, 0.5, 0.62, 0.74};
    const SweepTable t = run_sweep(cfg, SweepAxis::Beta, betas);
    note_failures(t, c);
    for (const auto& act : {"relu", "tanh", "sigmoid"}) {
        for (double b : betas) {
            const double gap = cell_mean(t, b, act, "gen_gap_rel");
            c.require_le(gap, 0.05,
                         std::string("hermite gap, ") + act + " beta=" + std::to_string(b));
        }
        const auto trend = trend_over_trials(t, betas, act);
        c.require(trend.rho < 0.0, std::string("G_nn nonincreasing in beta (") + act +
                                       "): rho=" + std::to_string(trend.rho));
        std::printf("    [c6 %s] gaps", act);
        for (double b : betas) std::printf(" %.3f", cell_mean(t, b, act, "gen_gap_rel"));
        std::printf(" | rho=%.3f\n", trend.rho);
    }
}

void criterion7_alignment_trend(Checker& c) {
    ExperimentConfig cfg = figure1_config();
    cfg.l_degree = 4;  // the mixture-property figures use l = 4
    const std::vector<double> aligns = {0.0, 0.5, 0.9, 1.0};
    const SweepTable t = run_sweep(cfg, SweepAxis::Alignment, aligns);
    note_failures(t, c);
    for (const auto& act : {"relu", "tanh", "sigmoid"}) {
        const double g0 = cell_mean(t, 0.0, act, "gen_nn");
        const double g1 = cell_mean(t, 1.0, act, "gen_nn");
        c.require(g1 < g0, std::string("G(a=1) < G(a=0) for ") + act + ": " +
                               std::to_string(g1) + " vs " + std::to_string(g0));
        std::printf("    [c7 %s] G(a): %.4g %.4g %.4g %.4g\n", act,
                    cell_mean(t, 0.0, act, "gen_nn"), cell_mean(t, 0.5, act, "gen_nn"),
                    cell_mean(t, 0.9, act, "gen_nn"), cell_mean(t, 1.0, act, "gen_nn"));
    }
}

void check_slope(Checker& c, const SlopeFit& fit, double target, double tol,
                 const std::string& name) {
    // the slope +- 2*stderr window must overlap the target band
    const double lo = fit.slope - 2.0 * fit.slope_stderr;
    const double hi = fit.slope + 2.0 * fit.slope_stderr;
    const bool ok = hi >= target - tol && lo <= target + tol;
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%s slope %.3f +- %.3f vs %.3f +- %.2f", name.c_str(),
                  fit.slope, fit.slope_stderr, target, tol);
    std::printf("    [c8] %s\n", buf);
    c.require(ok, buf);
}

void criterion8_scaling_slopes(Checker& c) {
    DiagnosticsConfig cfg;
    cfg.grid = {256, 512, 1024, 2048};
    cfg.alpha = 0.5;
    cfg.beta = 0.5;
    cfg.trials_per_n = 10;
    cfg.base_seed = 505;
    const auto report = scaling_diagnostic(cfg);
    const double t = 1.0 - cfg.beta * (1.0 - cfg.alpha);  // 0.75
    check_slope(c, report.slopes.at("delta_norm"), -t, 0.2, "||Delta||");
    check_slope(c, report.slopes.at("v_norm"), -t / 2.0, 0.15, "||v||");
    check_slope(c, report.slopes.at("max_abs_a"), cfg.beta - 1.0, 0.2, "max|a|");
    // ||u|| = O~(1): stays within a factor-3 band across the grid
    double u_min = 1e300, u_max = 0.0;
    for (const auto& ms : report.per_n.at("u_norm")) {
        u_min = std::min(u_min, ms.mean);
        u_max = std::max(u_max, ms.mean);
    }
    c.require_le(u_max / u_min, 3.0, "||u|| factor-3 band");
}

void criterion9_conditional_moments(Checker& c) {
    const int n = 256, k = 256;
    const double alpha = 0.5, beta = 0.6;
    const int l = 3;
    const long samples = 200000;

    RandomStream trial(909);
    ScalingSpec scaling{alpha, beta, n};
    RandomStream mix_stream = trial.derive(1);
    const auto spec = two_component_mixture(n, 1, scaling.theta_scale(), 0.5, 0.0, mix_stream);
    const auto summary = mixture_covariance(spec);
    const double b = std::sqrt(static_cast<double>(n) / summary.trace);

    TargetSpec target;
    target.kind = LabelKind::SingleIndex;
    target.sigma_star = Activation::parse("relu");
    RandomStream xi_stream = trial.derive(2);
    target.xi = build_xi(spec, XiMode::SpikeAligned, 1.0, xi_stream);

    const Activation sigma = Activation::parse("relu");
    RandomStream init_stream = trial.derive(3);
    const auto init = init_network(n, k, summary.trace, init_stream);
    RandomStream batch_stream = trial.derive(4);
    Dataset batch = sample_batch(spec, n, batch_stream);
    batch.y = label(target, batch.X, batch.comp);
    const auto step = gradient_step(init, batch.X, batch.y, scaling.eta(), sigma);
    const auto rule = QuadratureRule::default_rule();
    const auto decomp = spike_bulk_decompose(step.G, init.w, batch.X, batch.y, sigma, rule);
    RandomStream z_stream = trial.derive(5);
    const auto split = structure_bulk_split(step.F_hat, scaling.eta() * decomp.u,
                                            spec.components[0].cov, decomp.v,
                                            z_stream.normal_vector(n));

    const HermiteActivation sigma_hat = build_equivalent_activation(sigma, b, l);
    RandomStream mc1 = trial.derive(6), mc2 = trial.derive(7);
    const auto mom_nn = conditional_moments_mc(step.F_hat, spec.components[0].cov, split.gamma,
                                               split.kappa, AnyActivation(sigma), samples, mc1);
    const auto mom_h = conditional_moments_mc(step.F_hat, spec.components[0].cov, split.gamma,
                                              split.kappa, AnyActivation(sigma_hat), samples, mc2);

    const double mean_gap = (mom_nn.nu - mom_h.nu).norm() / mom_nn.nu.norm();
    const double diag_gap = (mom_nn.second_moment_diag - mom_h.second_moment_diag).norm() /
                            mom_nn.second_moment_diag.norm();
    std::printf("    [c9] rel mean gap %.4f, rel diag second-moment gap %.4f\n", mean_gap,
                diag_gap);
    c.require_le(mean_gap, 0.05, "conditional mean gap");
    c.require_le(diag_gap, 0.05, "conditional diagonal second-moment gap");
}

void criterion10_determinism(Checker& c) {
    ExperimentConfig cfg = figure1_config();
    cfg.n = cfg.m = cfg.k = 150;
    cfg.trials = 5;
    cfg.n_test = 300;
    const std::vector<double> alphas = {0.0, 0.5, 1.0};
    const auto t_w1 = run_sweep(cfg, SweepAxis::Alpha, alphas, 1);
    const auto t_w8 = run_sweep(cfg, SweepAxis::Alpha, alphas, 8);
    const auto t_again = run_sweep(cfg, SweepAxis::Alpha, alphas, 8);
    const std::string csv1 = render_csv(t_w1);
    c.require(csv1 == render_csv(t_w8), "CSV identical at worker counts 1 and 8");
    c.require(csv1 == render_csv(t_again), "CSV identical across repeated runs");
    c.require(render_json(t_w1) == render_json(t_w8), "JSON identical at worker counts 1 and 8");

    const std::string p1 = "/tmp/hermeq_acc_w1.csv", p8 = "/tmp/hermeq_acc_w8.csv";
    emit(t_w1, EmitFormat::CSV, p1);
    emit(t_w8, EmitFormat::CSV, p8);
    FILE* f1 = std::fopen(p1.c_str(), "rb");
    FILE* f8 = std::fopen(p8.c_str(), "rb");
    c.require(f1 && f8, "emitted files exist");
    if (f1 && f8) {
        std::string s1, s8;
        char buf[4096];
        std::size_t got;
        while ((got = std::fread(buf, 1, sizeof(buf), f1)) > 0) s1.append(buf, got);
        while ((got = std::fread(buf, 1, sizeof(buf), f8)) > 0) s8.append(buf, got);
        c.require(s1 == s8, "emitted files byte-identical");
    }
    if (f1) std::fclose(f1);
    if (f8) std::fclose(f8);
}

struct CriterionSpec {
    int id;
    const char* name;
    double runtime_limit_s;  // enforced when > 0
    std::function<void(Checker&)> body;
};

}  // namespace

int main() {
    const std::vector<CriterionSpec> criteria = {
        {1, "Hermite coefficient oracle", 1.0, criterion1_coefficient_oracle},
        {2, "Hermite orthogonality suite", 1.0, criterion2_orthogonality},
        {3, "gradient oracle equivalence", 1.0, criterion3_gradient_oracle},
        {4, "ridge stationarity and primal-dual agreement", 5.0, criterion4_ridge},
        {5, "equivalence across the alpha grid", 0.0, criterion5_alpha_equivalence},
        {6, "beta trend with window-matched degree", 0.0, criterion6_beta_trend},
        {7, "alignment trend", 0.0, criterion7_alignment_trend},
        {8, "scaling slopes of the decomposition", 0.0, criterion8_scaling_slopes},
        {9, "conditional moment equivalence", 0.0, criterion9_conditional_moments},
        {10, "byte-identical output across workers and reruns", 0.0, criterion10_determinism},
    };

    int failed = 0;
    for (const auto& spec : criteria) {
        Checker checker;
        const auto start = std::chrono::steady_clock::now();
        try {
            spec.body(checker);
        } catch (const std::exception& e) {
            checker.failures.push_back(std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (spec.runtime_limit_s > 0.0 && elapsed > spec.runtime_limit_s) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "runtime %.2fs exceeds %.0fs", elapsed,
                          spec.runtime_limit_s);
            checker.failures.push_back(buf);
        }
        if (checker.failures.empty()) {
            std::printf("[PASS] criterion %d: %s (%.1fs)\n", spec.id, spec.name, elapsed);
        } else {
            ++failed;
            std::printf("[FAIL] criterion %d: %s (%.1fs)\n", spec.id, spec.name, elapsed);
            for (const auto& f : checker.failures) std::printf("       - %s\n", f.c_str());
        }
        std::fflush(stdout);
    }
    if (failed == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", failed);
    return 1;
}
