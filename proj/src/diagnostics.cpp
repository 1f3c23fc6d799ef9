#include "hermeq/diagnostics.hpp"

#include <cmath>

#include "hermeq/decompose.hpp"
#include "hermeq/errors.hpp"
#include "hermeq/network.hpp"
#include "hermeq/quadrature.hpp"

namespace hermeq {

namespace {

struct TrialMeasurement {
    double max_a = 0.0;
    double max_off = 0.0;
    double max_diag_dev = 0.0;
    double v_norm = 0.0;
    double delta_norm = 0.0;
    double u_norm = 0.0;
};

TrialMeasurement measure_once(int n, const DiagnosticsConfig& cfg, const QuadratureRule& rule,
                              RandomStream trial_stream) {
    const int m = n, k = n;
    ScalingSpec scaling{cfg.alpha, cfg.beta, n};
    scaling.validate();
    const double theta = scaling.theta_scale();
    const double eta = scaling.eta();

    RandomStream mix_stream = trial_stream.derive(1);
    MixtureSpec spec = two_component_mixture(n, cfg.d, theta, cfg.rho1, cfg.alignment, mix_stream);

    RandomStream xi_stream = trial_stream.derive(2);
    TargetSpec target;
    target.kind = LabelKind::SingleIndex;
    target.sigma_star = cfg.target;
    target.xi = build_xi(spec, cfg.xi_mode, cfg.C_xi, xi_stream);

    RandomStream init_stream = trial_stream.derive(3);
    const double tr_sigma = static_cast<double>(n) + theta * cfg.d;  // equal traces, zero means
    NetworkInit init = init_network(n, k, tr_sigma, init_stream);

    RandomStream batch_stream = trial_stream.derive(4);
    Dataset batch = sample_batch(spec, m, batch_stream);
    batch.y = label(target, batch.X, batch.comp);

    const auto step = gradient_step(init, batch.X, batch.y, eta, cfg.activation);
    const auto decomp = spike_bulk_decompose(step.G, init.w, batch.X, batch.y, cfg.activation, rule);

    // structure coordinates for fresh whitened draws, conditioned on component 1
    RandomStream z_stream = trial_stream.derive(5);
    const auto& cov = spec.components[0].cov;
    const auto split =
        structure_bulk_split(step.F_hat, eta * decomp.u, cov, decomp.v, z_stream.normal_vector(n));

    TrialMeasurement out;
    out.v_norm = decomp.v_norm;
    out.delta_norm = decomp.delta_norm;
    out.u_norm = decomp.u_norm;

    const Eigen::MatrixXd gtg = split.gamma.transpose() * split.gamma;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gtg);

    // max_i |a_{i|kappa}| averaged over fresh kappa draws; the first
    // comes from the split above
    Eigen::MatrixXd f_sqrt = step.F_hat;  // F_hat Sigma^{1/2}
    for (int i = 0; i < cov.rank(); ++i) {
        const double c = std::sqrt(1.0 + cov.thetas[i]) - 1.0;
        f_sqrt += c * (step.F_hat * cov.directions.col(i)) * cov.directions.col(i).transpose();
    }
    double max_a_acc = split.a_struct.cwiseAbs().maxCoeff();
    const int draws = std::max(1, cfg.kappa_draws_per_trial);
    for (int r = 1; r < draws; ++r) {
        const Eigen::VectorXd z = z_stream.normal_vector(n);
        const Eigen::VectorXd kappa = ldlt.solve((split.gamma.transpose() * z).eval());
        max_a_acc += (f_sqrt * (split.gamma * kappa)).cwiseAbs().maxCoeff();
    }
    out.max_a = max_a_acc / draws;

    // projected bulk rows f~_i = (I - P_Gamma) (F + eta Delta)_i
    const Eigen::MatrixXd f_perp = init.F + eta * decomp.delta;
    const Eigen::MatrixXd ft =
        f_perp - (f_perp * split.gamma) * ldlt.solve(split.gamma.transpose());
    const Eigen::MatrixXd gram = ft * ft.transpose();
    const double b2 = static_cast<double>(n) / tr_sigma;
    double max_off = 0.0, max_diag = 0.0;
    for (int i = 0; i < k; ++i) {
        max_diag = std::max(max_diag, std::abs(gram(i, i) - b2));
        for (int j = i + 1; j < k; ++j) max_off = std::max(max_off, std::abs(gram(i, j)));
    }
    out.max_off = max_off;
    out.max_diag_dev = max_diag;
    return out;
}

}  // namespace

SlopeReport scaling_diagnostic(const DiagnosticsConfig& cfg) {
    if (cfg.grid.size() < 3) throw ConfigError("scaling_diagnostic: need a grid of >= 3 sizes");
    for (std::size_t i = 1; i < cfg.grid.size(); ++i)
        if (cfg.grid[i] <= cfg.grid[i - 1])
            throw ConfigError("scaling_diagnostic: grid must be strictly increasing");
    // geometric spacing within a loose factor
    const double r0 = static_cast<double>(cfg.grid[1]) / cfg.grid[0];
    for (std::size_t i = 1; i + 1 < cfg.grid.size(); ++i) {
        const double r = static_cast<double>(cfg.grid[i + 1]) / cfg.grid[i];
        if (r > 1.5 * r0 || r < r0 / 1.5)
            throw ConfigError("scaling_diagnostic: grid spacing is not geometric");
    }
    if (cfg.trials_per_n < 1) throw ConfigError("scaling_diagnostic: trials_per_n must be >= 1");

    const auto rule = QuadratureRule::default_rule();
    const char* names[] = {"max_abs_a", "max_offdiag_ff", "max_diag_dev_ff",
                           "v_norm",    "delta_norm",     "u_norm"};

    SlopeReport report;
    report.grid = cfg.grid;
    std::map<std::string, std::vector<double>> log_means;
    std::map<std::string, std::vector<double>> log_ses;
    for (int n : cfg.grid) {
        std::map<std::string, std::vector<double>> samples;
        for (int t = 0; t < cfg.trials_per_n; ++t) {
            const std::uint64_t seed =
                splitmix64(cfg.base_seed ^ splitmix64((static_cast<std::uint64_t>(n) << 20) + t));
            const auto m = measure_once(n, cfg, rule, RandomStream(seed));
            samples["max_abs_a"].push_back(m.max_a);
            samples["max_offdiag_ff"].push_back(m.max_off);
            samples["max_diag_dev_ff"].push_back(m.max_diag_dev);
            samples["v_norm"].push_back(m.v_norm);
            samples["delta_norm"].push_back(m.delta_norm);
            samples["u_norm"].push_back(m.u_norm);
        }
        for (const char* q : names) {
            const auto ms = mean_stderr(samples[q]);
            report.per_n[q].push_back(ms);
            log_means[q].push_back(std::log(ms.mean));
            log_ses[q].push_back(ms.stderr_ / ms.mean);  // delta method
        }
    }

    std::vector<double> log_n;
    log_n.reserve(cfg.grid.size());
    for (int n : cfg.grid) log_n.push_back(std::log(static_cast<double>(n)));
    for (const char* q : names) {
        bool have_errors = true;
        for (double se : log_ses[q]) have_errors = have_errors && se > 0.0;
        report.slopes[q] = have_errors ? fit_line_weighted(log_n, log_means[q], log_ses[q])
                                       : fit_line(log_n, log_means[q]);
    }
    return report;
}

}  // namespace hermeq
