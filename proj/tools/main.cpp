// hermite-equiv: numerical lab for the Hermite-model equivalence of
// two-layer networks trained with one gradient step on Gaussian-mixture
// data. Subcommands: run, sweep, external, hermite-coeffs, diagnose,
// moments, preprocess.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "hermeq/decompose.hpp"
#include "hermeq/diagnostics.hpp"
#include "hermeq/errors.hpp"
#include "hermeq/experiment.hpp"
#include "hermeq/external_data.hpp"
#include "hermeq/hermite.hpp"
#include "hermeq/moments.hpp"
#include "hermeq/network.hpp"
#include "hermeq/quadrature.hpp"

namespace {

using namespace hermeq;

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        try {
            out.push_back(std::stod(csv.substr(pos, next - pos)));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse value list '" + csv + "'");
        }
        pos = next + 1;
    }
    if (out.empty()) throw ConfigError("empty value list");
    return out;
}

void print_row(const char* fmt, double a, double b) { std::printf(fmt, a, b); }

int cmd_hermite_coeffs(const std::string& act_name, double b, int l, int order) {
    const Activation act = Activation::parse(act_name);
    const auto rule = QuadratureRule::default_rule(std::max(order, 4 * l));
    const auto coeffs = hermite_coefficients(act, b, l, rule);
    const double resid = residual_coefficient(act, b, coeffs, rule);
    std::printf("j,h_j\n");
    for (int j = 0; j < coeffs.size(); ++j) std::printf("%d,%.12g\n", j, coeffs[j]);
    std::printf("residual,%.12g\n", resid);
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& format) {
    ExperimentConfig cfg = load_config(config_path);
    if (cfg.l_window_warning())
        std::fprintf(stderr,
                     "warning: beta=%.4g lies outside the degree-%d window ((l-2)/(l-1), (l-1)/l)\n",
                     cfg.beta, cfg.l_degree);

    SweepTable table;
    table.axis = "run";
    table.values = {0.0};
    std::vector<TrialResult> results(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) results[t] = run_trial(cfg, t);

    std::vector<double> t_nn, g_nn, t_h, g_h, gap;
    for (const auto& r : results) {
        if (r.failed()) {
            table.notes.push_back("trial failed: " + r.error);
            continue;
        }
        t_nn.push_back(r.T_nn);
        g_nn.push_back(r.G_nn);
        t_h.push_back(r.T_hermite);
        g_h.push_back(r.G_hermite);
        gap.push_back(r.G_nn != 0.0 ? std::abs(r.G_nn - r.G_hermite) / r.G_nn : 0.0);
    }
    const char* names[] = {"train_nn", "gen_nn", "train_hermite", "gen_hermite", "gen_gap_rel"};
    const std::vector<double>* series[] = {&t_nn, &g_nn, &t_h, &g_h, &gap};
    for (int i = 0; i < 5; ++i) {
        const auto ms = mean_stderr(*series[i]);
        table.rows.push_back(SweepRow{0.0, cfg.activation, names[i], ms.mean, ms.stderr_, ms.count});
    }
    for (const auto& row : table.rows)
        std::printf("%s %s: %.6g +- %.2g (%ld trials)\n", row.activation.c_str(),
                    row.metric.c_str(), row.mean, row.stderr_, row.trials);
    for (const auto& note : table.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
    if (!out_path.empty())
        emit(table, format == "json" ? EmitFormat::JSON : EmitFormat::CSV, out_path);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis_str,
              const std::string& values_csv, const std::string& out_path,
              const std::string& format, int workers) {
    ExperimentConfig cfg = load_config(config_path);
    const SweepAxis axis = parse_axis(axis_str);
    const auto values = parse_values(values_csv);
    const SweepTable table = run_sweep(cfg, axis, values, workers);
    for (const auto& note : table.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
    if (!out_path.empty()) {
        emit(table, format == "json" ? EmitFormat::JSON : EmitFormat::CSV, out_path);
    } else {
        std::fputs(render_csv(table).c_str(), stdout);
    }
    return 0;
}

int cmd_external(const std::string& config_path, const std::string& a_path,
                 const std::string& b_path, const std::string& values_csv,
                 const std::string& out_path, const std::string& format, int workers) {
    ExperimentConfig cfg = load_config(config_path);
    const auto values = parse_values(values_csv);
    const SweepTable table = run_external(cfg, a_path, b_path, values, workers);
    for (const auto& note : table.notes) std::fprintf(stderr, "note: %s\n", note.c_str());
    if (!out_path.empty()) {
        emit(table, format == "json" ? EmitFormat::JSON : EmitFormat::CSV, out_path);
    } else {
        std::fputs(render_csv(table).c_str(), stdout);
    }
    return 0;
}

int cmd_diagnose(const std::string& grid_csv, double alpha, double beta, int trials,
                 std::uint64_t seed, const std::string& xi_mode) {
    DiagnosticsConfig cfg;
    cfg.grid.clear();
    for (double v : parse_values(grid_csv)) cfg.grid.push_back(static_cast<int>(std::lround(v)));
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.trials_per_n = trials;
    cfg.base_seed = seed;
    cfg.xi_mode = xi_mode == "random" ? XiMode::RandomDirection : XiMode::SpikeAligned;
    const auto report = scaling_diagnostic(cfg);

    std::printf("n,quantity,mean,stderr\n");
    for (const auto& [name, series] : report.per_n)
        for (std::size_t i = 0; i < series.size(); ++i)
            std::printf("%d,%s,%.12g,%.12g\n", report.grid[i], name.c_str(), series[i].mean,
                        series[i].stderr_);
    std::printf("slopes\n");
    std::printf("quantity,slope,stderr\n");
    for (const auto& [name, fit] : report.slopes)
        std::printf("%s,%.12g,%.12g\n", name.c_str(), fit.slope, fit.slope_stderr);
    return 0;
}

int cmd_moments(int n, int k, double alpha, double beta, int l, long samples,
                std::uint64_t seed, const std::string& act_name) {
    // conditional-moment comparison between sigma and its degree-(l-1)
    // Hermite counterpart on one trained F_hat, kappa drawn once
    RandomStream trial(seed);
    ScalingSpec scaling{alpha, beta, n};
    scaling.validate();
    const double theta = scaling.theta_scale();
    RandomStream mix_stream = trial.derive(1);
    MixtureSpec spec = two_component_mixture(n, 1, theta, 0.5, 0.0, mix_stream);
    const auto summary = mixture_covariance(spec);
    const double b = std::sqrt(static_cast<double>(n) / summary.trace);

    RandomStream xi_stream = trial.derive(2);
    TargetSpec target;
    target.kind = LabelKind::SingleIndex;
    target.sigma_star = Activation::parse(act_name);
    target.xi = build_xi(spec, XiMode::SpikeAligned, 1.0, xi_stream);

    RandomStream init_stream = trial.derive(3);
    const Activation sigma = Activation::parse(act_name);
    NetworkInit init = init_network(n, k, summary.trace, init_stream);
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
    std::printf("quantity,value\n");
    std::printf("rel_mean_gap,%.12g\n", mean_gap);
    std::printf("rel_diag_second_moment_gap,%.12g\n", diag_gap);
    std::printf("psd_shift_rel_nn,%.12g\n", mom_nn.psd_shift_rel);
    std::printf("psd_shift_rel_hermite,%.12g\n", mom_h.psd_shift_rel);
    std::printf("samples,%ld\n", samples);
    return 0;
}

int cmd_preprocess(const std::string& a_path, const std::string& b_path,
                   const std::string& out_path, bool nonzero_means, std::uint64_t seed) {
    const Eigen::MatrixXd a = read_matrix(a_path);
    const Eigen::MatrixXd b = read_matrix(b_path);
    RandomStream stream(seed);
    const auto res = preprocess_external(a, b, stream, nonzero_means);
    // samples with the label appended as the final column
    Eigen::MatrixXd out(res.data.X.rows(), res.data.X.cols() + 1);
    out.leftCols(res.data.X.cols()) = res.data.X;
    out.col(res.data.X.cols()) = res.data.y;
    write_gmix(out_path, out);
    print_row("t,%.12g\ntrace1,%.12g\n", res.report.t, res.report.trace1);
    print_row("trace2,%.12g\ninput_scale,%.12g\n", res.report.trace2, res.report.input_scale);
    if (res.report.mean_ratio_warning)
        std::fprintf(stderr, "warning: mean-to-spread ratio %.3g exceeds 10\n",
                     res.report.mean_norm_ratio);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-layer networks after one gradient step on Gaussian mixtures, "
                 "and their Hermite-polynomial equivalents"};
    app.require_subcommand(1);

    // run
    std::string config_path, out_path, format = "csv";
    auto* run_cmd = app.add_subcommand("run", "run one configuration");
    run_cmd->add_option("--config", config_path, "JSON config file")->required();
    run_cmd->add_option("--out", out_path, "output table path");
    run_cmd->add_option("--format", format, "csv|json");

    // sweep
    std::string axis_str, values_csv;
    int workers = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "sweep one axis across {relu,tanh,sigmoid}");
    sweep_cmd->add_option("--config", config_path, "JSON config file")->required();
    sweep_cmd->add_option("--axis", axis_str,
                          "k_over_m|alpha|beta|mixture_ratio|alignment|rank|lambda|eta_override")
        ->required();
    sweep_cmd->add_option("--values", values_csv, "comma-separated axis values")->required();
    sweep_cmd->add_option("--out", out_path, "output table path");
    sweep_cmd->add_option("--format", format, "csv|json");
    sweep_cmd->add_option("--workers", workers, "worker threads (0 = auto)");

    // external
    std::string class_a, class_b, km_csv = "1";
    auto* ext_cmd = app.add_subcommand("external", "externally supplied two-class data");
    ext_cmd->add_option("--config", config_path, "JSON config file")->required();
    ext_cmd->add_option("--class-a", class_a, "class A samples (GMIX or CSV)")->required();
    ext_cmd->add_option("--class-b", class_b, "class B samples (GMIX or CSV)")->required();
    ext_cmd->add_option("--values", km_csv, "k/m grid (default 1)");
    ext_cmd->add_option("--out", out_path, "output table path");
    ext_cmd->add_option("--format", format, "csv|json");
    ext_cmd->add_option("--workers", workers, "worker threads (0 = auto)");

    // hermite-coeffs
    std::string act_name = "relu";
    double b_scale = 1.0;
    int l_degree = 5, order = 200;
    auto* hc_cmd = app.add_subcommand("hermite-coeffs", "Hermite coefficients and residual");
    hc_cmd->add_option("--activation", act_name, "relu|tanh|sigmoid|identity");
    hc_cmd->add_option("--b", b_scale, "input scale b");
    hc_cmd->add_option("--l", l_degree, "number of coefficients");
    hc_cmd->add_option("--order", order, "minimum quadrature nodes");

    // diagnose
    std::string grid_csv = "256,512,1024,2048", xi_mode = "spike_aligned";
    double alpha = 0.5, beta = 0.5;
    int trials = 10;
    std::uint64_t seed = 1;
    auto* diag_cmd = app.add_subcommand("diagnose", "scaling slopes of the decomposition");
    diag_cmd->add_option("--grid", grid_csv, "comma-separated sizes");
    diag_cmd->add_option("--alpha", alpha, "weighting parameter");
    diag_cmd->add_option("--beta", beta, "strength parameter");
    diag_cmd->add_option("--trials", trials, "trials per size");
    diag_cmd->add_option("--seed", seed, "base seed");
    diag_cmd->add_option("--xi-mode", xi_mode, "spike_aligned|random");

    // moments
    int mn = 256, mk = 256, ml = 3;
    long samples = 200000;
    double malpha = 0.5, mbeta = 0.6;
    auto* mom_cmd = app.add_subcommand("moments", "conditional moment equivalence check");
    mom_cmd->add_option("--n", mn, "input dimension");
    mom_cmd->add_option("--k", mk, "hidden width (<= 512)");
    mom_cmd->add_option("--alpha", malpha, "weighting parameter");
    mom_cmd->add_option("--beta", mbeta, "strength parameter");
    mom_cmd->add_option("--l", ml, "Hermite degree bound");
    mom_cmd->add_option("--samples", samples, "Monte Carlo draws");
    mom_cmd->add_option("--seed", seed, "seed");
    mom_cmd->add_option("--activation", act_name, "relu|tanh|sigmoid|identity");

    // preprocess
    bool nonzero_means = false;
    auto* prep_cmd = app.add_subcommand("preprocess", "Appendix-style class preprocessing");
    prep_cmd->add_option("--class-a", class_a, "class A samples")->required();
    prep_cmd->add_option("--class-b", class_b, "class B samples")->required();
    prep_cmd->add_option("--out", out_path, "output GMIX path (label as last column)")->required();
    prep_cmd->add_option("--nonzero-means", nonzero_means, "demean globally instead of per class");
    prep_cmd->add_option("--seed", seed, "noise seed");

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) return cmd_run(config_path, out_path, format);
        if (sweep_cmd->parsed())
            return cmd_sweep(config_path, axis_str, values_csv, out_path, format, workers);
        if (ext_cmd->parsed())
            return cmd_external(config_path, class_a, class_b, km_csv, out_path, format, workers);
        if (hc_cmd->parsed()) return cmd_hermite_coeffs(act_name, b_scale, l_degree, order);
        if (diag_cmd->parsed()) return cmd_diagnose(grid_csv, alpha, beta, trials, seed, xi_mode);
        if (mom_cmd->parsed())
            return cmd_moments(mn, mk, malpha, mbeta, ml, samples, seed, act_name);
        if (prep_cmd->parsed())
            return cmd_preprocess(class_a, class_b, out_path, nonzero_means, seed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;  // --help
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const hermeq::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const hermeq::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
