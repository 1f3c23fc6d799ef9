#include "hermeq/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "hermeq/decompose.hpp"
#include "hermeq/errors.hpp"
#include "hermeq/external_data.hpp"
#include "hermeq/hermite.hpp"
#include "hermeq/network.hpp"
#include "hermeq/quadrature.hpp"

namespace hermeq {

using nlohmann::json;

int equivalence_window_degree(double beta) {
    if (beta < 0.0 || beta >= 1.0) throw ConfigError("equivalence_window_degree: beta must lie in [0, 1)");
    const double x = 1.0 / (1.0 - beta);
    const double r = std::round(x);
    int l = (std::abs(x - r) < 1e-9) ? static_cast<int>(r) + 1 : static_cast<int>(std::ceil(x));
    return std::max(l, 2);
}

bool ExperimentConfig::l_window_warning() const {
    const int l = l_degree;
    if (l < 2) return true;
    const double lo = static_cast<double>(l - 2) / (l - 1);
    const double hi = static_cast<double>(l - 1) / l;
    return !(beta > lo && beta < hi);
}

double ExperimentConfig::eta_for(int n_dim) const {
    if (eta_override) return *eta_override;
    return std::pow(static_cast<double>(n_dim), beta * alpha);
}

void ExperimentConfig::validate() const {
    if (n < 1 || m < 1 || k < 1) throw ConfigError("config: n, m, k must be positive");
    if (trials < 1) throw ConfigError("config: trials must be >= 1");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("config: alpha must lie in [0, 1]");
    if (beta < 0.0 || beta > 1.0) throw ConfigError("config: beta must lie in [0, 1]");
    if (lambda < 0.0) throw ConfigError("config: lambda must be nonnegative");
    if (l_degree < 1) throw ConfigError("config: l_degree must be >= 1");
    if (n_test < 0) throw ConfigError("config: n_test must be positive");
    Activation::parse(activation);
    if (target.kind != "single_index" && target.kind != "class_sign")
        throw ConfigError("config: target.kind must be single_index or class_sign");
    if (target.kind == "single_index") Activation::parse(target.sigma_star);
    if (mixture.components < 1) throw ConfigError("config: mixture.components must be >= 1");
    if (target.kind == "class_sign" && mixture.components != 2)
        throw ConfigError("config: class_sign labels require exactly two components");
    if (static_cast<int>(mixture.rho.size()) != mixture.components)
        throw ConfigError("config: mixture.rho length must equal components");
    double rsum = 0.0;
    for (double r : mixture.rho) {
        if (!(r > 0.0) || r > 1.0) throw ConfigError("config: mixture weights must lie in (0, 1]");
        rsum += r;
    }
    if (std::abs(rsum - 1.0) > 1e-12) throw ConfigError("config: mixture.rho must sum to 1");
    if (static_cast<int>(mixture.ranks.size()) != mixture.components)
        throw ConfigError("config: mixture.ranks length must equal components");
    for (std::size_t i = 1; i < mixture.ranks.size(); ++i)
        if (mixture.ranks[i] != mixture.ranks[0])
            throw ConfigError("config: component ranks must be equal so traces match (A.3)");
    if (mixture.ranks[0] < 1) throw ConfigError("config: mixture ranks must be >= 1");
    if (mixture.alignment < 0.0 || mixture.alignment > 1.0)
        throw ConfigError("config: mixture.alignment must lie in [0, 1]");
    if (mixture.theta_mode != "fixed" && mixture.theta_mode != "uniform")
        throw ConfigError("config: mixture.theta_mode must be fixed or uniform");
    if (xi_mode != "random" && xi_mode != "spike_aligned")
        throw ConfigError("config: xi_mode must be random or spike_aligned");
    if (!(C_xi > 0.0)) throw ConfigError("config: C_xi must be positive");
    if (eta_override && !(*eta_override > 0.0))
        throw ConfigError("config: eta_override must be positive");
    if (generator != "mt19937_64-boxmuller")
        throw ConfigError("config: unsupported generator '" + generator +
                          "' (this build provides mt19937_64-boxmuller)");
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out, bool required) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
        }
    } else if (required) {
        throw ConfigError(std::string("config: missing required key '") + key + "'");
    }
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    read_field(j, "n", cfg.n, true);
    read_field(j, "m", cfg.m, true);
    read_field(j, "k", cfg.k, true);
    read_field(j, "alpha", cfg.alpha, true);
    read_field(j, "beta", cfg.beta, true);
    read_field(j, "lambda", cfg.lambda, true);
    read_field(j, "l_degree", cfg.l_degree, true);
    read_field(j, "activation", cfg.activation, true);
    if (j.contains("target")) {
        const auto& t = j.at("target");
        read_field(t, "kind", cfg.target.kind, false);
        read_field(t, "sigma_star", cfg.target.sigma_star, false);
    }
    if (j.contains("mixture")) {
        const auto& m = j.at("mixture");
        read_field(m, "components", cfg.mixture.components, false);
        read_field(m, "rho", cfg.mixture.rho, false);
        read_field(m, "ranks", cfg.mixture.ranks, false);
        read_field(m, "alignment", cfg.mixture.alignment, false);
        read_field(m, "theta_mode", cfg.mixture.theta_mode, false);
    }
    read_field(j, "n_test", cfg.n_test, false);
    read_field(j, "trials", cfg.trials, false);
    read_field(j, "base_seed", cfg.base_seed, false);
    read_field(j, "xi_mode", cfg.xi_mode, false);
    read_field(j, "c_xi", cfg.C_xi, false);
    read_field(j, "l_auto", cfg.l_auto, false);
    if (j.contains("eta_override") && !j.at("eta_override").is_null())
        cfg.eta_override = j.at("eta_override").get<double>();
    read_field(j, "nonzero_means", cfg.nonzero_means, false);
    read_field(j, "record_norms", cfg.record_norms, false);
    read_field(j, "generator", cfg.generator, false);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

std::uint64_t trial_seed(std::uint64_t base_seed, int trial_index) {
    return splitmix64(base_seed ^
                      splitmix64(static_cast<std::uint64_t>(trial_index) + 0x51A5E95EEDull));
}

namespace {

MixtureSpec build_trial_mixture(const ExperimentConfig& cfg, double theta_scale,
                                RandomStream& stream) {
    const int d = cfg.mixture.ranks[0];
    if (cfg.mixture.components == 1) {
        MixtureSpec spec;
        spec.components.resize(1);
        spec.components[0].weight = 1.0;
        spec.components[0].cov.dim_n = cfg.n;
        if (cfg.mixture.theta_mode == "uniform") {
            const double theta_max = std::pow(static_cast<double>(cfg.n), cfg.beta);
            Eigen::VectorXd t(d);
            for (int i = 0; i < d; ++i) t[i] = theta_max * stream.uniform_pos();
            spec.components[0].cov.thetas = t;
        } else {
            spec.components[0].cov.thetas = Eigen::VectorXd::Constant(d, theta_scale);
        }
        spec.components[0].cov.directions = random_orthonormal(cfg.n, d, stream);
        spec.validate();
        return spec;
    }
    if (cfg.mixture.components != 2)
        throw ConfigError("config: only 1- or 2-component mixtures are supported");
    if (cfg.mixture.theta_mode == "uniform") {
        const double theta_max = std::pow(static_cast<double>(cfg.n), cfg.beta);
        return two_component_mixture_uniform(cfg.n, d, theta_max, cfg.mixture.rho[0],
                                             cfg.mixture.alignment, stream);
    }
    return two_component_mixture(cfg.n, d, theta_scale, cfg.mixture.rho[0], cfg.mixture.alignment,
                                 stream);
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, int trial_index) {
    cfg.validate();
    TrialResult res;
    res.seed = trial_seed(cfg.base_seed, trial_index);
    try {
        RandomStream trial(res.seed);
        const double theta_scale =
            std::pow(static_cast<double>(cfg.n), cfg.beta * (1.0 - cfg.alpha));

        RandomStream mix_stream = trial.derive(1);
        const MixtureSpec spec = build_trial_mixture(cfg, theta_scale, mix_stream);
        const auto cov_summary = mixture_covariance(spec);
        const double b = std::sqrt(static_cast<double>(cfg.n) / cov_summary.trace);

        TargetSpec target;
        if (cfg.target.kind == "class_sign") {
            target.kind = LabelKind::ClassSign;
        } else {
            target.kind = LabelKind::SingleIndex;
            target.sigma_star = Activation::parse(cfg.target.sigma_star);
            RandomStream xi_stream = trial.derive(2);
            target.xi = build_xi(spec,
                                 cfg.xi_mode == "random" ? XiMode::RandomDirection
                                                         : XiMode::SpikeAligned,
                                 cfg.C_xi, xi_stream);
        }

        RandomStream init_stream = trial.derive(3);
        const NetworkInit init = init_network(cfg.n, cfg.k, cov_summary.trace, init_stream);

        RandomStream grad_stream = trial.derive(4);
        Dataset grad_batch = sample_batch(spec, cfg.m, grad_stream);
        grad_batch.y = label(target, grad_batch.X, grad_batch.comp);

        const Activation sigma = Activation::parse(cfg.activation);
        const double eta = cfg.eta_for(cfg.n);
        const auto step = gradient_step(init, grad_batch.X, grad_batch.y, eta, sigma);

        const int l = cfg.l_auto ? equivalence_window_degree(cfg.beta) : cfg.l_degree;
        const HermiteActivation sigma_hat = build_equivalent_activation(sigma, b, l);

        RandomStream ridge_stream = trial.derive(5);
        Dataset ridge_batch = sample_batch(spec, cfg.m, ridge_stream);
        ridge_batch.y = label(target, ridge_batch.X, ridge_batch.comp);
        if (ridge_batch.id == grad_batch.id)
            throw NumericalError("run_trial: ridge batch identity collides with the gradient batch");

        const double sqrt_k = std::sqrt(static_cast<double>(cfg.k));
        const Eigen::MatrixXd pre_ridge = step.F_hat * ridge_batch.X.transpose();  // k x m

        const Eigen::MatrixXd feats_nn = sigma.value(pre_ridge).transpose();
        const Eigen::VectorXd w_nn = ridge_second_layer(feats_nn, ridge_batch.y, cfg.lambda);
        res.T_nn = ridge_objective(ridge_batch.y, feats_nn * w_nn / sqrt_k, cfg.lambda, w_nn);

        RandomStream ridge_noise = trial.derive(7);
        const Eigen::MatrixXd feats_h = apply_equivalent(sigma_hat, pre_ridge, ridge_noise).transpose();
        const Eigen::VectorXd w_h = ridge_second_layer(feats_h, ridge_batch.y, cfg.lambda);
        res.T_hermite = ridge_objective(ridge_batch.y, feats_h * w_h / sqrt_k, cfg.lambda, w_h);

        RandomStream test_stream = trial.derive(6);
        Dataset test = sample_batch(spec, cfg.effective_n_test(), test_stream);
        test.y = label(target, test.X, test.comp);
        if (test.id == grad_batch.id || test.id == ridge_batch.id)
            throw NumericalError("run_trial: test batch identity collision");

        const Eigen::MatrixXd pre_test = step.F_hat * test.X.transpose();
        const Eigen::VectorXd pred_nn = sigma.value(pre_test).transpose() * w_nn / sqrt_k;
        RandomStream test_noise = trial.derive(8);
        const Eigen::VectorXd pred_h =
            apply_equivalent(sigma_hat, pre_test, test_noise).transpose() * w_h / sqrt_k;
        const double inv2t = 0.5 / static_cast<double>(test.y.size());
        res.G_nn = (test.y - pred_nn).squaredNorm() * inv2t;
        res.G_hermite = (test.y - pred_h).squaredNorm() * inv2t;

        if (cfg.record_norms) {
            const auto rule = QuadratureRule::default_rule();
            const auto decomp =
                spike_bulk_decompose(step.G, init.w, grad_batch.X, grad_batch.y, sigma, rule);
            res.norms = NormReport{decomp.u_norm, decomp.v_norm, decomp.delta_norm};
        }

        if (!std::isfinite(res.T_nn) || !std::isfinite(res.G_nn) || !std::isfinite(res.T_hermite) ||
            !std::isfinite(res.G_hermite))
            throw NumericalError("run_trial: non-finite error metric");
    } catch (const std::exception& e) {
        res.error = e.what();
    }
    return res;
}

int resolve_workers(int requested) {
    int workers = requested;
    if (workers <= 0) {
        workers = static_cast<int>(std::thread::hardware_concurrency());
        if (workers < 1) workers = 1;
    }
    if (const char* env = std::getenv("HERMITE_EQUIV_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) workers = std::min(workers, cap);
    }
    return std::max(1, workers);
}

namespace {

// runs tasks[0..count) on `workers` threads; results land by index so the
// outcome is independent of scheduling
void run_indexed(int count, int workers, const std::function<void(int)>& task) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
        });
    }
    for (auto& t : pool) t.join();
}

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, double value) {
    ExperimentConfig cfg = base;
    switch (axis) {
        case SweepAxis::KOverM:
            if (!(value > 0.0)) throw ConfigError("sweep: k/m must be positive");
            cfg.k = std::max(1, static_cast<int>(std::lround(value * cfg.m)));
            break;
        case SweepAxis::Alpha:
            cfg.alpha = value;
            break;
        case SweepAxis::Beta:
            cfg.beta = value;
            break;
        case SweepAxis::MixtureRatio: {
            if (cfg.mixture.components != 2)
                throw ConfigError("sweep: mixture ratio axis needs two components");
            cfg.mixture.rho = {value, 1.0 - value};
            break;
        }
        case SweepAxis::Alignment:
            cfg.mixture.alignment = value;
            break;
        case SweepAxis::Rank: {
            const int d = static_cast<int>(std::lround(value));
            cfg.mixture.ranks.assign(cfg.mixture.ranks.size(), d);
            break;
        }
        case SweepAxis::Lambda:
            cfg.lambda = value;
            break;
        case SweepAxis::EtaOverride:
            cfg.eta_override = value;
            break;
    }
    cfg.validate();
    return cfg;
}

const std::vector<std::string>& sweep_activations() {
    static const std::vector<std::string> acts = {"relu", "tanh", "sigmoid"};
    return acts;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"train_nn", "gen_nn", "train_hermite",
                                                   "gen_hermite", "gen_gap_rel"};
    return names;
}

double metric_of(const TrialResult& r, const std::string& name) {
    if (name == "train_nn") return r.T_nn;
    if (name == "gen_nn") return r.G_nn;
    if (name == "train_hermite") return r.T_hermite;
    if (name == "gen_hermite") return r.G_hermite;
    if (name == "gen_gap_rel") return r.G_nn != 0.0 ? std::abs(r.G_nn - r.G_hermite) / r.G_nn : 0.0;
    throw ConfigError("unknown metric " + name);
}

void aggregate_cell(SweepTable& table, int value_idx, double value, const std::string& act,
                    const std::vector<TrialResult>& results) {
    long failures = 0;
    std::vector<const TrialResult*> ok;
    for (const auto& r : results) {
        if (r.failed())
            ++failures;
        else
            ok.push_back(&r);
    }
    if (failures > 0) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s=%.12g activation=%s: %ld failed trial(s): %s",
                      table.axis.c_str(), value, act.c_str(), failures,
                      [&]() -> const char* {
                          for (const auto& r : results)
                              if (r.failed()) return r.error.c_str();
                          return "";
                      }());
        table.notes.push_back(buf);
    }
    for (const auto& name : metric_names()) {
        std::vector<double> xs;
        xs.reserve(ok.size());
        for (const auto* r : ok) xs.push_back(metric_of(*r, name));
        const auto ms = mean_stderr(xs);
        table.rows.push_back(SweepRow{value, act, name, ms.mean, ms.stderr_, ms.count});
    }
    table.cells[{value_idx, act}] = results;
}

}  // namespace

SweepAxis parse_axis(const std::string& name) {
    if (name == "k_over_m") return SweepAxis::KOverM;
    if (name == "alpha") return SweepAxis::Alpha;
    if (name == "beta") return SweepAxis::Beta;
    if (name == "mixture_ratio") return SweepAxis::MixtureRatio;
    if (name == "alignment") return SweepAxis::Alignment;
    if (name == "rank") return SweepAxis::Rank;
    if (name == "lambda") return SweepAxis::Lambda;
    if (name == "eta_override") return SweepAxis::EtaOverride;
    throw ConfigError("unknown sweep axis '" + name + "'");
}

std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::KOverM: return "k_over_m";
        case SweepAxis::Alpha: return "alpha";
        case SweepAxis::Beta: return "beta";
        case SweepAxis::MixtureRatio: return "mixture_ratio";
        case SweepAxis::Alignment: return "alignment";
        case SweepAxis::Rank: return "rank";
        case SweepAxis::Lambda: return "lambda";
        case SweepAxis::EtaOverride: return "eta_override";
    }
    return "?";
}

SweepTable run_sweep(const ExperimentConfig& base, SweepAxis axis,
                     const std::vector<double>& values, int workers) {
    base.validate();
    if (values.empty()) throw ConfigError("run_sweep: empty value list");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] <= values[i - 1]) throw ConfigError("run_sweep: values must be monotone increasing");

    SweepTable table;
    table.axis = axis_name(axis);
    table.values = values;

    struct Cell {
        ExperimentConfig cfg;
        int value_idx;
        std::string act;
    };
    std::vector<Cell> cells;
    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        ExperimentConfig with_value = apply_axis(base, axis, values[vi]);
        for (const auto& act : sweep_activations()) {
            Cell cell{with_value, static_cast<int>(vi), act};
            cell.cfg.activation = act;
            cells.push_back(std::move(cell));
        }
    }

    const int per_cell = base.trials;
    const int total = static_cast<int>(cells.size()) * per_cell;
    std::vector<TrialResult> results(total);
    run_indexed(total, resolve_workers(workers), [&](int idx) {
        const int cell_idx = idx / per_cell;
        const int trial_idx = idx % per_cell;
        results[idx] = run_trial(cells[cell_idx].cfg, trial_idx);
    });

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        std::vector<TrialResult> cell_results(results.begin() + ci * per_cell,
                                              results.begin() + (ci + 1) * per_cell);
        aggregate_cell(table, cells[ci].value_idx, values[cells[ci].value_idx], cells[ci].act,
                       cell_results);
    }

    if (axis == SweepAxis::EtaOverride) {
        // implied beta = log(eta ||Sigma||)/log(n) with the configured theta scale
        for (double v : values) {
            const double theta = std::pow(static_cast<double>(base.n), base.beta * (1.0 - base.alpha));
            const double sigma_norm = 1.0 + theta * base.mixture.rho[0];
            const double implied = std::log(v * sigma_norm) / std::log(static_cast<double>(base.n));
            if (implied > 1.0) {
                char buf[128];
                std::snprintf(buf, sizeof(buf),
                              "eta_override=%.12g: implied beta %.3f > 1, no equivalence guarantee", v,
                              implied);
                table.notes.push_back(buf);
            }
        }
    }
    return table;
}

SweepTable run_external(const ExperimentConfig& base, const std::string& class_a_path,
                        const std::string& class_b_path, const std::vector<double>& k_over_m,
                        int workers) {
    base.validate();
    if (k_over_m.empty()) throw ConfigError("run_external: empty k/m list");

    const Eigen::MatrixXd raw_a = read_matrix(class_a_path);
    const Eigen::MatrixXd raw_b = read_matrix(class_b_path);
    RandomStream prep_stream = RandomStream(base.base_seed).derive(0xE27);
    const auto prep = preprocess_external(raw_a, raw_b, prep_stream, base.nonzero_means);
    const Dataset& pool = prep.data;

    const int n = static_cast<int>(pool.X.cols());
    const int rows = static_cast<int>(pool.X.rows());
    const int m = base.m;
    const int n_test = base.n_test > 0 ? base.n_test : 4 * m;
    if (rows < 2 * m + n_test)
        throw ConfigError("run_external: pool has " + std::to_string(rows) + " rows; needs >= " +
                          std::to_string(2 * m + n_test) + " (2m + n_test)");

    // empirical covariance trace of the preprocessed pool, for the init scale
    const Eigen::RowVectorXd pool_mean = pool.X.colwise().mean();
    const double trace_est =
        (pool.X.rowwise() - pool_mean).squaredNorm() / static_cast<double>(rows - 1);

    SweepTable table;
    table.axis = "k_over_m";
    table.values = k_over_m;
    {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "external preprocessing: t=%.6g Tr1=%.6g Tr2=%.6g input_scale=%.6g",
                      prep.report.t, prep.report.trace1, prep.report.trace2,
                      prep.report.input_scale);
        table.notes.push_back(buf);
        if (prep.report.mean_ratio_warning) {
            std::snprintf(buf, sizeof(buf),
                          "external preprocessing: mean-to-spread ratio %.3g exceeds 10 (Appendix-E bound)",
                          prep.report.mean_norm_ratio);
            table.notes.push_back(buf);
        }
    }

    const double eta = base.eta_override.value_or(1.0);

    struct Cell {
        int k;
        int value_idx;
        std::string act;
    };
    std::vector<Cell> cells;
    for (std::size_t vi = 0; vi < k_over_m.size(); ++vi) {
        const int k = std::max(1, static_cast<int>(std::lround(k_over_m[vi] * m)));
        for (const auto& act : sweep_activations())
            cells.push_back(Cell{k, static_cast<int>(vi), act});
    }

    const int per_cell = base.trials;
    const int total = static_cast<int>(cells.size()) * per_cell;
    std::vector<TrialResult> results(total);

    auto external_trial = [&](const Cell& cell, int trial_index) -> TrialResult {
        TrialResult res;
        res.seed = trial_seed(base.base_seed, trial_index);
        try {
            RandomStream trial(res.seed);
            const int k = cell.k;
            const Activation act = Activation::parse(cell.act);

            // disjoint row subsets for the two training stages and the test set
            RandomStream shuffle_stream = trial.derive(10);
            std::vector<int> idx(rows);
            for (int i = 0; i < rows; ++i) idx[i] = i;
            for (int i = rows - 1; i > 0; --i) {
                const int j = static_cast<int>(shuffle_stream.next_u64() % (i + 1));
                std::swap(idx[i], idx[j]);
            }
            auto take = [&](int offset, int count) {
                Eigen::MatrixXd X(count, n);
                Eigen::VectorXd y(count);
                for (int i = 0; i < count; ++i) {
                    X.row(i) = pool.X.row(idx[offset + i]);
                    y[i] = pool.y[idx[offset + i]];
                }
                return std::make_pair(std::move(X), std::move(y));
            };
            auto [Xg, yg] = take(0, m);
            auto [Xr, yr] = take(m, m);
            auto [Xt, yt] = take(2 * m, n_test);

            RandomStream init_stream = trial.derive(3);
            const NetworkInit init = init_network(n, k, trace_est, init_stream);
            const auto step = gradient_step(init, Xg, yg, eta, act);

            // b = 1 for externally supplied data
            const HermiteActivation sigma_hat = build_equivalent_activation(act, 1.0, base.l_degree);

            const double sqrt_k = std::sqrt(static_cast<double>(k));
            const Eigen::MatrixXd pre_ridge = step.F_hat * Xr.transpose();
            const Eigen::MatrixXd feats_nn = act.value(pre_ridge).transpose();
            const Eigen::VectorXd w_nn = ridge_second_layer(feats_nn, yr, base.lambda);
            res.T_nn = ridge_objective(yr, feats_nn * w_nn / sqrt_k, base.lambda, w_nn);

            RandomStream ridge_noise = trial.derive(7);
            const Eigen::MatrixXd feats_h =
                apply_equivalent(sigma_hat, pre_ridge, ridge_noise).transpose();
            const Eigen::VectorXd w_h = ridge_second_layer(feats_h, yr, base.lambda);
            res.T_hermite = ridge_objective(yr, feats_h * w_h / sqrt_k, base.lambda, w_h);

            const Eigen::MatrixXd pre_test = step.F_hat * Xt.transpose();
            const Eigen::VectorXd pred_nn = act.value(pre_test).transpose() * w_nn / sqrt_k;
            RandomStream test_noise = trial.derive(8);
            const Eigen::VectorXd pred_h =
                apply_equivalent(sigma_hat, pre_test, test_noise).transpose() * w_h / sqrt_k;
            const double inv2t = 0.5 / static_cast<double>(n_test);
            res.G_nn = (yt - pred_nn).squaredNorm() * inv2t;
            res.G_hermite = (yt - pred_h).squaredNorm() * inv2t;
        } catch (const std::exception& e) {
            res.error = e.what();
        }
        return res;
    };

    run_indexed(total, resolve_workers(workers), [&](int i) {
        const int cell_idx = i / per_cell;
        results[i] = external_trial(cells[cell_idx], i % per_cell);
    });

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        std::vector<TrialResult> cell_results(results.begin() + ci * per_cell,
                                              results.begin() + (ci + 1) * per_cell);
        aggregate_cell(table, cells[ci].value_idx, k_over_m[cells[ci].value_idx], cells[ci].act,
                       cell_results);
    }
    return table;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::string render_csv(const SweepTable& table) {
    std::string out = "axis,value,activation,metric,mean,stderr,trials\n";
    for (const auto& row : table.rows) {
        out += table.axis;
        out += ',';
        out += fmt_double(row.value);
        out += ',';
        out += row.activation;
        out += ',';
        out += row.metric;
        out += ',';
        out += fmt_double(row.mean);
        out += ',';
        out += fmt_double(row.stderr_);
        out += ',';
        out += std::to_string(row.trials);
        out += '\n';
    }
    return out;
}

std::string render_json(const SweepTable& table) {
    json j;
    j["axis"] = table.axis;
    j["values"] = table.values;
    j["notes"] = table.notes;
    json records = json::array();
    for (const auto& row : table.rows) {
        json r;
        r["value"] = row.value;
        r["activation"] = row.activation;
        r["metric"] = row.metric;
        r["mean"] = row.mean;
        r["stderr"] = row.stderr_;
        r["trials"] = row.trials;
        records.push_back(std::move(r));
    }
    j["records"] = std::move(records);
    return j.dump(2) + "\n";
}

void emit(const SweepTable& table, EmitFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("emit: cannot write '" + path + "'");
    const std::string text = format == EmitFormat::CSV ? render_csv(table) : render_json(table);
    out << text;
    if (!out) throw NumericalError("emit: short write to '" + path + "'");
}

}  // namespace hermeq
