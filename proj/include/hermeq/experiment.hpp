#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hermeq/mixture.hpp"
#include "hermeq/stats.hpp"

namespace hermeq {

struct MixtureDescriptor {
    int components = 2;
    std::vector<double> rho = {0.5, 0.5};
    std::vector<int> ranks = {1, 1};
    double alignment = 0.0;
    std::string theta_mode = "fixed";  // fixed | uniform
};

struct TargetDescriptor {
    std::string kind = "single_index";  // single_index | class_sign
    std::string sigma_star = "relu";
};

struct ExperimentConfig {
    int n = 0, m = 0, k = 0;
    double alpha = 0.5;
    double beta = 0.5;
    double lambda = 1e-4;
    int l_degree = 3;
    std::string activation = "relu";
    TargetDescriptor target;
    MixtureDescriptor mixture;
    int n_test = 0;  // 0 -> defaults to 4m
    int trials = 20;
    std::uint64_t base_seed = 1;

    // optional knobs
    std::string xi_mode = "random";  // random | spike_aligned
    double C_xi = 1.0;
    bool l_auto = false;  // match l to the equivalence window for the current beta
    std::optional<double> eta_override;
    bool nonzero_means = false;  // external preprocessing mode
    bool record_norms = false;
    std::string generator = "mt19937_64-boxmuller";

    void validate() const;

    /// True when beta falls outside ((l-2)/(l-1), (l-1)/l), the window
    /// in which the degree-l equivalent model is guaranteed.
    bool l_window_warning() const;

    int effective_n_test() const { return n_test > 0 ? n_test : 4 * m; }
    double eta_for(int n_dim) const;
};

/// Smallest degree l whose window contains beta: l = ceil(1/(1-beta)),
/// bumped by one on integer boundaries; at least 2.
int equivalence_window_degree(double beta);

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct NormReport {
    double u_norm = 0.0;
    double v_norm = 0.0;
    double delta_norm = 0.0;
};

struct TrialResult {
    std::uint64_t seed = 0;
    double T_nn = 0.0, G_nn = 0.0;
    double T_hermite = 0.0, G_hermite = 0.0;
    std::optional<NormReport> norms;
    std::string error;  // non-empty when the trial failed

    bool failed() const { return !error.empty(); }
};

std::uint64_t trial_seed(std::uint64_t base_seed, int trial_index);

/// One full two-stage trial: fresh mixture, target and init; gradient
/// step on one batch; ridge on an independent batch for both the
/// network activation and its Hermite counterpart on the same F_hat;
/// shared fresh test set for both models.
TrialResult run_trial(const ExperimentConfig& cfg, int trial_index);

enum class SweepAxis { KOverM, Alpha, Beta, MixtureRatio, Alignment, Rank, Lambda, EtaOverride };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

struct SweepRow {
    double value = 0.0;
    std::string activation;
    std::string metric;
    double mean = 0.0;
    double stderr_ = 0.0;
    long trials = 0;
};

struct SweepTable {
    std::string axis;
    std::vector<double> values;
    std::vector<SweepRow> rows;
    std::vector<std::string> notes;
    // per (value index, activation) raw trial results, for downstream tests
    std::map<std::pair<int, std::string>, std::vector<TrialResult>> cells;
};

/// Runs trials per axis value for each of {relu, tanh, sigmoid},
/// aggregating mean and standard error per metric. Worker count 0 means
/// "resolve from HERMITE_EQUIV_THREADS / hardware".
SweepTable run_sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                     int workers = 0);

/// External-data pipeline (Appendix-F preprocessing, b = 1): sweep over
/// k/m on a fixed preprocessed sample pool.
SweepTable run_external(const ExperimentConfig& cfg, const std::string& class_a_path,
                        const std::string& class_b_path, const std::vector<double>& k_over_m,
                        int workers = 0);

enum class EmitFormat { CSV, JSON };

/// Writes the table; byte-stable for identical inputs. CSV columns:
/// axis,value,activation,metric,mean,stderr,trials.
void emit(const SweepTable& table, EmitFormat format, const std::string& path);
std::string render_csv(const SweepTable& table);
std::string render_json(const SweepTable& table);

int resolve_workers(int requested);

}  // namespace hermeq
