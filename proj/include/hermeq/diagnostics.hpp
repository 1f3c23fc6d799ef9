#pragma once

#include <map>
#include <string>
#include <vector>

#include "hermeq/mixture.hpp"
#include "hermeq/stats.hpp"

namespace hermeq {

struct DiagnosticsConfig {
    std::vector<int> grid;          // >= 3 sizes, geometric spacing; k = m = n
    double alpha = 0.5;
    double beta = 0.5;
    int trials_per_n = 10;
    int kappa_draws_per_trial = 16;  // max|a| averages over fresh structure coordinates
    int d = 1;                      // spikes per component
    double rho1 = 0.5;
    double alignment = 0.0;
    XiMode xi_mode = XiMode::SpikeAligned;
    Activation activation = Activation::parse("relu");
    Activation target = Activation::parse("relu");
    double C_xi = 1.0;
    std::uint64_t base_seed = 1;
};

struct SlopeReport {
    // quantity -> per-grid-point trial means and standard errors
    std::map<std::string, std::vector<MeanStderr>> per_n;
    // quantity -> log-log slope fit over trial-averaged values
    std::map<std::string, SlopeFit> slopes;
    std::vector<int> grid;
};

/// Measures, at each grid size, max_i |a_{i|kappa}|, the extremes of the
/// projected-feature Gram deviations max|f~_i^T f~_j| (off-diagonal) and
/// max|f~_i^T f~_i - b^2|, and the decomposition norms ||u||, ||v||,
/// ||Delta||, then reports least-squares log-log slopes.
SlopeReport scaling_diagnostic(const DiagnosticsConfig& cfg);

}  // namespace hermeq
