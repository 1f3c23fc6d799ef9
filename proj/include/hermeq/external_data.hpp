#pragma once

#include <Eigen/Dense>

#include <string>

#include "hermeq/mixture.hpp"
#include "hermeq/random.hpp"

namespace hermeq {

/// Binary matrix container: 16-byte header (magic "GMIX", u32 rows,
/// u32 cols, u32 dtype; dtype 1 = f64 little-endian), then row-major
/// payload.
Eigen::MatrixXd read_gmix(const std::string& path);
void write_gmix(const std::string& path, const Eigen::MatrixXd& m);

/// Headerless comma-separated floats, one sample per line.
Eigen::MatrixXd read_csv_matrix(const std::string& path);

/// Dispatches on the GMIX magic, falling back to CSV.
Eigen::MatrixXd read_matrix(const std::string& path);

struct PreprocessReport {
    double t = 1.0;        // class-2 rescale factor sqrt(Tr1/Tr2)
    double trace1 = 0.0;   // class-1 covariance trace estimate (after demeaning)
    double trace2 = 0.0;
    double input_scale = 0.0;  // sqrt(n / Tr1)
    double mean_norm_ratio = 0.0;  // max ||mu_c||^2 / ||Sigma|| (non-zero-mean mode)
    bool mean_ratio_warning = false;
};

struct PreprocessResult {
    Dataset data;  // labels +1 (class a) / -1 (class b), comp 1/2
    PreprocessReport report;
};

/// Appendix-F pipeline: estimate per-class mean and covariance trace,
/// demean (per class, or globally when nonzero_means is set), rescale
/// class 2 by t = sqrt(Tr1/Tr2), then map x = sqrt(n/Tr1) x_bar + eps
/// with eps ~ N(0, I).
PreprocessResult preprocess_external(const Eigen::MatrixXd& class_a,
                                     const Eigen::MatrixXd& class_b, RandomStream& noise,
                                     bool nonzero_means = false);

}  // namespace hermeq
