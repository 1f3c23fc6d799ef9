#pragma once

#include <vector>

namespace hermeq {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    long count = 0;
};

MeanStderr mean_stderr(const std::vector<double>& xs);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y = a + b x with the usual slope standard error.
SlopeFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Weighted least squares with known per-point standard errors. The
/// slope standard error is scaled by sqrt(chi^2/dof) when the fit
/// misses, so it covers both measurement noise and curvature.
SlopeFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& y_se);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;  // two-sided, t approximation
};

/// Spearman rank correlation with tie-averaged ranks.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided p-value of a Student-t statistic with df degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace hermeq
