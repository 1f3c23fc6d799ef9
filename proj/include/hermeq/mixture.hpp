#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "hermeq/activation.hpp"
#include "hermeq/random.hpp"

namespace hermeq {

/// Low-rank-plus-identity covariance: Sigma = I_n + sum_i theta_i g_i g_i^T
/// with orthonormal spike directions g_i.
struct CovarianceSpec {
    int dim_n = 0;
    Eigen::VectorXd thetas;      // d_c spike strengths, all > 0
    Eigen::MatrixXd directions;  // n x d_c, orthonormal columns

    int rank() const { return static_cast<int>(thetas.size()); }
    double trace() const { return static_cast<double>(dim_n) + thetas.sum(); }

    /// Throws unless directions are pairwise orthonormal within 1e-10
    /// and all thetas positive.
    void validate() const;

    /// Sigma^{1/2} z = z + sum_i (sqrt(1+theta_i)-1) (g_i^T z) g_i.
    Eigen::VectorXd sqrt_apply(const Eigen::VectorXd& z) const;

    /// Row-wise Sigma^{1/2} on a batch (rows are samples).
    Eigen::MatrixXd sqrt_apply_rows(const Eigen::MatrixXd& z) const;

    /// Dense Sigma (small n only; test and fallback use).
    Eigen::MatrixXd dense() const;
};

struct MixtureComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;  // empty means zero
    CovarianceSpec cov;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    bool allow_nonzero_means = false;

    int dim() const { return components.empty() ? 0 : components.front().cov.dim_n; }
    int n_components() const { return static_cast<int>(components.size()); }

    /// Validates weights (sum 1 within 1e-12), equal traces, zero means
    /// unless the non-zero-mean extension flag is set.
    void validate() const;
};

struct CovarianceSummary {
    double spectral_norm = 0.0;
    double trace = 0.0;
    double sqrt_spectral_norm = 0.0;
};

/// Spectral norm and trace of Cov(x) for the whole mixture, computed on
/// the span of all spikes and means (identity adds 1 to every eigenvalue).
/// Falls back to a dense eigensolve for n <= 2048 if the span basis
/// degenerates.
CovarianceSummary mixture_covariance(const MixtureSpec& spec);

/// Exponent bookkeeping for assumption A.2: eta = n^{beta*alpha},
/// spike scale n^{beta*(1-alpha)}.
struct ScalingSpec {
    double alpha = 0.0;
    double beta = 0.0;
    int n = 0;

    double eta() const;
    double theta_scale() const;
    void validate() const;
};

enum class LabelKind { SingleIndex, ClassSign };

struct TargetSpec {
    Eigen::VectorXd xi;
    LabelKind kind = LabelKind::SingleIndex;
    Activation sigma_star;  // used by SingleIndex
};

struct Dataset {
    Eigen::MatrixXd X;   // m x n
    Eigen::VectorXd y;   // labels (may be set after sampling)
    Eigen::VectorXi comp;  // 1-based component index per row
    std::uint64_t id = 0;  // identity tag; distinct per sampled batch
};

/// Draws m rows from the mixture; labels are left empty.
Dataset sample_batch(const MixtureSpec& spec, int m, RandomStream& stream);

enum class XiMode { RandomDirection, SpikeAligned };

/// Target direction scaled so that ||xi|| = C / ||Sigma^{1/2}||.
/// SpikeAligned uses the normalized sum of the first spikes of the
/// first two components.
Eigen::VectorXd build_xi(const MixtureSpec& spec, XiMode mode, double C, RandomStream& stream);

/// SingleIndex: y_i = sigma*(xi^T x_i). ClassSign: y_i = 2 c_i - 3 (two
/// components only).
Eigen::VectorXd label(const TargetSpec& target, const Eigen::MatrixXd& X,
                      const Eigen::VectorXi& comp);

/// Random orthonormal set of `count` directions in R^n (modified
/// Gram-Schmidt with one re-orthogonalization pass).
Eigen::MatrixXd random_orthonormal(int n, int count, RandomStream& stream);

/// Two-component mixture used throughout the experiments: d spikes per
/// component at strength theta, cross-alignment a between the first
/// spikes (gamma_2,1 = a gamma_1,1 + sqrt(1-a^2) gamma_perp).
MixtureSpec two_component_mixture(int n, int d, double theta, double rho1, double alignment,
                                  RandomStream& stream);

/// Same, with per-spike strengths drawn uniformly from (0, theta_max).
MixtureSpec two_component_mixture_uniform(int n, int d, double theta_max, double rho1,
                                          double alignment, RandomStream& stream);

}  // namespace hermeq
