#include "hermeq/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hermeq/errors.hpp"

namespace hermeq {

void CovarianceSpec::validate() const {
    if (dim_n < 1) throw ConfigError("CovarianceSpec: dimension must be positive");
    if (directions.cols() != thetas.size() || (thetas.size() > 0 && directions.rows() != dim_n))
        throw ConfigError("CovarianceSpec: direction/theta shape mismatch");
    for (int i = 0; i < thetas.size(); ++i)
        if (!(thetas[i] > 0.0)) throw ConfigError("CovarianceSpec: spike strengths must be positive");
    for (int i = 0; i < directions.cols(); ++i) {
        for (int j = i; j < directions.cols(); ++j) {
            const double dot = directions.col(i).dot(directions.col(j));
            const double target = (i == j) ? 1.0 : 0.0;
            if (std::abs(dot - target) > 1e-10)
                throw ConfigError("CovarianceSpec: spike directions not orthonormal (|g_" +
                                  std::to_string(i) + "^T g_" + std::to_string(j) + " - " +
                                  std::to_string(target) + "| > 1e-10)");
        }
    }
}

Eigen::VectorXd CovarianceSpec::sqrt_apply(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out = z;
    for (int i = 0; i < thetas.size(); ++i) {
        const double c = std::sqrt(1.0 + thetas[i]) - 1.0;
        out += c * directions.col(i).dot(z) * directions.col(i);
    }
    return out;
}

Eigen::MatrixXd CovarianceSpec::sqrt_apply_rows(const Eigen::MatrixXd& z) const {
    if (thetas.size() == 0) return z;
    Eigen::VectorXd c(thetas.size());
    for (int i = 0; i < thetas.size(); ++i) c[i] = std::sqrt(1.0 + thetas[i]) - 1.0;
    // Z + (Z G) diag(c) G^T
    return z + (z * directions) * c.asDiagonal() * directions.transpose();
}

Eigen::MatrixXd CovarianceSpec::dense() const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(dim_n, dim_n);
    for (int i = 0; i < thetas.size(); ++i)
        s += thetas[i] * directions.col(i) * directions.col(i).transpose();
    return s;
}

void MixtureSpec::validate() const {
    if (components.empty()) throw ConfigError("MixtureSpec: no components");
    double wsum = 0.0;
    const int n = components.front().cov.dim_n;
    const double tr0 = components.front().cov.trace();
    for (const auto& c : components) {
        if (!(c.weight > 0.0) || c.weight > 1.0)
            throw ConfigError("MixtureSpec: component weights must lie in (0, 1]");
        wsum += c.weight;
        c.cov.validate();
        if (c.cov.dim_n != n) throw ConfigError("MixtureSpec: inconsistent dimensions");
        if (std::abs(c.cov.trace() - tr0) > 1e-6 * std::max(1.0, tr0))
            throw ConfigError("MixtureSpec: component traces differ (assumption A.3)");
        if (c.mean.size() != 0 && c.mean.size() != n)
            throw ConfigError("MixtureSpec: mean dimension mismatch");
        if (!allow_nonzero_means && c.mean.size() != 0 && c.mean.norm() > 0.0)
            throw ConfigError("MixtureSpec: non-zero means require the extension flag");
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw ConfigError("MixtureSpec: weights sum to " + std::to_string(wsum) + ", expected 1");
}

namespace {

// Orthonormal basis of the given columns, dropping near-dependent ones.
Eigen::MatrixXd span_basis(const Eigen::MatrixXd& cols) {
    Eigen::MatrixXd q(cols.rows(), cols.cols());
    int r = 0;
    for (int i = 0; i < cols.cols(); ++i) {
        Eigen::VectorXd v = cols.col(i);
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < r; ++j) v -= q.col(j).dot(v) * q.col(j);
        const double nv = v.norm();
        if (nv > 1e-10 * std::max(1.0, cols.col(i).norm())) q.col(r++) = v / nv;
    }
    return q.leftCols(r);
}

}  // namespace

CovarianceSummary mixture_covariance(const MixtureSpec& spec) {
    spec.validate();
    const int n = spec.dim();

    // mixture covariance: Sigma = I + sum_c rho_c (lowrank_c + mu_c mu_c^T) - mu_bar mu_bar^T
    Eigen::VectorXd mu_bar = Eigen::VectorXd::Zero(n);
    bool any_mean = false;
    int span_cols = 0;
    for (const auto& c : spec.components) {
        span_cols += c.cov.rank();
        if (c.mean.size() != 0 && c.mean.norm() > 0.0) {
            mu_bar += c.weight * c.mean;
            any_mean = true;
            ++span_cols;
        }
    }

    CovarianceSummary out;
    out.trace = static_cast<double>(n);
    for (const auto& c : spec.components) {
        out.trace += c.weight * c.cov.thetas.sum();
        if (c.mean.size() != 0) out.trace += c.weight * c.mean.squaredNorm();
    }
    if (any_mean) out.trace -= mu_bar.squaredNorm();

    if (span_cols == 0) {
        out.spectral_norm = 1.0;
        out.sqrt_spectral_norm = 1.0;
        return out;
    }

    Eigen::MatrixXd cols(n, span_cols);
    int k = 0;
    for (const auto& c : spec.components) {
        for (int i = 0; i < c.cov.rank(); ++i) cols.col(k++) = c.cov.directions.col(i);
        if (c.mean.size() != 0 && c.mean.norm() > 0.0) cols.col(k++) = c.mean;
    }

    Eigen::MatrixXd q = span_basis(cols);
    if (q.cols() == 0) {
        // degenerate basis; dense fallback for moderate n
        if (n > 2048)
            throw NumericalError("mixture_covariance: span basis degenerated at n > 2048");
        Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
        for (const auto& c : spec.components) {
            sigma += c.weight * c.cov.dense();
            if (c.mean.size() != 0) sigma += c.weight * c.mean * c.mean.transpose();
        }
        if (any_mean) sigma -= mu_bar * mu_bar.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
        out.spectral_norm = es.eigenvalues().maxCoeff();
        out.sqrt_spectral_norm = std::sqrt(out.spectral_norm);
        return out;
    }

    // M = Q^T (Sigma - I) Q on the span
    const int r = static_cast<int>(q.cols());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(r, r);
    for (const auto& c : spec.components) {
        if (c.cov.rank() > 0) {
            const Eigen::MatrixXd b = q.transpose() * c.cov.directions;  // r x d_c
            m += c.weight * b * c.cov.thetas.asDiagonal() * b.transpose();
        }
        if (c.mean.size() != 0 && c.mean.norm() > 0.0) {
            const Eigen::VectorXd bm = q.transpose() * c.mean;
            m += c.weight * bm * bm.transpose();
        }
    }
    if (any_mean) {
        const Eigen::VectorXd bm = q.transpose() * mu_bar;
        m -= bm * bm.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    out.spectral_norm = 1.0 + std::max(0.0, es.eigenvalues().maxCoeff());
    out.sqrt_spectral_norm = std::sqrt(out.spectral_norm);
    return out;
}

double ScalingSpec::eta() const { return std::pow(static_cast<double>(n), beta * alpha); }
double ScalingSpec::theta_scale() const {
    return std::pow(static_cast<double>(n), beta * (1.0 - alpha));
}

void ScalingSpec::validate() const {
    if (n < 1) throw ConfigError("ScalingSpec: n must be positive");
    if (alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
        throw ConfigError("ScalingSpec: alpha and beta must lie in [0, 1]");
    const double lhs = eta() * theta_scale();
    const double rhs = std::pow(static_cast<double>(n), beta);
    if (std::abs(lhs - rhs) > 1e-9 * rhs)
        throw NumericalError("ScalingSpec: eta * n^{beta(1-alpha)} deviates from n^beta");
}

Dataset sample_batch(const MixtureSpec& spec, int m, RandomStream& stream) {
    if (m < 1) throw ConfigError("sample_batch: m must be >= 1");
    const int n = spec.dim();
    const int nc = spec.n_components();

    Eigen::VectorXd cumulative(nc);
    double acc = 0.0;
    for (int c = 0; c < nc; ++c) {
        acc += spec.components[c].weight;
        cumulative[c] = acc;
    }

    Dataset ds;
    ds.id = stream.next_u64();
    ds.X.resize(m, n);
    ds.comp.resize(m);
    for (int i = 0; i < m; ++i) {
        const int c = stream.categorical(cumulative);
        ds.comp[i] = c + 1;
        Eigen::VectorXd z = stream.normal_vector(n);
        Eigen::VectorXd x = spec.components[c].cov.sqrt_apply(z);
        if (spec.components[c].mean.size() != 0) x += spec.components[c].mean;
        ds.X.row(i) = x.transpose();
    }
    return ds;
}

Eigen::VectorXd build_xi(const MixtureSpec& spec, XiMode mode, double C, RandomStream& stream) {
    if (!(C > 0.0)) throw ConfigError("build_xi: C must be positive");
    const int n = spec.dim();
    Eigen::VectorXd dir;
    if (mode == XiMode::RandomDirection) {
        dir = stream.normal_vector(n);
    } else {
        if (spec.n_components() < 2 || spec.components[0].cov.rank() < 1 ||
            spec.components[1].cov.rank() < 1)
            throw ConfigError("build_xi: SpikeAligned needs a spike in each of the first two components");
        dir = spec.components[0].cov.directions.col(0) + spec.components[1].cov.directions.col(0);
    }
    const double nd = dir.norm();
    if (nd == 0.0) throw NumericalError("build_xi: degenerate direction");
    const auto summary = mixture_covariance(spec);
    return dir * (C / (nd * summary.sqrt_spectral_norm));
}

Eigen::VectorXd label(const TargetSpec& target, const Eigen::MatrixXd& X,
                      const Eigen::VectorXi& comp) {
    if (target.kind == LabelKind::SingleIndex) {
        if (target.xi.size() != X.cols())
            throw ConfigError("label: xi dimension does not match the data");
        return target.sigma_star.value((X * target.xi).eval());
    }
    // ClassSign: components {1,2} -> {-1,+1}
    const int cmax = comp.size() > 0 ? comp.maxCoeff() : 0;
    if (cmax > 2) throw ConfigError("label: ClassSign requires exactly two components");
    Eigen::VectorXd y(comp.size());
    for (int i = 0; i < comp.size(); ++i) y[i] = 2.0 * comp[i] - 3.0;
    return y;
}

Eigen::MatrixXd random_orthonormal(int n, int count, RandomStream& stream) {
    if (count > n) throw ConfigError("random_orthonormal: more directions than dimensions");
    Eigen::MatrixXd q(n, count);
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd v = stream.normal_vector(n);
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < i; ++j) v -= q.col(j).dot(v) * q.col(j);
        const double nv = v.norm();
        if (nv < 1e-12) throw NumericalError("random_orthonormal: degenerate draw");
        q.col(i) = v / nv;
    }
    return q;
}

namespace {

MixtureSpec two_component_impl(int n, int d, const Eigen::VectorXd& thetas1,
                               const Eigen::VectorXd& thetas2, double rho1, double alignment,
                               RandomStream& stream) {
    if (alignment < 0.0 || alignment > 1.0)
        throw ConfigError("mixture alignment must lie in [0, 1]");
    if (rho1 <= 0.0 || rho1 >= 1.0) throw ConfigError("rho1 must lie in (0, 1)");

    // 2d fresh directions; component 2's first spike is then rotated
    // toward component 1's to the requested alignment
    Eigen::MatrixXd all = random_orthonormal(n, 2 * d, stream);
    MixtureSpec spec;
    spec.components.resize(2);
    spec.components[0].weight = rho1;
    spec.components[1].weight = 1.0 - rho1;
    spec.components[0].cov.dim_n = n;
    spec.components[1].cov.dim_n = n;
    spec.components[0].cov.thetas = thetas1;
    spec.components[1].cov.thetas = thetas2;
    spec.components[0].cov.directions = all.leftCols(d);
    Eigen::MatrixXd dir2 = all.rightCols(d);
    if (alignment > 0.0) {
        const Eigen::VectorXd g11 = all.col(0);
        dir2.col(0) = alignment * g11 + std::sqrt(1.0 - alignment * alignment) * dir2.col(0);
        // re-orthonormalize the remaining spikes of component 2 against the rotated first
        for (int i = 1; i < d; ++i) {
            Eigen::VectorXd v = dir2.col(i);
            for (int pass = 0; pass < 2; ++pass)
                for (int j = 0; j < i; ++j) v -= dir2.col(j).dot(v) * dir2.col(j);
            dir2.col(i) = v / v.norm();
        }
    }
    spec.components[1].cov.directions = dir2;
    spec.validate();
    return spec;
}

}  // namespace

MixtureSpec two_component_mixture(int n, int d, double theta, double rho1, double alignment,
                                  RandomStream& stream) {
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(d, theta);
    return two_component_impl(n, d, t, t, rho1, alignment, stream);
}

MixtureSpec two_component_mixture_uniform(int n, int d, double theta_max, double rho1,
                                          double alignment, RandomStream& stream) {
    Eigen::VectorXd t(d);
    for (int i = 0; i < d; ++i) t[i] = theta_max * stream.uniform_pos();
    // both components share the drawn strengths so traces stay equal (A.3)
    return two_component_impl(n, d, t, t, rho1, alignment, stream);
}

}  // namespace hermeq
