#include "hermeq/external_data.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "hermeq/errors.hpp"

namespace hermeq {

namespace {
constexpr char kMagic[4] = {'G', 'M', 'I', 'X'};
constexpr std::uint32_t kDtypeF64 = 1;
}  // namespace

Eigen::MatrixXd read_gmix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    char magic[4];
    std::uint32_t rows = 0, cols = 0, dtype = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    in.read(reinterpret_cast<char*>(&dtype), 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError("'" + path + "' is not a GMIX container");
    if (dtype != kDtypeF64)
        throw ConfigError("'" + path + "': unsupported dtype " + std::to_string(dtype));
    Eigen::MatrixXd m(rows, cols);
    std::vector<double> row(cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols) * 8);
        if (!in) throw ConfigError("'" + path + "': truncated payload at row " + std::to_string(r));
        for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

void write_gmix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    out.write(reinterpret_cast<const char*>(&kDtypeF64), 4);
    std::vector<double> row(cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) row[c] = m(r, c);
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(cols) * 8);
    }
    if (!out) throw NumericalError("short write to '" + path + "'");
}

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("'" + path + "': cannot parse '" + cell + "' as a number");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError("'" + path + "': ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("'" + path + "': empty file");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, kMagic, 4) == 0) return read_gmix(path);
    return read_csv_matrix(path);
}

PreprocessResult preprocess_external(const Eigen::MatrixXd& class_a,
                                     const Eigen::MatrixXd& class_b, RandomStream& noise,
                                     bool nonzero_means) {
    if (class_a.rows() < 2 || class_b.rows() < 2)
        throw ConfigError("preprocess_external: each class needs at least two samples");
    if (class_a.cols() != class_b.cols())
        throw ConfigError("preprocess_external: class column counts differ");
    const Eigen::Index n = class_a.cols();
    const Eigen::Index ma = class_a.rows();
    const Eigen::Index mb = class_b.rows();

    const Eigen::RowVectorXd mean_a = class_a.colwise().mean();
    const Eigen::RowVectorXd mean_b = class_b.colwise().mean();

    // covariance traces estimated from per-class scatter (mean-invariant)
    const double tr1 =
        (class_a.rowwise() - mean_a).squaredNorm() / static_cast<double>(ma - 1);
    const double tr2 =
        (class_b.rowwise() - mean_b).squaredNorm() / static_cast<double>(mb - 1);
    if (!(tr1 > 1e-12) || !(tr2 > 1e-12))
        throw NumericalError("preprocess_external: zero covariance trace estimate");

    PreprocessResult out;
    out.report.trace1 = tr1;
    out.report.trace2 = tr2;
    out.report.t = std::sqrt(tr1 / tr2);
    out.report.input_scale = std::sqrt(static_cast<double>(n) / tr1);

    Eigen::MatrixXd xa = class_a;
    Eigen::MatrixXd xb = class_b;
    if (nonzero_means) {
        // demean globally; per-class means survive as structure
        const Eigen::RowVectorXd global =
            (mean_a * static_cast<double>(ma) + mean_b * static_cast<double>(mb)) /
            static_cast<double>(ma + mb);
        xa.rowwise() -= global;
        xb.rowwise() -= global;
    } else {
        xa.rowwise() -= mean_a;
        xb.rowwise() -= mean_b;
    }
    xb *= out.report.t;

    Dataset ds;
    ds.X.resize(ma + mb, n);
    ds.y.resize(ma + mb);
    ds.comp.resize(ma + mb);
    const double s = out.report.input_scale;
    for (Eigen::Index i = 0; i < ma; ++i) {
        ds.X.row(i) = s * xa.row(i) + noise.normal_vector(n).transpose();
        ds.y[i] = 1.0;
        ds.comp[i] = 1;
    }
    for (Eigen::Index i = 0; i < mb; ++i) {
        ds.X.row(ma + i) = s * xb.row(i) + noise.normal_vector(n).transpose();
        ds.y[ma + i] = -1.0;
        ds.comp[ma + i] = 2;
    }
    ds.id = noise.next_u64();

    if (nonzero_means) {
        // Appendix-E sanity: ||mu_c||^2 should stay within ~C * ||Sigma||;
        // warn past ratio 10 rather than fail
        const double mu1 = (s * (mean_a - (mean_a + mean_b) / 2.0)).squaredNorm();
        // crude spread proxy: largest per-class second moment along the top data direction
        const double spread = std::max(1.0, ds.X.squaredNorm() / static_cast<double>(ds.X.rows()) /
                                                static_cast<double>(n));
        out.report.mean_norm_ratio = mu1 / spread;
        out.report.mean_ratio_warning = out.report.mean_norm_ratio > 10.0;
    }

    out.data = std::move(ds);
    return out;
}

}  // namespace hermeq
