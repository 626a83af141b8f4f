#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "vbnet/errors.hpp"
#include "vbnet/matrix.hpp"
#include "vbnet/rng.hpp"

namespace vbnet {

// Per-column means and scales fitted on one split and applied elsewhere.
// Columns with (numerically) zero spread keep scale 1 so constant features
// pass through centered but unscaled.
struct ColumnStats {
    std::vector<double> mean;
    std::vector<double> scale;
};

inline ColumnStats fit_column_stats(const Matrix& m) {
    ColumnStats stats;
    stats.mean.assign(m.cols(), 0.0);
    stats.scale.assign(m.cols(), 1.0);
    const double n = static_cast<double>(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j) stats.mean[j] += row[j];
    }
    for (double& v : stats.mean) v /= n;
    if (m.rows() > 1) {
        std::vector<double> ss(m.cols(), 0.0);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double* row = m.row_ptr(i);
            for (std::size_t j = 0; j < m.cols(); ++j) {
                const double d = row[j] - stats.mean[j];
                ss[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double sd = std::sqrt(ss[j] / (n - 1.0));
            if (sd > 1e-12) stats.scale[j] = sd;
        }
    }
    return stats;
}

inline Matrix apply_standardize(const Matrix& m, const ColumnStats& stats) {
    if (m.cols() != stats.mean.size()) {
        throw ShapeError("apply_standardize: matrix " + m.shape_str() + " vs stats over " +
                         std::to_string(stats.mean.size()) + " columns");
    }
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (std::size_t j = 0; j < out.cols(); ++j) {
            row[j] = (row[j] - stats.mean[j]) / stats.scale[j];
        }
    }
    return out;
}

inline Matrix invert_standardize(const Matrix& m, const ColumnStats& stats) {
    if (m.cols() != stats.mean.size()) {
        throw ShapeError("invert_standardize: matrix " + m.shape_str() + " vs stats over " +
                         std::to_string(stats.mean.size()) + " columns");
    }
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row_ptr(i);
        for (std::size_t j = 0; j < out.cols(); ++j) {
            row[j] = row[j] * stats.scale[j] + stats.mean[j];
        }
    }
    return out;
}

// Row-aligned inputs and targets plus the standardization actually applied
// (empty optionals mean raw data).
struct Dataset {
    Matrix x; // n x p
    Matrix y; // n x q
    std::vector<std::string> feature_names;
    std::optional<ColumnStats> x_stats;
    std::optional<ColumnStats> y_stats;

    std::size_t n() const { return x.rows(); }
    std::size_t p() const { return x.cols(); }
    std::size_t q() const { return y.cols(); }

    void validate() const {
        if (x.rows() == 0) throw ConfigError("Dataset: needs at least one row");
        if (x.rows() != y.rows()) {
            throw ShapeError("Dataset: x has " + std::to_string(x.rows()) + " rows but y has " +
                             std::to_string(y.rows()));
        }
    }
};

// y = x + 2 sin(2 pi (x + e)) + 2 sin(4 pi (x + e)) + e; one noise draw e
// enters both sine arguments and the additive term.
inline double curve_value(double x, double e) {
    const double two_pi = 2.0 * std::numbers::pi;
    return x + 2.0 * std::sin(two_pi * (x + e)) + 2.0 * std::sin(2.0 * two_pi * (x + e)) + e;
}

// Synthetic curve dataset with x ~ Uniform[a, b] and e ~ N(0, noise_sd^2)
// drawn fresh per observation.
inline Dataset gen_curve(std::size_t n, double support_lo, double support_hi,
                         double noise_sd, RngState& rng) {
    if (!(support_lo < support_hi)) {
        throw ConfigError("gen_curve: invalid support [" + std::to_string(support_lo) + ", " +
                          std::to_string(support_hi) + "]");
    }
    if (n < 1) throw ConfigError("gen_curve: n must be >= 1");
    Dataset ds;
    ds.x = Matrix(n, 1);
    ds.y = Matrix(n, 1);
    ds.feature_names = {"x"};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(support_lo, support_hi);
        const double e = noise_sd * rng.normal();
        ds.x(i, 0) = x;
        ds.y(i, 0) = curve_value(x, e);
    }
    return ds;
}

// High-dimensional regression surrogate: factor-structured inputs
// (x = F L + idiosyncratic noise) with a sparse linear signal over the
// observed columns. Stands in for the riboflavin data when the file is
// absent.
inline Dataset gen_sparse_surrogate(std::size_t n, std::size_t p, std::size_t n_factors,
                                    std::size_t n_signal, double noise_sd, RngState& rng) {
    if (n < 2 || p < 1 || n_signal > p) {
        throw ConfigError("gen_sparse_surrogate: invalid sizes");
    }
    Matrix factors(n, n_factors);
    for (double& v : factors.data()) v = rng.normal();
    Matrix loadings(n_factors, p);
    for (double& v : loadings.data()) v = rng.normal();

    Dataset ds;
    ds.x = matmul(factors, loadings);
    for (double& v : ds.x.data()) v += 0.5 * rng.normal();

    // sparse coefficients on a random subset of columns
    std::vector<std::size_t> cols(p);
    for (std::size_t j = 0; j < p; ++j) cols[j] = j;
    for (std::size_t j = p - 1; j > 0; --j) {
        std::swap(cols[j], cols[rng.next_below(j + 1)]);
    }
    std::vector<double> beta(p, 0.0);
    for (std::size_t k = 0; k < n_signal; ++k) {
        beta[cols[k]] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
    }

    ds.y = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = ds.x.row_ptr(i);
        for (std::size_t j = 0; j < p; ++j) acc += row[j] * beta[j];
        ds.y(i, 0) = acc + noise_sd * rng.normal();
    }
    ds.feature_names.resize(p);
    for (std::size_t j = 0; j < p; ++j) ds.feature_names[j] = "g" + std::to_string(j + 1);
    return ds;
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delimiter)) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == delimiter) {
        cells.emplace_back();
    }
    return cells;
}

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t' || *begin == '\r')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end) {
        throw DataError("non-numeric cell at row " + std::to_string(row) + ", column " +
                        std::to_string(col) + ": '" + cell + "'");
    }
    return value;
}

} // namespace detail

// Read a delimited text file with one header row; the named target column
// becomes y and all remaining columns become x, in file order. Row/column
// positions in error messages are 1-based over data rows.
inline Dataset load_delimited(const std::string& path, const std::string& target_column,
                              char delimiter = ',') {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty file: " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = detail::split_line(line, delimiter);
    std::size_t target_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == target_column) {
            target_idx = j;
            break;
        }
    }
    if (target_idx == header.size()) {
        throw DataError("target column '" + target_column + "' not found in " + path);
    }

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row_no;
        const std::vector<std::string> cells = detail::split_line(line, delimiter);
        if (cells.size() != header.size()) {
            throw DataError("row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        }
        std::vector<double> parsed(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            parsed[j] = detail::parse_cell(cells[j], row_no, j + 1);
        }
        rows.push_back(std::move(parsed));
    }
    if (rows.empty()) {
        throw DataError("no data rows in " + path);
    }

    Dataset ds;
    const std::size_t p = header.size() - 1;
    ds.x = Matrix(rows.size(), p);
    ds.y = Matrix(rows.size(), 1);
    ds.feature_names.reserve(p);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j != target_idx) ds.feature_names.push_back(header[j]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t xj = 0;
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            if (j == target_idx) {
                ds.y(i, 0) = rows[i][j];
            } else {
                ds.x(i, xj++) = rows[i][j];
            }
        }
    }
    return ds;
}

inline std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// Persist a dataset in the same delimited format load_delimited reads.
// Doubles are written with shortest round-trip precision so written-then-read
// values are bit exact.
inline void save_delimited(const Dataset& ds, const std::string& path,
                           const std::string& target_column = "y", char delimiter = ',') {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write file: " + path);
    }
    for (std::size_t j = 0; j < ds.p(); ++j) {
        const std::string name = j < ds.feature_names.size() ? ds.feature_names[j]
                                                             : "x" + std::to_string(j + 1);
        out << name << delimiter;
    }
    out << target_column << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.p(); ++j) {
            out << format_double(ds.x(i, j)) << delimiter;
        }
        out << format_double(ds.y(i, 0)) << '\n';
    }
}

// Uniformly random partition without replacement; deterministic per seed.
inline std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t n_train, RngState& rng) {
    data.validate();
    if (n_train < 1 || n_train >= data.n()) {
        throw ConfigError("split: n_train must satisfy 1 <= n_train < n, got " +
                          std::to_string(n_train) + " of " + std::to_string(data.n()));
    }
    std::vector<std::size_t> idx(data.n());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
        std::swap(idx[i], idx[rng.next_below(i + 1)]);
    }
    auto take = [&](std::size_t begin, std::size_t count) {
        Dataset part;
        part.x = Matrix(count, data.p());
        part.y = Matrix(count, data.q());
        part.feature_names = data.feature_names;
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t src = idx[begin + i];
            std::copy(data.x.row_ptr(src), data.x.row_ptr(src) + data.p(), part.x.row_ptr(i));
            std::copy(data.y.row_ptr(src), data.y.row_ptr(src) + data.q(), part.y.row_ptr(i));
        }
        return part;
    };
    return {take(0, n_train), take(n_train, data.n() - n_train)};
}

// --- PCA ---------------------------------------------------------------

struct PcaModel {
    Matrix component_matrix;                // p x k, orthonormal columns
    std::vector<double> column_means;       // length p
    std::vector<double> explained_variance; // length k, nonincreasing
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues (descending) and matching eigenvectors as columns of v.
inline void jacobi_eigen_sym(Matrix a, std::vector<double>& eigenvalues, Matrix& v) {
    const std::size_t n = a.rows();
    v = identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off < 1e-26 * static_cast<double>(n * n)) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigenvalues[i] = a(i, i);
    // sort descending, permuting eigenvector columns along
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return eigenvalues[l] > eigenvalues[r]; });
    std::vector<double> sorted_vals(n);
    Matrix sorted_vecs(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        sorted_vals[c] = eigenvalues[order[c]];
        for (std::size_t r = 0; r < n; ++r) sorted_vecs(r, c) = v(r, order[c]);
    }
    eigenvalues = std::move(sorted_vals);
    v = std::move(sorted_vecs);
}

} // namespace detail

// Top-k principal directions of the column-centered x. When p > n the n x n
// Gram matrix is decomposed instead of the p x p covariance; for nonzero
// eigenvalues the two routes agree exactly, with covariance eigenvalues
// lambda_gram / (n - 1) and components Xc^T u / sqrt(lambda_gram).
inline PcaModel fit_pca(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n < 2) throw ConfigError("fit_pca: need at least two rows");
    if (k < 1 || k > std::min(n - 1, p)) {
        throw ConfigError("fit_pca: k must satisfy 1 <= k <= min(n-1, p) = " +
                          std::to_string(std::min(n - 1, p)) + ", got " + std::to_string(k));
    }

    PcaModel model;
    model.column_means.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.row_ptr(i);
        for (std::size_t j = 0; j < p; ++j) model.column_means[j] += row[j];
    }
    for (double& m : model.column_means) m /= static_cast<double>(n);
    Matrix xc = x;
    for (std::size_t i = 0; i < n; ++i) {
        double* row = xc.row_ptr(i);
        for (std::size_t j = 0; j < p; ++j) row[j] -= model.column_means[j];
    }

    std::vector<double> eigenvalues;
    Matrix eigenvectors;
    model.component_matrix = Matrix(p, k);
    model.explained_variance.assign(k, 0.0);
    if (p > n) {
        // Gram route
        const Matrix gram = matmul_nt(xc, xc); // n x n
        detail::jacobi_eigen_sym(gram, eigenvalues, eigenvectors);
        for (std::size_t c = 0; c < k; ++c) {
            const double lambda = std::max(eigenvalues[c], 0.0);
            model.explained_variance[c] = lambda / static_cast<double>(n - 1);
            if (lambda <= 0.0) continue;
            const double inv_norm = 1.0 / std::sqrt(lambda);
            for (std::size_t j = 0; j < p; ++j) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    dot += xc(i, j) * eigenvectors(i, c);
                }
                model.component_matrix(j, c) = dot * inv_norm;
            }
        }
    } else {
        Matrix cov = matmul_tn(xc, xc); // p x p
        for (double& v : cov.data()) v /= static_cast<double>(n - 1);
        detail::jacobi_eigen_sym(cov, eigenvalues, eigenvectors);
        for (std::size_t c = 0; c < k; ++c) {
            model.explained_variance[c] = std::max(eigenvalues[c], 0.0);
            for (std::size_t j = 0; j < p; ++j) {
                model.component_matrix(j, c) = eigenvectors(j, c);
            }
        }
    }
    return model;
}

// Project rows of x onto the fitted components: (x - means) * C, n x k.
inline Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    if (x.cols() != model.column_means.size()) {
        throw ShapeError("pca_transform: matrix " + x.shape_str() + " vs model over " +
                         std::to_string(model.column_means.size()) + " columns");
    }
    Matrix centered = x;
    for (std::size_t i = 0; i < centered.rows(); ++i) {
        double* row = centered.row_ptr(i);
        for (std::size_t j = 0; j < centered.cols(); ++j) row[j] -= model.column_means[j];
    }
    return matmul(centered, model.component_matrix);
}

} // namespace vbnet
