#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mvnmf/core.hpp"

namespace mvnmf {

enum class NormState { raw, l1_columns, l2_columns };

/// One view of the data: a nonnegative features-by-samples matrix.
/// Loaders transpose from the one-sample-per-line file layout.
struct ViewMatrix {
    Matrix values;              // M_v features x N samples
    NormState norm_state = NormState::raw;

    Index features() const { return values.rows(); }
    Index samples() const { return values.cols(); }
};

/// Aligned collection of views over the same N samples, with optional
/// ground-truth class labels.
struct MultiViewDataset {
    std::vector<ViewMatrix> views;
    std::optional<LabelVector> labels;

    int n_views() const { return static_cast<int>(views.size()); }
    Index samples() const { return views.empty() ? 0 : views.front().samples(); }

    void validate() const {
        if (views.empty()) throw DataError("dataset has no views");
        const Index n = views.front().samples();
        for (std::size_t v = 0; v < views.size(); ++v) {
            if (views[v].samples() != n) {
                throw DataError("view " + std::to_string(v) + " has " +
                                std::to_string(views[v].samples()) + " samples, expected " +
                                std::to_string(n));
            }
        }
        if (labels && static_cast<Index>(labels->size()) != n) {
            throw DataError("label vector length " + std::to_string(labels->size()) +
                            " does not match sample count " + std::to_string(n));
        }
    }
};

namespace detail {

/// Parse a whitespace-separated numeric table, one sample per line.
/// Blank lines are ignored. Every row must have the same width.
inline std::vector<std::vector<double>> load_numeric_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        if (!ls.eof()) {
            throw DataError("'" + path + "': non-numeric token on line " + std::to_string(lineno));
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError("'" + path + "': line " + std::to_string(lineno) + " has " +
                            std::to_string(row.size()) + " columns, expected " +
                            std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("'" + path + "' is empty");
    return rows;
}

/// Table rows are samples; the returned view is transposed to features x samples.
/// Rejects negative entries, reporting the 1-based file coordinate.
inline ViewMatrix view_from_table(const std::vector<std::vector<double>>& rows,
                                  const std::string& path) {
    const Index n = static_cast<Index>(rows.size());
    const Index m = static_cast<Index>(rows.front().size());
    Matrix values(m, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            const double x = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            if (x < 0.0) {
                throw DataError("'" + path + "': negative entry " + std::to_string(x) +
                                " at row " + std::to_string(j + 1) + ", column " +
                                std::to_string(i + 1));
            }
            values(i, j) = x;
        }
    }
    return ViewMatrix{std::move(values), NormState::raw};
}

} // namespace detail

/// Load one view from a UCI "Multiple Features"-format file (plain ASCII,
/// one sample per line, whitespace-separated nonnegative numbers).
inline ViewMatrix load_view(const std::string& path) {
    return detail::view_from_table(detail::load_numeric_table(path), path);
}

/// Load the handwritten-digits dataset from the UCI mfeat-fou and mfeat-pix
/// files: 2000 samples, views of 76 Fourier coefficients and 240 pixel
/// averages. The files carry no label column; classes are 200-sample blocks
/// in file order, so label = floor(row / 200).
inline MultiViewDataset load_mfeat(const std::string& fourier_path,
                                   const std::string& pixel_path) {
    constexpr Index kSamples = 2000;
    constexpr Index kFourierDim = 76;
    constexpr Index kPixelDim = 240;
    constexpr Index kClassSize = 200;

    ViewMatrix fou = load_view(fourier_path);
    ViewMatrix pix = load_view(pixel_path);
    auto check = [](const ViewMatrix& v, const std::string& path, Index rows, Index cols) {
        if (v.samples() != rows || v.features() != cols) {
            throw DataError("'" + path + "': expected " + std::to_string(rows) + " rows x " +
                            std::to_string(cols) + " columns, got " + std::to_string(v.samples()) +
                            " x " + std::to_string(v.features()));
        }
    };
    check(fou, fourier_path, kSamples, kFourierDim);
    check(pix, pixel_path, kSamples, kPixelDim);

    LabelVector labels(kSamples);
    for (Index j = 0; j < kSamples; ++j) labels[static_cast<std::size_t>(j)] = static_cast<int>(j / kClassSize);

    MultiViewDataset data;
    data.views.push_back(std::move(fou));
    data.views.push_back(std::move(pix));
    data.labels = std::move(labels);
    data.validate();
    return data;
}

/// Column-normalize a view. Idempotent for a matching mode; a zero column is
/// an error (the offending index is named) rather than silently perturbed.
inline ViewMatrix normalize(const ViewMatrix& view, NormState mode) {
    if (mode != NormState::l1_columns && mode != NormState::l2_columns) {
        throw ConfigError("normalize: mode must be l1_columns or l2_columns");
    }
    if (view.norm_state == mode) return view;
    ViewMatrix out{view.values, mode};
    for (Index j = 0; j < out.values.cols(); ++j) {
        const double scale = mode == NormState::l1_columns ? out.values.col(j).sum()
                                                           : out.values.col(j).norm();
        if (scale <= 0.0) {
            throw DataError("normalize: column " + std::to_string(j) + " is zero");
        }
        out.values.col(j) /= scale;
    }
    return out;
}

inline MultiViewDataset normalize(const MultiViewDataset& data, NormState mode) {
    MultiViewDataset out;
    out.labels = data.labels;
    out.views.reserve(data.views.size());
    for (const auto& v : data.views) out.views.push_back(normalize(v, mode));
    return out;
}

/// Row-stack all views into a single matrix (sum of M_v rows, N columns),
/// preserving view order. A single-view dataset comes back unchanged.
inline ViewMatrix concatenate(const MultiViewDataset& data) {
    data.validate();
    if (data.views.size() == 1) return data.views.front();
    Index total_rows = 0;
    for (const auto& v : data.views) total_rows += v.features();
    Matrix stacked(total_rows, data.samples());
    Index row = 0;
    for (const auto& v : data.views) {
        stacked.middleRows(row, v.features()) = v.values;
        row += v.features();
    }
    return ViewMatrix{std::move(stacked), NormState::raw};
}

/// Planted-partition generator: every sample in cluster c is that cluster's
/// nonnegative prototype column plus uniform noise of the given amplitude.
/// Prototypes get a +1 boost on the features congruent to c mod n_clusters,
/// so clusters are well separated whenever a view has at least n_clusters
/// features. Deterministic given the seed.
inline MultiViewDataset make_synthetic(int n_clusters, int samples_per_cluster,
                                       const std::vector<Index>& dims, double noise,
                                       std::uint64_t seed) {
    if (n_clusters < 1 || samples_per_cluster < 1 || dims.empty()) {
        throw ConfigError("make_synthetic: counts must be >= 1 and dims nonempty");
    }
    if (noise < 0.0) throw ConfigError("make_synthetic: noise must be nonnegative");
    const Index n = static_cast<Index>(n_clusters) * samples_per_cluster;
    detail::Rng rng(seed);

    MultiViewDataset data;
    for (Index m : dims) {
        if (m < 1) throw ConfigError("make_synthetic: view dims must be >= 1");
        Matrix proto(m, n_clusters);
        for (Index c = 0; c < n_clusters; ++c) {
            for (Index f = 0; f < m; ++f) {
                proto(f, c) = 0.05 + 0.25 * detail::uniform01(rng);
                if (f % n_clusters == c) proto(f, c) += 1.0;
            }
        }
        Matrix values(m, n);
        for (Index j = 0; j < n; ++j) {
            const Index c = j / samples_per_cluster;
            values.col(j) = proto.col(c);
            if (noise > 0.0) {
                for (Index f = 0; f < m; ++f) values(f, j) += noise * detail::uniform01(rng);
            }
        }
        data.views.push_back(ViewMatrix{std::move(values), NormState::raw});
    }
    LabelVector labels(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        labels[static_cast<std::size_t>(j)] = static_cast<int>(j / samples_per_cluster);
    }
    data.labels = std::move(labels);
    return data;
}

/// Write a view in the UCI file format: one sample per line, whitespace
/// separated, full double precision.
inline void save_view(const ViewMatrix& view, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    char buf[40];
    for (Index j = 0; j < view.samples(); ++j) {
        for (Index i = 0; i < view.features(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", view.values(i, j));
            out << (i ? " " : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

} // namespace mvnmf
