#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <vector>

#include "mvnmf/core.hpp"
#include "mvnmf/dataviews.hpp"

namespace mvnmf {

/// Symmetric nonnegative sample-affinity matrix with cached row sums.
/// The Laplacian D - W is materialized on demand.
class SimilarityGraph {
  public:
    explicit SimilarityGraph(Matrix w) : w_(std::move(w)) {
        if (w_.rows() != w_.cols()) throw DataError("similarity matrix must be square");
        for (Index i = 0; i < w_.rows(); ++i) {
            if (w_(i, i) != 0.0) throw DataError("similarity matrix must have a zero diagonal");
            for (Index j = 0; j < i; ++j) {
                if (w_(i, j) != w_(j, i)) throw DataError("similarity matrix must be symmetric");
                if (w_(i, j) < 0.0) throw DataError("similarity weights must be nonnegative");
            }
        }
        d_ = w_.rowwise().sum();
    }

    Index size() const { return w_.rows(); }
    const Matrix& weights() const { return w_; }
    const Vector& degrees() const { return d_; }
    Matrix laplacian() const {
        Matrix lap = -w_;
        lap.diagonal() += d_;
        return lap;
    }

  private:
    Matrix w_;
    Vector d_;
};

/// Binary k-nearest-neighbour graph on a view's columns under Euclidean
/// distance: edge (i,j) = 1 iff j is among the k nearest neighbours of i or
/// vice versa (symmetrization by union), self excluded. Distance ties break
/// toward the smaller index.
inline SimilarityGraph knn_graph(const ViewMatrix& view, int k) {
    const Index n = view.samples();
    if (k < 1 || k >= n) {
        throw ConfigError("knn_graph: k must satisfy 1 <= k < N (k=" + std::to_string(k) +
                          ", N=" + std::to_string(n) + ")");
    }
    // ||x_i - x_j||^2 = ||x_i||^2 + ||x_j||^2 - 2 x_i.x_j, clamped at 0.
    const Matrix& x = view.values;
    Vector sq = x.colwise().squaredNorm();
    Matrix dist2 = -2.0 * (x.transpose() * x);
    dist2.colwise() += sq;
    dist2.rowwise() += sq.transpose();
    dist2 = dist2.cwiseMax(0.0);

    Matrix w = Matrix::Zero(n, n);
    std::vector<Index> order(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
        Index m = 0;
        for (Index j = 0; j < n; ++j) {
            if (j != i) order[static_cast<std::size_t>(m++)] = j;
        }
        auto closer = [&](Index a, Index b) {
            return dist2(i, a) != dist2(i, b) ? dist2(i, a) < dist2(i, b) : a < b;
        };
        std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), closer);
        for (int t = 0; t < k; ++t) {
            const Index j = order[static_cast<std::size_t>(t)];
            w(i, j) = 1.0;
            w(j, i) = 1.0;
        }
    }
    return SimilarityGraph(std::move(w));
}

/// Elementwise sum of similarity graphs over the same samples.
inline SimilarityGraph combine_graphs(const std::vector<SimilarityGraph>& graphs) {
    if (graphs.empty()) throw ConfigError("combine_graphs: no graphs given");
    const Index n = graphs.front().size();
    Matrix w = Matrix::Zero(n, n);
    for (const auto& g : graphs) {
        if (g.size() != n) throw DataError("combine_graphs: graph sizes differ");
        w += g.weights();
    }
    return SimilarityGraph(std::move(w));
}

/// Mean over all N^2 entries of W, zero diagonal included. This is the
/// E[W_jl] the gamma heuristic divides by.
inline double mean_weight(const SimilarityGraph& graph) {
    const double n = static_cast<double>(graph.size());
    return graph.weights().sum() / (n * n);
}

/// Coordinate-list dump (row col weight per line, upper triangle) for debugging.
inline void export_graph(const SimilarityGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    char buf[40];
    for (Index i = 0; i < graph.size(); ++i) {
        for (Index j = i + 1; j < graph.size(); ++j) {
            if (graph.weights()(i, j) == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", graph.weights()(i, j));
            out << i << ' ' << j << ' ' << buf << '\n';
        }
    }
}

} // namespace mvnmf
