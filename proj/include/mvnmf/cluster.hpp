#pragma once

#include <limits>
#include <numeric>
#include <vector>

#include "mvnmf/core.hpp"

namespace mvnmf {

/// Best clustering over the repeats: assignments, its within-cluster sum of
/// squared distances, and the inputs that produced it.
struct ClusterRun {
    LabelVector labels;
    double sse = 0.0;
    int repeats_used = 0;
    std::uint64_t seed = 0;
};

namespace detail {

struct LloydRun {
    LabelVector labels;
    double sse = std::numeric_limits<double>::infinity();
    std::vector<double> sse_trace;
};

/// One Lloyd run: centroids seeded by k distinct points sampled uniformly,
/// then alternate nearest-centroid assignment and mean updates. An empty
/// cluster is repaired by taking the point farthest from the largest
/// cluster's centroid. Ties (distances, cluster sizes) break toward the
/// smaller index.
inline LloydRun lloyd(const Matrix& points, int k, int iters, Rng& rng) {
    const Index n = points.rows();
    std::vector<Index> pick(static_cast<std::size_t>(n));
    std::iota(pick.begin(), pick.end(), Index{0});
    for (int c = 0; c < k; ++c) {
        const auto r = static_cast<Index>(
            c + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n - c))));
        std::swap(pick[static_cast<std::size_t>(c)], pick[static_cast<std::size_t>(r)]);
    }
    Matrix centroids(k, points.cols());
    for (int c = 0; c < k; ++c) centroids.row(c) = points.row(pick[static_cast<std::size_t>(c)]);

    LloydRun run;
    run.labels.assign(static_cast<std::size_t>(n), 0);
    LabelVector prev;
    const Vector psq = points.rowwise().squaredNorm();
    for (int it = 0; it < iters; ++it) {
        Matrix d2 = -2.0 * (points * centroids.transpose());
        d2.colwise() += psq;
        d2.rowwise() += centroids.rowwise().squaredNorm().transpose();
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            Index best;
            d2.row(i).minCoeff(&best); // first minimum -> smallest index
            run.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
            ++counts[static_cast<std::size_t>(best)];
        }

        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            int donor = 0;
            for (int d = 1; d < k; ++d) {
                if (counts[static_cast<std::size_t>(d)] > counts[static_cast<std::size_t>(donor)]) donor = d;
            }
            Index far = -1;
            double far_d = -1.0;
            for (Index i = 0; i < n; ++i) {
                if (run.labels[static_cast<std::size_t>(i)] != donor) continue;
                if (d2(i, donor) > far_d) {
                    far_d = d2(i, donor);
                    far = i;
                }
            }
            if (far < 0) continue; // every cluster empty only if k > n
            run.labels[static_cast<std::size_t>(far)] = c;
            --counts[static_cast<std::size_t>(donor)];
            ++counts[static_cast<std::size_t>(c)];
        }

        centroids.setZero();
        for (Index i = 0; i < n; ++i) {
            centroids.row(run.labels[static_cast<std::size_t>(i)]) += points.row(i);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }

        double sse = 0.0;
        for (Index i = 0; i < n; ++i) {
            sse += (points.row(i) - centroids.row(run.labels[static_cast<std::size_t>(i)]))
                       .squaredNorm();
        }
        run.sse = sse;
        run.sse_trace.push_back(sse);
        if (run.labels == prev) break;
        prev = run.labels;
    }
    return run;
}

} // namespace detail

/// Lloyd's k-means with Euclidean distance on the rows of `points`; the
/// lowest-SSE repeat wins, earlier repeat on ties. Deterministic given seed.
inline ClusterRun kmeans(const Matrix& points, int k, int repeats, int iters,
                         std::uint64_t seed) {
    if (k < 1 || k > points.rows()) {
        throw ConfigError("kmeans: need 1 <= k <= N (k=" + std::to_string(k) +
                          ", N=" + std::to_string(points.rows()) + ")");
    }
    if (repeats < 1 || iters < 1) throw ConfigError("kmeans: repeats and iters must be >= 1");
    ClusterRun best;
    best.seed = seed;
    best.repeats_used = repeats;
    best.sse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
        detail::Rng rng(detail::mix_seed(seed, static_cast<std::uint64_t>(r)));
        detail::LloydRun run = detail::lloyd(points, k, iters, rng);
        if (run.sse < best.sse) {
            best.sse = run.sse;
            best.labels = std::move(run.labels);
        }
    }
    return best;
}

} // namespace mvnmf
