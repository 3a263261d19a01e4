#pragma once

#include <vector>

#include "mvnmf/core.hpp"
#include "mvnmf/dataviews.hpp"
#include "mvnmf/factorize.hpp"
#include "mvnmf/graph.hpp"

namespace mvnmf {

/// Automatic parameter choices plus the quantities they were derived from.
struct HeuristicReport {
    std::vector<double> alpha;
    double gamma = 0.0;
    int n_views = 0;
    int k = 0;
    Index samples = 0;
    double mean_w = 0.0;
};

/// alpha_v = M_v: weighting each view's residual by its feature count makes
/// the views' expected per-entry contributions to the coefficient update
/// equal. Depends only on view shapes.
inline std::vector<double> alpha_heuristic(const MultiViewDataset& data) {
    data.validate();
    std::vector<double> alpha;
    alpha.reserve(data.views.size());
    for (const auto& v : data.views) alpha.push_back(static_cast<double>(v.features()));
    return alpha;
}

/// gamma = n_v K / (N E[W]): scales the graph term to the views' combined
/// expected contribution.
inline double gamma_heuristic(int n_views, int k, Index samples, double mean_w) {
    if (n_views < 1 || k < 1 || samples < 1) {
        throw ConfigError("gamma_heuristic: counts must be >= 1");
    }
    if (mean_w <= 0.0) {
        throw DataError("gamma_heuristic: graph has zero mean weight; supply gamma explicitly");
    }
    return static_cast<double>(n_views) * static_cast<double>(k) /
           (static_cast<double>(samples) * mean_w);
}

/// Same, with E[W] taken as the graph's mean over all N^2 entries.
inline double gamma_heuristic(int n_views, int k, Index samples, const SimilarityGraph& graph) {
    return gamma_heuristic(n_views, k, samples, mean_weight(graph));
}

inline HeuristicReport heuristic_report(const MultiViewDataset& data, int k,
                                        const SimilarityGraph& graph) {
    HeuristicReport rep;
    rep.alpha = alpha_heuristic(data);
    rep.n_views = data.n_views();
    rep.k = k;
    rep.samples = data.samples();
    rep.mean_w = mean_weight(graph);
    rep.gamma = gamma_heuristic(rep.n_views, k, rep.samples, graph);
    return rep;
}

/// Solver parameters from the heuristics; multiplier 1 reproduces the
/// heuristic gamma exactly, multiplier m yields m * gamma.
inline EquiParams heuristic_params(const MultiViewDataset& data, const SimilarityGraph& graph,
                                   int k, double gamma_multiplier = 1.0) {
    if (gamma_multiplier < 0.0) throw ConfigError("gamma_multiplier must be nonnegative");
    EquiParams params;
    params.alpha = alpha_heuristic(data);
    params.gamma_multiplier = gamma_multiplier;
    params.gamma =
        gamma_multiplier == 0.0
            ? 0.0
            : gamma_multiplier * gamma_heuristic(data.n_views(), k, data.samples(), graph);
    return params;
}

/// Empirical check of the equal-contribution rationale: averages the
/// coefficient-update numerator terms a_v (X_v'U_v) per view and g (WV) for
/// the graph, and reports how far they sit from each other. Diagnostic only.
struct ContributionReport {
    std::vector<double> view_means;
    double graph_mean = 0.0;
    double view_ratio = 0.0;          // max view mean / min view mean
    double graph_to_data_ratio = 0.0; // graph mean / summed view means
};

inline ContributionReport expected_contribution_check(const MultiViewDataset& data,
                                                      const FactorizationResult& factors,
                                                      const std::vector<double>& alpha,
                                                      double gamma,
                                                      const SimilarityGraph& graph) {
    ContributionReport rep;
    double sum = 0.0, lo = 0.0, hi = 0.0;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const double m =
            alpha[v] * (data.views[v].values.transpose() * factors.basis[v]).mean();
        rep.view_means.push_back(m);
        sum += m;
        lo = v == 0 ? m : std::min(lo, m);
        hi = v == 0 ? m : std::max(hi, m);
    }
    rep.graph_mean = gamma * (graph.weights() * factors.coeff).mean();
    rep.view_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    rep.graph_to_data_ratio =
        sum > 0.0 ? rep.graph_mean / sum : std::numeric_limits<double>::infinity();
    return rep;
}

} // namespace mvnmf
