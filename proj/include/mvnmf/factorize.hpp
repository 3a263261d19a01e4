#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mvnmf/core.hpp"
#include "mvnmf/dataviews.hpp"
#include "mvnmf/graph.hpp"

namespace mvnmf {

struct SolverOptions {
    int k = 2;                 // embedding dimension, set to the cluster count
    int max_iter = 300;        // outer iteration cap
    int inner_max_iter = 50;   // per-view inner cap (MultiNMF only)
    double tol = 1e-6;         // relative objective-change stopping threshold
    std::uint64_t seed = 0;
    double eps = 1e-12;        // guard added to multiplicative-update denominators

    void validate() const {
        if (k < 1) throw ConfigError("solver: k must be >= 1");
        if (max_iter < 1 || inner_max_iter < 1) throw ConfigError("solver: max_iter must be >= 1");
        if (tol < 0.0) throw ConfigError("solver: tol must be >= 0");
        if (eps <= 0.0) throw ConfigError("solver: eps must be > 0");
    }
};

/// Output of any of the factorization solvers.
///
/// `basis` holds the per-view U matrices (a single entry for the
/// concatenated-view solvers). `coeff` is the shared N x K coefficient
/// matrix V; for MultiNMF it is the consensus V* and `view_coeff` carries
/// the per-view V matrices. `objective_trace[0]` is the objective at the
/// initial factors, followed by one value per iteration.
struct FactorizationResult {
    std::vector<Matrix> basis;
    Matrix coeff;
    std::vector<Matrix> view_coeff;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;

    double final_objective() const {
        return objective_trace.empty() ? 0.0 : objective_trace.back();
    }
};

/// Weights of the graph-regularized multi-view objective: per-view data
/// weights alpha_v, graph weight gamma, and the multiplier that scaled the
/// heuristic gamma (1 reproduces the heuristic).
struct EquiParams {
    std::vector<double> alpha;
    double gamma = 0.0;
    double gamma_multiplier = 1.0;

    void validate(int n_views) const {
        if (static_cast<int>(alpha.size()) != n_views) {
            throw ConfigError("equinmf: alpha length " + std::to_string(alpha.size()) +
                              " does not match view count " + std::to_string(n_views));
        }
        for (double a : alpha) {
            if (a <= 0.0) throw ConfigError("equinmf: alpha entries must be positive");
        }
        if (gamma < 0.0) throw ConfigError("equinmf: gamma must be nonnegative");
    }
};

namespace detail {

inline Matrix uniform_matrix(Index rows, Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = uniform01(rng);
    }
    return m.cwiseMax(1e-12); // strictly positive
}

/// Scale columns to unit L1 sum. Zero columns are left untouched; they are
/// absorbing under multiplicative updates and unreachable from a strictly
/// positive start.
inline void normalize_columns_l1(Matrix& m) {
    for (Index j = 0; j < m.cols(); ++j) {
        const double s = m.col(j).sum();
        if (s > 0.0) m.col(j) /= s;
    }
}

inline void normalize_rows_l1(Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        const double s = m.row(i).sum();
        if (s > 0.0) m.row(i) /= s;
    }
}

inline void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw SolverDivergenceError(std::string("solver diverged: NaN/Inf in ") + what);
    }
}

/// One plain multiplicative-update iteration of Eq. U <- U (XV)/(UV'V),
/// V <- V (X'U)/(VU'U), denominators eps-guarded.
inline void nmf_step(const Matrix& x, Matrix& u, Matrix& v, double eps) {
    const Matrix xv = x * v;
    const Matrix vtv = v.transpose() * v;
    u.array() *= xv.array() / ((u * vtv).array() + eps);
    const Matrix xtu = x.transpose() * u;
    const Matrix utu = u.transpose() * u;
    v.array() *= xtu.array() / ((v * utu).array() + eps);
}

/// Tr(V' (D - W) V), clamped at zero (the Laplacian is PSD; rounding can
/// leave a tiny negative).
inline double laplacian_quadform(const SimilarityGraph& graph, const Matrix& v) {
    const Matrix dv = graph.degrees().asDiagonal() * v;
    const Matrix wv = graph.weights() * v;
    const double tr = (v.array() * (dv - wv).array()).sum();
    return std::max(tr, 0.0);
}

inline bool relative_change_below(double prev, double cur, double tol) {
    const double denom = std::max(std::abs(prev), 1e-30);
    return std::abs(prev - cur) / denom < tol;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Objective values
// ---------------------------------------------------------------------------

inline double nmf_objective(const Matrix& x, const Matrix& u, const Matrix& v) {
    return (x - u * v.transpose()).squaredNorm();
}

inline double gnmf_objective(const Matrix& x, const Matrix& u, const Matrix& v,
                             const SimilarityGraph& graph, double gamma) {
    return nmf_objective(x, u, v) + gamma * detail::laplacian_quadform(graph, v);
}

/// Multi-view objective with consensus: sum_v ||X_v - U_v V_v'||^2
/// + sum_v lambda_v ||V_v Q_v - V*||^2, Q_v = diag of U_v column sums.
inline double multinmf_objective(const MultiViewDataset& data, const FactorizationResult& state,
                                 const std::vector<double>& lambda) {
    double obj = 0.0;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const Matrix& x = data.views[v].values;
        const Matrix& u = state.basis[v];
        const Matrix& vv = state.view_coeff[v];
        obj += (x - u * vv.transpose()).squaredNorm();
        const Vector q = u.colwise().sum();
        obj += lambda[v] * (vv * q.asDiagonal() - state.coeff).squaredNorm();
    }
    return obj;
}

/// Graph-regularized shared-coefficient objective:
/// sum_v alpha_v ||X_v - U_v C_v V'||^2 + gamma Tr(V' (D-W) V), where C_v
/// rescales U_v columns to unit sum. C_v is recomputed from the current
/// column sums here, not assumed identity.
inline double equinmf_objective(const MultiViewDataset& data, const FactorizationResult& state,
                                const SimilarityGraph& graph, const EquiParams& params) {
    double obj = 0.0;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const Matrix& x = data.views[v].values;
        Matrix uc = state.basis[v];
        detail::normalize_columns_l1(uc);
        obj += params.alpha[v] * (x - uc * state.coeff.transpose()).squaredNorm();
    }
    if (params.gamma > 0.0) obj += params.gamma * detail::laplacian_quadform(graph, state.coeff);
    return obj;
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

namespace detail {

/// Shared NMF/GNMF driver; GNMF is NMF plus graph terms in the V update.
/// With gamma = 0 the graph terms vanish and the iterate sequence is the
/// plain NMF one.
inline FactorizationResult mu_solver(const Matrix& x, const SimilarityGraph* graph, double gamma,
                                     const SolverOptions& opts, const Matrix* u0,
                                     const Matrix* v0) {
    opts.validate();
    if ((x.array() < 0.0).any()) throw DataError("nmf: input matrix has negative entries");
    for (Index j = 0; j < x.cols(); ++j) {
        if (x.col(j).sum() <= 0.0) {
            throw DataError("nmf: input column " + std::to_string(j) + " is zero");
        }
    }
    const bool use_graph = graph != nullptr && gamma > 0.0;
    if (use_graph && graph->size() != x.cols()) {
        throw DataError("gnmf: graph size does not match sample count");
    }

    Rng rng(opts.seed);
    Matrix u = u0 ? *u0 : uniform_matrix(x.rows(), opts.k, rng);
    Matrix v = v0 ? *v0 : uniform_matrix(x.cols(), opts.k, rng);

    auto objective = [&]() {
        return use_graph ? gnmf_objective(x, u, v, *graph, gamma) : nmf_objective(x, u, v);
    };

    FactorizationResult res;
    res.objective_trace.push_back(objective());
    for (int t = 1; t <= opts.max_iter; ++t) {
        const Matrix xv = x * v;
        const Matrix vtv = v.transpose() * v;
        u.array() *= xv.array() / ((u * vtv).array() + opts.eps);

        const Matrix xtu = x.transpose() * u;
        const Matrix utu = u.transpose() * u;
        if (use_graph) {
            const Matrix num = xtu + gamma * (graph->weights() * v);
            const Matrix den = v * utu + gamma * (graph->degrees().asDiagonal() * v);
            v.array() *= num.array() / (den.array() + opts.eps);
        } else {
            v.array() *= xtu.array() / ((v * utu).array() + opts.eps);
        }

        check_finite(u, "U");
        check_finite(v, "V");
        const double obj = objective();
        if (!std::isfinite(obj)) throw SolverDivergenceError("solver diverged: objective not finite");
        const double prev = res.objective_trace.back();
        res.objective_trace.push_back(obj);
        res.iterations = t;
        if (relative_change_below(prev, obj, opts.tol)) {
            res.converged = true;
            break;
        }
    }
    res.basis.push_back(std::move(u));
    res.coeff = std::move(v);
    return res;
}

} // namespace detail

/// Baseline NMF (alternating multiplicative updates) on a single view.
inline FactorizationResult nmf(const ViewMatrix& x, const SolverOptions& opts,
                               const Matrix* u0 = nullptr, const Matrix* v0 = nullptr) {
    return detail::mu_solver(x.values, nullptr, 0.0, opts, u0, v0);
}

/// Graph-regularized NMF on a single view.
inline FactorizationResult gnmf(const ViewMatrix& x, const SimilarityGraph& graph, double gamma,
                                const SolverOptions& opts, const Matrix* u0 = nullptr,
                                const Matrix* v0 = nullptr) {
    if (gamma < 0.0) throw ConfigError("gnmf: gamma must be nonnegative");
    if (graph.size() != x.samples()) throw DataError("gnmf: graph size does not match sample count");
    return detail::mu_solver(x.values, &graph, gamma, opts, u0, v0);
}

/// Random factors scaled so U columns and V rows sum to one. This is the
/// state right before the warm-up cycles of init_factors.
inline FactorizationResult scaled_uniform_factors(const MultiViewDataset& data, int k,
                                                  std::uint64_t seed) {
    data.validate();
    detail::Rng rng(seed);
    FactorizationResult res;
    for (const auto& view : data.views) {
        Matrix u = detail::uniform_matrix(view.features(), k, rng);
        detail::normalize_columns_l1(u);
        res.basis.push_back(std::move(u));
    }
    res.coeff = detail::uniform_matrix(data.samples(), k, rng);
    detail::normalize_rows_l1(res.coeff);
    return res;
}

/// Shared-coefficient initialization: uniform factors scaled to unit column
/// (U) and row (V) sums, then 50 cycles over the views, each applying one
/// plain NMF iteration of (U_v, V) against X_v.
inline FactorizationResult init_factors(const MultiViewDataset& data, int k, std::uint64_t seed,
                                        int warmup_cycles = 50, double eps = 1e-12) {
    FactorizationResult res = scaled_uniform_factors(data, k, seed);
    for (int cycle = 0; cycle < warmup_cycles; ++cycle) {
        for (std::size_t v = 0; v < data.views.size(); ++v) {
            detail::nmf_step(data.views[v].values, res.basis[v], res.coeff, eps);
        }
    }
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        detail::check_finite(res.basis[v], "U (init)");
    }
    detail::check_finite(res.coeff, "V (init)");
    return res;
}

/// Graph-regularized multi-view NMF with a shared coefficient matrix.
///
/// Per iteration: L1-normalize each U_v's columns, update each U_v by
///   U_ik <- U_ik * [(XV)_ik + sum_l (UV'V)_lk U_lk] /
///                  [(UV'V)_ik + sum_l (XV)_lk U_lk]
/// re-normalize, then update the shared V by
///   V_jk <- V_jk * [sum_v a_v (X_v'U_v)_jk + g (WV)_jk] /
///                  [sum_v a_v (V U_v'U_v)_jk + g (DV)_jk].
/// The normalize-update-normalize ordering keeps the column-sum matrix at
/// identity for both updates. The objective is recorded every iteration;
/// descent is empirical for these updates, not a theorem.
inline FactorizationResult equinmf(const MultiViewDataset& data, const SimilarityGraph& graph,
                                   const EquiParams& params, const SolverOptions& opts,
                                   const FactorizationResult* init = nullptr) {
    data.validate();
    opts.validate();
    params.validate(data.n_views());
    if (graph.size() != data.samples()) {
        throw DataError("equinmf: graph size does not match sample count");
    }

    FactorizationResult res = init ? *init : init_factors(data, opts.k, opts.seed);
    res.objective_trace.clear();
    res.iterations = 0;
    res.converged = false;

    const int n_v = data.n_views();
    res.objective_trace.push_back(equinmf_objective(data, res, graph, params));
    for (int t = 1; t <= opts.max_iter; ++t) {
        for (auto& u : res.basis) detail::normalize_columns_l1(u);

        const Matrix vtv = res.coeff.transpose() * res.coeff;
        for (int v = 0; v < n_v; ++v) {
            Matrix& u = res.basis[v];
            const Matrix xv = data.views[static_cast<std::size_t>(v)].values * res.coeff;
            const Matrix uvtv = u * vtv;
            const Eigen::RowVectorXd num_shift = (uvtv.array() * u.array()).colwise().sum();
            const Eigen::RowVectorXd den_shift = (xv.array() * u.array()).colwise().sum();
            const Matrix num = xv.rowwise() + num_shift;
            const Matrix den = uvtv.rowwise() + den_shift;
            u.array() *= num.array() / (den.array() + opts.eps);
            detail::check_finite(u, "U");
        }
        for (auto& u : res.basis) detail::normalize_columns_l1(u);

        Matrix num = Matrix::Zero(data.samples(), opts.k);
        Matrix den = Matrix::Zero(data.samples(), opts.k);
        for (int v = 0; v < n_v; ++v) {
            const Matrix& x = data.views[static_cast<std::size_t>(v)].values;
            const Matrix& u = res.basis[static_cast<std::size_t>(v)];
            num += params.alpha[static_cast<std::size_t>(v)] * (x.transpose() * u);
            den += params.alpha[static_cast<std::size_t>(v)] *
                   (res.coeff * (u.transpose() * u));
        }
        if (params.gamma > 0.0) {
            num += params.gamma * (graph.weights() * res.coeff);
            den += params.gamma * (graph.degrees().asDiagonal() * res.coeff);
        }
        res.coeff.array() *= num.array() / (den.array() + opts.eps);
        detail::check_finite(res.coeff, "V");

        const double obj = equinmf_objective(data, res, graph, params);
        if (!std::isfinite(obj)) throw SolverDivergenceError("solver diverged: objective not finite");
        const double prev = res.objective_trace.back();
        res.objective_trace.push_back(obj);
        res.iterations = t;
        if (detail::relative_change_below(prev, obj, opts.tol)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Multi-view NMF with per-view coefficients regularized toward a consensus.
///
/// Block coordinate descent: each view's (U_v, V_v) pair is iterated to
/// inner convergence with V* fixed, then V* is set to the lambda-weighted
/// mean of the normalized V_v Q_v (the exact minimizer with all else fixed).
/// The per-view updates interleave the U <- U Q^{-1}, V <- V Q normalization
/// so the column-sum matrix can be taken as identity when they are derived.
inline FactorizationResult multinmf(const MultiViewDataset& data,
                                    const std::vector<double>& lambda, const SolverOptions& opts,
                                    const FactorizationResult* init = nullptr) {
    data.validate();
    opts.validate();
    const int n_v = data.n_views();
    if (static_cast<int>(lambda.size()) != n_v) {
        throw ConfigError("multinmf: lambda length does not match view count");
    }
    for (double l : lambda) {
        if (l < 0.0) throw ConfigError("multinmf: lambda entries must be nonnegative");
    }

    FactorizationResult res;
    if (init) {
        res = *init;
    } else {
        detail::Rng rng(opts.seed);
        for (const auto& view : data.views) {
            Matrix u = detail::uniform_matrix(view.features(), opts.k, rng);
            detail::normalize_columns_l1(u);
            res.basis.push_back(std::move(u));
            Matrix vv = detail::uniform_matrix(data.samples(), opts.k, rng);
            detail::normalize_rows_l1(vv);
            res.view_coeff.push_back(std::move(vv));
        }
        for (int cycle = 0; cycle < 50; ++cycle) {
            for (int v = 0; v < n_v; ++v) {
                detail::nmf_step(data.views[static_cast<std::size_t>(v)].values, res.basis[static_cast<std::size_t>(v)],
                                 res.view_coeff[static_cast<std::size_t>(v)], opts.eps);
            }
        }
    }

    const double lambda_sum = [&] {
        double s = 0.0;
        for (double l : lambda) s += l;
        return s;
    }();
    auto refresh_consensus = [&]() {
        Matrix vstar = Matrix::Zero(data.samples(), opts.k);
        for (int v = 0; v < n_v; ++v) {
            const Vector q = res.basis[static_cast<std::size_t>(v)].colwise().sum();
            const Matrix vq = res.view_coeff[static_cast<std::size_t>(v)] * q.asDiagonal();
            vstar += (lambda_sum > 0.0 ? lambda[static_cast<std::size_t>(v)] / lambda_sum
                                       : 1.0 / n_v) *
                     vq;
        }
        res.coeff = std::move(vstar);
    };
    if (res.coeff.size() == 0) refresh_consensus();

    auto normalize_pair = [](Matrix& u, Matrix& vv) {
        const Vector q = u.colwise().sum();
        for (Index k = 0; k < u.cols(); ++k) {
            if (q(k) > 0.0) {
                u.col(k) /= q(k);
                vv.col(k) *= q(k);
            }
        }
    };
    auto view_objective = [&](int v) {
        const Matrix& x = data.views[static_cast<std::size_t>(v)].values;
        const Matrix& u = res.basis[static_cast<std::size_t>(v)];
        const Matrix& vv = res.view_coeff[static_cast<std::size_t>(v)];
        const Vector q = u.colwise().sum();
        return (x - u * vv.transpose()).squaredNorm() +
               lambda[static_cast<std::size_t>(v)] * (vv * q.asDiagonal() - res.coeff).squaredNorm();
    };

    res.objective_trace.clear();
    res.iterations = 0;
    res.converged = false;
    res.objective_trace.push_back(multinmf_objective(data, res, lambda));
    for (int t = 1; t <= opts.max_iter; ++t) {
        for (int v = 0; v < n_v; ++v) {
            const Matrix& x = data.views[static_cast<std::size_t>(v)].values;
            Matrix& u = res.basis[static_cast<std::size_t>(v)];
            Matrix& vv = res.view_coeff[static_cast<std::size_t>(v)];
            const double lam = lambda[static_cast<std::size_t>(v)];
            double prev_obj = view_objective(v);
            for (int i = 0; i < opts.inner_max_iter; ++i) {
                normalize_pair(u, vv);

                const Matrix xv = x * vv;
                const Matrix vtv = vv.transpose() * vv;
                const Matrix uvtv = u * vtv;
                const Eigen::RowVectorXd cross = (vv.array() * res.coeff.array()).colwise().sum();
                const Eigen::RowVectorXd vsq = vv.colwise().squaredNorm();
                const Matrix num = xv.rowwise() + lam * cross;
                const Matrix den = uvtv.rowwise() + lam * vsq;
                u.array() *= num.array() / (den.array() + opts.eps);

                normalize_pair(u, vv);

                const Matrix xtu = x.transpose() * u;
                const Matrix utu = u.transpose() * u;
                const Matrix vnum = xtu + lam * res.coeff;
                const Matrix vden = vv * utu + lam * vv;
                vv.array() *= vnum.array() / (vden.array() + opts.eps);

                detail::check_finite(u, "U");
                detail::check_finite(vv, "V");
                const double obj = view_objective(v);
                const bool done = detail::relative_change_below(prev_obj, obj, opts.tol);
                prev_obj = obj;
                if (done) break;
            }
        }
        refresh_consensus();

        const double obj = multinmf_objective(data, res, lambda);
        if (!std::isfinite(obj)) throw SolverDivergenceError("solver diverged: objective not finite");
        const double prev = res.objective_trace.back();
        res.objective_trace.push_back(obj);
        res.iterations = t;
        if (detail::relative_change_below(prev, obj, opts.tol)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

} // namespace mvnmf
