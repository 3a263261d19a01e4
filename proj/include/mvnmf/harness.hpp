#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvnmf/cluster.hpp"
#include "mvnmf/core.hpp"
#include "mvnmf/dataviews.hpp"
#include "mvnmf/factorize.hpp"
#include "mvnmf/graph.hpp"
#include "mvnmf/heuristics.hpp"
#include "mvnmf/metrics.hpp"
#include "mvnmf/serialize.hpp"

namespace mvnmf {

enum class Method { kmeans, nmf, gnmf, multinmf, equinmf };

inline const std::vector<Method>& all_methods() {
    static const std::vector<Method> ms{Method::kmeans, Method::nmf, Method::gnmf,
                                        Method::multinmf, Method::equinmf};
    return ms;
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::kmeans: return "kmeans";
        case Method::nmf: return "nmf";
        case Method::gnmf: return "gnmf";
        case Method::multinmf: return "multinmf";
        case Method::equinmf: return "equinmf";
    }
    throw ConfigError("unknown method");
}

inline Method method_from_name(const std::string& name) {
    for (Method m : all_methods()) {
        if (method_name(m) == name) return m;
    }
    throw ConfigError("unknown method '" + name + "' (expected kmeans|nmf|gnmf|multinmf|equinmf)");
}

/// Planted-partition dataset parameters, the file-free alternative to the
/// mfeat paths.
struct SyntheticSpec {
    int clusters = 0;
    int per_cluster = 100;
    std::vector<Index> dims;
    double noise = 0.05;
    std::uint64_t seed = 0;

    bool enabled() const { return clusters > 0; }
};

struct ExperimentConfig {
    std::string fourier_path;
    std::string pixel_path;
    SyntheticSpec synthetic;

    std::vector<Method> methods = all_methods();
    int k_clusters = 10;
    int runs = 20;
    int knn_k = 5;
    double gnmf_gamma = 100.0;          // recommended GNMF setting
    double multinmf_lambda = 0.01;      // recommended MultiNMF setting
    double equinmf_gamma_multiplier = 1.0;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string normalization = "auto"; // auto | l1_columns | l2_columns
    int solver_max_iter = 300;
    double solver_tol = 1e-6;
    int kmeans_repeats = 20;
    int kmeans_iters = 100;

    void validate() const {
        if (methods.empty()) throw ConfigError("config: method list is empty");
        if (runs < 1) throw ConfigError("config: runs must be >= 1");
        if (k_clusters < 1) throw ConfigError("config: k_clusters must be >= 1");
        if (knn_k < 1) throw ConfigError("config: knn_k must be >= 1");
        if (workers < 1) throw ConfigError("config: workers must be >= 1");
        if (gnmf_gamma < 0.0 || multinmf_lambda < 0.0 || equinmf_gamma_multiplier < 0.0) {
            throw ConfigError("config: method parameters must be nonnegative");
        }
        if (normalization != "auto" && normalization != "l1_columns" &&
            normalization != "l2_columns") {
            throw ConfigError("config: normalization must be auto, l1_columns or l2_columns");
        }
        // Each method has exactly one valid normalization; an explicit
        // override that contradicts a requested method is an error, never a
        // silent run.
        for (Method m : methods) {
            const bool wants_l1 = m == Method::multinmf || m == Method::equinmf;
            if (normalization == "l2_columns" && wants_l1) {
                throw ConfigError("config: " + method_name(m) + " requires l1_columns normalization");
            }
            if (normalization == "l1_columns" && !wants_l1) {
                throw ConfigError("config: " + method_name(m) + " requires l2_columns normalization");
            }
        }
        if (!synthetic.enabled() && (fourier_path.empty() || pixel_path.empty())) {
            throw ConfigError("config: need dataset.fourier_path and dataset.pixel_path, or synthetic.clusters");
        }
    }
};

struct RunRecord {
    std::string method;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double nmi = 0.0;
    double objective = 0.0;
    int iterations = 0;
    long long wall_ms = 0;
};

struct SweepRow {
    double multiplier = 0.0;
    double acc_mean = 0.0, acc_std = 0.0;
    double nmi_mean = 0.0, nmi_std = 0.0;
};

struct ExperimentResult {
    std::vector<RunRecord> records; // sorted by (method, seed)
    EvalReport report;
    std::optional<HeuristicReport> heuristics;
};

/// Seed for one (method, run) cell. Injective over the methods and any run
/// count below the stride, so no two runs share an RNG stream.
inline std::uint64_t run_seed(std::uint64_t master, Method method, int run) {
    constexpr std::uint64_t kStride = 1000003;
    const auto m = static_cast<std::uint64_t>(method);
    return master + kStride * (m + 1) + static_cast<std::uint64_t>(run);
}

namespace detail {

/// Dataset plus every method-specific preparation the protocol needs:
/// L2-normalized concatenation for the single-view methods, L1-normalized
/// views for the multi-view ones, and the kNN graphs built once per dataset.
struct PreparedExperiment {
    MultiViewDataset l1;
    ViewMatrix concat_l2;
    std::optional<SimilarityGraph> concat_graph;   // gnmf
    std::optional<SimilarityGraph> combined_graph; // equinmf: sum of per-view graphs
    std::optional<HeuristicReport> heuristics;
    EquiParams equi_params;
    LabelVector labels;
};

inline bool wants_method(const ExperimentConfig& cfg, Method m) {
    for (Method x : cfg.methods) {
        if (x == m) return true;
    }
    return false;
}

inline PreparedExperiment prepare_experiment(const ExperimentConfig& cfg) {
    MultiViewDataset raw = cfg.synthetic.enabled()
                               ? make_synthetic(cfg.synthetic.clusters, cfg.synthetic.per_cluster,
                                                cfg.synthetic.dims.empty()
                                                    ? std::vector<Index>{20, 30}
                                                    : cfg.synthetic.dims,
                                                cfg.synthetic.noise, cfg.synthetic.seed)
                               : load_mfeat(cfg.fourier_path, cfg.pixel_path);
    raw.validate();
    if (!raw.labels) throw DataError("dataset has no ground-truth labels to score against");

    PreparedExperiment prep;
    prep.labels = *raw.labels;

    const bool needs_l2 = wants_method(cfg, Method::kmeans) || wants_method(cfg, Method::nmf) ||
                          wants_method(cfg, Method::gnmf);
    const bool needs_l1 = wants_method(cfg, Method::multinmf) || wants_method(cfg, Method::equinmf);

    if (needs_l2) {
        const MultiViewDataset l2 = normalize(raw, NormState::l2_columns);
        prep.concat_l2 = concatenate(l2);
        if (wants_method(cfg, Method::gnmf)) {
            prep.concat_graph = knn_graph(prep.concat_l2, cfg.knn_k);
        }
    }
    if (needs_l1) {
        prep.l1 = normalize(raw, NormState::l1_columns);
        if (wants_method(cfg, Method::equinmf)) {
            std::vector<SimilarityGraph> per_view;
            per_view.reserve(prep.l1.views.size());
            for (const auto& view : prep.l1.views) per_view.push_back(knn_graph(view, cfg.knn_k));
            prep.combined_graph = combine_graphs(per_view);
            prep.heuristics = heuristic_report(prep.l1, cfg.k_clusters, *prep.combined_graph);
            prep.equi_params = heuristic_params(prep.l1, *prep.combined_graph, cfg.k_clusters,
                                                cfg.equinmf_gamma_multiplier);
        }
    }
    return prep;
}

inline RunRecord execute_run(const ExperimentConfig& cfg, const PreparedExperiment& prep,
                             Method method, int run, const EquiParams* params_override = nullptr) {
    const std::uint64_t seed = run_seed(cfg.seed, method, run);
    SolverOptions opts;
    opts.k = cfg.k_clusters;
    opts.max_iter = cfg.solver_max_iter;
    opts.tol = cfg.solver_tol;
    opts.seed = seed;

    RunRecord rec;
    rec.method = method_name(method);
    rec.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();

    LabelVector predicted;
    if (method == Method::kmeans) {
        const Matrix points = prep.concat_l2.values.transpose();
        ClusterRun cr = kmeans(points, cfg.k_clusters, cfg.kmeans_repeats, cfg.kmeans_iters, seed);
        predicted = std::move(cr.labels);
        rec.objective = cr.sse;
    } else {
        FactorizationResult res;
        switch (method) {
            case Method::nmf:
                res = nmf(prep.concat_l2, opts);
                break;
            case Method::gnmf:
                res = gnmf(prep.concat_l2, *prep.concat_graph, cfg.gnmf_gamma, opts);
                break;
            case Method::multinmf:
                res = multinmf(prep.l1,
                               std::vector<double>(static_cast<std::size_t>(prep.l1.n_views()),
                                                   cfg.multinmf_lambda),
                               opts);
                break;
            case Method::equinmf:
                res = equinmf(prep.l1, *prep.combined_graph,
                              params_override ? *params_override : prep.equi_params, opts);
                break;
            default:
                throw ConfigError("unexpected method");
        }
        // k-means on V (V* for MultiNMF), decoupled from the solver's stream
        ClusterRun cr = kmeans(res.coeff, cfg.k_clusters, cfg.kmeans_repeats, cfg.kmeans_iters,
                               mix_seed(seed, 0x6b6d65616e73ULL));
        predicted = std::move(cr.labels);
        rec.objective = res.final_objective();
        rec.iterations = res.iterations;
    }
    rec.accuracy = accuracy(predicted, prep.labels);
    rec.nmi = nmi(predicted, prep.labels);
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
}

/// Run tasks 0..count-1 on up to `workers` threads. Results land by index,
/// so scheduling order never affects output. The first error wins and is
/// rethrown on the caller thread.
template <typename Fn>
inline void parallel_for_tasks(int count, int workers, Fn&& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Rethrow a run failure with method/run context, preserving the error class
/// (it selects the CLI exit code).
[[noreturn]] inline void rethrow_with_context(const std::string& method, int run) {
    const std::string ctx = "[" + method + " run " + std::to_string(run) + "] ";
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + e.what());
    } catch (const DataError& e) {
        throw DataError(ctx + e.what());
    } catch (const SolverDivergenceError& e) {
        throw SolverDivergenceError(ctx + e.what());
    } catch (const std::exception& e) {
        throw DataError(ctx + e.what());
    }
}

} // namespace detail

/// Full protocol: per method and run, apply the method's normalization,
/// factorize, cluster the embedding with repeated k-means, and score against
/// the ground truth; then aggregate statistics and pairwise Welch tests.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const detail::PreparedExperiment prep = detail::prepare_experiment(cfg);

    struct Task {
        Method method;
        int run;
    };
    std::vector<Task> tasks;
    for (Method m : cfg.methods) {
        for (int r = 0; r < cfg.runs; ++r) tasks.push_back({m, r});
    }
    std::vector<RunRecord> records(tasks.size());
    detail::parallel_for_tasks(static_cast<int>(tasks.size()), cfg.workers, [&](int i) {
        const Task& t = tasks[static_cast<std::size_t>(i)];
        try {
            records[static_cast<std::size_t>(i)] = detail::execute_run(cfg, prep, t.method, t.run);
        } catch (...) {
            detail::rethrow_with_context(method_name(t.method), t.run);
        }
    });

    std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        return a.method != b.method ? a.method < b.method : a.seed < b.seed;
    });

    ExperimentResult result;
    result.records = std::move(records);
    result.heuristics = prep.heuristics;

    std::vector<std::string> order;
    for (const auto& rec : result.records) {
        if (order.empty() || order.back() != rec.method) order.push_back(rec.method);
    }
    for (const auto& name : order) {
        std::vector<double> acc, nm;
        for (const auto& rec : result.records) {
            if (rec.method == name) {
                acc.push_back(rec.accuracy);
                nm.push_back(rec.nmi);
            }
        }
        result.report.methods.push_back(MethodStats::from_runs(name, std::move(acc), std::move(nm)));
    }
    if (cfg.runs >= 2) {
        for (std::size_t a = 0; a < result.report.methods.size(); ++a) {
            for (std::size_t b = a + 1; b < result.report.methods.size(); ++b) {
                const auto& ma = result.report.methods[a];
                const auto& mb = result.report.methods[b];
                for (const char* metric : {"accuracy", "nmi"}) {
                    const auto& xs = metric == std::string("accuracy") ? ma.accuracy_runs : ma.nmi_runs;
                    const auto& ys = metric == std::string("accuracy") ? mb.accuracy_runs : mb.nmi_runs;
                    const TTestResult tt = welch_ttest(xs, ys, 0.05);
                    result.report.significance.push_back(
                        PairwiseTest{ma.method, mb.method, metric, tt.t, tt.p, tt.significant});
                }
            }
        }
    }
    return result;
}

/// Gamma-robustness sweep: rerun the EquiNMF pipeline with gamma set to each
/// multiple of the heuristic value, same seeds per run as run_experiment.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                       std::vector<double> multipliers = {0.0, 0.25, 0.5, 1.0,
                                                                          2.0}) {
    cfg.validate();
    if (!detail::wants_method(cfg, Method::equinmf)) {
        throw ConfigError("sweep: equinmf must be in the method list");
    }
    if (multipliers.empty()) throw ConfigError("sweep: multiplier list is empty");
    for (double m : multipliers) {
        if (m < 0.0) throw ConfigError("sweep: multipliers must be nonnegative");
    }
    const detail::PreparedExperiment prep = detail::prepare_experiment(cfg);

    std::vector<EquiParams> params;
    params.reserve(multipliers.size());
    for (double m : multipliers) {
        EquiParams p = prep.equi_params;
        p.gamma_multiplier = m;
        p.gamma = m * prep.heuristics->gamma;
        params.push_back(std::move(p));
    }

    const int per_row = cfg.runs;
    std::vector<RunRecord> records(multipliers.size() * static_cast<std::size_t>(per_row));
    detail::parallel_for_tasks(static_cast<int>(records.size()), cfg.workers, [&](int i) {
        const int row = i / per_row;
        const int run = i % per_row;
        try {
            records[static_cast<std::size_t>(i)] = detail::execute_run(
                cfg, prep, Method::equinmf, run, &params[static_cast<std::size_t>(row)]);
        } catch (...) {
            detail::rethrow_with_context("equinmf(sweep x" + fmt17(multipliers[static_cast<std::size_t>(row)]) + ")",
                                         run);
        }
    });

    std::vector<SweepRow> rows;
    for (std::size_t r = 0; r < multipliers.size(); ++r) {
        std::vector<double> acc, nm;
        for (int run = 0; run < per_row; ++run) {
            const auto& rec = records[r * static_cast<std::size_t>(per_row) + static_cast<std::size_t>(run)];
            acc.push_back(rec.accuracy);
            nm.push_back(rec.nmi);
        }
        SweepRow row;
        row.multiplier = multipliers[r];
        row.acc_mean = detail::mean(acc);
        row.acc_std = detail::sample_std(acc);
        row.nmi_mean = detail::mean(nm);
        row.nmi_std = detail::sample_std(nm);
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Result emission
// ---------------------------------------------------------------------------

inline void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "method,seed,accuracy,nmi,objective,iterations,wall_ms\n";
    for (const auto& r : records) {
        out << r.method << ',' << r.seed << ',' << fmt17(r.accuracy) << ',' << fmt17(r.nmi) << ','
            << fmt17(r.objective) << ',' << r.iterations << ',' << r.wall_ms << '\n';
    }
}

inline std::vector<RunRecord> read_runs_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "method,seed,accuracy,nmi,objective,iterations,wall_ms") {
        throw DataError("runs csv: bad header");
    }
    std::vector<RunRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        RunRecord r;
        std::string cell;
        std::getline(ls, r.method, ',');
        std::getline(ls, cell, ',');
        r.seed = std::stoull(cell);
        std::getline(ls, cell, ',');
        r.accuracy = std::stod(cell);
        std::getline(ls, cell, ',');
        r.nmi = std::stod(cell);
        std::getline(ls, cell, ',');
        r.objective = std::stod(cell);
        std::getline(ls, cell, ',');
        r.iterations = std::stoi(cell);
        std::getline(ls, cell);
        r.wall_ms = std::stoll(cell);
        records.push_back(std::move(r));
    }
    return records;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "multiplier,acc_mean,acc_std,nmi_mean,nmi_std\n";
    for (const auto& r : rows) {
        out << fmt17(r.multiplier) << ',' << fmt17(r.acc_mean) << ',' << fmt17(r.acc_std) << ','
            << fmt17(r.nmi_mean) << ',' << fmt17(r.nmi_std) << '\n';
    }
}

inline nlohmann::ordered_json config_record(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["dataset"]["fourier_path"] = cfg.fourier_path;
    j["dataset"]["pixel_path"] = cfg.pixel_path;
    if (cfg.synthetic.enabled()) {
        j["dataset"]["synthetic"] = {{"clusters", cfg.synthetic.clusters},
                                     {"per_cluster", cfg.synthetic.per_cluster},
                                     {"dims", cfg.synthetic.dims},
                                     {"noise", cfg.synthetic.noise},
                                     {"seed", cfg.synthetic.seed}};
    }
    std::vector<std::string> names;
    for (Method m : cfg.methods) names.push_back(method_name(m));
    j["methods"] = names;
    j["k_clusters"] = cfg.k_clusters;
    j["runs"] = cfg.runs;
    j["knn_k"] = cfg.knn_k;
    j["gnmf"]["gamma"] = cfg.gnmf_gamma;
    j["multinmf"]["lambda"] = cfg.multinmf_lambda;
    j["equinmf"]["gamma_multiplier"] = cfg.equinmf_gamma_multiplier;
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["normalization"] = cfg.normalization;
    j["solver"]["max_iter"] = cfg.solver_max_iter;
    j["solver"]["tol"] = cfg.solver_tol;
    j["kmeans"]["repeats"] = cfg.kmeans_repeats;
    j["kmeans"]["iters"] = cfg.kmeans_iters;
    return j;
}

inline nlohmann::ordered_json aggregate_record(const ExperimentResult& result,
                                               const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["config"] = config_record(cfg);
    if (result.heuristics) {
        const auto& h = *result.heuristics;
        j["heuristics"] = {{"alpha", h.alpha},     {"gamma", h.gamma},
                           {"n_views", h.n_views}, {"k", h.k},
                           {"samples", h.samples}, {"mean_weight", h.mean_w}};
    }
    for (const auto& m : result.report.methods) {
        nlohmann::ordered_json jm;
        jm["accuracy_mean"] = m.accuracy_mean;
        jm["accuracy_std"] = m.accuracy_std;
        jm["nmi_mean"] = m.nmi_mean;
        jm["nmi_std"] = m.nmi_std;
        jm["accuracy_runs"] = m.accuracy_runs;
        jm["nmi_runs"] = m.nmi_runs;
        j["methods"][m.method] = jm;
    }
    j["significance"] = nlohmann::ordered_json::array();
    for (const auto& s : result.report.significance) {
        j["significance"].push_back({{"method_a", s.method_a},
                                     {"method_b", s.method_b},
                                     {"metric", s.metric},
                                     {"t", s.t},
                                     {"p", s.p},
                                     {"significant", s.significant}});
    }
    return j;
}

/// Write runs.csv and aggregate.json under `out_dir`. Byte-stable for
/// identical records and report.
inline void emit_results(const ExperimentResult& result, const ExperimentConfig& cfg,
                         const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto runs_path = std::filesystem::path(out_dir) / "runs.csv";
    std::ofstream runs(runs_path);
    if (!runs) throw DataError("cannot write '" + runs_path.string() + "'");
    write_runs_csv(runs, result.records);

    const auto agg_path = std::filesystem::path(out_dir) / "aggregate.json";
    std::ofstream agg(agg_path);
    if (!agg) throw DataError("cannot write '" + agg_path.string() + "'");
    agg << aggregate_record(result, cfg).dump(2) << '\n';
}

} // namespace mvnmf
