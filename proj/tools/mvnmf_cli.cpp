// Command-line harness: reproduces the multi-view clustering protocol end to
// end (load, normalize, graph, factorize, cluster, score) and the gamma
// sweep, plus synthetic-data generation and a diagnostic suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvnmf/mvnmf.hpp"

namespace {

struct CliOptions {
    mvnmf::ExperimentConfig cfg;
    std::vector<std::string> method_names;
    std::vector<int> synthetic_dims;
    std::string out_dir = "results";
    std::vector<double> multipliers = {0.0, 0.25, 0.5, 1.0, 2.0};
    std::string export_graph_path;
    std::string export_factors_path;
};

void add_experiment_options(CLI::App* cmd, CliOptions& o) {
    cmd->set_config("--config", "", "Key-value config file; every key has a same-named flag");
    cmd->add_option("--dataset.fourier_path", o.cfg.fourier_path, "mfeat-fou file (76 features)");
    cmd->add_option("--dataset.pixel_path", o.cfg.pixel_path, "mfeat-pix file (240 features)");
    cmd->add_option("--synthetic.clusters", o.cfg.synthetic.clusters,
                    "Generate a planted-partition dataset with this many clusters instead of loading files");
    cmd->add_option("--synthetic.per_cluster", o.cfg.synthetic.per_cluster, "Samples per planted cluster");
    cmd->add_option("--synthetic.dims", o.synthetic_dims, "Per-view feature counts")->delimiter(',');
    cmd->add_option("--synthetic.noise", o.cfg.synthetic.noise, "Uniform noise amplitude");
    cmd->add_option("--synthetic.seed", o.cfg.synthetic.seed, "Generator seed");
    cmd->add_option("--methods", o.method_names, "Subset of kmeans,nmf,gnmf,multinmf,equinmf")
        ->delimiter(',');
    cmd->add_option("--k_clusters", o.cfg.k_clusters, "Cluster count (also the embedding dimension)");
    cmd->add_option("--runs", o.cfg.runs, "Randomized repetitions per method");
    cmd->add_option("--knn_k", o.cfg.knn_k, "Nearest-neighbour count for the similarity graphs");
    cmd->add_option("--gnmf.gamma", o.cfg.gnmf_gamma, "GNMF graph weight");
    cmd->add_option("--multinmf.lambda", o.cfg.multinmf_lambda, "MultiNMF consensus weight");
    cmd->add_option("--equinmf.gamma_multiplier", o.cfg.equinmf_gamma_multiplier,
                    "Scale on the automatic gamma");
    cmd->add_option("--seed", o.cfg.seed, "Master seed");
    cmd->add_option("--workers", o.cfg.workers, "Concurrent runs");
    cmd->add_option("--normalization", o.cfg.normalization,
                    "auto|l1_columns|l2_columns (explicit values must match every method)");
    cmd->add_option("--solver.max_iter", o.cfg.solver_max_iter, "Solver iteration cap");
    cmd->add_option("--solver.tol", o.cfg.solver_tol, "Relative objective-change tolerance");
    cmd->add_option("--kmeans.repeats", o.cfg.kmeans_repeats, "k-means restarts");
    cmd->add_option("--kmeans.iters", o.cfg.kmeans_iters, "Lloyd iterations per restart");
    cmd->add_option("--out", o.out_dir, "Output directory");
}

void finalize_config(CliOptions& o) {
    if (!o.method_names.empty()) {
        o.cfg.methods.clear();
        for (const auto& name : o.method_names) o.cfg.methods.push_back(mvnmf::method_from_name(name));
    }
    if (!o.synthetic_dims.empty()) {
        o.cfg.synthetic.dims.clear();
        for (int d : o.synthetic_dims) o.cfg.synthetic.dims.push_back(d);
    }
}

void print_report(const mvnmf::ExperimentResult& result) {
    if (result.heuristics) {
        const auto& h = *result.heuristics;
        std::printf("heuristics: gamma=%.6g (n_v=%d, K=%d, N=%lld, mean_w=%.6g), alpha=(",
                    h.gamma, h.n_views, h.k, static_cast<long long>(h.samples), h.mean_w);
        for (std::size_t i = 0; i < h.alpha.size(); ++i) {
            std::printf("%s%g", i ? ", " : "", h.alpha[i]);
        }
        std::printf(")\n");
    }
    std::printf("%-10s %18s %18s\n", "method", "accuracy", "nmi");
    for (const auto& m : result.report.methods) {
        std::printf("%-10s %9.4f +- %5.4f %9.4f +- %5.4f\n", m.method.c_str(), m.accuracy_mean,
                    m.accuracy_std, m.nmi_mean, m.nmi_std);
    }
    for (const auto& s : result.report.significance) {
        if (s.metric != "accuracy") continue;
        std::printf("welch %s vs %s: t=%.3f p=%.4g%s\n", s.method_a.c_str(), s.method_b.c_str(),
                    s.t, s.p, s.significant ? " (significant)" : "");
    }
}

int cmd_cluster(CliOptions& o) {
    finalize_config(o);
    const mvnmf::ExperimentResult result = mvnmf::run_experiment(o.cfg);
    mvnmf::emit_results(result, o.cfg, o.out_dir);
    print_report(result);
    std::printf("wrote %s/runs.csv and %s/aggregate.json\n", o.out_dir.c_str(), o.out_dir.c_str());
    return 0;
}

int cmd_sweep(CliOptions& o) {
    finalize_config(o);
    bool has_equinmf = false;
    for (auto m : o.cfg.methods) has_equinmf |= m == mvnmf::Method::equinmf;
    if (!has_equinmf) o.cfg.methods.push_back(mvnmf::Method::equinmf);
    const std::vector<mvnmf::SweepRow> rows = mvnmf::run_sweep(o.cfg, o.multipliers);

    std::error_code ec;
    std::filesystem::create_directories(o.out_dir, ec);
    const auto path = std::filesystem::path(o.out_dir) / "sweep.csv";
    std::ofstream out(path);
    if (!out) throw mvnmf::DataError("cannot write '" + path.string() + "'");
    mvnmf::write_sweep_csv(out, rows);

    std::printf("%10s %18s %18s\n", "multiplier", "accuracy", "nmi");
    for (const auto& r : rows) {
        std::printf("%10.3g %9.4f +- %5.4f %9.4f +- %5.4f\n", r.multiplier, r.acc_mean, r.acc_std,
                    r.nmi_mean, r.nmi_std);
    }
    std::printf("wrote %s\n", path.string().c_str());
    return 0;
}

int cmd_datagen(int clusters, int per_cluster, const std::vector<int>& dims, double noise,
                std::uint64_t seed, const std::string& out_dir) {
    std::vector<mvnmf::Index> d;
    for (int x : dims) d.push_back(x);
    if (d.empty()) d = {20, 30};
    const mvnmf::MultiViewDataset data =
        mvnmf::make_synthetic(clusters, per_cluster, d, noise, seed);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const auto path = std::filesystem::path(out_dir) / ("view" + std::to_string(v) + ".txt");
        mvnmf::save_view(data.views[v], path.string());
        std::printf("wrote %s (%lld features x %lld samples)\n", path.string().c_str(),
                    static_cast<long long>(data.views[v].features()),
                    static_cast<long long>(data.views[v].samples()));
    }
    const auto labels_path = std::filesystem::path(out_dir) / "labels.txt";
    std::ofstream out(labels_path);
    if (!out) throw mvnmf::DataError("cannot write '" + labels_path.string() + "'");
    for (int lab : *data.labels) out << lab << '\n';
    std::printf("wrote %s\n", labels_path.string().c_str());
    return 0;
}

int cmd_check(CliOptions& o) {
    finalize_config(o);
    if (!o.cfg.synthetic.enabled() && o.cfg.fourier_path.empty()) {
        // default diagnostic substrate when no dataset is given
        o.cfg.synthetic.clusters = 3;
        o.cfg.synthetic.per_cluster = 40;
        o.cfg.synthetic.dims = {24, 18};
        o.cfg.synthetic.noise = 0.05;
    }
    using namespace mvnmf;
    const MultiViewDataset raw = o.cfg.synthetic.enabled()
                                     ? make_synthetic(o.cfg.synthetic.clusters, o.cfg.synthetic.per_cluster,
                                                      o.cfg.synthetic.dims.empty() ? std::vector<Index>{24, 18}
                                                                                   : o.cfg.synthetic.dims,
                                                      o.cfg.synthetic.noise, o.cfg.synthetic.seed)
                                     : load_mfeat(o.cfg.fourier_path, o.cfg.pixel_path);
    const int k = o.cfg.synthetic.enabled() ? o.cfg.synthetic.clusters : o.cfg.k_clusters;
    const MultiViewDataset l1 = normalize(raw, NormState::l1_columns);

    std::vector<SimilarityGraph> per_view;
    for (const auto& view : l1.views) per_view.push_back(knn_graph(view, o.cfg.knn_k));
    const SimilarityGraph graph = combine_graphs(per_view);

    int failures = 0;
    auto report = [&](bool ok, const std::string& what) {
        std::printf("[%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
        if (!ok) ++failures;
    };

    // Laplacian quadratic form matches the edge sum on random vectors
    {
        detail::Rng rng(o.cfg.seed);
        double max_err = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            Vector x(graph.size());
            for (Index i = 0; i < x.size(); ++i) x(i) = detail::uniform01(rng) - 0.5;
            const double quad = x.dot(graph.laplacian() * x);
            double edge = 0.0;
            for (Index i = 0; i < graph.size(); ++i) {
                for (Index j = 0; j < graph.size(); ++j) {
                    edge += 0.5 * graph.weights()(i, j) * (x(i) - x(j)) * (x(i) - x(j));
                }
            }
            max_err = std::max(max_err, std::abs(quad - edge) / std::max(1.0, std::abs(edge)));
        }
        report(max_err < 1e-9, "laplacian quadratic form identity (max rel err " + fmt17(max_err) + ")");
    }

    const HeuristicReport heur = heuristic_report(l1, k, graph);
    std::printf("heuristics: gamma=%.6g mean_weight=%.6g alpha=(", heur.gamma, heur.mean_w);
    for (std::size_t i = 0; i < heur.alpha.size(); ++i) std::printf("%s%g", i ? ", " : "", heur.alpha[i]);
    std::printf(")\n");

    const FactorizationResult init = init_factors(l1, k, o.cfg.seed);
    const ContributionReport contrib =
        expected_contribution_check(l1, init, heur.alpha, heur.gamma, graph);
    for (std::size_t v = 0; v < contrib.view_means.size(); ++v) {
        std::printf("view %zu data-term mean: %.6g\n", v, contrib.view_means[v]);
    }
    std::printf("graph-term mean: %.6g\n", contrib.graph_mean);
    report(contrib.view_ratio <= 2.0,
           "per-view contributions within factor 2 (ratio " + fmt17(contrib.view_ratio) + ")");
    report(contrib.graph_to_data_ratio >= 1.0 / 3.0 && contrib.graph_to_data_ratio <= 3.0,
           "graph contribution within factor 3 of data (ratio " + fmt17(contrib.graph_to_data_ratio) + ")");

    // analytic coefficient gradient vs central differences on a small instance
    {
        const MultiViewDataset small = make_synthetic(2, 4, {6, 5}, 0.3, o.cfg.seed + 1);
        const MultiViewDataset small_l1 = normalize(small, NormState::l1_columns);
        std::vector<SimilarityGraph> gs;
        for (const auto& view : small_l1.views) gs.push_back(knn_graph(view, 2));
        const SimilarityGraph sg = combine_graphs(gs);
        const EquiParams params = heuristic_params(small_l1, sg, 2);
        FactorizationResult f = scaled_uniform_factors(small_l1, 2, o.cfg.seed + 2);
        const Matrix grad = equinmf_grad_coeff(small_l1, f.basis, f.coeff, sg, params);
        double max_rel = 0.0;
        const double h = 1e-6;
        for (Index i = 0; i < f.coeff.rows(); ++i) {
            for (Index j = 0; j < f.coeff.cols(); ++j) {
                Matrix vp = f.coeff, vm = f.coeff;
                vp(i, j) += h;
                vm(i, j) -= h;
                const double fd = (equinmf_objective_identity_scaling(small_l1, f.basis, vp, sg, params) -
                                   equinmf_objective_identity_scaling(small_l1, f.basis, vm, sg, params)) /
                                  (2 * h);
                max_rel = std::max(max_rel, std::abs(fd - grad(i, j)) / std::max(1.0, std::abs(fd)));
            }
        }
        report(max_rel < 1e-5, "coefficient gradient matches finite differences (max rel err " +
                                   fmt17(max_rel) + ")");
    }

    // short solver run: objective must drop, row sums must stay near 1
    {
        SolverOptions opts;
        opts.k = k;
        opts.max_iter = 60;
        opts.seed = o.cfg.seed;
        const EquiParams params = heuristic_params(l1, graph, k, o.cfg.equinmf_gamma_multiplier);
        const FactorizationResult res = equinmf(l1, graph, params, opts);
        report(res.final_objective() < res.objective_trace.front(),
               "objective decreased (" + fmt17(res.objective_trace.front()) + " -> " +
                   fmt17(res.final_objective()) + ")");
        const Vector row_sums = res.coeff.rowwise().sum();
        report(row_sums.minCoeff() > 0.5 && row_sums.maxCoeff() < 2.0,
               "coefficient row sums in [0.5, 2] (min " + fmt17(row_sums.minCoeff()) + ", max " +
                   fmt17(row_sums.maxCoeff()) + ")");
        if (!o.export_factors_path.empty()) {
            std::ofstream out(o.export_factors_path);
            if (!out) throw DataError("cannot write '" + o.export_factors_path + "'");
            write_factors(out, res, o.cfg.seed);
            std::printf("wrote %s\n", o.export_factors_path.c_str());
        }
    }
    if (!o.export_graph_path.empty()) {
        export_graph(graph, o.export_graph_path);
        std::printf("wrote %s\n", o.export_graph_path.c_str());
    }
    return failures == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view NMF clustering toolkit"};
    app.require_subcommand(1);

    CliOptions cluster_opts, sweep_opts, check_opts;
    int rc = 0;

    auto* cluster = app.add_subcommand("cluster", "Run the full protocol and write per-run CSV + aggregate record");
    add_experiment_options(cluster, cluster_opts);
    cluster->callback([&] { rc = cmd_cluster(cluster_opts); });

    auto* sweep = app.add_subcommand("sweep", "Gamma-robustness sweep over multiples of the automatic gamma");
    add_experiment_options(sweep, sweep_opts);
    sweep->add_option("--multipliers", sweep_opts.multipliers, "Gamma multipliers")->delimiter(',');
    sweep->callback([&] { rc = cmd_sweep(sweep_opts); });

    int dg_clusters = 3, dg_per_cluster = 100;
    std::vector<int> dg_dims;
    double dg_noise = 0.05;
    std::uint64_t dg_seed = 0;
    std::string dg_out = "synthetic";
    auto* datagen = app.add_subcommand("datagen", "Write a planted-partition dataset in the UCI file format");
    datagen->add_option("--clusters", dg_clusters, "Cluster count");
    datagen->add_option("--per_cluster", dg_per_cluster, "Samples per cluster");
    datagen->add_option("--dims", dg_dims, "Per-view feature counts")->delimiter(',');
    datagen->add_option("--noise", dg_noise, "Uniform noise amplitude");
    datagen->add_option("--seed", dg_seed, "Generator seed");
    datagen->add_option("--out", dg_out, "Output directory");
    datagen->callback(
        [&] { rc = cmd_datagen(dg_clusters, dg_per_cluster, dg_dims, dg_noise, dg_seed, dg_out); });

    auto* check = app.add_subcommand("check", "Diagnostic suite: graph identities, heuristic contributions, gradients, descent");
    add_experiment_options(check, check_opts);
    check->add_option("--export_graph", check_opts.export_graph_path, "Dump the combined graph as a coordinate list");
    check->add_option("--export_factors", check_opts.export_factors_path, "Dump one solver run's factors");
    check->callback([&] { rc = cmd_check(check_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const mvnmf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const mvnmf::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const mvnmf::SolverDivergenceError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
