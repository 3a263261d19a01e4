#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mvnmf/core.hpp"

namespace mvnmf {

namespace detail {

/// Remap arbitrary label identifiers to dense indices 0..k-1 in order of
/// first appearance.
inline std::vector<int> dense_relabel(const LabelVector& labels, int& k_out) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
        (void)fresh;
        out[i] = it->second;
    }
    k_out = static_cast<int>(remap.size());
    return out;
}

/// Min-cost assignment on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns the column matched to each row.
inline std::vector<int> hungarian_min_assignment(const std::vector<std::vector<long long>>& cost) {
    const int n = static_cast<int>(cost.size());
    constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(static_cast<std::size_t>(n) + 1, 0), v(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<long long> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            long long delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const long long cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                                      u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> match(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (p[static_cast<std::size_t>(j)] > 0) match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    }
    return match;
}

/// Continued-fraction core of the regularized incomplete beta (Lentz).
inline double beta_cont_frac(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cont_frac(a, b, x) / a;
    return 1.0 - bt * beta_cont_frac(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability P(|T| > t) for Student's t with df degrees of
/// freedom, via I_x(df/2, 1/2) at x = df/(df + t^2).
inline double student_t_two_sided_p(double t, double df) {
    return reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
}

} // namespace detail

/// Clustering accuracy: the largest fraction of agreeing samples over all
/// one-to-one matchings of predicted clusters to true classes, found by
/// optimal assignment on the contingency matrix.
inline double accuracy(const LabelVector& pred, const LabelVector& truth) {
    if (pred.size() != truth.size()) throw ConfigError("accuracy: label lengths differ");
    if (pred.empty()) throw ConfigError("accuracy: empty labelings");
    int np = 0, nt = 0;
    const std::vector<int> p = detail::dense_relabel(pred, np);
    const std::vector<int> t = detail::dense_relabel(truth, nt);
    if (np > 64 || nt > 64) throw ConfigError("accuracy: more than 64 clusters");

    const int n = std::max(np, nt);
    std::vector<std::vector<long long>> counts(static_cast<std::size_t>(n),
                                               std::vector<long long>(static_cast<std::size_t>(n), 0));
    for (std::size_t i = 0; i < p.size(); ++i) ++counts[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])];

    const long long total = static_cast<long long>(pred.size());
    std::vector<std::vector<long long>> cost(static_cast<std::size_t>(n),
                                             std::vector<long long>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = total - counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    const std::vector<int> match = detail::hungarian_min_assignment(cost);
    long long agree = 0;
    for (int i = 0; i < n; ++i) agree += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(match[static_cast<std::size_t>(i)])];
    return static_cast<double>(agree) / static_cast<double>(total);
}

/// Normalized mutual information I(pred; truth) / sqrt(H(pred) H(truth))
/// with natural-log plug-in entropies. Two single-cluster labelings score 1;
/// if exactly one side is single-cluster the partitions differ and the score
/// is 0.
inline double nmi(const LabelVector& pred, const LabelVector& truth) {
    if (pred.size() != truth.size()) throw ConfigError("nmi: label lengths differ");
    if (pred.empty()) throw ConfigError("nmi: empty labelings");
    int np = 0, nt = 0;
    const std::vector<int> p = detail::dense_relabel(pred, np);
    const std::vector<int> t = detail::dense_relabel(truth, nt);
    const double n = static_cast<double>(pred.size());

    std::vector<std::vector<double>> joint(static_cast<std::size_t>(np),
                                           std::vector<double>(static_cast<std::size_t>(nt), 0.0));
    std::vector<double> cp(static_cast<std::size_t>(np), 0.0), ct(static_cast<std::size_t>(nt), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        joint[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])] += 1.0;
        cp[static_cast<std::size_t>(p[i])] += 1.0;
        ct[static_cast<std::size_t>(t[i])] += 1.0;
    }
    auto entropy = [n](const std::vector<double>& counts) {
        double h = 0.0;
        for (double c : counts) {
            if (c > 0.0) h -= c / n * std::log(c / n);
        }
        return h;
    };
    const double hp = entropy(cp), ht = entropy(ct);
    if (hp == 0.0 && ht == 0.0) return 1.0;
    if (hp == 0.0 || ht == 0.0) return 0.0;
    double mi = 0.0;
    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double nij = joint[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (nij > 0.0) mi += nij / n * std::log(n * nij / (cp[static_cast<std::size_t>(i)] * ct[static_cast<std::size_t>(j)]));
        }
    }
    return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
    bool significant = false;
};

/// Two-sided Welch's t-test with Welch-Satterthwaite degrees of freedom.
/// Two constant equal samples give p = 1 by convention.
inline TTestResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b,
                               double alpha = 0.05) {
    if (a.size() < 2 || b.size() < 2) throw ConfigError("welch_ttest: need >= 2 values per sample");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = detail::mean(a), mb = detail::mean(b);
    const double sa = detail::sample_std(a), sb = detail::sample_std(b);
    const double qa = sa * sa / na, qb = sb * sb / nb;
    TTestResult res;
    if (qa + qb == 0.0) {
        // zero combined variance: identical constants tie, distinct separate
        res.t = ma == mb ? 0.0
                         : std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
        res.p = ma == mb ? 1.0 : 0.0;
        res.df = na + nb - 2.0;
        res.significant = res.p < alpha;
        return res;
    }
    res.t = (ma - mb) / std::sqrt(qa + qb);
    res.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    res.p = detail::student_t_two_sided_p(std::abs(res.t), res.df);
    res.significant = res.p < alpha;
    return res;
}

/// Per-method accuracy/NMI statistics over the repeated runs.
struct MethodStats {
    std::string method;
    std::vector<double> accuracy_runs;
    std::vector<double> nmi_runs;
    double accuracy_mean = 0.0, accuracy_std = 0.0;
    double nmi_mean = 0.0, nmi_std = 0.0;

    static MethodStats from_runs(std::string method, std::vector<double> acc,
                                 std::vector<double> nm) {
        MethodStats s;
        s.method = std::move(method);
        s.accuracy_mean = detail::mean(acc);
        s.accuracy_std = detail::sample_std(acc);
        s.nmi_mean = detail::mean(nm);
        s.nmi_std = detail::sample_std(nm);
        s.accuracy_runs = std::move(acc);
        s.nmi_runs = std::move(nm);
        return s;
    }
};

struct PairwiseTest {
    std::string method_a;
    std::string method_b;
    std::string metric; // "accuracy" or "nmi"
    double t = 0.0;
    double p = 1.0;
    bool significant = false;
};

/// Whole-experiment evaluation: per-method statistics plus pairwise Welch
/// tests between methods on both metrics.
struct EvalReport {
    std::vector<MethodStats> methods;
    std::vector<PairwiseTest> significance;

    const MethodStats* find(const std::string& method) const {
        for (const auto& m : methods) {
            if (m.method == method) return &m;
        }
        return nullptr;
    }
};

} // namespace mvnmf
