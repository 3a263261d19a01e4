#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvnmf/metrics.hpp"
#include "test_util.hpp"

using namespace mvnmf;

namespace {

/// Best agreement over all one-to-one cluster/class matchings, by trying
/// every permutation of the padded square contingency matrix.
double accuracy_brute_force(const LabelVector& pred, const LabelVector& truth) {
    int np = 0, nt = 0;
    const auto p = detail::dense_relabel(pred, np);
    const auto t = detail::dense_relabel(truth, nt);
    const int n = std::max(np, nt);
    std::vector<std::vector<long long>> counts(static_cast<std::size_t>(n),
                                               std::vector<long long>(static_cast<std::size_t>(n), 0));
    for (std::size_t i = 0; i < p.size(); ++i) ++counts[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])];
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    long long best = 0;
    do {
        long long agree = 0;
        for (int i = 0; i < n; ++i) agree += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(pred.size());
}

/// Plug-in NMI straight from the formula, via explicit probability tables.
double nmi_oracle(const LabelVector& pred, const LabelVector& truth) {
    int np = 0, nt = 0;
    const auto p = detail::dense_relabel(pred, np);
    const auto t = detail::dense_relabel(truth, nt);
    const double n = static_cast<double>(pred.size());
    std::vector<std::vector<double>> pj(static_cast<std::size_t>(np),
                                        std::vector<double>(static_cast<std::size_t>(nt), 0.0));
    std::vector<double> pa(static_cast<std::size_t>(np), 0.0), pb(static_cast<std::size_t>(nt), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        pj[static_cast<std::size_t>(p[i])][static_cast<std::size_t>(t[i])] += 1.0 / n;
        pa[static_cast<std::size_t>(p[i])] += 1.0 / n;
        pb[static_cast<std::size_t>(t[i])] += 1.0 / n;
    }
    double ha = 0.0, hb = 0.0, mi = 0.0;
    for (double x : pa) {
        if (x > 0.0) ha -= x * std::log(x);
    }
    for (double x : pb) {
        if (x > 0.0) hb -= x * std::log(x);
    }
    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double x = pj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (x > 0.0) mi += x * std::log(x / (pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)]));
        }
    }
    if (ha == 0.0 && hb == 0.0) return 1.0;
    if (ha == 0.0 || hb == 0.0) return 0.0;
    return mi / std::sqrt(ha * hb);
}

double t_density(double x, double df) {
    const double c = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
                     std::sqrt(df * M_PI);
    return c * std::pow(1.0 + x * x / df, -(df + 1.0) / 2.0);
}

/// Composite-Simpson tail probability: p = 1 - 2 * integral_0^t of the
/// density. Quadrature route, independent of the incomplete-beta evaluation.
double t_two_sided_p_oracle(double t, double df) {
    const int intervals = 200000;
    const double h = t / intervals;
    double sum = t_density(0.0, df) + t_density(t, df);
    for (int i = 1; i < intervals; ++i) {
        sum += t_density(i * h, df) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    const double integral = sum * h / 3.0;
    return std::max(0.0, 1.0 - 2.0 * integral);
}

LabelVector random_labels(std::size_t n, int k, detail::Rng& rng) {
    LabelVector labs(n);
    for (auto& l : labs) l = static_cast<int>(detail::uniform_index(rng, static_cast<std::uint64_t>(k)));
    return labs;
}

} // namespace

TEST_CASE("accuracy is 1 for equal labelings and any relabeling of them") {
    const LabelVector truth{0, 1, 2, 0, 1, 2, 2};
    CHECK(accuracy(truth, truth) == 1.0);
    LabelVector renamed;
    for (int l : truth) renamed.push_back((l + 5) * 3); // arbitrary injective rename
    CHECK(accuracy(renamed, truth) == 1.0);
    CHECK(nmi(renamed, truth) == 1.0);
}

TEST_CASE("accuracy handles the 5/6 example") {
    const LabelVector pred{0, 0, 1, 1, 2, 2};
    const LabelVector truth{0, 1, 1, 1, 2, 2};
    CHECK(accuracy(pred, truth) == Catch::Approx(5.0 / 6.0));
    CHECK(accuracy(pred, truth) == accuracy_brute_force(pred, truth));
}

TEST_CASE("accuracy equals brute-force matching on 200 random labelings") {
    detail::Rng rng(12345);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 5 + detail::uniform_index(rng, 20);
        const int kp = 1 + static_cast<int>(detail::uniform_index(rng, 6));
        const int kt = 1 + static_cast<int>(detail::uniform_index(rng, 6));
        const LabelVector pred = random_labels(n, kp, rng);
        const LabelVector truth = random_labels(n, kt, rng);
        REQUIRE(accuracy(pred, truth) == accuracy_brute_force(pred, truth));
    }
}

TEST_CASE("accuracy is at least 1/k against balanced ground truth") {
    detail::Rng rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        const int k = 2 + static_cast<int>(detail::uniform_index(rng, 5));
        LabelVector truth;
        for (int c = 0; c < k; ++c) truth.insert(truth.end(), 12, c);
        const LabelVector pred = random_labels(truth.size(), k, rng);
        CHECK(accuracy(pred, truth) >= 1.0 / k - 1e-12);
    }
}

TEST_CASE("accuracy rejects mismatched and oversized inputs") {
    CHECK_THROWS_AS(accuracy({0, 1}, {0}), ConfigError);
    LabelVector many(70);
    std::iota(many.begin(), many.end(), 0);
    CHECK_THROWS_AS(accuracy(many, LabelVector(70, 0)), ConfigError);
}

TEST_CASE("nmi of independent partitions is zero") {
    CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("nmi matches the plug-in oracle") {
    CHECK(nmi({0, 0, 1, 1}, {0, 0, 0, 1}) ==
          Catch::Approx(nmi_oracle({0, 0, 1, 1}, {0, 0, 0, 1})).margin(1e-12));
    detail::Rng rng(777);
    for (int rep = 0; rep < 100; ++rep) {
        const LabelVector a = random_labels(30, 4, rng);
        const LabelVector b = random_labels(30, 3, rng);
        CHECK(nmi(a, b) == Catch::Approx(nmi_oracle(a, b)).margin(1e-12));
        CHECK(nmi(a, b) == nmi(b, a));
    }
}

TEST_CASE("nmi edge cases: single-cluster labelings") {
    CHECK(nmi({0, 0, 0}, {4, 4, 4}) == 1.0);
    CHECK(nmi({0, 0, 0}, {0, 1, 1}) == 0.0);
    CHECK(nmi({0, 1, 1}, {2, 2, 2}) == 0.0);
}

TEST_CASE("welch test: identical samples are not significant") {
    const std::vector<double> a{0.5, 0.6, 0.7, 0.8};
    const TTestResult res = welch_ttest(a, a, 0.05);
    CHECK(res.t == Catch::Approx(0.0));
    CHECK(res.p == Catch::Approx(1.0));
    CHECK_FALSE(res.significant);
}

TEST_CASE("welch test separates the reported accuracy samples") {
    std::vector<double> a, b;
    for (int i = 0; i < 20; ++i) {
        a.push_back(0.93 + (i % 2 == 0 ? 0.04 : -0.04));
        b.push_back(0.84 + (i % 2 == 0 ? 0.03 : -0.03));
    }
    const TTestResult res = welch_ttest(a, b, 0.05);
    CHECK(res.significant);
    CHECK(res.p < 1e-6);
    CHECK(res.t > 0.0);
}

TEST_CASE("welch p matches the quadrature oracle") {
    const std::vector<double> a{1.1, 2.3, 2.9, 4.1, 3.3};
    const std::vector<double> b{0.7, 1.2, 1.9, 1.4};
    const TTestResult res = welch_ttest(a, b, 0.05);
    CHECK(res.p == Catch::Approx(t_two_sided_p_oracle(std::abs(res.t), res.df)).margin(1e-6));

    for (double t : {0.3, 1.0, 2.5, 4.0}) {
        for (double df : {2.7, 5.0, 19.4, 38.0}) {
            CHECK(detail::student_t_two_sided_p(t, df) ==
                  Catch::Approx(t_two_sided_p_oracle(t, df)).margin(1e-6));
        }
    }
}

TEST_CASE("welch test degenerate and invalid inputs") {
    const std::vector<double> flat{0.5, 0.5, 0.5};
    const TTestResult same = welch_ttest(flat, flat, 0.05);
    CHECK(same.p == 1.0);
    CHECK_FALSE(same.significant);
    const TTestResult apart = welch_ttest(flat, {0.9, 0.9}, 0.05);
    CHECK(apart.p == 0.0);
    CHECK(apart.significant);
    CHECK_THROWS_AS(welch_ttest({1.0}, {1.0, 2.0}, 0.05), ConfigError);
}

TEST_CASE("method stats aggregate mean and sample deviation") {
    const MethodStats s = MethodStats::from_runs("demo", {0.5, 0.7, 0.9}, {0.2, 0.2, 0.2});
    CHECK(s.accuracy_mean == Catch::Approx(0.7));
    CHECK(s.accuracy_std == Catch::Approx(0.2));
    CHECK(s.nmi_std == 0.0);
}
