#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "mvnmf/graph.hpp"
#include "test_util.hpp"

using namespace mvnmf;

namespace {

/// Brute-force k-nearest-neighbour union graph straight from the definition.
Matrix knn_oracle(const Matrix& x, int k) {
    const Index n = x.cols();
    Matrix w = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        std::vector<std::pair<double, Index>> d;
        for (Index j = 0; j < n; ++j) {
            if (j != i) d.emplace_back((x.col(i) - x.col(j)).squaredNorm(), j);
        }
        std::sort(d.begin(), d.end());
        for (int t = 0; t < k; ++t) {
            w(i, d[static_cast<std::size_t>(t)].second) = 1.0;
            w(d[static_cast<std::size_t>(t)].second, i) = 1.0;
        }
    }
    return w;
}

} // namespace

TEST_CASE("k = N-1 yields the complete graph minus the diagonal") {
    ViewMatrix v{test_util::random_positive_matrix(3, 6, 17), NormState::raw};
    const SimilarityGraph g = knn_graph(v, 5);
    Matrix expect = Matrix::Ones(6, 6);
    expect.diagonal().setZero();
    CHECK(g.weights() == expect);
}

TEST_CASE("two far-apart triples with k=2 form two complete blocks") {
    Matrix x(2, 6);
    x << 0.0, 0.1, 0.2, 100.0, 100.1, 100.2,
         0.0, 0.2, 0.1, 100.0, 100.2, 100.1;
    const SimilarityGraph g = knn_graph(ViewMatrix{x, NormState::raw}, 2);
    CHECK(g.weights() == knn_oracle(x, 2));
    for (Index i = 0; i < 3; ++i) {
        for (Index j = 0; j < 3; ++j) {
            CHECK(g.weights()(i, j) == (i == j ? 0.0 : 1.0));
            CHECK(g.weights()(i + 3, j + 3) == (i == j ? 0.0 : 1.0));
            CHECK(g.weights()(i, j + 3) == 0.0);
        }
    }
}

TEST_CASE("duplicate columns are always mutual nearest neighbours") {
    Matrix x(2, 4);
    x << 0.0, 0.0, 5.0, 9.0,
         1.0, 1.0, 5.0, 9.0;
    const SimilarityGraph g = knn_graph(ViewMatrix{x, NormState::raw}, 1);
    CHECK(g.weights()(0, 1) == 1.0);
    CHECK(g.weights()(1, 0) == 1.0);
}

TEST_CASE("knn graph matches the brute-force oracle on random data") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        ViewMatrix v{test_util::random_positive_matrix(4, 20, seed), NormState::raw};
        const SimilarityGraph g = knn_graph(v, 3);
        CHECK(g.weights() == knn_oracle(v.values, 3));
    }
}

TEST_CASE("knn graph rejects out-of-range k") {
    ViewMatrix v{test_util::random_positive_matrix(3, 5, 4), NormState::raw};
    CHECK_THROWS_AS(knn_graph(v, 0), ConfigError);
    CHECK_THROWS_AS(knn_graph(v, 5), ConfigError);
}

TEST_CASE("knn graph is equivariant under sample permutation") {
    ViewMatrix v{test_util::random_positive_matrix(5, 12, 8), NormState::raw};
    const SimilarityGraph g = knn_graph(v, 3);

    std::vector<Index> perm(12);
    std::iota(perm.begin(), perm.end(), Index{0});
    detail::Rng rng(42);
    for (Index i = 11; i > 0; --i) {
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(detail::uniform_index(rng, static_cast<std::uint64_t>(i + 1)))]);
    }
    Matrix xp(5, 12);
    for (Index j = 0; j < 12; ++j) xp.col(j) = v.values.col(perm[static_cast<std::size_t>(j)]);
    const SimilarityGraph gp = knn_graph(ViewMatrix{xp, NormState::raw}, 3);
    for (Index i = 0; i < 12; ++i) {
        for (Index j = 0; j < 12; ++j) {
            CHECK(gp.weights()(i, j) ==
                  g.weights()(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
        }
    }
}

TEST_CASE("combining identical binary graphs doubles every weight") {
    ViewMatrix v{test_util::random_positive_matrix(3, 8, 5), NormState::raw};
    const SimilarityGraph g = knn_graph(v, 2);
    const SimilarityGraph sum = combine_graphs({g, g});
    CHECK(sum.weights() == (2.0 * g.weights()).eval());
    CHECK(sum.degrees() == (2.0 * g.degrees()).eval());
}

TEST_CASE("the zero graph is the additive identity") {
    ViewMatrix v{test_util::random_positive_matrix(3, 8, 6), NormState::raw};
    const SimilarityGraph g = knn_graph(v, 2);
    const SimilarityGraph zero{Matrix::Zero(8, 8)};
    CHECK(combine_graphs({g, zero}).weights() == g.weights());
}

TEST_CASE("combine_graphs is commutative and associative") {
    std::vector<SimilarityGraph> gs;
    for (std::uint64_t s : {10u, 11u, 12u}) {
        gs.push_back(knn_graph(ViewMatrix{test_util::random_positive_matrix(4, 9, s), NormState::raw}, 2));
    }
    CHECK(combine_graphs({gs[0], gs[1]}).weights() == combine_graphs({gs[1], gs[0]}).weights());
    const Matrix left = combine_graphs({combine_graphs({gs[0], gs[1]}), gs[2]}).weights();
    const Matrix right = combine_graphs({gs[0], combine_graphs({gs[1], gs[2]})}).weights();
    CHECK(left.isApprox(right, 1e-15));
}

TEST_CASE("combine_graphs rejects size mismatches") {
    const SimilarityGraph a{Matrix::Zero(4, 4)};
    const SimilarityGraph b{Matrix::Zero(5, 5)};
    CHECK_THROWS_AS(combine_graphs({a, b}), DataError);
}

TEST_CASE("mean weight averages over all N^2 entries") {
    Matrix w(2, 2);
    w << 0.0, 1.0, 1.0, 0.0;
    CHECK(mean_weight(SimilarityGraph{w}) == Catch::Approx(0.5));
    CHECK(mean_weight(SimilarityGraph{Matrix::Zero(3, 3)}) == 0.0);
}

TEST_CASE("mean weight equals the direct double-loop sum on a random graph") {
    ViewMatrix v{test_util::random_positive_matrix(3, 10, 77), NormState::raw};
    const SimilarityGraph g = knn_graph(v, 3);
    double total = 0.0;
    for (Index i = 0; i < 10; ++i) {
        for (Index j = 0; j < 10; ++j) total += g.weights()(i, j);
    }
    CHECK(mean_weight(g) == Catch::Approx(total / 100.0).epsilon(1e-12));
}

TEST_CASE("mean weight is additive under graph combination") {
    const SimilarityGraph g1 =
        knn_graph(ViewMatrix{test_util::random_positive_matrix(3, 9, 31), NormState::raw}, 2);
    const SimilarityGraph g2 =
        knn_graph(ViewMatrix{test_util::random_positive_matrix(3, 9, 32), NormState::raw}, 4);
    CHECK(mean_weight(combine_graphs({g1, g2})) ==
          Catch::Approx(mean_weight(g1) + mean_weight(g2)).epsilon(1e-12));
}

TEST_CASE("laplacian rows sum to zero and the quadratic form matches the edge sum") {
    ViewMatrix v{test_util::random_positive_matrix(4, 15, 55), NormState::raw};
    const SimilarityGraph g = knn_graph(v, 4);
    const Matrix lap = g.laplacian();
    for (Index i = 0; i < g.size(); ++i) {
        CHECK(std::abs(lap.row(i).sum()) < 1e-12);
        CHECK(g.degrees()(i) == Catch::Approx(g.weights().row(i).sum()).margin(1e-12));
    }

    detail::Rng rng(123);
    for (int rep = 0; rep < 10; ++rep) {
        Vector x(g.size());
        for (Index i = 0; i < x.size(); ++i) x(i) = 2.0 * detail::uniform01(rng) - 1.0;
        const double quad = x.dot(lap * x);
        double edges = 0.0;
        for (Index i = 0; i < g.size(); ++i) {
            for (Index j = 0; j < g.size(); ++j) {
                edges += 0.5 * g.weights()(i, j) * (x(i) - x(j)) * (x(i) - x(j));
            }
        }
        CHECK(quad == Catch::Approx(edges).margin(1e-9));
        CHECK(quad >= -1e-12); // PSD
    }
}

TEST_CASE("similarity graph construction validates its invariants") {
    Matrix asym(2, 2);
    asym << 0.0, 1.0, 0.5, 0.0;
    CHECK_THROWS_AS(SimilarityGraph{asym}, DataError);
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 1.0;
    CHECK_THROWS_AS(SimilarityGraph{diag}, DataError);
    Matrix neg(2, 2);
    neg << 0.0, -1.0, -1.0, 0.0;
    CHECK_THROWS_AS(SimilarityGraph{neg}, DataError);
}

TEST_CASE("graph coordinate export lists each undirected edge once") {
    Matrix w = Matrix::Zero(3, 3);
    w(0, 1) = w(1, 0) = 2.0;
    w(1, 2) = w(2, 1) = 1.0;
    const auto dir = test_util::scratch_dir("graph");
    export_graph(SimilarityGraph{w}, (dir / "g.txt").string());
    CHECK(test_util::slurp(dir / "g.txt") == "0 1 2\n1 2 1\n");
}
