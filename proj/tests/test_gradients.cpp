#include <catch2/catch_amalgamated.hpp>

#include "mvnmf/gradients.hpp"
#include "mvnmf/heuristics.hpp"
#include "test_util.hpp"

using namespace mvnmf;

namespace {

struct Instance {
    MultiViewDataset data;
    SimilarityGraph graph{Matrix::Zero(1, 1)};
    EquiParams params;
    FactorizationResult state;
};

Instance random_instance(std::uint64_t seed) {
    Instance inst;
    inst.data = normalize(make_synthetic(2, 4, {6, 7}, 0.5, seed), NormState::l1_columns);
    std::vector<SimilarityGraph> per_view;
    for (const auto& view : inst.data.views) per_view.push_back(knn_graph(view, 3));
    inst.graph = combine_graphs(per_view);
    inst.params = heuristic_params(inst.data, inst.graph, 3);
    inst.state = scaled_uniform_factors(inst.data, 3, seed + 1000);
    return inst;
}

double rel_error(const Matrix& got, const Matrix& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-12);
}

} // namespace

TEST_CASE("analytic coefficient gradient matches central finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance inst = random_instance(seed);
        const Matrix grad =
            equinmf_grad_coeff(inst.data, inst.state.basis, inst.state.coeff, inst.graph, inst.params);

        const double h = 1e-6;
        Matrix fd(inst.state.coeff.rows(), inst.state.coeff.cols());
        for (Index i = 0; i < fd.rows(); ++i) {
            for (Index j = 0; j < fd.cols(); ++j) {
                Matrix vp = inst.state.coeff, vm = inst.state.coeff;
                vp(i, j) += h;
                vm(i, j) -= h;
                fd(i, j) = (equinmf_objective_identity_scaling(inst.data, inst.state.basis, vp,
                                                               inst.graph, inst.params) -
                            equinmf_objective_identity_scaling(inst.data, inst.state.basis, vm,
                                                               inst.graph, inst.params)) /
                           (2.0 * h);
            }
        }
        CHECK(rel_error(grad, fd) < 1e-5);
    }
}

TEST_CASE("analytic basis gradient matches finite differences through the normalization") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance inst = random_instance(seed + 100);
        const std::size_t v = seed % 2;
        const Matrix& x = inst.data.views[v].values;
        const double alpha = inst.params.alpha[v];
        const Matrix& u = inst.state.basis[v]; // column-normalized by construction
        const Matrix grad = equinmf_grad_basis(x, u, inst.state.coeff, alpha);

        auto objective = [&](const Matrix& u_raw) {
            Matrix un = u_raw;
            detail::normalize_columns_l1(un);
            return alpha * (x - un * inst.state.coeff.transpose()).squaredNorm();
        };
        const double h = 1e-6;
        Matrix fd(u.rows(), u.cols());
        for (Index i = 0; i < u.rows(); ++i) {
            for (Index k = 0; k < u.cols(); ++k) {
                Matrix up = u, um = u;
                up(i, k) += h;
                um(i, k) -= h;
                fd(i, k) = (objective(up) - objective(um)) / (2.0 * h);
            }
        }
        CHECK(rel_error(grad, fd) < 1e-5);
    }
}

TEST_CASE("the identity-scaling objective agrees with the full objective at normalized bases") {
    const Instance inst = random_instance(7);
    const double full = equinmf_objective(inst.data, inst.state, inst.graph, inst.params);
    const double fixed = equinmf_objective_identity_scaling(inst.data, inst.state.basis,
                                                            inst.state.coeff, inst.graph, inst.params);
    CHECK(full == Catch::Approx(fixed).epsilon(1e-12));
}
