#pragma once

#include <vector>

#include "mvnmf/core.hpp"
#include "mvnmf/dataviews.hpp"
#include "mvnmf/factorize.hpp"
#include "mvnmf/graph.hpp"

namespace mvnmf {

/// The shared-coefficient objective with the column-scaling matrices pinned
/// to identity (no renormalization of the basis factors). Diagnostic target
/// for the analytic-gradient checks below; the solvers keep the basis
/// column-normalized so this agrees with the full objective there.
inline double equinmf_objective_identity_scaling(const MultiViewDataset& data,
                                                 const std::vector<Matrix>& basis,
                                                 const Matrix& coeff, const SimilarityGraph& graph,
                                                 const EquiParams& params) {
    double obj = 0.0;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        obj += params.alpha[v] *
               (data.views[v].values - basis[v] * coeff.transpose()).squaredNorm();
    }
    if (params.gamma > 0.0) obj += params.gamma * detail::laplacian_quadform(graph, coeff);
    return obj;
}

/// Analytic gradient of the identity-scaling objective with respect to the
/// shared coefficient matrix: sum_v 2 a_v (V U_v'U_v - X_v'U_v) + 2 g (D-W) V.
inline Matrix equinmf_grad_coeff(const MultiViewDataset& data, const std::vector<Matrix>& basis,
                                 const Matrix& coeff, const SimilarityGraph& graph,
                                 const EquiParams& params) {
    Matrix grad = Matrix::Zero(coeff.rows(), coeff.cols());
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        const Matrix& x = data.views[v].values;
        const Matrix& u = basis[v];
        grad += 2.0 * params.alpha[v] * (coeff * (u.transpose() * u) - x.transpose() * u);
    }
    if (params.gamma > 0.0) {
        grad += 2.0 * params.gamma *
                (graph.degrees().asDiagonal() * coeff - graph.weights() * coeff);
    }
    return grad;
}

/// Analytic gradient of a_v ||X - N(U) V'||^2 with respect to U, where N(U)
/// rescales columns to unit sum, evaluated at a column-normalized U. The
/// normalization contributes the per-column shift terms.
inline Matrix equinmf_grad_basis(const Matrix& x, const Matrix& u, const Matrix& coeff,
                                 double alpha) {
    const Matrix g = 2.0 * alpha * (u * (coeff.transpose() * coeff) - x * coeff);
    const Eigen::RowVectorXd shift = (g.array() * u.array()).colwise().sum();
    return g.rowwise() - shift;
}

} // namespace mvnmf
