#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mvnmf/core.hpp"
#include "mvnmf/factorize.hpp"

namespace mvnmf {

/// Shortest-exact rendering of a double: 17 significant digits round-trip
/// binary64 exactly.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace detail {

inline void write_matrix_block(std::ostream& out, const std::string& name, const Matrix& m) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << fmt17(m(i, j));
        out << '\n';
    }
}

inline Matrix read_matrix_block(std::istream& in, Index rows, Index cols) {
    Matrix m(rows, cols);
    std::string line;
    for (Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw DataError("factor file: truncated matrix block");
        std::istringstream ls(line);
        std::string cell;
        for (Index j = 0; j < cols; ++j) {
            if (!std::getline(ls, cell, ',')) throw DataError("factor file: short matrix row");
            m(i, j) = std::stod(cell);
        }
    }
    return m;
}

} // namespace detail

/// Text serialization of a factorization: metadata record followed by the
/// factor matrices as CSV blocks.
inline void write_factors(std::ostream& out, const FactorizationResult& res,
                          std::uint64_t seed) {
    out << "equinmf-factors v1\n";
    out << "meta seed " << seed << " iterations " << res.iterations << " converged "
        << (res.converged ? 1 : 0) << " final_objective " << fmt17(res.final_objective())
        << '\n';
    for (std::size_t v = 0; v < res.basis.size(); ++v) {
        detail::write_matrix_block(out, "U" + std::to_string(v), res.basis[v]);
    }
    detail::write_matrix_block(out, "V", res.coeff);
    for (std::size_t v = 0; v < res.view_coeff.size(); ++v) {
        detail::write_matrix_block(out, "V" + std::to_string(v), res.view_coeff[v]);
    }
    out << "end\n";
}

/// Inverse of write_factors. The returned trace holds only the final
/// objective; the read seed is reported through `seed_out`.
inline FactorizationResult read_factors(std::istream& in, std::uint64_t* seed_out = nullptr) {
    std::string line;
    if (!std::getline(in, line) || line != "equinmf-factors v1") {
        throw DataError("factor file: bad header");
    }
    if (!std::getline(in, line)) throw DataError("factor file: missing meta record");
    FactorizationResult res;
    {
        std::istringstream ls(line);
        std::string tag, key;
        std::uint64_t seed = 0;
        int converged = 0;
        double final_obj = 0.0;
        ls >> tag >> key >> seed >> key >> res.iterations >> key >> converged >> key >> final_obj;
        if (tag != "meta" || !ls) throw DataError("factor file: malformed meta record");
        res.converged = converged != 0;
        res.objective_trace.push_back(final_obj);
        if (seed_out) *seed_out = seed;
    }
    while (std::getline(in, line)) {
        if (line == "end") return res;
        std::istringstream ls(line);
        std::string tag, name;
        Index rows = 0, cols = 0;
        ls >> tag >> name >> rows >> cols;
        if (tag != "matrix" || !ls) throw DataError("factor file: malformed matrix header");
        Matrix m = detail::read_matrix_block(in, rows, cols);
        if (name == "V") {
            res.coeff = std::move(m);
        } else if (!name.empty() && name[0] == 'U') {
            res.basis.push_back(std::move(m));
        } else {
            res.view_coeff.push_back(std::move(m));
        }
    }
    throw DataError("factor file: missing end marker");
}

} // namespace mvnmf
