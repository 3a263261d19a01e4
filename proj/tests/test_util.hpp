#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "mvnmf/core.hpp"

namespace test_util {

/// Fresh scratch directory under the system temp root.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto p = std::filesystem::temp_directory_path() /
                   ("equinmf_" + tag + "_" + std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline mvnmf::Matrix random_positive_matrix(mvnmf::Index rows, mvnmf::Index cols,
                                              std::uint64_t seed, double lo = 0.05,
                                              double hi = 1.0) {
    mvnmf::detail::Rng rng(seed);
    mvnmf::Matrix m(rows, cols);
    for (mvnmf::Index j = 0; j < cols; ++j) {
        for (mvnmf::Index i = 0; i < rows; ++i) {
            m(i, j) = lo + (hi - lo) * mvnmf::detail::uniform01(rng);
        }
    }
    return m;
}

} // namespace test_util
