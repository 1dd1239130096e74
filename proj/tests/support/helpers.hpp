#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fedsem/semantics.hpp"

namespace test_support {

// Adjusted Rand index between two labelings of the same sample set.
// Standard contingency-table formula; serves as the clustering-quality oracle.
inline double adjusted_rand_index(const fedsem::ClusterAssignment& a,
                                  const fedsem::ClusterAssignment& b) {
    std::map<std::pair<int, int>, long long> cells;
    std::map<int, long long> rows, cols;
    long long n = 0;
    for (const auto& [id, la] : a.labels) {
        int lb = b.labels.at(id);
        ++cells[{la, lb}];
        ++rows[la];
        ++cols[lb];
        ++n;
    }
    auto choose2 = [](long long x) { return 0.5 * x * (x - 1); };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [k, v] : cells) sum_cells += choose2(v);
    for (const auto& [k, v] : rows) sum_rows += choose2(v);
    for (const auto& [k, v] : cols) sum_cols += choose2(v);
    double expected = sum_rows * sum_cols / choose2(n);
    double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;  // both sides a single cluster
    return (sum_cells - expected) / (max_index - expected);
}

// Scratch directory unique to one test; wiped on construction so reruns are clean.
struct ScratchDir {
    std::filesystem::path path;

    explicit ScratchDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("fedsem_test_" + name);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    std::string file(const std::string& leaf) const { return (path / leaf).string(); }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

// True when fn() throws E and the message mentions `needle`.
template <typename E, typename F>
inline bool throws_containing(F&& fn, const std::string& needle) {
    try {
        fn();
    } catch (const E& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    } catch (...) {
        return false;
    }
    return false;
}

inline std::string padded_id(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s%06d", i);
    return buf;
}

inline std::vector<std::string> make_ids(int count, int start = 0) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) ids.push_back(padded_id(start + i));
    return ids;
}

}  // namespace test_support
