#pragma once

#include "otflow/mmspace.hpp"
#include "otflow/rng.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace otflow::testutil {

// euclidean point cloud in the unit square with a random positive measure
inline MetricMeasureSpace random_space(SplitMix64& rng, std::size_t n) {
    std::vector<std::array<double, 2>> p(n);
    for (auto& q : p) q = {rng.uniform(), rng.uniform()};
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) d(Eigen::Index(i), Eigen::Index(j)) = std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]);
    std::vector<double> m(n);
    double total = 0.0;
    for (auto& x : m) total += (x = rng.uniform(0.2, 1.0));
    double rest = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) rest += (m[i] /= total);
    m[n - 1] = 1.0 - rest;
    return make_space(d, m);
}

inline std::vector<double> random_values(SplitMix64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline DensityField random_density(SplitMix64& rng, const MetricMeasureSpace& s, double floor = 0.0) {
    return DensityField::normalized(s, random_values(rng, s.n(), floor, 1.0));
}

inline MetricMeasureSpace two_point() {
    Eigen::MatrixXd d(2, 2);
    d << 0, 1, 1, 0;
    return make_space(d, {0.5, 0.5});
}

inline std::vector<double> sampled(const MetricMeasureSpace& s, double (*f)(double)) {
    std::vector<double> v(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) v[i] = f(s.coords()[i][0]);
    return v;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("otflow_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace otflow::testutil
