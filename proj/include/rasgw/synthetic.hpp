#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rasgw/point_cloud.hpp"
#include "rasgw/rng.hpp"

namespace rasgw {

namespace detail {

inline PointCloud gaussian_mixture(const std::vector<std::vector<double>>& centers, double sigma,
                                   std::size_t n, RngStream rng) {
    const std::size_t d = centers.front().size();
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = centers[rng.uniform_index(centers.size())];
        for (std::size_t k = 0; k < d; ++k) out[i * d + k] = c[k] + sigma * rng.gaussian();
    }
    return PointCloud(std::move(out), n, d);
}

}  // namespace detail

/// Four Gaussian clusters at (+-1,0,0) and (0,+-1,0) scaled by 2, with noise
/// sigma = 0.1. d = 2 drops the third coordinate.
inline PointCloud gaussian4(std::size_t d, std::size_t n, RngStream rng) {
    if (d != 2 && d != 3) throw std::domain_error("gaussian4: d must be 2 or 3");
    if (n < 4) throw std::domain_error("gaussian4: need n >= 4");
    std::vector<std::vector<double>> centers = {
        {2.0, 0.0, 0.0}, {-2.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, -2.0, 0.0}};
    if (d == 2)
        for (auto& c : centers) c.pop_back();
    return detail::gaussian_mixture(centers, 0.1, n, rng);
}

/// Eight 2D clusters on the axes and diagonals of the unit circle, scaled by
/// 2, noise sigma = 0.1.
inline PointCloud gaussian8(std::size_t n, RngStream rng) {
    if (n < 8) throw std::domain_error("gaussian8: need n >= 8");
    const double r = 2.0;
    const double q = 2.0 / std::sqrt(2.0);
    const std::vector<std::vector<double>> centers = {{r, 0.0},  {-r, 0.0}, {0.0, r},  {0.0, -r},
                                                      {q, q},    {q, -q},   {-q, q},   {-q, -q}};
    return detail::gaussian_mixture(centers, 0.1, n, rng);
}

}  // namespace rasgw
