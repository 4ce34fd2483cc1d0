#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "rasgw/point_cloud.hpp"
#include "rasgw/sphere.hpp"

namespace rasgw {

/// Projected values in nondecreasing order, plus the permutation that sent
/// each original index to its sorted position.
struct SortedProjection {
    std::vector<double> values;
    std::vector<std::uint32_t> perm_to_sorted;
};

enum class Assignment { Identity, AntiIdentity };

struct GW1DResult {
    double value = 0.0;
    Assignment assignment = Assignment::Identity;
    double s1 = 0.0;
};

/// Projects a cloud onto theta and sorts the inner products (ties keep the
/// original index order).
inline SortedProjection project(const PointCloud& cloud, const UnitDirection& theta) {
    if (cloud.dim() != theta.dim()) throw std::invalid_argument("project: dimension mismatch");
    const std::size_t n = cloud.size();
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = dot(cloud.row(i), theta.coords());
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return raw[a] != raw[b] ? raw[a] < raw[b] : a < b;
    });
    SortedProjection out;
    out.values.resize(n);
    out.perm_to_sorted.resize(n);
    for (std::size_t rank = 0; rank < n; ++rank) {
        out.values[rank] = raw[order[rank]];
        out.perm_to_sorted[order[rank]] = static_cast<std::uint32_t>(rank);
    }
    return out;
}

namespace detail {

/// (1/n^2) sum_{i,j} ((a_i-a_j)^2 - (b_i-b_j)^2)^2 by the direct double sum.
inline double gw2_pairwise_cost(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            const double r = da * da - db * db;
            total += r * r;
        }
    return total / (static_cast<double>(n) * static_cast<double>(n));
}

/// sum_{i,j} (z_i - z_j)^4 through power sums.
inline double quartic_gap_sum(std::span<const double> z) {
    const double n = static_cast<double>(z.size());
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double v : z) {
        const double v2 = v * v;
        s1 += v;
        s2 += v2;
        s3 += v2 * v;
        s4 += v2 * v2;
    }
    return 2.0 * n * s4 - 8.0 * s1 * s3 + 6.0 * s2 * s2;
}

/// sum_{i,j} (a_i-a_j)^2 (b_i-b_j)^2 through mixed power sums.
inline double cross_gap_sum(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double m10 = 0.0, m01 = 0.0, m20 = 0.0, m02 = 0.0;
    double m11 = 0.0, m21 = 0.0, m12 = 0.0, m22 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        const double x2 = x * x, y2 = y * y;
        m10 += x;
        m01 += y;
        m20 += x2;
        m02 += y2;
        m11 += x * y;
        m21 += x2 * y;
        m12 += x * y2;
        m22 += x2 * y2;
    }
    return 2.0 * n * m22 - 4.0 * m21 * m01 - 4.0 * m12 * m10 + 2.0 * m20 * m02 +
           4.0 * m11 * m11;
}

inline std::vector<double> centered_copy(std::span<const double> z) {
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= static_cast<double>(z.size());
    std::vector<double> out(z.begin(), z.end());
    for (double& v : out) v -= mean;
    return out;
}

/// S1 term of the 1D GW decomposition on centered samples.
inline double s1_from_centered(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double a2 = 0.0, b2 = 0.0;
    for (double v : a) a2 += v * v;
    for (double v : b) b2 += v * v;
    return quartic_gap_sum(a) / (n * n) + quartic_gap_sum(b) / (n * n) -
           4.0 * (a2 / n) * (b2 / n);
}

}  // namespace detail

/// 1D GW_2^2 restricted to the identity and anti-identity assignments on
/// sorted order, evaluated by the direct O(n^2) sum. Ties go to Identity.
inline GW1DResult gw2_1d(const SortedProjection& xs, const SortedProjection& ys) {
    if (xs.values.size() != ys.values.size())
        throw std::invalid_argument("gw2_1d: projections must have equal length");
    if (xs.values.size() < 2) throw std::invalid_argument("gw2_1d: need at least 2 points");
    const double cost_id = detail::gw2_pairwise_cost(xs.values, ys.values);
    std::vector<double> rev(ys.values.rbegin(), ys.values.rend());
    const double cost_anti = detail::gw2_pairwise_cost(xs.values, rev);
    GW1DResult out;
    if (cost_anti < cost_id) {
        out.value = cost_anti;
        out.assignment = Assignment::AntiIdentity;
    } else {
        out.value = cost_id;
        out.assignment = Assignment::Identity;
    }
    const auto ca = detail::centered_copy(xs.values);
    const auto cb = detail::centered_copy(ys.values);
    out.s1 = detail::s1_from_centered(ca, cb);
    return out;
}

/// Same contract as gw2_1d but evaluated in O(n) from power sums of the
/// centered values (the cost only depends on pairwise gaps, so centering is a
/// pure conditioning step).
inline GW1DResult gw2_1d_fast(const SortedProjection& xs, const SortedProjection& ys) {
    if (xs.values.size() != ys.values.size())
        throw std::invalid_argument("gw2_1d_fast: projections must have equal length");
    if (xs.values.size() < 2) throw std::invalid_argument("gw2_1d_fast: need at least 2 points");
    const std::size_t n = xs.values.size();
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    const auto a = detail::centered_copy(xs.values);
    const auto b = detail::centered_copy(ys.values);
    const double a4 = detail::quartic_gap_sum(a);
    const double b4 = detail::quartic_gap_sum(b);
    std::vector<double> brev(b.rbegin(), b.rend());
    double cost_id = (a4 - 2.0 * detail::cross_gap_sum(a, b) + b4) / nn;
    double cost_anti = (a4 - 2.0 * detail::cross_gap_sum(a, brev) + b4) / nn;
    // The subtraction cancels catastrophically on (near-)isometric inputs;
    // anything below the rounding floor of the aggregates is exactly zero.
    const double noise_floor = 1e-12 * (a4 + b4) / nn;
    if (std::abs(cost_id) <= noise_floor) cost_id = 0.0;
    if (std::abs(cost_anti) <= noise_floor) cost_anti = 0.0;
    GW1DResult out;
    if (cost_anti < cost_id) {
        out.value = cost_anti;
        out.assignment = Assignment::AntiIdentity;
    } else {
        out.value = cost_id;
        out.assignment = Assignment::Identity;
    }
    // The exact cost is a sum of squares; a negative result can only be
    // quartic cancellation noise on (near-)isometric inputs.
    if (out.value < 0.0) out.value = 0.0;
    out.s1 = detail::s1_from_centered(a, b);
    return out;
}

/// Exact minimum of the 1D GW_2^2 cost over all n! assignments; the
/// combinatorial guard refuses n > 9.
inline double gw2_1d_bruteforce(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size()) throw std::invalid_argument("gw2_1d_bruteforce: length mismatch");
    if (n < 2) throw std::invalid_argument("gw2_1d_bruteforce: need at least 2 points");
    if (n > 9) throw std::domain_error("gw2_1d_bruteforce: refusing n > 9");
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> assigned(n);
    do {
        for (std::size_t i = 0; i < n; ++i) assigned[i] = ys[perm[i]];
        best = std::min(best, detail::gw2_pairwise_cost(xs, assigned));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Permutation-GW between clouds of equal size using squared Euclidean
/// distances; an upper bound on the true GW_2^2 over all couplings.
inline double gw2_cloud_bruteforce(const PointCloud& mu, const PointCloud& nu) {
    const std::size_t n = mu.size();
    if (n != nu.size()) throw std::invalid_argument("gw2_cloud_bruteforce: size mismatch");
    if (n > 8) throw std::domain_error("gw2_cloud_bruteforce: refusing n > 8");
    const auto sq_dist = [](const PointCloud& c) {
        const std::size_t m = c.size();
        std::vector<double> out(m * m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < c.dim(); ++k) {
                    const double diff = c(i, k) - c(j, k);
                    s += diff * diff;
                }
                out[i * m + j] = s;
            }
        return out;
    };
    const std::vector<double> dx = sq_dist(mu);
    const std::vector<double> dy = sq_dist(nu);
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double r = dx[i * n + j] - dy[perm[i] * n + perm[j]];
                total += r * r;
            }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / (static_cast<double>(n) * static_cast<double>(n));
}

/// Coupling-independent S1 term, for logging. Inputs must be centered.
inline double s1_diagnostic(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("s1_diagnostic: length mismatch");
    const double n = static_cast<double>(xs.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (double v : xs) mean_x += v;
    for (double v : ys) mean_y += v;
    if (std::abs(mean_x / n) > 1e-10 || std::abs(mean_y / n) > 1e-10)
        throw std::domain_error("s1_diagnostic: inputs must be centered first");
    double term_x = 0.0, term_y = 0.0, x2 = 0.0, y2 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double gx = xs[i] - xs[j];
            const double gy = ys[i] - ys[j];
            term_x += gx * gx * gx * gx;
            term_y += gy * gy * gy * gy;
        }
    for (double v : xs) x2 += v * v;
    for (double v : ys) y2 += v * v;
    return term_x / (n * n) + term_y / (n * n) - 4.0 * (x2 / n) * (y2 / n);
}

}  // namespace rasgw
