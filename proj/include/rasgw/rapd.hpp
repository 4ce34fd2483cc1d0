#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rasgw/point_cloud.hpp"
#include "rasgw/rng.hpp"
#include "rasgw/sphere.hpp"

namespace rasgw {

/// Two sample pairs, one from each measure, in a common ambient dimension.
struct RelationQuartet {
    std::vector<double> x, x_prime;  // from mu
    std::vector<double> y, y_prime;  // from nu
};

/// Normalized sum and difference of the two pair directions. A component is
/// undefined when the corresponding combination is (numerically) zero, which
/// happens exactly when the inputs are parallel or antiparallel.
struct BisectorPair {
    std::optional<UnitDirection> plus;
    std::optional<UnitDirection> minus;
};

/// Displacement x - x' of a sample pair.
inline std::vector<double> intra_relational_path(std::span<const double> x,
                                                 std::span<const double> x_prime) {
    if (x.size() != x_prime.size())
        throw std::invalid_argument("intra_relational_path: dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - x_prime[i];
    return z;
}

/// Normalizes a displacement onto the sphere. A (near-)zero displacement is
/// first shifted by the small constant c in every coordinate, so duplicated
/// samples still produce a valid direction.
inline UnitDirection normalize_irp(std::vector<double> z, double c = 1e-8) {
    if (!(c > 0.0)) throw std::invalid_argument("normalize_irp: c must be positive");
    double n = norm2(z);
    if (n <= 1e-12) {
        for (double& v : z) v += c;
        n = norm2(z);
    }
    for (double& v : z) v /= n;
    return UnitDirection(std::move(z));
}

inline BisectorPair bisector_pair(const UnitDirection& zx, const UnitDirection& zy) {
    if (zx.dim() != zy.dim()) throw std::invalid_argument("bisector_pair: dimension mismatch");
    const std::size_t d = zx.dim();
    std::vector<double> sum(d), diff(d);
    for (std::size_t i = 0; i < d; ++i) {
        sum[i] = zx[i] + zy[i];
        diff[i] = zx[i] - zy[i];
    }
    BisectorPair out;
    if (norm2(sum) > 1e-10) out.plus = UnitDirection::normalized(std::move(sum));
    if (norm2(diff) > 1e-10) out.minus = UnitDirection::normalized(std::move(diff));
    return out;
}

/// One relation-aware projecting direction: a fair coin picks the sum or the
/// difference bisector, then the scale family perturbs around it. When the
/// chosen bisector is undefined the other one is used (no re-flip).
inline UnitDirection sample_rapd(const RelationQuartet& q, const ScaleFamily& scale,
                                 RngStream& rng) {
    const UnitDirection zx = normalize_irp(intra_relational_path(q.x, q.x_prime));
    const UnitDirection zy = normalize_irp(intra_relational_path(q.y, q.y_prime));
    const BisectorPair pair = bisector_pair(zx, zy);
    const bool pick_plus = rng.coin_flip();
    const std::optional<UnitDirection>& first = pick_plus ? pair.plus : pair.minus;
    const std::optional<UnitDirection>& other = pick_plus ? pair.minus : pair.plus;
    const UnitDirection& location = first ? *first : *other;
    return sample_scale_family(scale, location, rng);
}

/// Draws a quartet by four independent uniform row indices (with replacement)
/// and returns its RAPD.
inline UnitDirection sample_rapd_from_clouds(const PointCloud& mu, const PointCloud& nu,
                                             const ScaleFamily& scale, RngStream& rng) {
    if (mu.dim() != nu.dim())
        throw std::invalid_argument("sample_rapd_from_clouds: pad clouds to a common dimension");
    const auto row_of = [](const PointCloud& c, std::size_t i) {
        return std::vector<double>(c.row(i).begin(), c.row(i).end());
    };
    RelationQuartet q;
    q.x = row_of(mu, rng.uniform_index(mu.size()));
    q.x_prime = row_of(mu, rng.uniform_index(mu.size()));
    q.y = row_of(nu, rng.uniform_index(nu.size()));
    q.y_prime = row_of(nu, rng.uniform_index(nu.size()));
    return sample_rapd(q, scale, rng);
}

/// M draws from the relation-aware slicing distribution. Direction l consumes
/// only substream(l), so the list is reproducible under any parallel schedule.
inline std::vector<UnitDirection> sample_rasd(const PointCloud& mu, const PointCloud& nu,
                                              const ScaleFamily& scale, std::size_t count,
                                              const RngStream& rng) {
    if (count < 1) throw std::domain_error("sample_rasd: need at least one direction");
    std::vector<UnitDirection> out;
    out.reserve(count);
    for (std::size_t l = 0; l < count; ++l) {
        RngStream sub = rng.substream(l);
        out.push_back(sample_rapd_from_clouds(mu, nu, scale, sub));
    }
    return out;
}

}  // namespace rasgw
