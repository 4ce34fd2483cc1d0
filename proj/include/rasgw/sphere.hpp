#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rasgw/rng.hpp"

namespace rasgw {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// A point on S^{d-1}; construction enforces | ||coords|| - 1 | <= 1e-12.
class UnitDirection {
public:
    explicit UnitDirection(std::vector<double> coords) : coords_(std::move(coords)) {
        if (coords_.empty()) throw std::domain_error("UnitDirection: empty vector");
        const double n = norm2(coords_);
        if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-12)
            throw std::domain_error("UnitDirection: vector is not unit length");
    }

    /// Rescales an arbitrary non-zero vector onto the sphere.
    static UnitDirection normalized(std::vector<double> v) {
        const double n = norm2(v);
        if (!(n > 0.0) || !std::isfinite(n))
            throw std::domain_error("UnitDirection::normalized: zero or non-finite vector");
        for (double& x : v) x /= n;
        return UnitDirection(std::move(v));
    }

    static UnitDirection axis(std::size_t d, std::size_t k) {
        std::vector<double> v(d, 0.0);
        v.at(k) = 1.0;
        return UnitDirection(std::move(v));
    }

    std::size_t dim() const { return coords_.size(); }
    std::span<const double> coords() const { return coords_; }
    double operator[](std::size_t i) const { return coords_[i]; }

private:
    std::vector<double> coords_;
};

enum class Family { VonMisesFisher, PowerSpherical };

/// Location-scale law on the sphere with concentration kappa.
struct ScaleFamily {
    Family family = Family::PowerSpherical;
    double kappa = 50.0;

    ScaleFamily() = default;
    ScaleFamily(Family f, double k) : family(f), kappa(k) {
        if (!(kappa > 0.0) || !std::isfinite(kappa))
            throw std::domain_error("ScaleFamily: kappa must be in (0, inf)");
    }
};

/// Uniform draw on S^{d-1} (normalized standard Gaussian vector).
inline UnitDirection sample_uniform_sphere(std::size_t d, RngStream& rng) {
    if (d < 1) throw std::domain_error("sample_uniform_sphere: d must be >= 1");
    if (d == 1) return UnitDirection({rng.coin_flip() ? 1.0 : -1.0});
    std::vector<double> v(d);
    for (;;) {
        for (double& x : v) x = rng.gaussian();
        const double n = norm2(v);
        if (n > 1e-12) {
            for (double& x : v) x /= n;
            return UnitDirection(std::move(v));
        }
    }
}

/// Applies U = I - 2uu^T with u = (e1 - location)/||e1 - location||, the
/// reflection taking e1 to `location`. location == e1 within 1e-14 is the
/// degenerate case where U is the identity.
inline UnitDirection householder_to(const UnitDirection& location, const UnitDirection& v) {
    if (location.dim() != v.dim())
        throw std::invalid_argument("householder_to: dimension mismatch");
    const std::size_t d = location.dim();
    std::vector<double> u(d);
    u[0] = 1.0 - location[0];
    for (std::size_t i = 1; i < d; ++i) u[i] = -location[i];
    const double un = norm2(u);
    if (un <= 1e-14) return v;
    for (double& x : u) x /= un;
    const double proj = dot(u, v.coords());
    std::vector<double> out(v.coords().begin(), v.coords().end());
    for (std::size_t i = 0; i < d; ++i) out[i] -= 2.0 * proj * u[i];
    return UnitDirection(std::move(out));
}

namespace detail {

/// Assembles (w, sqrt(1-w^2) v) with v uniform on S^{d-2}: a draw in the
/// frame whose pole is e1.
inline UnitDirection frame_sample(std::size_t d, double w, RngStream& rng) {
    const double tangent = std::sqrt(std::max(0.0, 1.0 - w * w));
    std::vector<double> h(d);
    h[0] = w;
    if (d == 2) {
        h[1] = tangent * (rng.coin_flip() ? 1.0 : -1.0);
    } else {
        UnitDirection v = sample_uniform_sphere(d - 1, rng);
        for (std::size_t i = 1; i < d; ++i) h[i] = tangent * v[i - 1];
    }
    return UnitDirection::normalized(std::move(h));
}

/// Frame sample followed by the rotation taking e1 to `location`.
inline UnitDirection lift_to_sphere(const UnitDirection& location, double w, RngStream& rng) {
    return householder_to(location, frame_sample(location.dim(), w, rng));
}

/// Cosine w = eps^T theta of a vMF draw via Beta-proposal rejection.
/// Constants follow the Wood scheme; b is computed in the cancellation-free
/// form (d-1)/(2k + sqrt(4k^2+(d-1)^2)).
inline double vmf_cosine(std::size_t d, double kappa, RngStream& rng,
                         std::uint64_t* rejection_rounds = nullptr) {
    const double dm1 = static_cast<double>(d - 1);
    const double s = std::sqrt(4.0 * kappa * kappa + dm1 * dm1);
    const double b = dm1 / (2.0 * kappa + s);
    const double a = (dm1 + 2.0 * kappa + s) / 4.0;
    const double m = 4.0 * a * b / (1.0 + b) - dm1 * std::log(dm1);
    for (std::uint64_t round = 1;; ++round) {
        const double psi = rng.beta(0.5 * dm1, 0.5 * dm1);
        const double denom = 1.0 - (1.0 - b) * psi;
        const double w = (1.0 - (1.0 + b) * psi) / denom;
        const double t = 2.0 * a * b / denom;
        const double u = rng.uniform_pos();
        if (dm1 * std::log(t) - t + m >= std::log(u)) {
            if (rejection_rounds) *rejection_rounds = round;
            return w;
        }
    }
}

}  // namespace detail

/// von Mises-Fisher draw centered at `location`.
inline UnitDirection sample_vmf(const UnitDirection& location, double kappa, RngStream& rng,
                                std::uint64_t* rejection_rounds = nullptr) {
    if (location.dim() < 2) throw std::domain_error("sample_vmf: requires d >= 2");
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw std::domain_error("sample_vmf: kappa must be in (0, inf)");
    const double w = detail::vmf_cosine(location.dim(), kappa, rng, rejection_rounds);
    return detail::lift_to_sphere(location, w, rng);
}

/// Power Spherical draw centered at `location`; no rejection loop.
inline UnitDirection sample_power_spherical(const UnitDirection& location, double kappa,
                                            RngStream& rng) {
    if (location.dim() < 2) throw std::domain_error("sample_power_spherical: requires d >= 2");
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw std::domain_error("sample_power_spherical: kappa must be in (0, inf)");
    const double dm1 = static_cast<double>(location.dim() - 1);
    const double z = rng.beta(0.5 * dm1 + kappa, 0.5 * dm1);
    return detail::lift_to_sphere(location, 2.0 * z - 1.0, rng);
}

/// Draw from the configured location-scale family.
inline UnitDirection sample_scale_family(const ScaleFamily& scale, const UnitDirection& location,
                                         RngStream& rng) {
    return scale.family == Family::VonMisesFisher
               ? sample_vmf(location, scale.kappa, rng)
               : sample_power_spherical(location, scale.kappa, rng);
}

/// Draw from the family in the e1 frame; rotate with householder_to later.
/// Useful when the same randomness must be reused at several locations.
inline UnitDirection sample_scale_family_frame(const ScaleFamily& scale, std::size_t d,
                                               RngStream& rng) {
    if (d < 2) throw std::domain_error("sample_scale_family_frame: requires d >= 2");
    double w;
    if (scale.family == Family::VonMisesFisher) {
        w = detail::vmf_cosine(d, scale.kappa, rng);
    } else {
        const double dm1 = static_cast<double>(d - 1);
        w = 2.0 * rng.beta(0.5 * dm1 + scale.kappa, 0.5 * dm1) - 1.0;
    }
    return detail::frame_sample(d, w, rng);
}

}  // namespace rasgw
