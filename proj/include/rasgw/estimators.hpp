#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rasgw/gw1d.hpp"
#include "rasgw/parallel.hpp"
#include "rasgw/point_cloud.hpp"
#include "rasgw/rapd.hpp"
#include "rasgw/rng.hpp"
#include "rasgw/sphere.hpp"

namespace rasgw {

enum class Method { Sgw, MaxSgw, Dsgw, Ebsgw, Rpsgw, Rasgw, Iwrasgw };

enum class Energy { Exp, Identity };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::Sgw: return "sgw";
        case Method::MaxSgw: return "max-sgw";
        case Method::Dsgw: return "dsgw";
        case Method::Ebsgw: return "ebsgw";
        case Method::Rpsgw: return "rpsgw";
        case Method::Rasgw: return "rasgw";
        case Method::Iwrasgw: return "iwrasgw";
    }
    return "?";
}

/// Which estimator to run and every hyperparameter it may need. Defaults are
/// M = 500 and kappa = 50 per the ablation optimum; the exponent is fixed to
/// p = 2, the only value the sorting solver covers.
struct EstimatorSpec {
    Method method = Method::Rasgw;
    int projections = 500;    // M
    int inner_count = 50;     // L
    int outer_count = 1;      // H
    ScaleFamily scale{};      // family + kappa
    Energy energy = Energy::Exp;
    int opt_iters = 100;      // T
    double step_size = 0.05;
    int restarts = 8;
    int p = 2;

    void validate() const {
        if (p != 2) throw std::domain_error("EstimatorSpec: only p = 2 is supported");
        if (projections < 1) throw std::domain_error("EstimatorSpec: projections must be >= 1");
        if (inner_count < 1) throw std::domain_error("EstimatorSpec: inner count must be >= 1");
        if (outer_count < 1) throw std::domain_error("EstimatorSpec: outer count must be >= 1");
        if (opt_iters < 1) throw std::domain_error("EstimatorSpec: opt iters must be >= 1");
        if (restarts < 1) throw std::domain_error("EstimatorSpec: restarts must be >= 1");
        if (!(step_size > 0.0)) throw std::domain_error("EstimatorSpec: step size must be > 0");
    }
};

struct ProjectionRecord {
    std::vector<double> direction;
    double cost = 0.0;    // GW_2^2 of the two pushforwards
    double weight = 0.0;  // contribution to raw_mean; weights sum to 1
};

struct EstimateResult {
    double value = 0.0;     // raw_mean^(1/2)
    double raw_mean = 0.0;  // the pre-root aggregate
    std::vector<ProjectionRecord> per_projection;
    double wall_time_s = 0.0;
    EstimatorSpec spec;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_pair(const PointCloud& mu, const PointCloud& nu) {
    if (mu.dim() != nu.dim())
        throw std::invalid_argument(
            "estimator: clouds have different dimensions; pad_uplift the smaller one first");
    if (mu.size() != nu.size())
        throw std::invalid_argument(
            "estimator: clouds must have equal support counts; subsample the larger one");
}

inline double slice_cost(const PointCloud& mu, const PointCloud& nu, const UnitDirection& theta) {
    return gw2_1d_fast(project(mu, theta), project(nu, theta)).value;
}

/// Normalized weights for w_l = f(v_l). Exp subtracts the max before
/// exponentiating; a zero total (all-zero costs under Identity) falls back to
/// uniform weights.
inline std::vector<double> energy_weights(const std::vector<double>& costs, Energy f) {
    std::vector<double> w(costs.size());
    if (f == Energy::Exp) {
        double peak = costs[0];
        for (double v : costs) peak = std::max(peak, v);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(costs[i] - peak);
    } else {
        w = costs;
    }
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) {
        const double u = 1.0 / static_cast<double>(w.size());
        for (double& v : w) v = u;
        return w;
    }
    for (double& v : w) v /= total;
    return w;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

inline EstimateResult finish(EstimateResult r, double raw, const Timer& timer,
                             const EstimatorSpec& spec, const RngStream& rng) {
    r.raw_mean = raw;
    r.value = std::sqrt(raw);
    r.wall_time_s = timer.seconds();
    r.spec = spec;
    r.seed = rng.seed();
    return r;
}

}  // namespace detail

/// SGW: mean 1D cost over M uniform directions.
inline EstimateResult estimate_sgw(const PointCloud& mu, const PointCloud& nu, int projections,
                                   RngStream rng) {
    detail::check_pair(mu, nu);
    if (projections < 1) throw std::domain_error("estimate_sgw: projections must be >= 1");
    detail::Timer timer;
    const std::size_t m = static_cast<std::size_t>(projections);
    EstimateResult r;
    r.per_projection.resize(m);
    parallel_for(m, [&](std::size_t l) {
        RngStream sub = rng.substream(1 + l);
        const UnitDirection theta = sample_uniform_sphere(mu.dim(), sub);
        auto& rec = r.per_projection[l];
        rec.cost = detail::slice_cost(mu, nu, theta);
        rec.weight = 1.0 / static_cast<double>(m);
        rec.direction.assign(theta.coords().begin(), theta.coords().end());
    });
    double raw = 0.0;
    for (const auto& rec : r.per_projection) raw += rec.cost;
    raw /= static_cast<double>(m);
    EstimatorSpec spec;
    spec.method = Method::Sgw;
    spec.projections = projections;
    return detail::finish(std::move(r), raw, timer, spec, rng);
}

/// RASGW: mean 1D cost over M relation-aware directions.
inline EstimateResult estimate_rasgw(const PointCloud& mu, const PointCloud& nu,
                                     const ScaleFamily& scale, int projections, RngStream rng) {
    detail::check_pair(mu, nu);
    if (projections < 1) throw std::domain_error("estimate_rasgw: projections must be >= 1");
    detail::Timer timer;
    const std::size_t m = static_cast<std::size_t>(projections);
    EstimateResult r;
    r.per_projection.resize(m);
    parallel_for(m, [&](std::size_t l) {
        RngStream sub = rng.substream(1 + l);
        const UnitDirection theta = sample_rapd_from_clouds(mu, nu, scale, sub);
        auto& rec = r.per_projection[l];
        rec.cost = detail::slice_cost(mu, nu, theta);
        rec.weight = 1.0 / static_cast<double>(m);
        rec.direction.assign(theta.coords().begin(), theta.coords().end());
    });
    double raw = 0.0;
    for (const auto& rec : r.per_projection) raw += rec.cost;
    raw /= static_cast<double>(m);
    EstimatorSpec spec;
    spec.method = Method::Rasgw;
    spec.projections = projections;
    spec.scale = scale;
    return detail::finish(std::move(r), raw, timer, spec, rng);
}

/// IWRASGW: H blocks of L relation-aware directions; within each block the
/// costs are weighted by the normalized energy f of the cost itself.
inline EstimateResult estimate_iwrasgw(const PointCloud& mu, const PointCloud& nu,
                                       const ScaleFamily& scale, int inner_count, int outer_count,
                                       Energy f, RngStream rng) {
    detail::check_pair(mu, nu);
    if (inner_count < 1 || outer_count < 1)
        throw std::domain_error("estimate_iwrasgw: L and H must be >= 1");
    detail::Timer timer;
    const std::size_t L = static_cast<std::size_t>(inner_count);
    const std::size_t H = static_cast<std::size_t>(outer_count);
    EstimateResult r;
    r.per_projection.resize(H * L);
    parallel_for(H * L, [&](std::size_t hl) {
        RngStream sub = rng.substream(1 + hl);
        const UnitDirection theta = sample_rapd_from_clouds(mu, nu, scale, sub);
        auto& rec = r.per_projection[hl];
        rec.cost = detail::slice_cost(mu, nu, theta);
        rec.direction.assign(theta.coords().begin(), theta.coords().end());
    });
    double raw = 0.0;
    std::vector<double> costs(L);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t l = 0; l < L; ++l) costs[l] = r.per_projection[h * L + l].cost;
        const std::vector<double> w = detail::energy_weights(costs, f);
        double block = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            block += costs[l] * w[l];
            r.per_projection[h * L + l].weight = w[l] / static_cast<double>(H);
        }
        raw += block;
    }
    raw /= static_cast<double>(H);
    EstimatorSpec spec;
    spec.method = Method::Iwrasgw;
    spec.inner_count = inner_count;
    spec.outer_count = outer_count;
    spec.scale = scale;
    spec.energy = f;
    return detail::finish(std::move(r), raw, timer, spec, rng);
}

/// EBSGW: importance sampling against the energy-tilted slicing distribution
/// with a uniform proposal (whose density cancels in the normalized weights).
inline EstimateResult estimate_ebsgw(const PointCloud& mu, const PointCloud& nu, int inner_count,
                                     Energy f, RngStream rng) {
    detail::check_pair(mu, nu);
    if (inner_count < 1) throw std::domain_error("estimate_ebsgw: L must be >= 1");
    detail::Timer timer;
    const std::size_t L = static_cast<std::size_t>(inner_count);
    EstimateResult r;
    r.per_projection.resize(L);
    parallel_for(L, [&](std::size_t l) {
        RngStream sub = rng.substream(1 + l);
        const UnitDirection theta = sample_uniform_sphere(mu.dim(), sub);
        auto& rec = r.per_projection[l];
        rec.cost = detail::slice_cost(mu, nu, theta);
        rec.direction.assign(theta.coords().begin(), theta.coords().end());
    });
    std::vector<double> costs(L);
    for (std::size_t l = 0; l < L; ++l) costs[l] = r.per_projection[l].cost;
    const std::vector<double> w = detail::energy_weights(costs, f);
    double raw = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        raw += costs[l] * w[l];
        r.per_projection[l].weight = w[l];
    }
    EstimatorSpec spec;
    spec.method = Method::Ebsgw;
    spec.inner_count = inner_count;
    spec.energy = f;
    return detail::finish(std::move(r), raw, timer, spec, rng);
}

/// RPSGW: directions drawn from the scale family centered on the normalized
/// cross pair x - y, one sample from each measure.
inline EstimateResult estimate_rpsgw(const PointCloud& mu, const PointCloud& nu,
                                     const ScaleFamily& scale, int projections, RngStream rng) {
    detail::check_pair(mu, nu);
    if (projections < 1) throw std::domain_error("estimate_rpsgw: projections must be >= 1");
    detail::Timer timer;
    const std::size_t m = static_cast<std::size_t>(projections);
    EstimateResult r;
    r.per_projection.resize(m);
    parallel_for(m, [&](std::size_t l) {
        RngStream sub = rng.substream(1 + l);
        const auto xi = mu.row(sub.uniform_index(mu.size()));
        const auto yj = nu.row(sub.uniform_index(nu.size()));
        const UnitDirection location = normalize_irp(intra_relational_path(xi, yj));
        const UnitDirection theta = sample_scale_family(scale, location, sub);
        auto& rec = r.per_projection[l];
        rec.cost = detail::slice_cost(mu, nu, theta);
        rec.weight = 1.0 / static_cast<double>(m);
        rec.direction.assign(theta.coords().begin(), theta.coords().end());
    });
    double raw = 0.0;
    for (const auto& rec : r.per_projection) raw += rec.cost;
    raw /= static_cast<double>(m);
    EstimatorSpec spec;
    spec.method = Method::Rpsgw;
    spec.projections = projections;
    spec.scale = scale;
    return detail::finish(std::move(r), raw, timer, spec, rng);
}

namespace detail {

/// Central finite-difference gradient of the slice cost in the embedding
/// space, for the ascent-based estimators.
inline std::vector<double> slice_cost_fd_gradient(const PointCloud& mu, const PointCloud& nu,
                                                  const UnitDirection& theta, double h = 1e-5) {
    const std::size_t d = theta.dim();
    std::vector<double> g(d);
    std::vector<double> probe(theta.coords().begin(), theta.coords().end());
    for (std::size_t c = 0; c < d; ++c) {
        const double saved = probe[c];
        probe[c] = saved + h;
        const double up = slice_cost(mu, nu, UnitDirection::normalized(probe));
        probe[c] = saved - h;
        const double down = slice_cost(mu, nu, UnitDirection::normalized(probe));
        probe[c] = saved;
        g[c] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Removes the radial component and renormalizes after the ascent step.
inline UnitDirection ascend_on_sphere(const UnitDirection& theta, std::span<const double> grad,
                                      double step) {
    const std::size_t d = theta.dim();
    const double radial = dot(grad, theta.coords());
    std::vector<double> next(theta.coords().begin(), theta.coords().end());
    for (std::size_t c = 0; c < d; ++c) next[c] += step * (grad[c] - radial * theta[c]);
    const double n = norm2(next);
    if (!(n > 1e-12)) return theta;
    for (double& v : next) v /= n;
    return UnitDirection(std::move(next));
}

}  // namespace detail

/// Max-SGW: projected gradient ascent over the sphere, best cost over
/// `restarts` independent starts.
inline EstimateResult estimate_max_sgw(const PointCloud& mu, const PointCloud& nu, int opt_iters,
                                       double step_size, int restarts, RngStream rng) {
    detail::check_pair(mu, nu);
    if (opt_iters < 1 || restarts < 1)
        throw std::domain_error("estimate_max_sgw: T and restarts must be >= 1");
    detail::Timer timer;
    const std::size_t R = static_cast<std::size_t>(restarts);
    EstimateResult r;
    r.per_projection.resize(R);
    parallel_for(R, [&](std::size_t rep) {
        RngStream sub = rng.substream(1 + rep);
        UnitDirection theta = sample_uniform_sphere(mu.dim(), sub);
        double best = detail::slice_cost(mu, nu, theta);
        UnitDirection best_theta = theta;
        for (int t = 0; t < opt_iters; ++t) {
            const auto g = detail::slice_cost_fd_gradient(mu, nu, theta);
            theta = detail::ascend_on_sphere(theta, g, step_size);
            const double c = detail::slice_cost(mu, nu, theta);
            if (c > best) {
                best = c;
                best_theta = theta;
            }
        }
        auto& rec = r.per_projection[rep];
        rec.cost = best;
        rec.direction.assign(best_theta.coords().begin(), best_theta.coords().end());
        rec.weight = 0.0;
    });
    std::size_t winner = 0;
    for (std::size_t rep = 1; rep < R; ++rep)
        if (r.per_projection[rep].cost > r.per_projection[winner].cost) winner = rep;
    r.per_projection[winner].weight = 1.0;
    const double raw = r.per_projection[winner].cost;
    EstimatorSpec spec;
    spec.method = Method::MaxSgw;
    spec.opt_iters = opt_iters;
    spec.step_size = step_size;
    spec.restarts = restarts;
    return detail::finish(std::move(r), raw, timer, spec, rng);
}

/// DSGW: stochastic ascent on the location of the scale family, then the mean
/// cost over L fresh draws from the fitted distribution. Each ascent step
/// reuses one batch of frame samples at every probed location, so the
/// finite differences see a smooth objective.
inline EstimateResult estimate_dsgw(const PointCloud& mu, const PointCloud& nu,
                                    const ScaleFamily& scale, int inner_count, int opt_iters,
                                    double step_size, RngStream rng) {
    detail::check_pair(mu, nu);
    if (inner_count < 1 || opt_iters < 1)
        throw std::domain_error("estimate_dsgw: L and T must be >= 1");
    detail::Timer timer;
    const std::size_t L = static_cast<std::size_t>(inner_count);
    const std::size_t d = mu.dim();

    RngStream init = rng.substream(1);
    UnitDirection location = sample_uniform_sphere(d, init);

    const auto batch_objective = [&](const UnitDirection& loc,
                                     const std::vector<UnitDirection>& frame) {
        std::vector<double> costs(frame.size());
        parallel_for(frame.size(), [&](std::size_t l) {
            costs[l] = detail::slice_cost(mu, nu, householder_to(loc, frame[l]));
        });
        double mean = 0.0;
        for (double c : costs) mean += c;
        return mean / static_cast<double>(frame.size());
    };

    const double h = 1e-5;
    std::vector<UnitDirection> frame;
    frame.reserve(L);
    for (int t = 0; t < opt_iters; ++t) {
        RngStream batch_rng = rng.substream(2 + static_cast<std::uint64_t>(t));
        frame.clear();
        for (std::size_t l = 0; l < L; ++l)
            frame.push_back(sample_scale_family_frame(scale, d, batch_rng));
        std::vector<double> g(d);
        std::vector<double> probe(location.coords().begin(), location.coords().end());
        for (std::size_t c = 0; c < d; ++c) {
            const double saved = probe[c];
            probe[c] = saved + h;
            const double up = batch_objective(UnitDirection::normalized(probe), frame);
            probe[c] = saved - h;
            const double down = batch_objective(UnitDirection::normalized(probe), frame);
            probe[c] = saved;
            g[c] = (up - down) / (2.0 * h);
        }
        location = detail::ascend_on_sphere(location, g, step_size);
    }

    EstimateResult r;
    r.per_projection.resize(L);
    parallel_for(L, [&](std::size_t l) {
        RngStream sub = rng.substream(2 + static_cast<std::uint64_t>(opt_iters) + l);
        const UnitDirection theta = sample_scale_family(scale, location, sub);
        auto& rec = r.per_projection[l];
        rec.cost = detail::slice_cost(mu, nu, theta);
        rec.weight = 1.0 / static_cast<double>(L);
        rec.direction.assign(theta.coords().begin(), theta.coords().end());
    });
    double raw = 0.0;
    for (const auto& rec : r.per_projection) raw += rec.cost;
    raw /= static_cast<double>(L);
    EstimatorSpec spec;
    spec.method = Method::Dsgw;
    spec.inner_count = inner_count;
    spec.opt_iters = opt_iters;
    spec.step_size = step_size;
    spec.scale = scale;
    return detail::finish(std::move(r), raw, timer, spec, rng);
}

/// Dispatch on spec.method with the spec's hyperparameters.
inline EstimateResult estimate(const PointCloud& mu, const PointCloud& nu,
                               const EstimatorSpec& spec, RngStream rng) {
    spec.validate();
    switch (spec.method) {
        case Method::Sgw: return estimate_sgw(mu, nu, spec.projections, rng);
        case Method::Rasgw: return estimate_rasgw(mu, nu, spec.scale, spec.projections, rng);
        case Method::Iwrasgw:
            return estimate_iwrasgw(mu, nu, spec.scale, spec.inner_count, spec.outer_count,
                                    spec.energy, rng);
        case Method::Ebsgw: return estimate_ebsgw(mu, nu, spec.inner_count, spec.energy, rng);
        case Method::Rpsgw: return estimate_rpsgw(mu, nu, spec.scale, spec.projections, rng);
        case Method::MaxSgw:
            return estimate_max_sgw(mu, nu, spec.opt_iters, spec.step_size, spec.restarts, rng);
        case Method::Dsgw:
            return estimate_dsgw(mu, nu, spec.scale, spec.inner_count, spec.opt_iters,
                                 spec.step_size, rng);
    }
    throw std::logic_error("estimate: unknown method");
}

}  // namespace rasgw
