#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rasgw/estimators.hpp"
#include "rasgw/gw1d.hpp"
#include "rasgw/parallel.hpp"
#include "rasgw/point_cloud.hpp"
#include "rasgw/rapd.hpp"

namespace rasgw {

/// One projection with its pairing frozen: matched[i] is the target value
/// assigned to source point i after sorting both projections and picking the
/// winning (anti-)identity assignment.
struct FrozenSlice {
    std::vector<double> theta;
    std::vector<double> matched;
};

/// A step's worth of frozen slices plus the weighting mode that aggregates
/// them (uniform mean, or energy weights recomputed from live costs).
struct FrozenEnsemble {
    std::vector<FrozenSlice> slices;
    EstimatorSpec spec;
};

namespace detail {

inline FrozenSlice freeze_one(const PointCloud& source, const PointCloud& target,
                              const UnitDirection& theta) {
    const SortedProjection sp = project(source, theta);
    const SortedProjection tp = project(target, theta);
    const GW1DResult res = gw2_1d_fast(sp, tp);
    const std::size_t n = source.size();
    FrozenSlice slice;
    slice.theta.assign(theta.coords().begin(), theta.coords().end());
    slice.matched.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t rank = sp.perm_to_sorted[i];
        slice.matched[i] = res.assignment == Assignment::Identity ? tp.values[rank]
                                                                  : tp.values[n - 1 - rank];
    }
    return slice;
}

/// Slice cost v and, when grad_a is non-null, dv/da_k, both from power sums
/// of the centered projections (the cost depends on gaps only, so centering
/// changes nothing but the conditioning).
inline double slice_value_grad(std::span<const double> a_raw, std::span<const double> m_raw,
                               std::vector<double>* grad_a) {
    const std::size_t n = a_raw.size();
    const double nd = static_cast<double>(n);
    const double nn = nd * nd;
    const std::vector<double> a = centered_copy(a_raw);
    const std::vector<double> m = centered_copy(m_raw);

    double s1a = 0.0, s2a = 0.0, s3a = 0.0, s4a = 0.0;
    double s1m = 0.0, s2m = 0.0, s3m = 0.0, s4m = 0.0;
    double am = 0.0, a2m = 0.0, am2 = 0.0, a2m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = a[i], y = m[i];
        const double x2 = x * x, y2 = y * y;
        s1a += x;
        s2a += x2;
        s3a += x2 * x;
        s4a += x2 * x2;
        s1m += y;
        s2m += y2;
        s3m += y2 * y;
        s4m += y2 * y2;
        am += x * y;
        a2m += x2 * y;
        am2 += x * y2;
        a2m2 += x2 * y2;
    }
    const double quart_a = 2.0 * nd * s4a - 8.0 * s1a * s3a + 6.0 * s2a * s2a;
    const double quart_m = 2.0 * nd * s4m - 8.0 * s1m * s3m + 6.0 * s2m * s2m;
    const double cross = 2.0 * nd * a2m2 - 4.0 * a2m * s1m - 4.0 * am2 * s1a +
                         2.0 * s2a * s2m + 4.0 * am * am;
    double value = (quart_a - 2.0 * cross + quart_m) / nn;
    if (value < 0.0) value = 0.0;

    if (grad_a) {
        grad_a->resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double x = a[k], y = m[k];
            const double cubic = nd * x * x * x - 3.0 * x * x * s1a + 3.0 * x * s2a - s3a;
            const double mixed = y * y * (nd * x - s1a) - 2.0 * y * (x * s1m - am) +
                                 (x * s2m - am2);
            (*grad_a)[k] = 8.0 * (cubic - mixed) / nn;
        }
    }
    return value;
}

inline std::vector<double> project_raw(const PointCloud& cloud, std::span<const double> theta) {
    std::vector<double> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) out[i] = dot(cloud.row(i), theta);
    return out;
}

}  // namespace detail

/// Samples directions per spec.method, sorts both projections, and records
/// the winning pairing of each slice. Directions, sorts, and assignments stay
/// constant when the frozen ensemble is re-evaluated at perturbed sources.
inline FrozenEnsemble freeze_slices(const PointCloud& source, const PointCloud& target,
                                    const EstimatorSpec& spec, const RngStream& rng) {
    detail::check_pair(source, target);
    spec.validate();
    if (spec.method != Method::Sgw && spec.method != Method::Rasgw &&
        spec.method != Method::Iwrasgw)
        throw std::invalid_argument("freeze_slices: method must be sgw, rasgw, or iwrasgw");
    const std::size_t count =
        spec.method == Method::Iwrasgw
            ? static_cast<std::size_t>(spec.inner_count) * static_cast<std::size_t>(spec.outer_count)
            : static_cast<std::size_t>(spec.projections);
    FrozenEnsemble ens;
    ens.spec = spec;
    ens.slices.resize(count);
    parallel_for(count, [&](std::size_t l) {
        RngStream sub = rng.substream(1 + l);
        const UnitDirection theta =
            spec.method == Method::Sgw ? sample_uniform_sphere(source.dim(), sub)
                                       : sample_rapd_from_clouds(source, target, spec.scale, sub);
        ens.slices[l] = detail::freeze_one(source, target, theta);
    });
    return ens;
}

/// The pre-root aggregate of the frozen ensemble at the given source
/// positions. Costs (and energy weights, for the importance-weighted method)
/// are live; only directions and pairings are frozen.
inline double frozen_objective(const PointCloud& source, const FrozenEnsemble& ens) {
    const std::size_t count = ens.slices.size();
    std::vector<double> costs(count);
    parallel_for(count, [&](std::size_t l) {
        const auto a = detail::project_raw(source, ens.slices[l].theta);
        costs[l] = detail::slice_value_grad(a, ens.slices[l].matched, nullptr);
    });
    if (ens.spec.method != Method::Iwrasgw) {
        double raw = 0.0;
        for (double c : costs) raw += c;
        return raw / static_cast<double>(count);
    }
    const std::size_t L = static_cast<std::size_t>(ens.spec.inner_count);
    const std::size_t H = static_cast<std::size_t>(ens.spec.outer_count);
    double raw = 0.0;
    std::vector<double> block(L);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t l = 0; l < L; ++l) block[l] = costs[h * L + l];
        const auto w = detail::energy_weights(block, ens.spec.energy);
        for (std::size_t l = 0; l < L; ++l) raw += block[l] * w[l];
    }
    return raw / static_cast<double>(H);
}

/// Analytic gradient of frozen_objective with respect to source coordinates,
/// as a flat n*d array. The importance-weighted aggregate is differentiated
/// through its weights (product rule), so the result matches finite
/// differences of frozen_objective.
inline std::vector<double> frozen_gradient(const PointCloud& source, const FrozenEnsemble& ens) {
    const std::size_t n = source.size();
    const std::size_t d = source.dim();
    const std::size_t count = ens.slices.size();

    std::vector<double> costs(count);
    std::vector<std::vector<double>> slice_grads(count);
    parallel_for(count, [&](std::size_t l) {
        const auto a = detail::project_raw(source, ens.slices[l].theta);
        costs[l] = detail::slice_value_grad(a, ens.slices[l].matched, &slice_grads[l]);
    });

    // Per-slice coefficients of dv_l in the aggregate's differential.
    std::vector<double> coeff(count);
    if (ens.spec.method != Method::Iwrasgw) {
        const double u = 1.0 / static_cast<double>(count);
        for (double& c : coeff) c = u;
    } else {
        const std::size_t L = static_cast<std::size_t>(ens.spec.inner_count);
        const std::size_t H = static_cast<std::size_t>(ens.spec.outer_count);
        std::vector<double> block(L);
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t l = 0; l < L; ++l) block[l] = costs[h * L + l];
            const auto w = detail::energy_weights(block, ens.spec.energy);
            double block_value = 0.0;
            double f_total = 0.0;
            for (std::size_t l = 0; l < L; ++l) block_value += block[l] * w[l];
            if (ens.spec.energy == Energy::Exp) {
                double peak = block[0];
                for (double v : block) peak = std::max(peak, v);
                for (double v : block) f_total += std::exp(v - peak);
                for (std::size_t l = 0; l < L; ++l) {
                    const double fprime_norm = std::exp(block[l] - peak) / f_total;
                    coeff[h * L + l] =
                        (w[l] + fprime_norm * (block[l] - block_value)) / static_cast<double>(H);
                }
            } else {
                for (double v : block) f_total += v;
                for (std::size_t l = 0; l < L; ++l) {
                    const double fprime_norm = f_total > 0.0 ? 1.0 / f_total : 0.0;
                    coeff[h * L + l] =
                        (w[l] + fprime_norm * (block[l] - block_value)) / static_cast<double>(H);
                }
            }
        }
    }

    std::vector<double> grad(n * d, 0.0);
    for (std::size_t l = 0; l < count; ++l) {
        const auto& theta = ens.slices[l].theta;
        const auto& ga = slice_grads[l];
        const double c = coeff[l];
        for (std::size_t i = 0; i < n; ++i) {
            const double scale = c * ga[i];
            for (std::size_t k = 0; k < d; ++k) grad[i * d + k] += scale * theta[k];
        }
    }
    return grad;
}

/// Gradient of the estimator's pre-root aggregate with respect to source
/// positions, with directions and assignments sampled fresh and then frozen.
inline std::vector<double> rasgw_gradient(const PointCloud& source, const PointCloud& target,
                                          const EstimatorSpec& spec, const RngStream& rng) {
    return frozen_gradient(source, freeze_slices(source, target, spec, rng));
}

enum class ReferenceMetric { PermGW, RasgwProbe };

struct FlowConfig {
    EstimatorSpec estimator;
    int steps = 2000;
    double learning_rate = 0.01;
    int eval_every = 50;
    ReferenceMetric reference = ReferenceMetric::PermGW;
};

struct FlowRecord {
    int step = 0;
    double value = 0.0;      // estimator value (after the root) at this step
    double reference = 0.0;  // reference alignment score
    double wall_time_s = 0.0;
};

struct FlowTrace {
    std::vector<FlowRecord> records;
};

struct FlowResult {
    PointCloud cloud;
    FlowTrace trace;
};

namespace detail {

// Stream-index layout inside a flow: step t owns [t*kStepStride, (t+1)*kStepStride);
// within a step, gradient slices start at +1 and the probe estimate at
// +kProbeOffset. Reference subsample streams live in the top-bit region so
// they never collide with step streams.
inline constexpr std::uint64_t kStepStride = 1ULL << 21;
inline constexpr std::uint64_t kProbeOffset = 1ULL << 20;
inline constexpr std::uint64_t kReferenceBase = 1ULL << 63;

inline double reference_score(const PointCloud& source, const PointCloud& target,
                              ReferenceMetric metric, const RngStream& rng) {
    // Both reference metrics report the pre-root (squared-cost) scale, like
    // the permutation-GW bruteforce they are compared against.
    if (metric == ReferenceMetric::RasgwProbe) {
        RngStream probe = rng.substream(kReferenceBase);
        return estimate_rasgw(source, target, ScaleFamily{}, 128, probe).raw_mean;
    }
    constexpr std::size_t kDraws = 16;
    const std::size_t support = std::min<std::size_t>(8, std::min(source.size(), target.size()));
    double total = 0.0;
    for (std::size_t k = 0; k < kDraws; ++k) {
        const PointCloud ms = subsample(source, support, rng.substream(kReferenceBase + 2 * k));
        const PointCloud ns =
            subsample(target, support, rng.substream(kReferenceBase + 2 * k + 1));
        total += gw2_cloud_bruteforce(ms, ns);
    }
    return total / static_cast<double>(kDraws);
}

}  // namespace detail

/// Plain gradient descent on source coordinates toward the target, with fresh
/// directions each step. The lower-dimensional cloud is padded up front; all
/// padded coordinates evolve freely.
inline FlowResult run_flow(const PointCloud& source_init, const PointCloud& target,
                           const FlowConfig& cfg, const RngStream& rng) {
    if (cfg.steps < 1) throw std::domain_error("run_flow: steps must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw std::domain_error("run_flow: learning rate must be > 0");
    if (cfg.eval_every < 1) throw std::domain_error("run_flow: eval_every must be >= 1");

    const std::size_t d = std::max(source_init.dim(), target.dim());
    PointCloud source = pad_uplift(source_init, d);
    const PointCloud padded_target = pad_uplift(target, d);
    detail::check_pair(source, padded_target);

    const detail::Timer timer;
    FlowResult out{source, {}};

    const auto record = [&](int step, const PointCloud& current, const RngStream& step_rng) {
        FlowRecord rec;
        rec.step = step;
        rec.value = estimate(current, padded_target, cfg.estimator,
                             step_rng.substream(detail::kProbeOffset))
                        .value;
        rec.reference = detail::reference_score(current, padded_target, cfg.reference, rng);
        rec.wall_time_s = timer.seconds();
        out.trace.records.push_back(rec);
    };

    record(0, source, rng.substream(0));
    std::vector<double> coords(source.data());
    const std::size_t n = source.size();
    for (int t = 1; t <= cfg.steps; ++t) {
        const RngStream step_rng = rng.substream(static_cast<std::uint64_t>(t) * detail::kStepStride);
        const std::vector<double> grad = rasgw_gradient(source, padded_target, cfg.estimator, step_rng);
        for (double g : grad)
            if (!std::isfinite(g))
                throw std::runtime_error("run_flow: non-finite gradient at step " +
                                         std::to_string(t));
        for (std::size_t i = 0; i < coords.size(); ++i)
            coords[i] -= cfg.learning_rate * grad[i];
        source = PointCloud(coords, n, d);
        if (t % cfg.eval_every == 0 || t == cfg.steps) record(t, source, step_rng);
    }
    out.cloud = source;
    return out;
}

}  // namespace rasgw
