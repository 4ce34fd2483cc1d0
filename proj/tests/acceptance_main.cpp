// End-to-end verification suite. Each check prints one pass/fail line; the
// process exits non-zero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rasgw/rasgw.hpp"
#include "support/oracles.hpp"

using namespace rasgw;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail,
            double seconds) {
    std::printf("[%s] %2d %-28s %s (%.1f s)\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

PointCloud random_cloud(std::size_t n, std::size_t d, RngStream rng, double scale = 1.0) {
    std::vector<double> pts(n * d);
    for (double& v : pts) v = scale * rng.gaussian();
    return PointCloud(std::move(pts), n, d);
}

std::vector<double> random_values(std::size_t n, RngStream& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.gaussian();
    return v;
}

SortedProjection sorted_of(const std::vector<double>& values) {
    return project(PointCloud(values, values.size(), 1), UnitDirection::axis(1, 0));
}

double slice_cost_for(const PointCloud& mu, const PointCloud& nu, const UnitDirection& th) {
    return gw2_1d_fast(project(mu, th), project(nu, th)).value;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
    return {oracle::mean_of(v), oracle::stderr_of(v)};
}

double shared_slicing_value(const PointCloud& a, const PointCloud& b, const PointCloud& base_a,
                            const PointCloud& base_b, const ScaleFamily& scale, int m,
                            RngStream rng) {
    double raw = 0.0;
    for (int l = 0; l < m; ++l) {
        RngStream sub = rng.substream(1 + static_cast<std::uint64_t>(l));
        const UnitDirection th = sample_rapd_from_clouds(base_a, base_b, scale, sub);
        raw += slice_cost_for(a, b, th);
    }
    return std::sqrt(raw / m);
}

double grid_max_cost_2d(const PointCloud& mu, const PointCloud& nu, int grid) {
    double best = 0.0;
    for (int g = 0; g < grid; ++g) {
        const double angle = 3.14159265358979323846 * g / grid;
        const UnitDirection theta({std::cos(angle), std::sin(angle)});
        best = std::max(best, slice_cost_for(mu, nu, theta));
    }
    return best;
}

// --- 1. identity/anti-identity solver vs exhaustive oracle ------------------

void criterion_1() {
    Stopwatch clock;
    bool ok = true;
    std::string detail;
    RngStream rng(1001, 0);
    int equal = 0;
    for (int rep = 0; rep < 200 && ok; ++rep) {
        const std::size_t n = 3 + rng.uniform_index(5);
        const auto xs = random_values(n, rng, 1.5);
        const auto ys = random_values(n, rng, 1.5);
        const double solver = gw2_1d(sorted_of(xs), sorted_of(ys)).value;
        const double exact = gw2_1d_bruteforce(xs, ys);
        if (solver < exact - 1e-9) {
            ok = false;
            detail = "solver fell below the exhaustive minimum";
        }
        if (solver <= exact + 1e-9) ++equal;
    }
    for (int rep = 0; rep < 500 && ok; ++rep) {
        const std::size_t n = 2 + rng.uniform_index(199);
        const double scale = std::exp(2.0 * rng.gaussian());
        const auto xs = random_values(n, rng, scale);
        const auto ys = random_values(n, rng, scale);
        const SortedProjection sx = sorted_of(xs);
        const SortedProjection sy = sorted_of(ys);
        const double naive = gw2_1d(sx, sy).value;
        const double fast = gw2_1d_fast(sx, sy).value;
        if (std::abs(fast - naive) > 1e-9 * std::max(1.0, naive)) {
            ok = false;
            detail = "fast evaluator diverged from the naive sum";
        }
    }
    if (ok)
        detail = "oracle matched; sorted assignment optimal on " + std::to_string(equal) +
                 "/200 instances";
    report(1, "1d solver vs oracles", ok, detail, clock.seconds());
}

// --- 2. metric axioms --------------------------------------------------------

void criterion_2() {
    Stopwatch clock;
    bool ok = true;
    std::string detail = "non-negativity, zero on isometries, symmetry, quasi-triangle";
    const ScaleFamily scale(Family::PowerSpherical, 50.0);
    const int reps = 30;
    const int projections = 2000;

    // zero on translated/negated copies, every estimator
    {
        const PointCloud mu = random_cloud(32, 3, RngStream(2001, 0));
        RngStream srng(2001, 1);
        auto shift = random_values(3, srng, 3.0);
        const PointCloud nu = apply_negation(apply_translation(mu, shift));
        const std::vector<EstimateResult> zero_runs = {
            estimate_sgw(mu, nu, 128, RngStream(2002, 0)),
            estimate_rasgw(mu, nu, scale, 128, RngStream(2002, 0)),
            estimate_iwrasgw(mu, nu, scale, 32, 4, Energy::Exp, RngStream(2002, 0)),
            estimate_ebsgw(mu, nu, 128, Energy::Exp, RngStream(2002, 0)),
            estimate_rpsgw(mu, nu, scale, 128, RngStream(2002, 0)),
            estimate_max_sgw(mu, nu, 20, 0.05, 4, RngStream(2002, 0)),
            estimate_dsgw(mu, nu, scale, 16, 5, 0.05, RngStream(2002, 0))};
        for (const auto& r : zero_runs)
            if (!(r.raw_mean >= 0.0) || r.value > 1e-10) {
                ok = false;
                detail = "estimator not zero on an isometric copy";
            }
    }

    // symmetry and the quasi-triangle inequality with the shared slicing law
    int sym_fail = 0, tri_fail = 0;
    for (int t = 0; t < 50 && ok; ++t) {
        const std::uint64_t b = 2100 + static_cast<std::uint64_t>(t) * 4;
        const PointCloud m1 = random_cloud(32, 3, RngStream(b, 0));
        const PointCloud m2 = random_cloud(32, 3, RngStream(b + 1, 0), 1.3);
        const PointCloud m3 = random_cloud(32, 3, RngStream(b + 2, 0), 0.8);

        std::vector<double> fwd, bwd, lhs, rhs1, rhs2;
        for (int rep = 0; rep < reps; ++rep) {
            const std::uint64_t s = b * 1000 + static_cast<std::uint64_t>(rep);
            fwd.push_back(estimate_rasgw(m1, m2, scale, projections, RngStream(s, 0)).value);
            bwd.push_back(
                estimate_rasgw(m2, m1, scale, projections, RngStream(s + 500, 0)).value);
            lhs.push_back(shared_slicing_value(m1, m2, m1, m2, scale, projections,
                                               RngStream(s + 1000, 0)));
            rhs1.push_back(shared_slicing_value(m1, m3, m1, m2, scale, projections,
                                                RngStream(s + 1500, 0)));
            rhs2.push_back(shared_slicing_value(m3, m2, m1, m2, scale, projections,
                                                RngStream(s + 2000, 0)));
        }
        const MeanSe f = mean_se(fwd), w = mean_se(bwd);
        if (std::abs(f.mean - w.mean) > 3.0 * (f.se + w.se)) ++sym_fail;
        const MeanSe l = mean_se(lhs), r1 = mean_se(rhs1), r2 = mean_se(rhs2);
        if (l.mean > r1.mean + r2.mean + 3.0 * (l.se + r1.se + r2.se)) ++tri_fail;
    }
    if (ok && (sym_fail > 0 || tri_fail > 0)) {
        ok = false;
        detail = "symmetry fails on " + std::to_string(sym_fail) + ", quasi-triangle on " +
                 std::to_string(tri_fail) + " of 50 triples";
    }
    report(2, "metric axioms", ok, detail, clock.seconds());
}

// --- 3. hierarchy ------------------------------------------------------------

void criterion_3() {
    Stopwatch clock;
    const ScaleFamily scale(Family::PowerSpherical, 50.0);
    int ok_count = 0;
    const int instances = 100;
    for (int t = 0; t < instances; ++t) {
        const std::uint64_t b = 3000 + static_cast<std::uint64_t>(t) * 3;
        const PointCloud mu = random_cloud(64, 2, RngStream(b, 0));
        const PointCloud nu = random_cloud(64, 2, RngStream(b + 1, 0), 1.4);

        const EstimateResult ra = estimate_rasgw(mu, nu, scale, 2000, RngStream(b + 2, 0));
        const EstimateResult iw =
            estimate_iwrasgw(mu, nu, scale, 50, 40, Energy::Exp, RngStream(b + 2, 0));
        const double grid_max = grid_max_cost_2d(mu, nu, 10000);

        std::vector<double> ra_costs;
        for (const auto& p : ra.per_projection) ra_costs.push_back(p.cost);
        const double se_ra = oracle::stderr_of(ra_costs);
        std::vector<double> blocks(40, 0.0);
        for (std::size_t h = 0; h < 40; ++h)
            for (std::size_t l = 0; l < 50; ++l) {
                const auto& rec = iw.per_projection[h * 50 + l];
                blocks[h] += rec.cost * rec.weight * 40.0;
            }
        const double se_iw = oracle::stderr_of(blocks);

        const bool lower = ra.raw_mean <= iw.raw_mean + 3.0 * (se_ra + se_iw);
        const bool upper = iw.raw_mean <= grid_max + 3.0 * se_iw;
        if (lower && upper) ++ok_count;
    }
    report(3, "hierarchy RA<=IW<=Max", ok_count >= 95,
           std::to_string(ok_count) + "/100 instances ordered", clock.seconds());
}

// --- 4. kappa -> 0 limit ------------------------------------------------------

void criterion_4() {
    Stopwatch clock;
    const PointCloud mu = random_cloud(64, 3, RngStream(4001, 0));
    const PointCloud nu = random_cloud(64, 3, RngStream(4002, 0), 1.5);
    const ScaleFamily tiny(Family::PowerSpherical, 1e-3);
    std::vector<double> ra, sg;
    for (int rep = 0; rep < 20; ++rep) {
        const std::uint64_t s = 4100 + static_cast<std::uint64_t>(rep);
        ra.push_back(estimate_rasgw(mu, nu, tiny, 100000, RngStream(s, 0)).value);
        sg.push_back(estimate_sgw(mu, nu, 100000, RngStream(s + 100, 0)).value);
    }
    const MeanSe a = mean_se(ra), b = mean_se(sg);
    const double gap = std::abs(a.mean - b.mean);
    const bool ok = gap <= 2.0 * (a.se + b.se);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "|RASGW-SGW| = %.3e vs 2(se1+se2) = %.3e", gap,
                  2.0 * (a.se + b.se));
    report(4, "kappa->0 recovers SGW", ok, buf, clock.seconds());
}

// --- 5. L -> infinity limit ---------------------------------------------------

void criterion_5() {
    Stopwatch clock;
    const ScaleFamily tiny(Family::PowerSpherical, 1e-3);
    const std::vector<int> ells{2, 8, 32, 128};
    int ok_instances = 0;
    for (int inst = 0; inst < 10; ++inst) {
        const std::uint64_t b = 5000 + static_cast<std::uint64_t>(inst) * 7;
        const PointCloud mu = random_cloud(32, 3, RngStream(b, 0));
        const PointCloud nu = random_cloud(32, 3, RngStream(b + 1, 0), 1.3);
        const double reference =
            estimate_ebsgw(mu, nu, 10000, Energy::Exp, RngStream(b + 2, 0)).value;
        std::vector<double> gaps;
        for (int L : ells) {
            std::vector<double> vals;
            for (int rep = 0; rep < 10; ++rep)
                vals.push_back(estimate_iwrasgw(mu, nu, tiny, L, 1, Energy::Exp,
                                                RngStream(b + 100 + rep, 0))
                                   .value);
            gaps.push_back(std::abs(oracle::mean_of(vals) - reference));
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < gaps.size(); ++i)
            if (!(gaps[i] < gaps[i - 1])) decreasing = false;
        if (decreasing) ++ok_instances;
    }
    report(5, "L->inf approaches EBSGW", ok_instances >= 8,
           std::to_string(ok_instances) + "/10 instances strictly decreasing",
           clock.seconds());
}

// --- 6. Monte Carlo error rate ------------------------------------------------

void criterion_6() {
    Stopwatch clock;
    const PointCloud mu = random_cloud(32, 3, RngStream(6001, 0));
    const PointCloud nu = random_cloud(32, 3, RngStream(6002, 0), 1.4);
    const ScaleFamily scale(Family::PowerSpherical, 50.0);
    const std::vector<int> ms{10, 100, 1000, 10000};
    std::vector<double> log_m, log_sd;
    for (int m : ms) {
        std::vector<double> raws;
        for (int rep = 0; rep < 200; ++rep)
            raws.push_back(
                estimate_rasgw(mu, nu, scale, m, RngStream(6100 + rep, 0)).raw_mean);
        log_m.push_back(std::log(static_cast<double>(m)));
        log_sd.push_back(std::log(oracle::sample_std(raws)));
    }
    const double slope = oracle::fitted_slope(log_m, log_sd);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "log-log slope of std vs M = %.3f", slope);
    report(6, "MC error rate ~ M^-1/2", slope >= -0.6 && slope <= -0.4, buf, clock.seconds());
}

// --- 7. sample complexity trend ------------------------------------------------

void criterion_7() {
    Stopwatch clock;
    const std::size_t big_n = 4096;
    const PointCloud reference = random_cloud(big_n, 5, RngStream(7001, 0));
    const ScaleFamily scale(Family::PowerSpherical, 50.0);
    const std::vector<std::size_t> sizes{32, 128, 512, 2048};
    std::vector<double> log_n, log_e;
    for (std::size_t n : sizes) {
        std::vector<double> vals;
        for (int rep = 0; rep < 10; ++rep) {
            const std::uint64_t s = 7100 + static_cast<std::uint64_t>(rep);
            const PointCloud sample = random_cloud(n, 5, RngStream(s, 1000 + n));
            const PointCloud ref_n = subsample(reference, n, RngStream(s, 2000 + n));
            vals.push_back(estimate_rasgw(sample, ref_n, scale, 500, RngStream(s, 0)).value);
        }
        log_n.push_back(std::log(static_cast<double>(n)));
        log_e.push_back(std::log(oracle::mean_of(vals)));
    }
    const double slope = oracle::fitted_slope(log_n, log_e);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "fitted slope of E[RASGW] vs n = %.3f", slope);
    report(7, "sample complexity trend", slope <= -0.3, buf, clock.seconds());
}

// --- 8. gradient correctness ----------------------------------------------------

void criterion_8() {
    Stopwatch clock;
    bool ok = true;
    std::string detail = "analytic vs FD <= 1e-4 relative; aggregates sum to zero";
    for (int cfg = 0; cfg < 20 && ok; ++cfg) {
        EstimatorSpec spec;
        spec.method = cfg % 3 == 0 ? Method::Sgw : (cfg % 3 == 1 ? Method::Rasgw
                                                                 : Method::Iwrasgw);
        spec.projections = 16;
        spec.inner_count = 8;
        spec.outer_count = 2;
        spec.scale = ScaleFamily(Family::PowerSpherical, 25.0);
        const std::uint64_t b = 8000 + static_cast<std::uint64_t>(cfg) * 3;
        const PointCloud source = random_cloud(10, 3, RngStream(b, 0));
        const PointCloud target = random_cloud(10, 3, RngStream(b + 1, 0), 1.4);
        const FrozenEnsemble ens = freeze_slices(source, target, spec, RngStream(b + 2, 0));

        const auto analytic = frozen_gradient(source, ens);
        std::vector<double> coords(source.data());
        std::vector<double> fd(analytic.size());
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const double saved = coords[i];
            const double h = 1e-6;
            coords[i] = saved + h;
            const double up = frozen_objective(PointCloud(coords, 10, 3), ens);
            coords[i] = saved - h;
            const double down = frozen_objective(PointCloud(coords, 10, 3), ens);
            coords[i] = saved;
            fd[i] = (up - down) / (2.0 * h);
        }
        double scale_g = 1e-6;
        for (double g : analytic) scale_g = std::max(scale_g, std::abs(g));
        for (std::size_t i = 0; i < fd.size(); ++i)
            if (std::abs(analytic[i] - fd[i]) > 1e-4 * scale_g) {
                ok = false;
                detail = "finite differences disagree with the analytic gradient";
            }
        for (std::size_t c = 0; c < 3 && ok; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < 10; ++i) total += analytic[i * 3 + c];
            if (std::abs(total) > 1e-10) {
                ok = false;
                detail = "gradient does not sum to zero";
            }
        }
    }
    report(8, "frozen gradient vs FD", ok, detail, clock.seconds());
}

// --- 9. flow trends --------------------------------------------------------------

struct FlowScenario {
    int source_dim;
    int target_dim;
    Method method;
    double kappa;
    int projections;
    double learning_rate;
    int steps;
};

// Desk-scale flow: seeded standard-normal noise source, gaussian4 target,
// probe reference (fixed directions, so scores are comparable across
// methods and steps).
double flow_final_fraction(const FlowScenario& sc, std::uint64_t seed, double* final_abs) {
    const PointCloud target = gaussian4(static_cast<std::size_t>(sc.target_dim), 128,
                                        RngStream(seed, (1ULL << 62) + (1ULL << 32)));
    RngStream noise(seed, 1ULL << 62);
    std::vector<double> pts(128 * static_cast<std::size_t>(sc.source_dim));
    for (double& v : pts) v = noise.gaussian();
    const PointCloud source(pts, 128, static_cast<std::size_t>(sc.source_dim));

    FlowConfig cfg;
    cfg.estimator.method = sc.method;
    cfg.estimator.projections = sc.projections;
    cfg.estimator.scale = ScaleFamily(Family::PowerSpherical, sc.kappa);
    cfg.steps = sc.steps;
    cfg.learning_rate = sc.learning_rate;
    cfg.eval_every = sc.steps;
    cfg.reference = ReferenceMetric::RasgwProbe;
    const FlowResult res = run_flow(source, target, cfg, RngStream(seed, 0));
    const double initial = res.trace.records.front().reference;
    const double final_ref = res.trace.records.back().reference;
    if (final_abs) *final_abs = final_ref;
    return final_ref / initial;
}

void criterion_9() {
    Stopwatch clock;
    const int kSteps = 2000;
    const double kLr = 0.05;
    const int kBudget = 200;  // matched direction budget per step
    int ra_reaches = 0, sgw_reaches = 0, ra_wins = 0;
    const int seeds = 10;
    for (int dir = 0; dir < 2; ++dir) {
        const FlowScenario ra{dir == 0 ? 2 : 3, dir == 0 ? 3 : 2, Method::Rasgw, 50.0,
                              kBudget,          kLr,              kSteps};
        FlowScenario sg = ra;
        sg.method = Method::Sgw;
        for (int s = 0; s < seeds; ++s) {
            const std::uint64_t seed = 9100 + static_cast<std::uint64_t>(s);
            double ra_final = 0.0, sg_final = 0.0;
            const double ra_frac = flow_final_fraction(ra, seed, &ra_final);
            const double sg_frac = flow_final_fraction(sg, seed, &sg_final);
            if (ra_frac <= 0.1) ++ra_reaches;
            if (sg_frac <= 0.1) ++sgw_reaches;
            if (ra_final <= sg_final) ++ra_wins;
        }
    }
    // per direction: >= 8/10 reach 10%, and RASGW at or below SGW in >= 7/10;
    // counts here aggregate the two directions
    const bool ok = ra_reaches >= 16 && sgw_reaches >= 16 && ra_wins >= 14;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "<=10%% of initial: rasgw %d/20, sgw %d/20; rasgw <= sgw in %d/20", ra_reaches,
                  sgw_reaches, ra_wins);
    report(9, "flow trends", ok, buf, clock.seconds());
}

// --- 10. ablation trends ----------------------------------------------------------

void criterion_10() {
    Stopwatch clock;
    // kappa sweep on the 3D->2D desk flow: concentrated slicing must beat
    // the near-uniform kappa = 1 by at least 2x on the final probe
    int kappa_ok = 0;
    const int blocks = 10;
    for (int b = 0; b < blocks; ++b) {
        const std::uint64_t seed = 10100 + static_cast<std::uint64_t>(b);
        FlowScenario low{3, 2, Method::Rasgw, 1.0, 100, 0.4, 600};
        FlowScenario high = low;
        high.kappa = 50.0;
        double final_low = 0.0, final_high = 0.0;
        flow_final_fraction(low, seed, &final_low);
        flow_final_fraction(high, seed, &final_high);
        if (final_high * 2.0 <= final_low) ++kappa_ok;
    }

    // projection-count sweep: the estimator's spread must shrink as M grows
    const PointCloud mu = random_cloud(64, 3, RngStream(10001, 0));
    const PointCloud nu = random_cloud(64, 3, RngStream(10002, 0), 1.4);
    const ScaleFamily scale(Family::PowerSpherical, 50.0);
    std::vector<double> stds;
    for (int m : {1, 10, 100, 500}) {
        std::vector<double> vals;
        for (int rep = 0; rep < 50; ++rep)
            vals.push_back(
                estimate_rasgw(mu, nu, scale, m, RngStream(10200 + rep, 0)).value);
        stds.push_back(oracle::sample_std(vals));
    }
    bool m_ok = true;
    for (std::size_t i = 1; i < stds.size(); ++i)
        if (!(stds[i] < stds[i - 1])) m_ok = false;

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "kappa 50 beats kappa 1 by >=2x in %d/10 blocks; std(M) %s", kappa_ok,
                  m_ok ? "strictly decreasing" : "NOT decreasing");
    report(10, "ablation trends", kappa_ok >= 8 && m_ok, buf, clock.seconds());
}

// --- 11. sampler exactness -------------------------------------------------------

void criterion_11() {
    Stopwatch clock;
    bool ok = true;
    std::string detail;

    {
        RngStream rng(11001, 0);
        const UnitDirection loc = sample_uniform_sphere(3, rng);
        const double kappa = 2.0;
        std::vector<double> cosines;
        for (int i = 0; i < 100000; ++i)
            cosines.push_back(
                dot(sample_power_spherical(loc, kappa, rng).coords(), loc.coords()));
        const double mean = oracle::mean_of(cosines);
        const double target = kappa / (3.0 - 1.0 + kappa);
        const double sd = oracle::sample_std(cosines);
        if (std::abs(mean - target) > 3.0 * sd / std::sqrt(100000.0)) {
            ok = false;
            detail = "PS cosine moment off";
        }
    }
    if (ok) {
        RngStream rng(11002, 0);
        const std::size_t d = 4;
        const double kappa = 3.5;
        const UnitDirection loc = sample_uniform_sphere(d, rng);
        std::vector<double> z;
        for (int i = 0; i < 10000; ++i)
            z.push_back(0.5 *
                        (1.0 + dot(sample_power_spherical(loc, kappa, rng).coords(),
                                   loc.coords())));
        const double a = 0.5 * (d - 1) + kappa, b = 0.5 * (d - 1);
        const double ks =
            oracle::ks_statistic(z, [&](double x) { return oracle::beta_cdf(a, b, x); });
        if (ks > 0.015) {
            ok = false;
            detail = "PS cosine KS vs Beta law = " + std::to_string(ks);
        }
    }
    if (ok) {
        RngStream rng(11003, 0);
        const std::size_t d = 3;
        const double kappa = 5.0;
        const UnitDirection loc = sample_uniform_sphere(d, rng);
        double mean = 0.0;
        for (int i = 0; i < 100000; ++i)
            mean += dot(sample_vmf(loc, kappa, rng).coords(), loc.coords());
        mean /= 100000.0;
        const double a3 = oracle::vmf_mean_resultant(d, kappa);
        if (std::abs(mean - a3) > 0.02) {
            ok = false;
            detail = "vMF mean resultant length off";
        } else {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "PS moment + KS ok; vMF resultant %.4f vs Bessel %.4f", mean, a3);
            detail = buf;
        }
    }
    report(11, "sampler exactness", ok, detail, clock.seconds());
}

// --- 12. CLI determinism -----------------------------------------------------------

#ifdef RASGW_CLI_PATH
std::string run_cli_capture(const std::string& args, int* exit_code) {
    const std::string cmd = std::string(RASGW_CLI_PATH) + " " + args + " 2>/dev/null";
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        *exit_code = -1;
        return out;
    }
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) out.append(buf, got);
    const int status = pclose(pipe);
    *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

void criterion_12() {
    Stopwatch clock;
    bool ok = true;
    std::string detail = "dist and flow outputs identical for --threads 1 and 4";
    const fs::path dir = fs::temp_directory_path() / "rasgw_acceptance";
    fs::create_directories(dir);

    const fs::path cloud_a = dir / "a.csv";
    const fs::path cloud_b = dir / "b.csv";
    {
        const PointCloud a = random_cloud(24, 3, RngStream(12001, 0));
        const PointCloud b = random_cloud(24, 3, RngStream(12002, 0), 1.3);
        save_csv(a, cloud_a.string());
        save_csv(b, cloud_b.string());
    }

    std::vector<std::pair<double, double>> dist_results;
    for (int threads : {1, 4, 1, 4}) {
        const fs::path out = dir / ("dist_t" + std::to_string(threads) + ".json");
        int code = 0;
        run_cli_capture("dist --method iwrasgw --inner 16 --outer 8 --kappa 30 --seed 77 "
                            "--threads " +
                            std::to_string(threads) + " --out " + out.string() + " " +
                            cloud_a.string() + " " + cloud_b.string(),
                        &code);
        if (code != 0) ok = false;
        std::ifstream in(out);
        const json doc = json::parse(in);
        dist_results.emplace_back(doc["value"].get<double>(), doc["raw_mean"].get<double>());
    }
    for (std::size_t i = 1; i < dist_results.size() && ok; ++i)
        if (dist_results[i] != dist_results[0]) {
            ok = false;
            detail = "dist value changed across reruns/threads";
        }

    if (ok) {
        std::vector<std::string> finals;
        std::vector<std::string> traces;
        for (int threads : {1, 4}) {
            const fs::path out = dir / ("flow_t" + std::to_string(threads));
            fs::remove_all(out);
            int code = 0;
            run_cli_capture(
                "flow --source-dim 2 --target gaussian4 --target-dim 3 --n 32 --steps 60 "
                "--lr 0.05 --method rasgw --projections 32 --eval-every 20 --seed 5 "
                "--threads " +
                    std::to_string(threads) + " --out " + out.string(),
                &code);
            if (code != 0) ok = false;
            std::ifstream fin(out / "final.csv");
            std::stringstream fs_buf;
            fs_buf << fin.rdbuf();
            finals.push_back(fs_buf.str());
            // trace values without the timing field
            std::ifstream tin(out / "trace.jsonl");
            std::string line, digest;
            while (std::getline(tin, line)) {
                json rec = json::parse(line);
                rec.erase("t");
                digest += rec.dump() + "\n";
            }
            traces.push_back(digest);
        }
        if (ok && (finals[0] != finals[1] || finals[0].empty())) {
            ok = false;
            detail = "flow final.csv differs across thread counts";
        }
        if (ok && traces[0] != traces[1]) {
            ok = false;
            detail = "flow trace differs across thread counts";
        }
    }
    report(12, "CLI determinism", ok, detail, clock.seconds());
}
#endif

}  // namespace

int main(int argc, char** argv) {
    // optional filter: run only the criteria whose numbers appear as args
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    const auto wanted = [&](int n) {
        if (only.empty()) return true;
        for (int v : only)
            if (v == n) return true;
        return false;
    };

    if (wanted(1)) criterion_1();
    if (wanted(2)) criterion_2();
    if (wanted(3)) criterion_3();
    if (wanted(4)) criterion_4();
    if (wanted(5)) criterion_5();
    if (wanted(6)) criterion_6();
    if (wanted(7)) criterion_7();
    if (wanted(8)) criterion_8();
    if (wanted(9)) criterion_9();
    if (wanted(10)) criterion_10();
    if (wanted(11)) criterion_11();
#ifdef RASGW_CLI_PATH
    if (wanted(12)) criterion_12();
#endif

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    return 0;
}
