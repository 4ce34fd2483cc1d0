// Command-line front end: distance computation, gradient flows, and
// hyperparameter sweeps with reproducible seeding and machine-readable
// output (JSON / JSONL / CSV).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rasgw/rasgw.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

// Stream-index regions reserved by the CLI; far above anything the library
// allocates per projection or per flow step.
constexpr std::uint64_t kSourceNoiseStream = 1ULL << 62;
constexpr std::uint64_t kTargetGenStream = (1ULL << 62) + (1ULL << 32);
constexpr std::uint64_t kSubsampleStream = (1ULL << 62) + (1ULL << 33);

struct CommonOptions {
    std::string method = "rasgw";
    int projections = 500;
    int inner = 50;
    int outer = 1;
    double kappa = 50.0;
    std::string family = "ps";
    std::string energy = "exp";
    int iters = 100;
    double step = 0.05;
    int restarts = 8;
    std::uint64_t seed = 0;
    int threads = 0;
};

rasgw::Method parse_method(const std::string& name) {
    if (name == "sgw") return rasgw::Method::Sgw;
    if (name == "max-sgw") return rasgw::Method::MaxSgw;
    if (name == "dsgw") return rasgw::Method::Dsgw;
    if (name == "ebsgw") return rasgw::Method::Ebsgw;
    if (name == "rpsgw") return rasgw::Method::Rpsgw;
    if (name == "rasgw") return rasgw::Method::Rasgw;
    if (name == "iwrasgw") return rasgw::Method::Iwrasgw;
    throw std::domain_error("unknown method '" + name + "'");
}

rasgw::EstimatorSpec build_spec(const CommonOptions& o) {
    rasgw::EstimatorSpec spec;
    spec.method = parse_method(o.method);
    spec.projections = o.projections;
    spec.inner_count = o.inner;
    spec.outer_count = o.outer;
    spec.scale = rasgw::ScaleFamily(
        o.family == "vmf" ? rasgw::Family::VonMisesFisher : rasgw::Family::PowerSpherical,
        o.kappa);
    spec.energy = o.energy == "id" ? rasgw::Energy::Identity : rasgw::Energy::Exp;
    spec.opt_iters = o.iters;
    spec.step_size = o.step;
    spec.restarts = o.restarts;
    spec.validate();
    return spec;
}

void add_common_options(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--method", o.method, "estimator")
        ->check(CLI::IsMember({"sgw", "max-sgw", "dsgw", "ebsgw", "rpsgw", "rasgw", "iwrasgw"}));
    cmd->add_option("--projections", o.projections, "direction count M");
    cmd->add_option("--inner", o.inner, "inner count L (iwrasgw/ebsgw/dsgw)");
    cmd->add_option("--outer", o.outer, "outer count H (iwrasgw)");
    cmd->add_option("--kappa", o.kappa, "concentration of the scale family");
    cmd->add_option("--family", o.family, "scale family")->check(CLI::IsMember({"vmf", "ps"}));
    cmd->add_option("--energy", o.energy, "energy function")->check(CLI::IsMember({"exp", "id"}));
    cmd->add_option("--iters", o.iters, "ascent iterations T (max-sgw/dsgw)");
    cmd->add_option("--step", o.step, "ascent step size (max-sgw/dsgw)");
    cmd->add_option("--restarts", o.restarts, "ascent restarts (max-sgw)");
    cmd->add_option("--seed", o.seed, "rng seed");
    cmd->add_option("--threads", o.threads,
                    "worker threads (0 = RA_SGW_THREADS env or 1); results do not depend on it");
}

void apply_threads(int threads) {
    if (threads <= 0) {
        if (const char* env = std::getenv("RA_SGW_THREADS")) threads = std::atoi(env);
    }
    rasgw::set_worker_threads(threads <= 0 ? 1 : static_cast<unsigned>(threads));
}

json spec_to_json(const rasgw::EstimatorSpec& spec) {
    return json{{"method", rasgw::method_name(spec.method)},
                {"projections", spec.projections},
                {"inner", spec.inner_count},
                {"outer", spec.outer_count},
                {"kappa", spec.scale.kappa},
                {"family", spec.scale.family == rasgw::Family::VonMisesFisher ? "vmf" : "ps"},
                {"energy", spec.energy == rasgw::Energy::Exp ? "exp" : "id"},
                {"iters", spec.opt_iters},
                {"step", spec.step_size},
                {"restarts", spec.restarts},
                {"p", spec.p}};
}

json make_manifest(int argc, char** argv, const rasgw::EstimatorSpec& spec, std::uint64_t seed,
                   double wall_time_s, const std::vector<std::string>& outputs) {
    json cmd = json::array();
    for (int i = 0; i < argc; ++i) cmd.push_back(argv[i]);
    return json{{"command_line", cmd},
                {"spec", spec_to_json(spec)},
                {"seed", seed},
                {"library_version", rasgw::kVersion},
                {"wall_time_total_s", wall_time_s},
                {"outputs", outputs}};
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw rasgw::ParseError("cannot open output file: " + path);
    out << content;
    if (!out) throw rasgw::ParseError("write failed: " + path);
}

/// Pads the lower-dimensional cloud and subsamples the larger one so the two
/// supports are comparable.
std::pair<rasgw::PointCloud, rasgw::PointCloud> harmonize(const rasgw::PointCloud& a,
                                                          const rasgw::PointCloud& b,
                                                          std::uint64_t seed) {
    const std::size_t d = std::max(a.dim(), b.dim());
    rasgw::PointCloud pa = rasgw::pad_uplift(a, d);
    rasgw::PointCloud pb = rasgw::pad_uplift(b, d);
    const std::size_t n = std::min(pa.size(), pb.size());
    if (pa.size() > n) pa = rasgw::subsample(pa, n, rasgw::RngStream(seed, kSubsampleStream));
    if (pb.size() > n)
        pb = rasgw::subsample(pb, n, rasgw::RngStream(seed, kSubsampleStream + 1));
    return {std::move(pa), std::move(pb)};
}

struct DistOptions {
    CommonOptions common;
    std::string cloud_a;
    std::string cloud_b;
    std::string out_path;
};

int run_dist(int argc, char** argv, const DistOptions& o) {
    rasgw::EstimatorSpec spec;
    try {
        spec = build_spec(o.common);
    } catch (const std::exception& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitUsage;
    }
    apply_threads(o.common.threads);

    std::optional<rasgw::PointCloud> mu, nu;
    try {
        auto pair = harmonize(rasgw::load_csv(o.cloud_a), rasgw::load_csv(o.cloud_b),
                              o.common.seed);
        mu.emplace(std::move(pair.first));
        nu.emplace(std::move(pair.second));
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }

    try {
        const rasgw::EstimateResult res =
            rasgw::estimate(*mu, *nu, spec, rasgw::RngStream(o.common.seed, 0));
        if (!std::isfinite(res.value)) throw std::runtime_error("estimate is not finite");

        json doc{{"value", res.value},
                 {"raw_mean", res.raw_mean},
                 {"M", res.per_projection.size()},
                 {"kappa", spec.scale.kappa},
                 {"seed", o.common.seed},
                 {"wall_time_s", res.wall_time_s},
                 {"method", rasgw::method_name(spec.method)}};
        doc["manifest"] = make_manifest(argc, argv, spec, o.common.seed, res.wall_time_s,
                                        o.out_path.empty()
                                            ? std::vector<std::string>{}
                                            : std::vector<std::string>{o.out_path});
        if (!o.out_path.empty()) write_text(o.out_path, doc.dump(2) + "\n");
        std::printf("%.12g\n", res.value);
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

struct FlowOptions {
    CommonOptions common;
    int source_dim = 2;
    std::string target = "gaussian4";
    int target_dim = 0;  // 0 -> default per target
    int n = 128;
    int steps = 2000;
    double lr = 0.01;
    int eval_every = 50;
    std::string reference = "perm-gw";
    std::string out_dir = "flow_out";
};

rasgw::PointCloud make_target(const FlowOptions& o) {
    if (o.target.rfind("csv:", 0) == 0) return rasgw::load_csv(o.target.substr(4));
    const rasgw::RngStream gen(o.common.seed, kTargetGenStream);
    if (o.target == "gaussian4") {
        const int d = o.target_dim == 0 ? 3 : o.target_dim;
        return rasgw::gaussian4(static_cast<std::size_t>(d), static_cast<std::size_t>(o.n), gen);
    }
    if (o.target == "gaussian8")
        return rasgw::gaussian8(static_cast<std::size_t>(o.n), gen);
    throw rasgw::ParseError("unknown target '" + o.target + "'");
}

rasgw::PointCloud make_source_noise(int n, int d, std::uint64_t seed) {
    rasgw::RngStream rng(seed, kSourceNoiseStream);
    std::vector<double> pts(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
    for (double& v : pts) v = rng.gaussian();
    return rasgw::PointCloud(std::move(pts), static_cast<std::size_t>(n),
                             static_cast<std::size_t>(d));
}

int run_flow_cmd(int argc, char** argv, const FlowOptions& o) {
    rasgw::FlowConfig cfg;
    try {
        cfg.estimator = build_spec(o.common);
        cfg.steps = o.steps;
        cfg.learning_rate = o.lr;
        cfg.eval_every = o.eval_every;
        cfg.reference = o.reference == "rasgw-probe" ? rasgw::ReferenceMetric::RasgwProbe
                                                     : rasgw::ReferenceMetric::PermGW;
        if (o.n < 2 || o.source_dim < 1)
            throw std::domain_error("need --n >= 2 and --source-dim >= 1");
        if (cfg.steps < 1 || !(cfg.learning_rate > 0.0) || cfg.eval_every < 1)
            throw std::domain_error("need --steps >= 1, --lr > 0, --eval-every >= 1");
    } catch (const std::exception& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitUsage;
    }
    apply_threads(o.common.threads);

    std::optional<rasgw::PointCloud> source, target;
    try {
        target.emplace(make_target(o));
        source.emplace(make_source_noise(o.n, o.source_dim, o.common.seed));
        if (source->size() != target->size())
            throw std::domain_error("--n must match the target's support count");
        fs::create_directories(o.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }

    try {
        const rasgw::FlowResult res =
            rasgw::run_flow(*source, *target, cfg, rasgw::RngStream(o.common.seed, 0));

        const std::string trace_path = (fs::path(o.out_dir) / "trace.jsonl").string();
        const std::string cloud_path = (fs::path(o.out_dir) / "final.csv").string();
        const std::string manifest_path = (fs::path(o.out_dir) / "manifest.json").string();

        std::string trace;
        for (const auto& rec : res.trace.records) {
            json line{{"step", rec.step},
                      {"value", rec.value},
                      {"ref", rec.reference},
                      {"t", rec.wall_time_s}};
            trace += line.dump() + "\n";
        }
        write_text(trace_path, trace);
        rasgw::save_csv(res.cloud, cloud_path);
        const double total = res.trace.records.back().wall_time_s;
        write_text(manifest_path,
                   make_manifest(argc, argv, cfg.estimator, o.common.seed, total,
                                 {trace_path, cloud_path, manifest_path})
                           .dump(2) +
                       "\n");
        std::printf("%.12g\n", res.trace.records.back().reference);
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

struct AblateOptions {
    CommonOptions common;
    std::string param = "kappa";
    std::vector<double> values;
    int repeats = 5;
    std::string scenario = "dist";
    std::string out_path = "ablation.csv";
    std::string cloud_a;
    std::string cloud_b;
    FlowOptions flow;  // flow-scenario shape parameters
};

int run_ablate(int argc, char** argv, AblateOptions& o) {
    rasgw::EstimatorSpec base_spec;
    try {
        base_spec = build_spec(o.common);
        if (o.values.empty()) throw std::domain_error("--values must not be empty");
        if (o.repeats < 1) throw std::domain_error("--repeats must be >= 1");
        if (o.scenario == "dist" && (o.cloud_a.empty() || o.cloud_b.empty()))
            throw std::domain_error("dist scenario needs two CSV paths");
        if (o.param == "kappa")
            for (double v : o.values)
                if (!(v > 0.0)) throw std::domain_error("kappa values must be positive");
    } catch (const std::exception& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return kExitUsage;
    }
    apply_threads(o.common.threads);

    std::optional<rasgw::PointCloud> mu, nu;
    if (o.scenario == "dist") {
        try {
            auto pair = harmonize(rasgw::load_csv(o.cloud_a), rasgw::load_csv(o.cloud_b),
                                  o.common.seed);
            mu.emplace(std::move(pair.first));
            nu.emplace(std::move(pair.second));
        } catch (const std::exception& e) {
            std::cerr << "data error: " << e.what() << "\n";
            return kExitData;
        }
    }

    try {
        std::string csv = "param,value,metric_mean,metric_std,time_mean_s,time_std_s\n";
        for (double value : o.values) {
            rasgw::EstimatorSpec spec = base_spec;
            if (o.param == "kappa") {
                spec.scale = rasgw::ScaleFamily(spec.scale.family, value);
            } else {
                const int count = static_cast<int>(value);
                if (count < 1) throw std::domain_error("projection counts must be >= 1");
                if (spec.method == rasgw::Method::Iwrasgw ||
                    spec.method == rasgw::Method::Ebsgw || spec.method == rasgw::Method::Dsgw)
                    spec.inner_count = count;
                else
                    spec.projections = count;
            }
            std::vector<double> metrics, times;
            for (int rep = 0; rep < o.repeats; ++rep) {
                const std::uint64_t seed = o.common.seed + static_cast<std::uint64_t>(rep);
                if (o.scenario == "dist") {
                    const auto res = rasgw::estimate(*mu, *nu, spec, rasgw::RngStream(seed, 0));
                    metrics.push_back(res.value);
                    times.push_back(res.wall_time_s);
                } else {
                    FlowOptions fo = o.flow;
                    fo.common = o.common;
                    fo.common.seed = seed;
                    rasgw::FlowConfig cfg;
                    cfg.estimator = spec;
                    cfg.steps = fo.steps;
                    cfg.learning_rate = fo.lr;
                    cfg.eval_every = fo.eval_every;
                    const auto target = make_target(fo);
                    const auto source = make_source_noise(fo.n, fo.source_dim, seed);
                    const auto res =
                        rasgw::run_flow(source, target, cfg, rasgw::RngStream(seed, 0));
                    metrics.push_back(res.trace.records.back().reference);
                    times.push_back(res.trace.records.back().wall_time_s);
                }
            }
            const auto mean = [](const std::vector<double>& v) {
                double s = 0.0;
                for (double x : v) s += x;
                return s / static_cast<double>(v.size());
            };
            const auto stddev = [&](const std::vector<double>& v) {
                if (v.size() < 2) return 0.0;
                const double m = mean(v);
                double s = 0.0;
                for (double x : v) s += (x - m) * (x - m);
                return std::sqrt(s / static_cast<double>(v.size() - 1));
            };
            char row[256];
            std::snprintf(row, sizeof(row), "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          o.param.c_str(), value, mean(metrics), stddev(metrics), mean(times),
                          stddev(times));
            csv += row;
        }
        write_text(o.out_path, csv);
        write_text(o.out_path + ".manifest.json",
                   make_manifest(argc, argv, base_spec, o.common.seed, 0.0,
                                 {o.out_path, o.out_path + ".manifest.json"})
                           .dump(2) +
                       "\n");
        std::fputs(csv.c_str(), stdout);
        return kExitOk;
    } catch (const rasgw::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relation-aware sliced Gromov-Wasserstein toolbox"};
    app.require_subcommand(1);

    DistOptions dist;
    CLI::App* dist_cmd = app.add_subcommand("dist", "distance between two CSV point clouds");
    add_common_options(dist_cmd, dist.common);
    dist_cmd->add_option("cloud_a", dist.cloud_a, "first CSV")->required();
    dist_cmd->add_option("cloud_b", dist.cloud_b, "second CSV")->required();
    dist_cmd->add_option("--out", dist.out_path, "JSON result path");

    FlowOptions flow;
    CLI::App* flow_cmd = app.add_subcommand("flow", "gradient flow toward a target cloud");
    add_common_options(flow_cmd, flow.common);
    flow_cmd->add_option("--source-dim", flow.source_dim, "dimension of the initial noise cloud");
    flow_cmd->add_option("--target", flow.target, "gaussian4 | gaussian8 | csv:PATH");
    flow_cmd->add_option("--target-dim", flow.target_dim, "gaussian4 dimension (2 or 3)");
    flow_cmd->add_option("--n", flow.n, "points per cloud");
    flow_cmd->add_option("--steps", flow.steps, "descent steps");
    flow_cmd->add_option("--lr", flow.lr, "learning rate");
    flow_cmd->add_option("--eval-every", flow.eval_every, "trace cadence");
    flow_cmd->add_option("--reference", flow.reference, "perm-gw | rasgw-probe")
        ->check(CLI::IsMember({"perm-gw", "rasgw-probe"}));
    flow_cmd->add_option("--out", flow.out_dir, "output directory");

    AblateOptions ablate;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "sweep kappa or the projection count");
    add_common_options(ablate_cmd, ablate.common);
    ablate_cmd->add_option("--param", ablate.param, "kappa | projections")
        ->check(CLI::IsMember({"kappa", "projections"}));
    ablate_cmd->add_option("--values", ablate.values, "comma-separated sweep values")
        ->required()
        ->delimiter(',');
    ablate_cmd->add_option("--repeats", ablate.repeats, "repetitions per value");
    ablate_cmd->add_option("--scenario", ablate.scenario, "dist | flow")
        ->check(CLI::IsMember({"dist", "flow"}));
    ablate_cmd->add_option("--out", ablate.out_path, "CSV output path");
    ablate_cmd->add_option("cloud_a", ablate.cloud_a, "first CSV (dist scenario)");
    ablate_cmd->add_option("cloud_b", ablate.cloud_b, "second CSV (dist scenario)");
    ablate_cmd->add_option("--source-dim", ablate.flow.source_dim, "flow scenario: source dim");
    ablate_cmd->add_option("--target", ablate.flow.target, "flow scenario: target");
    ablate_cmd->add_option("--target-dim", ablate.flow.target_dim, "flow scenario: target dim");
    ablate_cmd->add_option("--n", ablate.flow.n, "flow scenario: points");
    ablate_cmd->add_option("--steps", ablate.flow.steps, "flow scenario: steps");
    ablate_cmd->add_option("--lr", ablate.flow.lr, "flow scenario: learning rate");
    ablate_cmd->add_option("--eval-every", ablate.flow.eval_every, "flow scenario: cadence");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return kExitUsage;
    }

    if (dist_cmd->parsed()) return run_dist(argc, argv, dist);
    if (flow_cmd->parsed()) return run_flow_cmd(argc, argv, flow);
    if (ablate_cmd->parsed()) return run_ablate(argc, argv, ablate);
    return kExitUsage;
}
