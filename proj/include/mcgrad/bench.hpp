#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcgrad/discrete.hpp"
#include "mcgrad/distributions.hpp"
#include "mcgrad/errors.hpp"
#include "mcgrad/estimators.hpp"
#include "mcgrad/numeric.hpp"
#include "mcgrad/oracle.hpp"
#include "mcgrad/test_function.hpp"

namespace mcgrad {

// --- test-function registry --------------------------------------------------

namespace detail {

inline std::vector<double> parse_args(const std::string& spec) {
    std::vector<double> args;
    std::string token;
    std::stringstream ss(spec);
    while (std::getline(ss, token, ','))
        args.push_back(std::stod(token));
    return args;
}

inline void require_scalar(std::span<const double> x) {
    if (x.size() != 1)
        throw ConfigError("test function expects a 1-D point");
}

inline void validate_grad(const TestFunction& phi, int dim) {
    const double probes[] = {-2.3, -0.7, 0.4, 1.9};
    for (double p : probes) {
        bool near_cut = false;
        for (const Discontinuity& d : phi.discontinuities)
            if (std::abs(p - d.location) < 1e-3) near_cut = true;
        if (near_cut) continue;
        std::vector<double> x(static_cast<std::size_t>(dim), p);
        const std::vector<double> g = phi.grad(x);
        for (int j = 0; j < dim; ++j) {
            auto fj = [&](double t) {
                std::vector<double> xt = x;
                xt[static_cast<std::size_t>(j)] = t;
                return phi.value(xt);
            };
            const double fd = central_diff(fj, p, p);
            if (std::abs(g[static_cast<std::size_t>(j)] - fd) >
                1e-5 * std::max(1.0, std::abs(fd)))
                throw CrossCheckError("phi_registry: analytic gradient of '" +
                                      phi.name + "' fails finite differences");
        }
    }
}

}  // namespace detail

// Named test functions. 1-D entries: linear, quadratic, cubic, sin,
// quadsin(a, w) = x^2 + a sin(w x), step(c) = [x >= c]. Any-dimension entry:
// sumsq = sum_i x_i^2. Gradients are validated against finite differences on
// load; unknown names are errors.
inline TestFunction phi_registry(const std::string& name) {
    TestFunction phi;
    phi.name = name;

    std::string base = name;
    std::vector<double> args;
    const auto open = name.find('(');
    if (open != std::string::npos) {
        if (name.back() != ')')
            throw ConfigError("phi_registry: malformed name '" + name + "'");
        base = name.substr(0, open);
        args = detail::parse_args(name.substr(open + 1, name.size() - open - 2));
    }

    int validate_dim = 1;
    if (base == "linear") {
        phi.value = [](std::span<const double> x) {
            detail::require_scalar(x);
            return x[0];
        };
        phi.grad = [](std::span<const double> x) {
            detail::require_scalar(x);
            return std::vector<double>{1.0};
        };
    } else if (base == "quadratic") {
        phi.value = [](std::span<const double> x) {
            detail::require_scalar(x);
            return x[0] * x[0];
        };
        phi.grad = [](std::span<const double> x) {
            detail::require_scalar(x);
            return std::vector<double>{2.0 * x[0]};
        };
    } else if (base == "cubic") {
        phi.value = [](std::span<const double> x) {
            detail::require_scalar(x);
            return x[0] * x[0] * x[0];
        };
        phi.grad = [](std::span<const double> x) {
            detail::require_scalar(x);
            return std::vector<double>{3.0 * x[0] * x[0]};
        };
    } else if (base == "sin") {
        phi.value = [](std::span<const double> x) {
            detail::require_scalar(x);
            return std::sin(x[0]);
        };
        phi.grad = [](std::span<const double> x) {
            detail::require_scalar(x);
            return std::vector<double>{std::cos(x[0])};
        };
    } else if (base == "quadsin") {
        if (args.size() != 2)
            throw ConfigError("phi_registry: quadsin needs (a, w)");
        const double a = args[0], w = args[1];
        phi.value = [a, w](std::span<const double> x) {
            detail::require_scalar(x);
            return x[0] * x[0] + a * std::sin(w * x[0]);
        };
        phi.grad = [a, w](std::span<const double> x) {
            detail::require_scalar(x);
            return std::vector<double>{2.0 * x[0] + a * w * std::cos(w * x[0])};
        };
    } else if (base == "step") {
        if (args.size() != 1) throw ConfigError("phi_registry: step needs (c)");
        const double c = args[0];
        phi.value = [c](std::span<const double> x) {
            detail::require_scalar(x);
            return x[0] < c ? 0.0 : 1.0;
        };
        phi.grad = [](std::span<const double> x) {
            detail::require_scalar(x);
            return std::vector<double>{0.0};
        };
        phi.discontinuities = {{c, 1.0}};
    } else if (base == "sumsq") {
        phi.value = [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        };
        phi.grad = [](std::span<const double> x) {
            std::vector<double> g(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * x[i];
            return g;
        };
        validate_dim = 3;
    } else {
        throw ConfigError("phi_registry: unknown test function '" + name + "'");
    }

    detail::validate_grad(phi, validate_dim);
    return phi;
}

// --- run configuration --------------------------------------------------------

struct RunConfig {
    std::string name = "run";
    std::string estimator = "lr";  // lr | lr-baseline | lr-optimal-baseline |
                                   // lr-antithetic | rp | flow | slice | go |
                                   // boxes-lr | boxes-rp | oracle
    std::string dist = "gaussian";  // gaussian | uniform | poisson | two-point
    std::vector<double> mu{0.0};
    std::vector<double> sigma{1.0};
    double delta = 1.0;   // uniform half-width
    double rate = 3.0;    // poisson
    int ymax = 30;        // poisson truncation
    double p0 = 0.5;      // two-point
    std::string phi = "quadratic";
    long long n = 200000;
    int reps = 1;
    std::uint64_t seed = 0;
    std::string flow_kind = "reparam";  // reparam | cdf | implicit | zero
    double flow_k = 1.0;
    std::string q_dist;  // empty = sample from p
    std::vector<double> q_mu{0.0};
    std::vector<double> q_sigma{1.0};
    double q_delta = 1.0;
    int n_boxes = 10000;
    double dtheta = 1e-6;
};

inline std::unique_ptr<Distribution> make_distribution(
    const std::string& family, const std::vector<double>& mu,
    const std::vector<double>& sigma, double delta) {
    if (family == "gaussian") {
        if (mu.size() == 1 && sigma.size() == 1)
            return std::make_unique<Gaussian1D>(mu[0], sigma[0]);
        return std::make_unique<DiagonalGaussian>(mu, sigma);
    }
    if (family == "uniform")
        return std::make_unique<Uniform1D>(mu.at(0), delta);
    throw ConfigError("unknown continuous distribution family: " + family);
}

inline bool is_discrete_family(const std::string& family) {
    return family == "poisson" || family == "two-point";
}

inline TruncatedDiscrete make_discrete(const RunConfig& cfg) {
    if (cfg.dist == "poisson") return truncated_poisson(cfg.rate, cfg.ymax);
    if (cfg.dist == "two-point") return two_point(cfg.p0);
    throw ConfigError("unknown discrete distribution family: " + cfg.dist);
}

// --- benchmark report -----------------------------------------------------------

struct ReportRow {
    std::string estimator;
    std::string param;
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    long long n = 0;
    int reps = 0;
    std::uint64_t seed = 0;
    double oracle = 0.0;
    double abs_error = 0.0;
    double z_score = 0.0;  // (mean - oracle) / std_error when std_error > 0
};

struct BenchmarkReport {
    std::vector<ReportRow> rows;
};

inline constexpr const char* kCsvHeader =
    "estimator,param,mean,variance,std_error,n,reps,seed,oracle,abs_error,z_score";

// Floats carry 17 significant digits so that re-parsing round-trips exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string to_csv(const BenchmarkReport& report) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const ReportRow& r : report.rows) {
        out += r.estimator;
        out += ',';
        out += r.param;
        out += ',';
        out += format_double(r.mean);
        out += ',';
        out += format_double(r.variance);
        out += ',';
        out += format_double(r.std_error);
        out += ',';
        out += std::to_string(r.n);
        out += ',';
        out += std::to_string(r.reps);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += format_double(r.oracle);
        out += ',';
        out += format_double(r.abs_error);
        out += ',';
        out += format_double(r.z_score);
        out += '\n';
    }
    return out;
}

// --- execution -------------------------------------------------------------------

namespace detail {

inline EstimatorSpec estimator_spec_from(const RunConfig& cfg) {
    EstimatorSpec spec;
    if (cfg.estimator == "lr") spec.kind = EstimatorKind::Lr;
    else if (cfg.estimator == "lr-baseline") spec.kind = EstimatorKind::LrBaseline;
    else if (cfg.estimator == "lr-optimal-baseline")
        spec.kind = EstimatorKind::LrOptimalBaseline;
    else if (cfg.estimator == "lr-antithetic")
        spec.kind = EstimatorKind::LrAntithetic;
    else if (cfg.estimator == "rp") spec.kind = EstimatorKind::Rp;
    else if (cfg.estimator == "flow") spec.kind = EstimatorKind::Flow;
    else if (cfg.estimator == "slice") spec.kind = EstimatorKind::Slice;
    else if (cfg.estimator == "go") spec.kind = EstimatorKind::Go;
    else throw ConfigError("unknown estimator: " + cfg.estimator);

    if (spec.kind == EstimatorKind::Flow) {
        if (cfg.flow_kind == "zero") spec.flow_kind = FlowKind::Zero;
        else if (cfg.flow_kind == "reparam") spec.flow_kind = FlowKind::Reparam;
        else if (cfg.flow_kind == "cdf") spec.flow_kind = FlowKind::Cdf;
        else if (cfg.flow_kind == "implicit") spec.flow_kind = FlowKind::Implicit;
        else throw ConfigError("unknown flow kind: " + cfg.flow_kind);
        spec.flow_k = cfg.flow_k;
    }
    if (!cfg.q_dist.empty())
        spec.q = make_distribution(cfg.q_dist, cfg.q_mu, cfg.q_sigma, cfg.q_delta);
    return spec;
}

// Ground truth per (dist, phi): quadrature for 1-D, factorized 1-D quadrature
// for diagonal Gaussians with separable phi.
inline std::vector<double> oracle_gradient(const Distribution& dist,
                                           const TestFunction& phi) {
    if (dist.dim() == 1)
        return quadrature_gradient(dist, phi, default_grid(dist));
    const auto* dg = dynamic_cast<const DiagonalGaussian*>(&dist);
    if (!dg || phi.name.substr(0, 5) != "sumsq")
        throw ConfigError("no oracle for " + dist.family() + " with phi '" +
                          phi.name + "'");
    const int d = dist.dim();
    std::vector<double> out(2 * static_cast<std::size_t>(d));
    const TestFunction quad = phi_registry("quadratic");
    for (int i = 0; i < d; ++i) {
        const Gaussian1D marginal(dist.params().value(i),
                                  dist.params().value(d + i));
        const std::vector<double> g =
            quadrature_gradient(marginal, quad, default_grid(marginal));
        out[static_cast<std::size_t>(i)] = g[0];
        out[static_cast<std::size_t>(d + i)] = g[1];
    }
    return out;
}

inline void validate_compatibility(const RunConfig& cfg) {
    const bool discrete = is_discrete_family(cfg.dist);
    if (cfg.estimator == "go") {
        if (!discrete) throw ConfigError("go requires a discrete distribution");
        return;
    }
    if (discrete)
        throw ConfigError(cfg.estimator + " requires a continuous distribution");
    if (cfg.estimator == "slice" &&
        !(cfg.dist == "gaussian" && cfg.mu.size() == 1))
        throw ConfigError("slice requires a 1-D Gaussian base");
    if (cfg.estimator == "lr-antithetic" && cfg.dist != "gaussian")
        throw ConfigError("lr-antithetic requires a Gaussian distribution");
    if (cfg.dist == "uniform") {
        // The uniform density moves with theta; only pure pathwise estimators
        // are unbiased for it (LR-type phi-weighting misses the boundary).
        const bool pathwise =
            cfg.estimator == "rp" ||
            (cfg.estimator == "flow" && cfg.flow_kind != "zero" &&
             cfg.flow_k == 1.0) ||
            cfg.estimator == "boxes-rp";
        if (!pathwise)
            throw ConfigError(cfg.estimator +
                              " is biased for uniform (theta-dependent support)");
    }
    if ((cfg.estimator == "boxes-lr" || cfg.estimator == "boxes-rp") &&
        cfg.mu.size() != 1)
        throw ConfigError("boxes discretizations are 1-D only");
}

}  // namespace detail

// Executes one configured run and fills every report column; the result is a
// pure function of the config (including the seed).
inline BenchmarkReport run_estimate(const RunConfig& cfg) {
    detail::validate_compatibility(cfg);
    BenchmarkReport report;
    const TestFunction phi = phi_registry(cfg.phi);

    if (is_discrete_family(cfg.dist)) {
        const TruncatedDiscrete dist = make_discrete(cfg);
        auto phi_y = [&phi](int y) { return phi.value1(static_cast<double>(y)); };
        const std::vector<double> oracle =
            discrete_bruteforce_gradient(dist, phi_y);

        std::vector<double> mean(oracle.size(), 0.0), pooled(oracle.size(), 0.0);
        long long total_n = 0;
        for (int r = 0; r < cfg.reps; ++r) {
            const std::uint64_t s =
                cfg.reps == 1 ? cfg.seed : rng::derive_seed(cfg.seed, r);
            const GradEstimate est = batch_estimate_go(dist, phi_y, cfg.n, s);
            for (std::size_t i = 0; i < oracle.size(); ++i) {
                mean[i] += est.mean[i] / cfg.reps;
                pooled[i] += est.variance[i] / cfg.reps;
            }
            total_n += est.n;
        }
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            ReportRow row;
            row.estimator = cfg.estimator;
            row.param = dist.params().name(static_cast<int>(i));
            row.mean = mean[i];
            row.variance = pooled[i];
            row.std_error = std::sqrt(pooled[i] / static_cast<double>(total_n));
            row.n = cfg.n;
            row.reps = cfg.reps;
            row.seed = cfg.seed;
            row.oracle = oracle[i];
            row.abs_error = std::abs(row.mean - row.oracle);
            row.z_score = row.std_error > 0.0
                              ? (row.mean - row.oracle) / row.std_error
                              : 0.0;
            report.rows.push_back(std::move(row));
        }
        return report;
    }

    const auto dist = make_distribution(cfg.dist, cfg.mu, cfg.sigma, cfg.delta);
    const std::vector<double> oracle = detail::oracle_gradient(*dist, phi);

    auto exact_row = [&](const std::vector<double>& values) {
        for (int i = 0; i < dist->n_params(); ++i) {
            ReportRow row;
            row.estimator = cfg.estimator;
            row.param = dist->params().name(i);
            row.mean = values[static_cast<std::size_t>(i)];
            row.n = cfg.n;
            row.reps = cfg.reps;
            row.seed = cfg.seed;
            row.oracle = oracle[static_cast<std::size_t>(i)];
            row.abs_error = std::abs(row.mean - row.oracle);
            report.rows.push_back(std::move(row));
        }
    };

    if (cfg.estimator == "oracle") {
        exact_row(oracle);
        return report;
    }
    if (cfg.estimator == "boxes-lr") {
        exact_row(boxes_lr_gradient(*dist, phi, cfg.n_boxes, cfg.dtheta,
                                    default_grid(*dist)));
        return report;
    }
    if (cfg.estimator == "boxes-rp") {
        exact_row(boxes_rp_gradient(*dist, phi, cfg.n_boxes, cfg.dtheta));
        return report;
    }

    const EstimatorSpec spec = detail::estimator_spec_from(cfg);
    const int n_out = spec.kind == EstimatorKind::Slice ? 1 : dist->n_params();
    std::vector<double> mean(static_cast<std::size_t>(n_out), 0.0);
    std::vector<double> pooled(static_cast<std::size_t>(n_out), 0.0);
    for (int r = 0; r < cfg.reps; ++r) {
        const std::uint64_t s =
            cfg.reps == 1 ? cfg.seed : rng::derive_seed(cfg.seed, r);
        const GradEstimate est = batch_estimate(spec, *dist, phi, cfg.n, s);
        for (int i = 0; i < n_out; ++i) {
            mean[static_cast<std::size_t>(i)] += est.mean[i] / cfg.reps;
            pooled[static_cast<std::size_t>(i)] += est.variance[i] / cfg.reps;
        }
    }
    const double total_n = static_cast<double>(cfg.n) * cfg.reps;
    for (int i = 0; i < n_out; ++i) {
        ReportRow row;
        row.estimator = cfg.estimator;
        // The slice estimator supports only the location derivative; other
        // parameters are omitted from its report.
        row.param = dist->params().name(i);
        row.mean = mean[static_cast<std::size_t>(i)];
        row.variance = pooled[static_cast<std::size_t>(i)];
        row.std_error = std::sqrt(row.variance / total_n);
        row.n = cfg.n;
        row.reps = cfg.reps;
        row.seed = cfg.seed;
        row.oracle = oracle[static_cast<std::size_t>(i)];
        row.abs_error = std::abs(row.mean - row.oracle);
        row.z_score =
            row.std_error > 0.0 ? (row.mean - row.oracle) / row.std_error : 0.0;
        report.rows.push_back(std::move(row));
    }
    return report;
}

// --- config files ------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(s);
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (!token.empty()) out.push_back(std::stod(token));
    }
    if (out.empty()) throw ConfigError("empty numeric list");
    return out;
}

inline void apply_key(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
    if (key == "estimator") cfg.estimator = value;
    else if (key == "dist") cfg.dist = value;
    else if (key == "mu") cfg.mu = parse_double_list(value);
    else if (key == "sigma") cfg.sigma = parse_double_list(value);
    else if (key == "delta") cfg.delta = std::stod(value);
    else if (key == "rate") cfg.rate = std::stod(value);
    else if (key == "ymax") cfg.ymax = std::stoi(value);
    else if (key == "p0") cfg.p0 = std::stod(value);
    else if (key == "phi") cfg.phi = value;
    else if (key == "n") cfg.n = std::stoll(value);
    else if (key == "reps") cfg.reps = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "flow") cfg.flow_kind = value;
    else if (key == "k") cfg.flow_k = std::stod(value);
    else if (key == "q_dist") cfg.q_dist = value;
    else if (key == "q_mu") cfg.q_mu = parse_double_list(value);
    else if (key == "q_sigma") cfg.q_sigma = parse_double_list(value);
    else if (key == "q_delta") cfg.q_delta = std::stod(value);
    else if (key == "n_boxes") cfg.n_boxes = std::stoi(value);
    else if (key == "dtheta") cfg.dtheta = std::stod(value);
    else throw ConfigError("unknown config key: " + key);
}

}  // namespace detail

// Line-oriented `key = value` sections; one run per [section]. Unknown keys
// are errors so that configs cannot silently drift.
inline std::vector<RunConfig> parse_config(std::istream& in) {
    std::vector<RunConfig> runs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
            runs.emplace_back();
            runs.back().name = detail::trim(t.substr(1, t.size() - 2));
            continue;
        }
        if (runs.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": key before any [section]");
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        try {
            detail::apply_key(runs.back(), detail::trim(t.substr(0, eq)),
                              detail::trim(t.substr(eq + 1)));
        } catch (const Error& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " +
                              e.what());
        }
    }
    return runs;
}

inline std::vector<RunConfig> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

}  // namespace mcgrad
