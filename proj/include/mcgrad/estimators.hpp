#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcgrad/discrete.hpp"
#include "mcgrad/distributions.hpp"
#include "mcgrad/errors.hpp"
#include "mcgrad/flows.hpp"
#include "mcgrad/importance.hpp"
#include "mcgrad/numeric.hpp"
#include "mcgrad/parallel.hpp"
#include "mcgrad/rng.hpp"
#include "mcgrad/test_function.hpp"

namespace mcgrad {

// Single-sample estimate of the gradient, one entry per parameter.
struct GradContribution {
    std::vector<double> per_param;
};

// Batch aggregate: per-parameter mean, sample variance of the contributions,
// and standard error sqrt(variance / n).
struct GradEstimate {
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<double> std_error;
    long long n = 0;
    std::uint64_t seed = 0;
    long long weight_clips = 0;  // importance weights clipped at kWeightClip
    long long redraws = 0;       // degenerate slice draws rejected
};

// --- single-sample contributions -------------------------------------------

// Likelihood-ratio: score(x) * (phi(x) - baseline).
inline GradContribution lr_contribution(const Distribution& dist,
                                        const TestFunction& phi,
                                        std::span<const double> x,
                                        double baseline = 0.0) {
    if (!(dist.pdf(x) > 0.0))
        throw DomainError("lr_contribution: score undefined where pdf(x) = 0");
    GradContribution c;
    c.per_param = dist.dlogpdf_dtheta(x);
    const double v = phi.value(x) - baseline;
    for (double& s : c.per_param) s *= v;
    return c;
}

// Variance-optimal constant baseline, one entry per parameter:
//   b_opt[i] = sum score_i(x)^2 phi(x) / sum score_i(x)^2 over the samples.
inline std::vector<double> optimal_baseline(const Distribution& dist,
                                            const TestFunction& phi,
                                            const std::vector<Point>& samples) {
    if (samples.size() < 2)
        throw ConfigError("optimal_baseline: need at least 2 samples");
    const int P = dist.n_params();
    std::vector<double> num(P, 0.0), den(P, 0.0);
    for (const Point& x : samples) {
        const std::vector<double> s = dist.dlogpdf_dtheta(x);
        const double v = phi.value(x);
        for (int i = 0; i < P; ++i) {
            num[i] += s[i] * s[i] * v;
            den[i] += s[i] * s[i];
        }
    }
    std::vector<double> b(P);
    for (int i = 0; i < P; ++i) {
        if (den[i] == 0.0)
            throw DomainError("optimal_baseline: all scores zero for parameter " +
                              dist.params().name(i));
        b[i] = num[i] / den[i];
    }
    return b;
}

// Mirrored pair x_+/- = g(+eps) / g(-eps), contributions averaged over the
// pair. Baselines cancel for location parameters and are dropped for scale
// parameters (their score has zero mean, so unbiasedness is unaffected); the
// result is identical for every baseline argument.
inline GradContribution antithetic_lr_pair(const Distribution& dist,
                                           const TestFunction& phi,
                                           std::span<const double> eps,
                                           double /*baseline*/ = 0.0) {
    if (dist.family() != "gaussian" && dist.family() != "diag-gaussian")
        throw UnsupportedError("antithetic_lr_pair: Gaussian distributions only");
    std::vector<double> neg(eps.begin(), eps.end());
    for (double& e : neg) e = -e;
    const Point xp = dist.reparam_g(eps);
    const Point xm = dist.reparam_g(neg);
    const double vp = phi.value(xp);
    const double vm = phi.value(xm);
    const std::vector<double> sp = dist.dlogpdf_dtheta(xp);
    const std::vector<double> sm = dist.dlogpdf_dtheta(xm);
    GradContribution c;
    c.per_param.resize(dist.n_params());
    for (int i = 0; i < dist.n_params(); ++i)
        c.per_param[i] = 0.5 * (sp[i] * vp + sm[i] * vm);
    return c;
}

// Reparameterization / pathwise: grad phi(x) . u_reparam(x, i).
inline GradContribution rp_contribution(const Distribution& dist,
                                        const TestFunction& phi,
                                        std::span<const double> x) {
    if (!dist.has_reparam())
        throw UnsupportedError("rp_contribution: " + dist.family() +
                               " has no reparameterization");
    const std::vector<double> g = phi.grad(x);
    const Point eps = dist.standardize_S(x);
    const Mat dg = dist.dg_dtheta(eps);
    GradContribution c;
    c.per_param.resize(dist.n_params());
    for (int i = 0; i < dist.n_params(); ++i) {
        double s = 0.0;
        for (int j = 0; j < dist.dim(); ++j) s += g[j] * dg.at(j, i);
        c.per_param[i] = s;
    }
    return c;
}

// General flow estimator for a sample x ~ q:
//   (p/q) u_i . grad phi + (1/q) (div(p u_i) + dp/dtheta_i) phi.
// Covers LR (u = 0) and pure pathwise estimators (transport term = 0) as
// special cases. q = nullptr means q = p.
inline GradContribution flow_contribution(const Distribution& p,
                                          const FlowField& flow,
                                          const Distribution* q,
                                          const TestFunction& phi,
                                          std::span<const double> x,
                                          long long* clip_count = nullptr) {
    const double qpdf = q ? q->pdf(x) : p.pdf(x);
    if (!(qpdf > 0.0))
        throw DomainError("flow_contribution: q(x) = 0 at a sampled point");
    const double w = q ? importance_weight(p, *q, x, clip_count) : 1.0;
    const double v = phi.value(x);
    const std::vector<double> g = phi.grad(x);
    const std::vector<double> dp = p.dpdf_dtheta(x);
    GradContribution c;
    c.per_param.resize(flow.n_params);
    for (int i = 0; i < flow.n_params; ++i) {
        const std::vector<double> u = flow.velocity(x, i);
        c.per_param[i] =
            w * dot(u, g) + (div_pu(p, flow, x, i) + dp[i]) / qpdf * v;
    }
    return c;
}

// GO gradient for discrete variables:
//   (-1/p(y)) dQ(y)/dtheta_i (phi(y+1) - phi(y)),
// where dQ(Y)/dtheta = 0 makes the contribution at the truncation boundary
// exactly zero (phi(Y+1) is never needed).
inline GradContribution go_contribution(const TruncatedDiscrete& dist,
                                        const std::function<double(int)>& phi,
                                        int y) {
    const double p = dist.pmf(y);
    if (!(p > 0.0))
        throw DomainError("go_contribution: zero probability at sampled y");
    const int ynext = std::min(y + 1, dist.ymax());
    const double diff = phi(ynext) - phi(y);
    GradContribution c;
    c.per_param.resize(dist.n_params());
    for (int i = 0; i < dist.n_params(); ++i)
        c.per_param[i] = -dist.dQ_dtheta(y, i) / p * diff;
    return c;
}

// Exact 1-D boundary term for a flow estimator when phi has isolated jump
// discontinuities: sum over points c of p(c) u_i(c) jump(c), with
// jump = right limit - left limit. Adding this to the batch mean of the flow
// estimate restores unbiasedness (the in-sample grad-phi term never sees the
// jumps). Points outside the support contribute zero.
inline double jump_correction(const Distribution& dist, const FlowField& flow,
                              const TestFunction& phi, int i) {
    double total = 0.0;
    for (const Discontinuity& d : phi.discontinuities) {
        const double c[1] = {d.location};
        const std::span<const double> cs(c, 1);
        const double p = dist.pdf(cs);
        if (!(p > 0.0)) continue;
        total += p * flow.velocity(cs, i)[0] * d.jump;
    }
    return total;
}

// Uniform moving-boundary derivative w.r.t. mu: the derivative of the slice
// integral depends only on the edge values,
//   d/dmu E[phi] = (phi(mu + delta) - phi(mu - delta)) / (2 delta).
// Only the mu entry is edge-local; the delta entry is left at zero.
inline GradContribution moving_boundary_gradient(const Uniform1D& dist,
                                                 const TestFunction& phi) {
    GradContribution c;
    c.per_param.assign(dist.n_params(), 0.0);
    c.per_param[0] =
        (phi.value1(dist.hi()) - phi.value1(dist.lo())) / (2.0 * dist.delta());
    return c;
}

// --- batch aggregation ------------------------------------------------------

enum class EstimatorKind {
    Lr,
    LrBaseline,         // constant baseline from an independent pilot mean
    LrOptimalBaseline,  // per-parameter b_opt from an independent pilot batch
    LrAntithetic,
    Rp,
    Flow,
    Slice,
    Go,
};

enum class FlowKind { Zero, Reparam, Cdf, Implicit };

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Lr;
    FlowKind flow_kind = FlowKind::Reparam;
    double flow_k = 1.0;  // scaling of the flow field (k = 0 behaves as LR)
    std::shared_ptr<const Distribution> q;  // importance distribution; null = p
};

inline FlowField make_flow(const EstimatorSpec& spec, const Distribution& p) {
    FlowField f;
    switch (spec.flow_kind) {
        case FlowKind::Zero: return zero_flow(p.dim(), p.n_params());
        case FlowKind::Reparam: f = reparam_flow(p); break;
        case FlowKind::Cdf: f = cdf_flow(p); break;
        case FlowKind::Implicit: f = implicit_flow(p); break;
    }
    if (spec.flow_k != 1.0) f = scaled_flow(f, spec.flow_k);
    return f;
}

namespace detail {

inline constexpr long long kPilotSamples = 4096;

inline std::vector<Point> pilot_samples(const Distribution& p, long long n,
                                        std::uint64_t seed) {
    const std::uint64_t pilot_seed = rng::derive_seed(seed, 0xB453);
    const long long m = std::min(n, kPilotSamples);
    std::vector<Point> xs(static_cast<std::size_t>(m));
    for (long long k = 0; k < m; ++k)
        xs[static_cast<std::size_t>(k)] = p.sample(pilot_seed, k);
    return xs;
}

// Reduces a param-major contribution buffer into mean/variance/SE with a
// fixed pairwise tree, independent of how the buffer was filled.
inline GradEstimate reduce(std::vector<double>& buf, int n_params, long long n,
                           std::uint64_t seed) {
    GradEstimate est;
    est.n = n;
    est.seed = seed;
    est.mean.resize(n_params);
    est.variance.assign(n_params, 0.0);
    est.std_error.assign(n_params, 0.0);
    std::vector<double> dev(static_cast<std::size_t>(n));
    for (int i = 0; i < n_params; ++i) {
        const std::span<const double> col(buf.data() + static_cast<std::size_t>(i) * n,
                                          static_cast<std::size_t>(n));
        est.mean[i] = pairwise_sum(col) / static_cast<double>(n);
        if (n > 1) {
            for (long long k = 0; k < n; ++k) {
                const double d = col[static_cast<std::size_t>(k)] - est.mean[i];
                dev[static_cast<std::size_t>(k)] = d * d;
            }
            est.variance[i] = pairwise_sum(dev) / static_cast<double>(n - 1);
            est.std_error[i] =
                std::sqrt(est.variance[i] / static_cast<double>(n));
        }
    }
    return est;
}

}  // namespace detail

// Draws x_k = sample(q, seed, k) and averages per-sample contributions. The
// result is a pure function of (spec, n, seed): per-sample randomness is keyed
// by (seed, index) and the reduction tree is fixed, so worker count cannot
// change any bit of the output. For LrAntithetic, n counts mirrored pairs.
// When phi has declared discontinuities and the flow is not the zero flow,
// the exact jump correction is folded into the mean.
inline GradEstimate batch_estimate(const EstimatorSpec& spec,
                                   const Distribution& p,
                                   const TestFunction& phi, long long n,
                                   std::uint64_t seed) {
    if (n < 1) throw ConfigError("batch_estimate: n must be >= 1");

    const int P = spec.kind == EstimatorKind::Slice ? 1 : p.n_params();
    std::vector<double> buf(static_cast<std::size_t>(P) * n);
    std::atomic<long long> clips{0}, redraws{0};

    // Per-estimator setup that must not depend on the main sample stream.
    double mean_baseline = 0.0;
    std::vector<double> opt_baseline;
    if (spec.kind == EstimatorKind::LrBaseline) {
        const std::vector<Point> xs = detail::pilot_samples(p, n, seed);
        double s = 0.0;
        for (const Point& x : xs) s += phi.value(x);
        mean_baseline = s / static_cast<double>(xs.size());
    } else if (spec.kind == EstimatorKind::LrOptimalBaseline) {
        opt_baseline = optimal_baseline(p, phi, detail::pilot_samples(p, n, seed));
    }

    FlowField flow;
    const bool uses_flow =
        spec.kind == EstimatorKind::Rp || spec.kind == EstimatorKind::Flow;
    if (spec.kind == EstimatorKind::Rp)
        flow = reparam_flow(p);
    else if (spec.kind == EstimatorKind::Flow)
        flow = make_flow(spec, p);

    const LDistribution slice_base = [&] {
        if (spec.kind != EstimatorKind::Slice) return LDistribution(0.0, 1.0);
        const auto* g = dynamic_cast<const Gaussian1D*>(&p);
        if (!g)
            throw ConfigError("slice estimator requires a Gaussian1D base");
        return LDistribution(g->mu(), g->sigma());
    }();

    const Distribution* q = spec.q.get();

    parallel_for(n, [&](long long lo, long long hi) {
        long long local_clips = 0, local_redraws = 0;
        for (long long k = lo; k < hi; ++k) {
            GradContribution c;
            try {
                switch (spec.kind) {
                    case EstimatorKind::Lr:
                        c = lr_contribution(p, phi, p.sample(seed, k));
                        break;
                    case EstimatorKind::LrBaseline:
                        c = lr_contribution(p, phi, p.sample(seed, k),
                                            mean_baseline);
                        break;
                    case EstimatorKind::LrOptimalBaseline: {
                        const Point x = p.sample(seed, k);
                        const std::vector<double> s = p.dlogpdf_dtheta(x);
                        const double v = phi.value(x);
                        c.per_param.resize(P);
                        for (int i = 0; i < P; ++i)
                            c.per_param[i] = s[i] * (v - opt_baseline[i]);
                        break;
                    }
                    case EstimatorKind::LrAntithetic:
                        c = antithetic_lr_pair(p, phi, p.draw_standard(seed, k));
                        break;
                    case EstimatorKind::Rp:
                        c = rp_contribution(p, phi, p.sample(seed, k));
                        break;
                    case EstimatorKind::Flow: {
                        const Point x =
                            q ? q->sample(seed, k) : p.sample(seed, k);
                        c = flow_contribution(p, flow, q, phi, x, &local_clips);
                        break;
                    }
                    case EstimatorKind::Slice: {
                        const SliceDraw d =
                            l_sample(slice_base, seed, k, &local_redraws);
                        c.per_param = {slice_lr_contribution(slice_base, phi, d)};
                        break;
                    }
                    case EstimatorKind::Go:
                        throw ConfigError(
                            "batch_estimate: GO requires the discrete overload");
                }
            } catch (const Error& e) {
                throw Error(std::string(e.what()) + " (sample index " +
                            std::to_string(k) + ")");
            }
            for (int i = 0; i < P; ++i)
                buf[static_cast<std::size_t>(i) * n + k] = c.per_param[i];
        }
        clips += local_clips;
        redraws += local_redraws;
    });

    GradEstimate est = detail::reduce(buf, P, n, seed);
    est.weight_clips = clips.load();
    est.redraws = redraws.load();

    if (uses_flow && !phi.discontinuities.empty()) {
        for (int i = 0; i < P; ++i)
            est.mean[i] += jump_correction(p, flow, phi, i);
    }
    return est;
}

// Discrete batch for the GO estimator.
inline GradEstimate batch_estimate_go(const TruncatedDiscrete& dist,
                                      const std::function<double(int)>& phi,
                                      long long n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("batch_estimate_go: n must be >= 1");
    const int P = dist.n_params();
    std::vector<double> buf(static_cast<std::size_t>(P) * n);
    parallel_for(n, [&](long long lo, long long hi) {
        for (long long k = lo; k < hi; ++k) {
            const GradContribution c =
                go_contribution(dist, phi, dist.sample(seed, k));
            for (int i = 0; i < P; ++i)
                buf[static_cast<std::size_t>(i) * n + k] = c.per_param[i];
        }
    });
    return detail::reduce(buf, P, n, seed);
}

}  // namespace mcgrad
