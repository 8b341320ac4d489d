#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "mcgrad/distributions.hpp"
#include "mcgrad/errors.hpp"
#include "mcgrad/rng.hpp"
#include "mcgrad/test_function.hpp"

namespace mcgrad {

// Importance weights p/q above this value are clipped and counted, never
// silently absorbed into a mean.
inline constexpr double kWeightClip = 1e12;

// Slice-integral importance distribution for a Gaussian base: a
// Maxwell-Boltzmann density reflected about mu with the mass split between
// the two sides.
struct LDistribution {
    double mu = 0.0;
    double sigma = 1.0;

    LDistribution(double m, double s) : mu(m), sigma(s) {
        if (!(s > 0.0)) throw ConfigError("LDistribution: sigma must be > 0");
    }
};

// q_L(x; mu, sigma) = |x-mu|^2 / (sqrt(2 pi) sigma^3) exp(-(x-mu)^2/(2 sigma^2))
inline double l_pdf(const LDistribution& L, double x) {
    const double z = (x - L.mu) / L.sigma;
    return z * z / (std::sqrt(2.0 * std::numbers::pi) * L.sigma) *
           std::exp(-0.5 * z * z);
}

// One draw from the L-distribution, keeping the noise variables so that
// estimators can reuse them without cancellation.
// Invariant: x = mu + sign * sigma * sqrt(-2 ln(eps_h) + eps_x^2).
struct SliceDraw {
    double x = 0.0;
    double eps_x = 0.0;   // standard normal
    double eps_h = 0.0;   // uniform height fraction in (0, 1]
    int sign = 1;         // which edge of the slice
};

// Samples the base point, a height under the density, and an edge; the
// marginal law of x has density l_pdf. Degenerate draws with
// |x - mu| < 1e-300 are rejected and redrawn (counted via *redraws).
inline SliceDraw l_sample(const LDistribution& L, std::uint64_t seed,
                          std::uint64_t index, long long* redraws = nullptr) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        SliceDraw d;
        d.eps_x = rng::normal(seed, index, 0, attempt);
        d.eps_h = rng::uniform01(seed, index, 1, attempt);
        d.sign = rng::sign(seed, index, 2, attempt);
        const double r = std::sqrt(-2.0 * std::log(d.eps_h) + d.eps_x * d.eps_x);
        if (L.sigma * r >= 1e-300) {
            d.x = L.mu + d.sign * L.sigma * r;
            return d;
        }
        if (redraws) ++(*redraws);
    }
}

// Per-draw d/dmu contribution of the slice LR estimator:
//   sgn(x - mu) phi(x) / |x - mu|  computed from the stored noise,
// which equals (dp/dmu) / q_L * phi(x) for the Gaussian base.
inline double slice_lr_contribution(const LDistribution& L,
                                    const TestFunction& phi,
                                    const SliceDraw& d) {
    const double r = std::sqrt(-2.0 * std::log(d.eps_h) + d.eps_x * d.eps_x);
    return d.sign * phi.value1(d.x) / (L.sigma * r);
}

// p(x)/q(x) with the clip policy above. Without a counter, a clip event is a
// hard error so that pathological q choices surface instead of skewing means.
inline double importance_weight(const Distribution& p, const Distribution& q,
                                std::span<const double> x,
                                long long* clip_count = nullptr) {
    const double qp = q.pdf(x);
    if (!(qp > 0.0))
        throw DomainError("importance_weight: q(x) = 0 at a sampled point");
    const double w = p.pdf(x) / qp;
    if (w > kWeightClip) {
        if (!clip_count)
            throw DomainError("importance_weight: weight exceeds clip threshold");
        ++(*clip_count);
        return kWeightClip;
    }
    return w;
}

}  // namespace mcgrad
