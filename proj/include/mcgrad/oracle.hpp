#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <numbers>
#include <vector>

#include "mcgrad/discrete.hpp"
#include "mcgrad/distributions.hpp"
#include "mcgrad/errors.hpp"
#include "mcgrad/estimators.hpp"
#include "mcgrad/test_function.hpp"

namespace mcgrad {

// Composite-Simpson grid. n_points must be odd.
struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int n_points = 16385;

    GridSpec() = default;
    GridSpec(double l, double h, int n) : lo(l), hi(h), n_points(n) {
        if (!(lo < hi)) throw ConfigError("GridSpec: lo must be < hi");
        if (n_points < 3 || n_points % 2 == 0)
            throw ConfigError("GridSpec: n_points must be odd and >= 3");
    }
};

// mu +- 12 sigma for Gaussian bases (tail mass < 1e-30); exactly the support
// for bounded distributions.
inline GridSpec default_grid(const Distribution& dist, int n_points = 16385) {
    if (dist.dim() != 1)
        throw UnsupportedError("default_grid: 1-D distributions only");
    if (dist.bounded_support()) {
        const auto [lo, hi] = dist.support();
        return GridSpec(lo, hi, n_points);
    }
    const auto* g = dynamic_cast<const Gaussian1D*>(&dist);
    if (!g)
        throw UnsupportedError("default_grid: no default for " + dist.family());
    return GridSpec(g->mu() - 12.0 * g->sigma(), g->mu() + 12.0 * g->sigma(),
                    n_points);
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int m) {
    const double h = (b - a) / (m - 1);
    double s = f(a) + f(b);
    for (int i = 1; i < m - 1; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Interior split points of the integration domain: phi discontinuities plus
// nothing else (support edges are grid endpoints by construction).
inline std::vector<double> split_points(const TestFunction& phi, double lo,
                                        double hi) {
    std::vector<double> cuts;
    for (const Discontinuity& d : phi.discontinuities)
        if (d.location > lo && d.location < hi) cuts.push_back(d.location);
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

// Piecewise Simpson of f over [lo, hi], split at cut points; at piece
// endpoints that are cuts (or marked edges) f is evaluated half an ulp
// inside the piece, giving the one-sided limit for any piecewise definition.
inline double piecewise_simpson(const std::function<double(double)>& f,
                                double lo, double hi,
                                const std::vector<double>& cuts, int m,
                                bool nudge_outer_edges) {
    std::vector<double> edges{lo};
    edges.insert(edges.end(), cuts.begin(), cuts.end());
    edges.push_back(hi);
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        const bool nudge_a = p > 0 || nudge_outer_edges;
        const bool nudge_b = p + 2 < edges.size() || nudge_outer_edges;
        auto fp = [&](double x) {
            if (nudge_a && x == a) x = std::nextafter(a, b);
            if (nudge_b && x == b) x = std::nextafter(b, a);
            return f(x);
        };
        total += simpson(fp, a, b, m);
    }
    return total;
}

inline void check_coverage(const Distribution& dist, const GridSpec& grid) {
    const double tiny = 1e-9 * (grid.hi - grid.lo);
    if (dist.pdf1(grid.lo - tiny) > 1e-10 || dist.pdf1(grid.hi + tiny) > 1e-10)
        std::cerr << "mcgrad: warning: quadrature grid [" << grid.lo << ", "
                  << grid.hi << "] may not cover the mass of " << dist.family()
                  << " (boundary density > 1e-10)\n";
}

inline GridSpec grid_for(const Distribution& dist, const GridSpec& grid) {
    // Bounded supports move with theta, so finite-difference evaluations of a
    // perturbed distribution must re-derive the grid from its support.
    if (dist.bounded_support()) return default_grid(dist, grid.n_points);
    return grid;
}

}  // namespace detail

// Deterministic ground truth for E_p[phi] by composite Simpson; the domain is
// split at every declared discontinuity of phi and integrated piecewise.
inline double quadrature_expectation(const Distribution& dist,
                                     const TestFunction& phi,
                                     const GridSpec& grid) {
    if (dist.dim() != 1)
        throw UnsupportedError("quadrature_expectation: 1-D only");
    detail::check_coverage(dist, grid);
    const std::vector<double> cuts = detail::split_points(phi, grid.lo, grid.hi);
    auto f = [&](double x) { return dist.pdf1(x) * phi.value1(x); };
    return detail::piecewise_simpson(f, grid.lo, grid.hi, cuts, grid.n_points,
                                     dist.bounded_support());
}

// Ground-truth gradient: per-parameter Simpson integral of dpdf_dtheta * phi
// (split at discontinuities), plus the boundary-motion term for
// distributions whose support edges move with theta. Cross-checked against a
// Richardson-refined central finite difference of quadrature_expectation;
// disagreement beyond 1e-6 is an error.
inline std::vector<double> quadrature_gradient(const Distribution& dist,
                                               const TestFunction& phi,
                                               const GridSpec& grid) {
    if (dist.dim() != 1)
        throw UnsupportedError("quadrature_gradient: 1-D only");
    const int P = dist.n_params();
    const std::vector<double> cuts = detail::split_points(phi, grid.lo, grid.hi);
    std::vector<double> out(P, 0.0);
    for (int i = 0; i < P; ++i) {
        auto f = [&](double x) {
            const double p[1] = {x};
            return dist.dpdf_dtheta(std::span<const double>(p, 1))[i] *
                   phi.value1(x);
        };
        out[i] = detail::piecewise_simpson(f, grid.lo, grid.hi, cuts,
                                           grid.n_points,
                                           dist.bounded_support());
        if (dist.bounded_support()) {
            const auto [lo, hi] = dist.support();
            const auto [dlo, dhi] = dist.dsupport_dtheta(i);
            const double p_hi = dist.pdf1(std::nextafter(hi, lo));
            const double p_lo = dist.pdf1(std::nextafter(lo, hi));
            out[i] += phi.value1(hi) * p_hi * dhi - phi.value1(lo) * p_lo * dlo;
        }
    }

    // Finite-difference cross-check in theta, step 1e-5 halved once.
    for (int i = 0; i < P; ++i) {
        auto expectation_at = [&](double ti) {
            ParamVector pv = dist.params();
            pv.value(i) = ti;
            const auto moved = dist.with_params(pv);
            return quadrature_expectation(*moved, phi,
                                          detail::grid_for(*moved, grid));
        };
        const double t0 = dist.params().value(i);
        const double fd1 = central_diff_h(expectation_at, t0, 1e-5);
        const double fd2 = central_diff_h(expectation_at, t0, 5e-6);
        const double tol = 1e-6 * std::max(1.0, std::abs(out[i]));
        if (std::abs(fd1 - fd2) > tol || std::abs(out[i] - fd2) > tol)
            throw CrossCheckError(
                "quadrature_gradient: finite-difference cross-check failed for "
                "parameter " + dist.params().name(i) +
                " (analytic " + std::to_string(out[i]) + ", fd " +
                std::to_string(fd2) + ")");
    }
    return out;
}

// "Probability boxes" LR discretization: fixed cells, measure how the mass in
// each cell changes as theta is perturbed.
//   sum_i dx (p(x_i; theta + dtheta e_j) - p(x_i; theta)) / dtheta phi(x_i)
inline std::vector<double> boxes_lr_gradient(const Distribution& dist,
                                             const TestFunction& phi,
                                             int n_boxes, double dtheta,
                                             const GridSpec& grid) {
    if (n_boxes < 10) throw ConfigError("boxes_lr_gradient: n_boxes >= 10");
    if (!(dtheta > 0.0)) throw ConfigError("boxes_lr_gradient: dtheta > 0");
    const int P = dist.n_params();
    const double w = (grid.hi - grid.lo) / n_boxes;
    std::vector<double> out(P, 0.0);
    for (int j = 0; j < P; ++j) {
        ParamVector pv = dist.params();
        pv.value(j) += dtheta;
        const auto moved = dist.with_params(pv);
        double s = 0.0;
        for (int i = 0; i < n_boxes; ++i) {
            const double x = grid.lo + (i + 0.5) * w;
            s += w * (moved->pdf1(x) - dist.pdf1(x)) / dtheta * phi.value1(x);
        }
        out[j] = s;
    }
    return out;
}

// "Probability boxes" RP discretization: cells of fixed probability mass
// indexed in the standard epsilon space, measure how phi at each moving cell
// changes.
//   sum_i P_i (phi(g(eps_i; theta + dtheta e_j)) - phi(g(eps_i; theta))) / dtheta
inline std::vector<double> boxes_rp_gradient(const Distribution& dist,
                                             const TestFunction& phi,
                                             int n_boxes, double dtheta) {
    if (n_boxes < 10) throw ConfigError("boxes_rp_gradient: n_boxes >= 10");
    if (!(dtheta > 0.0)) throw ConfigError("boxes_rp_gradient: dtheta > 0");
    if (dist.dim() != 1 || !dist.has_reparam())
        throw UnsupportedError("boxes_rp_gradient: reparameterizable 1-D only");

    double eps_lo, eps_hi;
    std::function<double(double)> std_pdf;
    if (dist.family() == "gaussian") {
        eps_lo = -12.0;
        eps_hi = 12.0;
        std_pdf = [](double e) {
            return std::exp(-0.5 * e * e) / std::sqrt(2.0 * std::numbers::pi);
        };
    } else if (dist.family() == "uniform") {
        eps_lo = -1.0;
        eps_hi = 1.0;
        std_pdf = [](double) { return 0.5; };
    } else {
        throw UnsupportedError("boxes_rp_gradient: no standard density for " +
                               dist.family());
    }

    const int P = dist.n_params();
    const double de = (eps_hi - eps_lo) / n_boxes;
    std::vector<double> out(P, 0.0);
    for (int j = 0; j < P; ++j) {
        ParamVector pv = dist.params();
        pv.value(j) += dtheta;
        const auto moved = dist.with_params(pv);
        double s = 0.0;
        for (int i = 0; i < n_boxes; ++i) {
            const double e[1] = {eps_lo + (i + 0.5) * de};
            const std::span<const double> es(e, 1);
            const double mass = std_pdf(e[0]) * de;
            s += mass *
                 (phi.value1(moved->reparam_g(es)[0]) -
                  phi.value1(dist.reparam_g(es)[0])) /
                 dtheta;
        }
        out[j] = s;
    }
    return out;
}

// Exact finite sum sum_y dpmf_dtheta(y, i) phi(y), cross-checked against a
// finite difference of sum_y pmf phi in theta.
inline std::vector<double> discrete_bruteforce_gradient(
    const TruncatedDiscrete& dist, const std::function<double(int)>& phi) {
    const int P = dist.n_params();
    std::vector<double> out(P, 0.0);
    for (int i = 0; i < P; ++i)
        for (int y = 0; y <= dist.ymax(); ++y)
            out[i] += dist.dpmf_dtheta(y, i) * phi(y);

    for (int i = 0; i < P; ++i) {
        auto expectation_at = [&](double ti) {
            ParamVector pv = dist.params();
            pv.value(i) = ti;
            const TruncatedDiscrete moved = dist.with_params(pv);
            double s = 0.0;
            for (int y = 0; y <= moved.ymax(); ++y) s += moved.pmf(y) * phi(y);
            return s;
        };
        const double fd = central_diff_h(expectation_at, dist.params().value(i), 1e-6);
        if (std::abs(out[i] - fd) > 1e-6 * std::max(1.0, std::abs(out[i])))
            throw CrossCheckError(
                "discrete_bruteforce_gradient: finite-difference cross-check "
                "failed for parameter " + dist.params().name(i));
    }
    return out;
}

// --- variance estimation ----------------------------------------------------

struct VarianceReport {
    std::vector<double> variance;  // pooled per-contribution variance
    std::vector<double> ci_lo, ci_hi;  // 99% chi-square interval
    long long n = 0;
    int reps = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline constexpr double kZ995 = 2.5758293035489007;  // Phi^-1(0.995)

// Wilson-Hilferty approximation, accurate to ~1e-4 relative at the degrees of
// freedom used here (reps * (n - 1) >> 100).
inline double chi2_quantile(double z, double df) {
    const double a = 2.0 / (9.0 * df);
    const double c = 1.0 - a + z * std::sqrt(a);
    return df * c * c * c;
}

}  // namespace detail

// Runs `reps` independent batches (per-replicate seeds derived from
// (seed, rep)) and pools the per-parameter contribution variance;
// deterministic given seed.
inline VarianceReport variance_report(const EstimatorSpec& spec,
                                      const Distribution& dist,
                                      const TestFunction& phi, long long n,
                                      int reps, std::uint64_t seed) {
    if (reps < 30) throw ConfigError("variance_report: reps must be >= 30");
    if (n < 2) throw ConfigError("variance_report: n must be >= 2");
    VarianceReport rep;
    rep.n = n;
    rep.reps = reps;
    rep.seed = seed;
    std::vector<double> ss;
    for (int r = 0; r < reps; ++r) {
        const GradEstimate est =
            batch_estimate(spec, dist, phi, n, rng::derive_seed(seed, r));
        if (r == 0) ss.assign(est.variance.size(), 0.0);
        for (std::size_t i = 0; i < est.variance.size(); ++i)
            ss[i] += (n - 1) * est.variance[i];
    }
    const double df = static_cast<double>(reps) * (n - 1);
    rep.variance.resize(ss.size());
    rep.ci_lo.resize(ss.size());
    rep.ci_hi.resize(ss.size());
    for (std::size_t i = 0; i < ss.size(); ++i) {
        rep.variance[i] = ss[i] / df;
        rep.ci_lo[i] = ss[i] / detail::chi2_quantile(detail::kZ995, df);
        rep.ci_hi[i] = ss[i] / detail::chi2_quantile(-detail::kZ995, df);
    }
    return rep;
}

}  // namespace mcgrad
