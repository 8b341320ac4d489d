#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mcgrad/distributions.hpp"
#include "mcgrad/errors.hpp"
#include "mcgrad/numeric.hpp"

namespace mcgrad {

// Density floor below which velocities are defined as zero, honoring the
// decay condition of the flow estimator (p * u * phi -> 0 at infinity).
inline constexpr double kFlowPdfFloor = 1e-300;

// Per-parameter vector field u_{theta_i}(x): the velocity of probability
// mass at x induced by perturbing parameter i. Factory functions that take a
// Distribution capture it by pointer; the distribution must outlive the flow.
struct FlowField {
    int dim_x = 1;
    int n_params = 0;
    // (x, param index) -> velocity vector of length dim_x.
    std::function<std::vector<double>(std::span<const double>, int)> velocity;
    // Optional analytic divergence of p * u; empty means "use central
    // differences" (see div_pu).
    std::function<double(const Distribution&, std::span<const double>, int)>
        analytic_div_pu;
};

inline FlowField zero_flow(int dim_x, int n_params) {
    FlowField f;
    f.dim_x = dim_x;
    f.n_params = n_params;
    f.velocity = [dim_x](std::span<const double>, int) {
        return std::vector<double>(dim_x, 0.0);
    };
    f.analytic_div_pu = [](const Distribution&, std::span<const double>, int) {
        return 0.0;
    };
    return f;
}

// u_{theta_i}(x) = dg/dtheta_i evaluated at eps = S(x): the flow that moves
// each fixed-probability "box" the way the reparameterization moves it.
inline FlowField reparam_flow(const Distribution& dist) {
    if (!dist.has_reparam())
        throw UnsupportedError("reparam_flow: " + dist.family() +
                               " has no reparameterization");
    const Distribution* d = &dist;
    FlowField f;
    f.dim_x = dist.dim();
    f.n_params = dist.n_params();
    f.velocity = [d](std::span<const double> x, int i) {
        if (d->pdf(x) <= kFlowPdfFloor)
            return std::vector<double>(d->dim(), 0.0);
        const Point eps = d->standardize_S(x);
        return d->dg_dtheta(eps).col(i);
    };
    if (dist.has_reparam_velocity_divergence()) {
        f.analytic_div_pu = [](const Distribution& p, std::span<const double> x,
                               int i) {
            // div(p u) = p * (dlogp/dx . u + div u); the factored form keeps
            // the cancellation against dp/dtheta exact in the tails.
            const Point eps = p.standardize_S(x);
            const std::vector<double> u = p.dg_dtheta(eps).col(i);
            const std::vector<double> s = p.dlogpdf_dx(x);
            return p.pdf(x) * (dot(s, u) + p.reparam_velocity_divergence(x, i));
        };
    }
    return f;
}

// u_{theta_i}(x) = -(dQ/dtheta_i) / p(x) for 1-D distributions. The analytic
// divergence is exact: d/dx (p u) = -d/dx dQ/dtheta_i = -dp/dtheta_i by
// symmetry of mixed partials.
inline FlowField cdf_flow(const Distribution& dist) {
    if (dist.dim() != 1)
        throw UnsupportedError("cdf_flow: 1-D distributions only");
    if (!dist.has_cdf())
        throw UnsupportedError("cdf_flow: " + dist.family() + " has no cdf");
    const Distribution* d = &dist;
    FlowField f;
    f.dim_x = 1;
    f.n_params = dist.n_params();
    f.velocity = [d](std::span<const double> x, int i) {
        const double p = d->pdf(x);
        if (p <= kFlowPdfFloor) {
            if (std::abs(d->dcdf_dtheta(x[0])[i]) > 0.0)
                throw DomainError("cdf_flow: velocity requires division by pdf = 0");
            return std::vector<double>{0.0};
        }
        return std::vector<double>{-d->dcdf_dtheta(x[0])[i] / p};
    };
    f.analytic_div_pu = [](const Distribution& p, std::span<const double> x,
                           int i) { return -p.dpdf_dtheta(x)[i]; };
    return f;
}

// Implicit reparameterization flow u = -(dS/dx)^{-1} dS/dtheta_i. Falls back
// to cdf_flow for 1-D distributions without standardization Jacobians (the
// two coincide in one dimension).
inline FlowField implicit_flow(const Distribution& dist) {
    if (!dist.has_standardization_jacobian()) {
        if (dist.dim() == 1 && dist.has_cdf()) return cdf_flow(dist);
        throw UnsupportedError("implicit_flow: " + dist.family() +
                               " exposes no standardization Jacobians");
    }
    const Distribution* d = &dist;
    FlowField f;
    f.dim_x = dist.dim();
    f.n_params = dist.n_params();
    f.velocity = [d](std::span<const double> x, int i) {
        if (d->pdf(x) <= kFlowPdfFloor)
            return std::vector<double>(d->dim(), 0.0);
        const Mat jx = d->dS_dx(x);
        std::vector<double> rhs = d->dS_dtheta(x).col(i);
        for (double& v : rhs) v = -v;
        return solve_linear(jx, std::move(rhs));
    };
    if (dist.has_reparam_velocity_divergence()) {
        f.analytic_div_pu = [](const Distribution& p, std::span<const double> x,
                               int i) {
            const Mat jx = p.dS_dx(x);
            std::vector<double> rhs = p.dS_dtheta(x).col(i);
            for (double& v : rhs) v = -v;
            const std::vector<double> u = solve_linear(jx, std::move(rhs));
            const std::vector<double> s = p.dlogpdf_dx(x);
            return p.pdf(x) * (dot(s, u) + p.reparam_velocity_divergence(x, i));
        };
    }
    return f;
}

inline FlowField scaled_flow(const FlowField& base, double k) {
    FlowField f;
    f.dim_x = base.dim_x;
    f.n_params = base.n_params;
    auto vel = base.velocity;
    f.velocity = [vel, k](std::span<const double> x, int i) {
        std::vector<double> u = vel(x, i);
        for (double& v : u) v *= k;
        return u;
    };
    if (base.analytic_div_pu) {
        auto div = base.analytic_div_pu;
        f.analytic_div_pu = [div, k](const Distribution& p,
                                     std::span<const double> x, int i) {
            return k * div(p, x, i);
        };
    }
    return f;
}

inline FlowField sum_flow(const FlowField& a, const FlowField& b) {
    if (a.dim_x != b.dim_x || a.n_params != b.n_params)
        throw ConfigError("sum_flow: dimension mismatch");
    FlowField f;
    f.dim_x = a.dim_x;
    f.n_params = a.n_params;
    auto va = a.velocity, vb = b.velocity;
    f.velocity = [va, vb](std::span<const double> x, int i) {
        std::vector<double> u = va(x, i);
        const std::vector<double> w = vb(x, i);
        for (std::size_t j = 0; j < u.size(); ++j) u[j] += w[j];
        return u;
    };
    if (a.analytic_div_pu && b.analytic_div_pu) {
        auto da = a.analytic_div_pu, db = b.analytic_div_pu;
        f.analytic_div_pu = [da, db](const Distribution& p,
                                     std::span<const double> x, int i) {
            return da(p, x, i) + db(p, x, i);
        };
    }
    return f;
}

// Divergence of the probability mass flow rate p(x) u_{theta_i}(x). Uses the
// flow's analytic divergence when present, otherwise central differences per
// spatial dimension with step h_j = cbrt(machine eps) * max(1, |x_j|).
inline double div_pu(const Distribution& dist, const FlowField& flow,
                     std::span<const double> x, int i) {
    if (flow.analytic_div_pu) return flow.analytic_div_pu(dist, x, i);
    double total = 0.0;
    std::vector<double> xt(x.begin(), x.end());
    for (int j = 0; j < flow.dim_x; ++j) {
        const double xj = x[j];
        auto fj = [&](double t) {
            xt[j] = t;
            const std::span<const double> xs(xt);
            const double val = dist.pdf(xs) * flow.velocity(xs, i)[j];
            xt[j] = xj;
            return val;
        };
        total += central_diff(fj, xj, xj);
    }
    return total;
}

// Residual of the transport equation div(p u_{theta_i}) + dp/dtheta_i.
// Zero identifies pure pathwise flows.
inline double transport_residual(const Distribution& dist, const FlowField& flow,
                                 std::span<const double> x, int i) {
    return div_pu(dist, flow, x, i) + dist.dpdf_dtheta(x)[i];
}

}  // namespace mcgrad
