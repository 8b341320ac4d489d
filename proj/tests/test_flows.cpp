#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mcgrad/distributions.hpp"
#include "mcgrad/flows.hpp"

using namespace mcgrad;

namespace {
std::vector<double> pt(double x) { return {x}; }

FlowField numeric_only(FlowField f) {
    f.analytic_div_pu = nullptr;
    return f;
}
}  // namespace

TEST_CASE("zero flow") {
    const Gaussian1D g(0, 1);
    const FlowField f = zero_flow(1, 2);
    CHECK(f.velocity(pt(1.7), 0)[0] == 0.0);
    CHECK(f.velocity(pt(-3.0), 1)[0] == 0.0);
    CHECK(div_pu(g, f, pt(0.4), 0) == 0.0);
    CHECK(div_pu(g, f, pt(0.4), 1) == 0.0);
}

TEST_CASE("reparam flow velocities") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField f = reparam_flow(g);
    for (double x : {-2.0, 0.5, 3.1}) {
        CHECK(f.velocity(pt(x), 0)[0] == 1.0);
        CHECK_THAT(f.velocity(pt(x), 1)[0],
                   Catch::Matchers::WithinRel((x - 0.5) / 1.3, 1e-14));
    }
    const Uniform1D u(0.0, 1.0);
    CHECK(reparam_flow(u).velocity(pt(0.3), 0)[0] == 1.0);

    const DiagonalGaussian dg({0, 0, 0}, {1, 1, 1});
    const FlowField fd = reparam_flow(dg);
    const std::vector<double> x{0.4, -0.2, 1.1};
    const std::vector<double> u_mu1 = fd.velocity(x, 1);
    CHECK(u_mu1[0] == 0.0);
    CHECK(u_mu1[1] == 1.0);
    CHECK(u_mu1[2] == 0.0);
}

TEST_CASE("cdf flow equals the reparam flow for Gaussians") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField fc = cdf_flow(g);
    const FlowField fr = reparam_flow(g);
    for (double x : {-1.0, 0.2, 0.5, 2.7}) {
        CHECK_THAT(fc.velocity(pt(x), 0)[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
        CHECK_THAT(fc.velocity(pt(x), 1)[0],
                   Catch::Matchers::WithinAbs(fr.velocity(pt(x), 1)[0], 1e-8));
    }
    // Independent check of the sigma velocity: central difference of the cdf
    // in sigma divided by the density.
    const double x = 1.1, h = 1e-6;
    const double dq =
        (Gaussian1D(0.5, 1.3 + h).cdf(x) - Gaussian1D(0.5, 1.3 - h).cdf(x)) /
        (2 * h);
    CHECK_THAT(fc.velocity(pt(x), 1)[0],
               Catch::Matchers::WithinAbs(-dq / g.pdf1(x), 1e-6));

    const Uniform1D u(0.0, 1.0);
    CHECK_THAT(cdf_flow(u).velocity(pt(0.3), 0)[0],
               Catch::Matchers::WithinRel(1.0, 1e-12));
}

TEST_CASE("implicit flow equals the reparam flow") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField fi = implicit_flow(g);
    const FlowField fr = reparam_flow(g);
    CHECK_THAT(fi.velocity(pt(1.7), 0)[0], Catch::Matchers::WithinAbs(1.0, 1e-12));
    for (int k = 0; k < 100; ++k) {
        const Point x = g.sample(12, k);
        for (int i = 0; i < 2; ++i)
            CHECK_THAT(fi.velocity(x, i)[0],
                       Catch::Matchers::WithinAbs(fr.velocity(x, i)[0], 1e-10));
    }

    const DiagonalGaussian dg({0.1, -0.4}, {0.5, 2.0});
    const FlowField fdi = implicit_flow(dg);
    const FlowField fdr = reparam_flow(dg);
    for (int k = 0; k < 50; ++k) {
        const Point x = dg.sample(13, k);
        for (int i = 0; i < dg.n_params(); ++i) {
            const auto a = fdi.velocity(x, i);
            const auto b = fdr.velocity(x, i);
            for (int j = 0; j < 2; ++j)
                CHECK_THAT(a[j], Catch::Matchers::WithinAbs(b[j], 1e-10));
        }
    }
}

TEST_CASE("scaled and summed flows") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField base = reparam_flow(g);
    const FlowField k0 = scaled_flow(base, 0.0);
    const FlowField k1 = scaled_flow(base, 1.0);
    const FlowField kh = scaled_flow(base, 0.5);
    CHECK(k0.velocity(pt(1.0), 1)[0] == 0.0);
    CHECK(k1.velocity(pt(1.0), 1)[0] == base.velocity(pt(1.0), 1)[0]);

    // div(p u_k) = -k dp/dtheta for the weighted reparam flow.
    for (double x : {-0.7, 0.5, 1.9})
        for (int i = 0; i < 2; ++i)
            CHECK_THAT(div_pu(g, kh, pt(x), i),
                       Catch::Matchers::WithinAbs(-0.5 * g.dpdf_dtheta(pt(x))[i], 1e-12));

    CHECK_THROWS_AS(sum_flow(zero_flow(1, 2), zero_flow(2, 4)), ConfigError);
    const FlowField s = sum_flow(kh, kh);
    CHECK_THAT(s.velocity(pt(1.0), 1)[0],
               Catch::Matchers::WithinRel(base.velocity(pt(1.0), 1)[0], 1e-14));
}

TEST_CASE("divergence of the mu flow is the spatial density gradient") {
    const Gaussian1D g(0, 1);
    const FlowField f = reparam_flow(g);
    // d/dx of the standard normal pdf at 1.3; the frozen value is
    // -1.3 * pdf(1.3), cross-checked by finite differences below.
    const double expected = -0.22277916966214956;
    CHECK_THAT(div_pu(g, f, pt(1.3), 0), Catch::Matchers::WithinAbs(expected, 1e-12));
    CHECK_THAT(div_pu(g, numeric_only(f), pt(1.3), 0),
               Catch::Matchers::WithinAbs(expected, 1e-8));
    const double h = 1e-6;
    CHECK_THAT((g.pdf1(1.3 + h) - g.pdf1(1.3 - h)) / (2 * h),
               Catch::Matchers::WithinAbs(expected, 1e-8));
}

TEST_CASE("numeric and analytic divergences agree at random points") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField f = reparam_flow(g);
    const FlowField fn = numeric_only(f);
    for (int k = 0; k < 100; ++k) {
        const Point x = g.sample(21, k);
        for (int i = 0; i < 2; ++i) {
            const double a = div_pu(g, f, x, i);
            const double n = div_pu(g, fn, x, i);
            CHECK_THAT(n, Catch::Matchers::WithinAbs(a, 1e-4 * (1 + std::abs(a))));
        }
    }
}

TEST_CASE("transport residual vanishes for pathwise flows") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField flows[] = {reparam_flow(g), implicit_flow(g), cdf_flow(g)};
    for (const FlowField& f : flows) {
        const FlowField fn = numeric_only(f);
        for (int i = 0; i < 2; ++i) {
            for (int k = 0; k <= 100; ++k) {
                const double x = 0.5 + 1.3 * (-5.0 + 0.1 * k);
                CHECK(std::abs(transport_residual(g, f, pt(x), i)) < 1e-8);
                CHECK(std::abs(transport_residual(g, fn, pt(x), i)) < 1e-4);
            }
        }
    }
}

TEST_CASE("zero flow residual is the parameter density derivative") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField f = zero_flow(1, 2);
    for (double x : {-0.3, 0.5, 2.2})
        for (int i = 0; i < 2; ++i)
            CHECK(transport_residual(g, f, pt(x), i) == g.dpdf_dtheta(pt(x))[i]);
}

TEST_CASE("divergence is additive over summed flows") {
    const Gaussian1D g(0.5, 1.3);
    const FlowField a = scaled_flow(reparam_flow(g), 0.3);
    const FlowField b = cdf_flow(g);
    const FlowField ab = sum_flow(a, b);
    const FlowField an = numeric_only(a), bn = numeric_only(b),
                    abn = numeric_only(ab);
    for (int k = 0; k < 20; ++k) {
        const Point x = g.sample(34, k);
        for (int i = 0; i < 2; ++i) {
            CHECK_THAT(div_pu(g, ab, x, i),
                       Catch::Matchers::WithinAbs(
                           div_pu(g, a, x, i) + div_pu(g, b, x, i), 1e-12));
            CHECK_THAT(div_pu(g, abn, x, i),
                       Catch::Matchers::WithinAbs(
                           div_pu(g, an, x, i) + div_pu(g, bn, x, i), 1e-6));
        }
    }
}

TEST_CASE("uniform transport holds in the interior") {
    const Uniform1D u(1.0, 0.5);
    const FlowField f = reparam_flow(u);
    for (double x : {0.6, 1.0, 1.4})
        for (int i = 0; i < 2; ++i)
            CHECK(std::abs(transport_residual(u, f, pt(x), i)) < 1e-12);
}

TEST_CASE("implicit flow falls back to the cdf flow in 1-D") {
    // A 1-D distribution with a cdf but no standardization Jacobians.
    struct Wrapped final : Gaussian1D {
        using Gaussian1D::Gaussian1D;
        bool has_standardization_jacobian() const override { return false; }
    } w(0.2, 0.9);
    const FlowField f = implicit_flow(w);
    const FlowField fr = reparam_flow(w);
    for (double x : {-0.5, 0.2, 1.3})
        for (int i = 0; i < 2; ++i)
            CHECK_THAT(f.velocity(pt(x), i)[0],
                       Catch::Matchers::WithinAbs(fr.velocity(pt(x), i)[0], 1e-8));
}
