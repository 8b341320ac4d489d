#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mcgrad/bench.hpp"
#include "mcgrad/oracle.hpp"

using namespace mcgrad;

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(GridSpec(1.0, 0.0, 101), ConfigError);
    CHECK_THROWS_AS(GridSpec(0.0, 1.0, 100), ConfigError);
    CHECK_THROWS_AS(GridSpec(0.0, 1.0, 1), ConfigError);
}

TEST_CASE("quadrature expectation") {
    const Gaussian1D g(0.5, 1.3);
    CHECK_THAT(quadrature_expectation(g, phi_registry("quadratic"), default_grid(g)),
               Catch::Matchers::WithinAbs(0.5 * 0.5 + 1.3 * 1.3, 1e-9));

    TestFunction one;
    one.name = "one";
    one.value = [](std::span<const double>) { return 1.0; };
    one.grad = [](std::span<const double>) { return std::vector<double>{0.0}; };
    CHECK_THAT(quadrature_expectation(g, one, default_grid(g)),
               Catch::Matchers::WithinAbs(1.0, 1e-10));

    const Uniform1D u(1.0, 0.5);
    CHECK_THAT(quadrature_expectation(u, phi_registry("cubic"), default_grid(u)),
               Catch::Matchers::WithinAbs(1.25, 1e-12));
}

TEST_CASE("quadrature gradient with cross-check") {
    const Gaussian1D g(0.5, 1.3);
    const auto grad = quadrature_gradient(g, phi_registry("quadratic"), default_grid(g));
    CHECK_THAT(grad[0], Catch::Matchers::WithinAbs(1.0, 1e-8));
    CHECK_THAT(grad[1], Catch::Matchers::WithinAbs(2.6, 1e-8));

    const Gaussian1D g2(0.3, 1.0);
    const auto gs = quadrature_gradient(g2, phi_registry("step(0)"), default_grid(g2));
    CHECK_THAT(gs[0], Catch::Matchers::WithinAbs(0.38138781546052414, 1e-6));

    TestFunction constant;
    constant.name = "const";
    constant.value = [](std::span<const double>) { return 4.2; };
    constant.grad = [](std::span<const double>) { return std::vector<double>{0.0}; };
    const auto gc = quadrature_gradient(g, constant, default_grid(g));
    CHECK_THAT(gc[0], Catch::Matchers::WithinAbs(0.0, 1e-10));
    CHECK_THAT(gc[1], Catch::Matchers::WithinAbs(0.0, 1e-10));
}

TEST_CASE("discontinuity splitting matches the closed form") {
    // E[step(0)] for N(mu, 1) is 1 - Phi(-mu) = Phi(mu).
    const Gaussian1D g(0.3, 1.0);
    const double expected = 0.5 * std::erfc(-0.3 / std::numbers::sqrt2);
    CHECK_THAT(quadrature_expectation(g, phi_registry("step(0)"), default_grid(g)),
               Catch::Matchers::WithinAbs(expected, 1e-8));
}

TEST_CASE("uniform gradient includes the boundary motion") {
    const Uniform1D u(1.0, 0.5);
    // E[x^3] = mu^3 + mu delta^2 over the slab, so d/dmu = 3 mu^2 + delta^2
    // and d/ddelta = 2 mu delta.
    const auto grad = quadrature_gradient(u, phi_registry("cubic"), default_grid(u));
    CHECK_THAT(grad[0], Catch::Matchers::WithinAbs(3.25, 1e-8));
    CHECK_THAT(grad[1], Catch::Matchers::WithinAbs(1.0, 1e-8));
}

TEST_CASE("boxes discretizations converge to quadrature") {
    const Gaussian1D g(0.5, 1.3);
    const TestFunction quad = phi_registry("quadratic");
    const auto truth = quadrature_gradient(g, quad, default_grid(g));

    const auto lr = boxes_lr_gradient(g, quad, 10000, 1e-6, default_grid(g));
    const auto rp = boxes_rp_gradient(g, quad, 10000, 1e-6);
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(lr[i] - truth[i]) < 1e-3);
        CHECK(std::abs(rp[i] - truth[i]) < 1e-3);
    }

    TestFunction constant;
    constant.name = "const";
    constant.value = [](std::span<const double>) { return 2.0; };
    constant.grad = [](std::span<const double>) { return std::vector<double>{0.0}; };
    const auto lrc = boxes_lr_gradient(g, constant, 10000, 1e-6, default_grid(g));
    CHECK(std::abs(lrc[0]) < 1e-6);  // mass conservation
    const auto rpc = boxes_rp_gradient(g, constant, 10000, 1e-6);
    CHECK(rpc[0] == 0.0);
    CHECK(rpc[1] == 0.0);

    // phi = x, d/dmu: every box moves identically, so the answer is 1.
    const auto rpl = boxes_rp_gradient(g, phi_registry("linear"), 10000, 1e-6);
    CHECK_THAT(rpl[0], Catch::Matchers::WithinAbs(1.0, 1e-6));

    // Doubling the boxes reduces the discretization error on smooth phi.
    const auto coarse = boxes_lr_gradient(g, quad, 1000, 1e-6, default_grid(g));
    const auto fine = boxes_lr_gradient(g, quad, 2000, 1e-6, default_grid(g));
    CHECK(std::abs(fine[1] - truth[1]) < std::abs(coarse[1] - truth[1]));
}

TEST_CASE("discrete brute-force gradient") {
    const TruncatedDiscrete d = two_point(0.3);
    auto phi = [](int y) { return y == 0 ? 2.0 : 5.0; };
    const auto g = discrete_bruteforce_gradient(d, phi);
    CHECK_THAT(g[0], Catch::Matchers::WithinRel(-3.0, 1e-10));

    const TruncatedDiscrete pois = truncated_poisson(3.0, 30);
    auto ident = [](int y) { return static_cast<double>(y); };
    CHECK_NOTHROW(discrete_bruteforce_gradient(pois, ident));

    auto constant = [](int) { return 7.0; };
    CHECK(std::abs(discrete_bruteforce_gradient(pois, constant)[0]) < 1e-12);
}

TEST_CASE("variance report basics") {
    const Gaussian1D base(0.0, 1.3);
    EstimatorSpec slice;
    slice.kind = EstimatorKind::Slice;
    // Zero-variance case: slice estimator on phi(x) = x - mu with mu = 0.
    const VarianceReport vr =
        variance_report(slice, base, phi_registry("linear"), 100, 30, 9);
    CHECK(vr.variance[0] == 0.0);
    CHECK(vr.ci_lo[0] == 0.0);
    CHECK(vr.ci_hi[0] == 0.0);

    // Antithetic pairs on an even phi have zero location variance.
    const Gaussian1D g(0.5, 1.3);
    TestFunction even;
    even.name = "even";
    even.value = [](std::span<const double> x) {
        return (x[0] - 0.5) * (x[0] - 0.5);
    };
    even.grad = [](std::span<const double> x) {
        return std::vector<double>{2 * (x[0] - 0.5)};
    };
    EstimatorSpec anti;
    anti.kind = EstimatorKind::LrAntithetic;
    const VarianceReport va = variance_report(anti, g, even, 100, 30, 10);
    CHECK(va.variance[0] == 0.0);
    CHECK(va.ci_hi[0] == 0.0);

    CHECK_THROWS_AS(variance_report({}, g, even, 100, 10, 1), ConfigError);
}

TEST_CASE("cross-check passes for every registry pair") {
    const Gaussian1D g(0.5, 1.3);
    for (const char* name :
         {"linear", "quadratic", "cubic", "sin", "quadsin(0.1,3)", "step(0)"})
        CHECK_NOTHROW(quadrature_gradient(g, phi_registry(name), default_grid(g)));
    const Uniform1D u(1.0, 0.5);
    for (const char* name : {"linear", "quadratic", "cubic", "sin"})
        CHECK_NOTHROW(quadrature_gradient(u, phi_registry(name), default_grid(u)));
}
