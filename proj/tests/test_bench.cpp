#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <sstream>

#include "mcgrad/bench.hpp"

using namespace mcgrad;

TEST_CASE("phi registry entries") {
    const TestFunction quad = phi_registry("quadratic");
    CHECK(quad.value1(3.0) == 9.0);
    CHECK(quad.grad1(3.0) == 6.0);

    const TestFunction step = phi_registry("step(0)");
    REQUIRE(step.discontinuities.size() == 1);
    CHECK(step.discontinuities[0].location == 0.0);
    CHECK(step.discontinuities[0].jump == 1.0);
    CHECK(step.value1(-0.1) == 0.0);
    CHECK(step.value1(0.1) == 1.0);

    const TestFunction qs = phi_registry("quadsin(0.1,6)");
    CHECK_THAT(qs.grad1(0.7),
               Catch::Matchers::WithinRel(2 * 0.7 + 0.1 * 6 * std::cos(6 * 0.7),
                                          1e-12));

    const TestFunction ss = phi_registry("sumsq");
    const std::vector<double> x{1.0, 2.0, 3.0};
    CHECK(ss.value(x) == 14.0);
    CHECK(ss.grad(x) == std::vector<double>{2.0, 4.0, 6.0});

    CHECK_THROWS_AS(phi_registry("nope"), ConfigError);
    CHECK_THROWS_AS(phi_registry("quadsin(1)"), ConfigError);
}

TEST_CASE("run_estimate produces calibrated z-scores") {
    RunConfig cfg;
    cfg.estimator = "lr";
    cfg.mu = {0.5};
    cfg.sigma = {1.3};
    cfg.phi = "quadratic";
    cfg.n = 200000;
    cfg.seed = 42;
    const BenchmarkReport report = run_estimate(cfg);
    REQUIRE(report.rows.size() == 2);
    for (const ReportRow& row : report.rows) {
        CHECK(std::abs(row.z_score) < 4.0);
        CHECK(row.n == 200000);
    }
    CHECK(report.rows[0].param == "mu");
    CHECK_THAT(report.rows[0].oracle, Catch::Matchers::WithinAbs(1.0, 1e-8));
}

TEST_CASE("oracle rows are exact") {
    RunConfig cfg;
    cfg.estimator = "oracle";
    cfg.mu = {0.5};
    cfg.sigma = {1.3};
    cfg.phi = "quadratic";
    const BenchmarkReport report = run_estimate(cfg);
    for (const ReportRow& row : report.rows) {
        CHECK(row.mean == row.oracle);
        CHECK(row.variance == 0.0);
        CHECK(row.abs_error == 0.0);
    }
}

TEST_CASE("reports are byte-identical for identical configs") {
    RunConfig cfg;
    cfg.estimator = "flow";
    cfg.flow_kind = "reparam";
    cfg.flow_k = 0.5;
    cfg.mu = {0.5};
    cfg.sigma = {1.3};
    cfg.phi = "quadratic";
    cfg.n = 20000;
    cfg.seed = 7;
    const std::string a = to_csv(run_estimate(cfg));
    const std::string b = to_csv(run_estimate(cfg));
    CHECK(a == b);

    setenv("MCGRAD_THREADS", "1", 1);
    const std::string t1 = to_csv(run_estimate(cfg));
    setenv("MCGRAD_THREADS", "4", 1);
    const std::string t4 = to_csv(run_estimate(cfg));
    unsetenv("MCGRAD_THREADS");
    CHECK(t1 == t4);
    CHECK(a == t1);
}

TEST_CASE("csv schema") {
    CHECK(std::string(kCsvHeader) ==
          "estimator,param,mean,variance,std_error,n,reps,seed,oracle,abs_error,"
          "z_score");
    RunConfig cfg;
    cfg.estimator = "oracle";
    cfg.phi = "linear";
    const std::string csv = to_csv(run_estimate(cfg));
    CHECK(csv.substr(0, csv.find('\n')) == kCsvHeader);
    // 17-significant-digit floats round-trip.
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}

TEST_CASE("config parsing") {
    std::stringstream ss(
        "# benchmark sweep\n"
        "[first]\n"
        "estimator = rp\n"
        "dist = gaussian\n"
        "mu = 0.5\n"
        "sigma = 1.3\n"
        "phi = quadratic\n"
        "n = 1000\n"
        "seed = 3\n"
        "\n"
        "[second]\n"
        "estimator = go\n"
        "dist = poisson\n"
        "rate = 3\n"
        "ymax = 30\n"
        "phi = quadratic\n");
    const std::vector<RunConfig> runs = parse_config(ss);
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].name == "first");
    CHECK(runs[0].estimator == "rp");
    CHECK(runs[0].sigma == std::vector<double>{1.3});
    CHECK(runs[1].dist == "poisson");
    CHECK(runs[1].ymax == 30);

    std::stringstream bad1("[a]\nwhat = 1\n");
    CHECK_THROWS_AS(parse_config(bad1), ConfigError);
    std::stringstream bad2("n = 10\n");
    CHECK_THROWS_AS(parse_config(bad2), ConfigError);
    std::stringstream bad3("[a]\nn 10\n");
    CHECK_THROWS_AS(parse_config(bad3), ConfigError);
}

TEST_CASE("diagonal gaussian runs report per-component parameters") {
    RunConfig cfg;
    cfg.estimator = "rp";
    cfg.dist = "gaussian";
    cfg.mu = {0.0, 0.0, 0.0};
    cfg.sigma = {1.0, 1.0, 1.0};
    cfg.phi = "sumsq";
    cfg.n = 50000;
    cfg.seed = 5;
    const BenchmarkReport report = run_estimate(cfg);
    REQUIRE(report.rows.size() == 6);
    CHECK(report.rows[0].param == "mu_0");
    CHECK(report.rows[5].param == "sigma_2");
    for (const ReportRow& row : report.rows) CHECK(std::abs(row.z_score) < 4.0);
}

TEST_CASE("incompatible configurations are rejected") {
    RunConfig cfg;
    cfg.estimator = "go";
    cfg.dist = "gaussian";
    CHECK_THROWS_AS(run_estimate(cfg), ConfigError);

    cfg.estimator = "slice";
    cfg.dist = "uniform";
    CHECK_THROWS_AS(run_estimate(cfg), ConfigError);

    cfg.estimator = "lr";
    cfg.dist = "uniform";
    CHECK_THROWS_AS(run_estimate(cfg), ConfigError);

    cfg.estimator = "nope";
    cfg.dist = "gaussian";
    CHECK_THROWS_AS(run_estimate(cfg), ConfigError);
}

TEST_CASE("slice runs report only the location parameter") {
    RunConfig cfg;
    cfg.estimator = "slice";
    cfg.mu = {0.5};
    cfg.sigma = {1.3};
    cfg.phi = "linear";
    cfg.n = 50000;
    cfg.seed = 12;
    const BenchmarkReport report = run_estimate(cfg);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].param == "mu");
    CHECK(std::abs(report.rows[0].z_score) < 4.0);
}

TEST_CASE("uniform rp run against the boundary-aware oracle") {
    RunConfig cfg;
    cfg.estimator = "rp";
    cfg.dist = "uniform";
    cfg.mu = {1.0};
    cfg.delta = 0.5;
    cfg.phi = "quadratic";
    cfg.n = 100000;
    cfg.seed = 8;
    const BenchmarkReport report = run_estimate(cfg);
    REQUIRE(report.rows.size() == 2);
    for (const ReportRow& row : report.rows) CHECK(std::abs(row.z_score) < 4.0);
    CHECK_THAT(report.rows[0].oracle, Catch::Matchers::WithinAbs(2.0, 1e-8));
}
