#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mcgrad/rng.hpp"

using namespace mcgrad;

TEST_CASE("draws are pure functions of (seed, index, dim, stream)") {
    CHECK(rng::uniform01(42, 7, 1, 3) == rng::uniform01(42, 7, 1, 3));
    CHECK(rng::normal(42, 7) == rng::normal(42, 7));
    CHECK(rng::uniform01(42, 7) != rng::uniform01(42, 8));
    CHECK(rng::uniform01(42, 7) != rng::uniform01(43, 7));
    CHECK(rng::uniform01(42, 7, 0) != rng::uniform01(42, 7, 1));
    CHECK(rng::uniform01(42, 7, 0, 0) != rng::uniform01(42, 7, 0, 1));
}

TEST_CASE("uniform01 stays inside the open interval") {
    for (int k = 0; k < 10000; ++k) {
        const double u = rng::uniform01(1, k);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments look standard") {
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double z = rng::normal(123, k);
        s1 += z;
        s2 += z * z;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("sign is a fair coin") {
    int pos = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k)
        if (rng::sign(9, k) > 0) ++pos;
    const double p = static_cast<double>(pos) / n;
    CHECK(std::abs(p - 0.5) < 4.0 * std::sqrt(0.25 / n));
}

TEST_CASE("derived seeds decorrelate replicates") {
    CHECK(rng::derive_seed(11, 0) != rng::derive_seed(11, 1));
    CHECK(rng::derive_seed(11, 0) != 11u);
}
