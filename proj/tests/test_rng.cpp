#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <set>

#include "dpd/rng.hpp"
#include "helpers.hpp"

using namespace dpd;

TEST_CASE("same seed gives the same stream") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next() == b.next());
    }
    CHECK(a == b);
    a.next();
    CHECK_FALSE(a == b);
}

TEST_CASE("derived seeds depend on every label and on their order") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 50; ++i) {
        for (std::uint64_t j = 0; j < 50; ++j) {
            seen.insert(derive_seed(7, {i, j}));
        }
    }
    CHECK(seen.size() == 2500);
    CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
    CHECK(derive_seed(7, {1}) != derive_seed(8, {1}));
    CHECK(derive_seed(7, {}) == mix64(7));
    CHECK(derive_seed(7, {3}) == mix64(mix64(7) ^ 3));
}

TEST_CASE("label is FNV-1a") {
    CHECK(label("") == 0xcbf29ce484222325ULL);
    CHECK(label("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(label("events") != label("placement"));
}

TEST_CASE("uniform01 stays in [0, 1)") {
    Rng r(1);
    double lo = 1.0;
    double hi = 0.0;
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo < 1e-4);
    CHECK(hi > 1 - 1e-4);
    CHECK(std::abs(sum / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
}

TEST_CASE("below is uniform") {
    Rng r(2);
    std::array<std::uint64_t, 7> counts{};
    const std::uint64_t n = 140000;
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t k = r.below(7);
        REQUIRE(k < 7);
        ++counts[k];
    }
    for (std::uint64_t c : counts) {
        CHECK(test::binomial_z(c, n, 1.0 / 7) < 4.0);
    }
    CHECK(r.below(1) == 0);
}

TEST_CASE("below handles the full 64-bit range") {
    Rng r(3);
    const std::uint64_t big = (std::uint64_t{1} << 63) + 12345;
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(r.below(big) < big);
    }
}

TEST_CASE("bit is fair") {
    Rng r(4);
    std::uint64_t ones = 0;
    const std::uint64_t n = 100000;
    for (std::uint64_t i = 0; i < n; ++i) {
        ones += r.bit();
    }
    CHECK(test::binomial_z(ones, n, 0.5) < 4.0);
}

TEST_CASE("exponential has mean and variance 1/rate and 1/rate^2") {
    Rng r(5);
    const int n = 200000;
    const double rate = 2.5;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.exponential(rate);
        REQUIRE(x >= 0.0);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - 1 / rate) < 4 * (1 / rate) / std::sqrt(n));
    CHECK(std::abs(var - 1 / (rate * rate)) < 0.02 / (rate * rate) * 5);
}
