#include "fgsan/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace fgsan;

TEST_SUITE("rng") {

TEST_CASE("identical seeds give identical streams") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(Rng(1).next_u64() != Rng(2).next_u64());
}

TEST_CASE("derived streams depend on every path element") {
    std::set<std::uint64_t> firsts;
    firsts.insert(Rng::derive(7, {}).next_u64());
    firsts.insert(Rng::derive(7, {0}).next_u64());
    firsts.insert(Rng::derive(7, {1}).next_u64());
    firsts.insert(Rng::derive(7, {0, 1}).next_u64());
    firsts.insert(Rng::derive(7, {1, 0}).next_u64());
    firsts.insert(Rng::derive(8, {0, 1}).next_u64());
    CHECK(firsts.size() == 6);
    CHECK(Rng::derive(3, {4, 5}).next_u64() == Rng::derive(3, {4, 5}).next_u64());
}

TEST_CASE("uniform draws respect their ranges") {
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_open();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        const double w = rng.uniform(-2.0, 3.0);
        CHECK(w >= -2.0);
        CHECK(w < 3.0);
        CHECK(rng.below(7) < 7u);
    }
}

TEST_CASE("below is roughly uniform and normal has unit moments") {
    Rng rng(123);
    std::vector<int> counts(5, 0);
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        ++counts[rng.below(5)];
    }
    for (int c : counts) {
        CHECK(std::abs(c - n / 5) < 600);
    }
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sq / n - 1.0) < 0.03);
}

TEST_CASE("splitmix64 reference values") {
    // First outputs for state 0 of the published splitmix64 generator.
    std::uint64_t state = 0;
    CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
}

}  // TEST_SUITE
