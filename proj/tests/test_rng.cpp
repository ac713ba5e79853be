#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fpca/rng.hpp"

using fpca::rng::Stream;

TEST_CASE("identical keys reproduce identical draws") {
    Stream a(12345), b(12345);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams are independent of draw order") {
    Stream root(7);
    Stream c1 = root.substream(1);
    Stream c2 = root.substream(2);
    const double x1 = c1.next_uniform();
    Stream root2(7);
    Stream d2 = root2.substream(2);
    Stream d1 = root2.substream(1);
    CHECK(d1.next_uniform() == x1);
    CHECK(d2.next_uniform() == c2.next_uniform());
}

TEST_CASE("uniforms stay inside (0,1) and fill the interval") {
    Stream s(99);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = s.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("gaussian moments at MC scale") {
    Stream s(2024);
    const int n = 200000;
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next_gaussian();
        m1 += z;
        m2 += z * z;
        m4 += z * z * z * z;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    CHECK(std::abs(m1) < 0.01);       // sd of mean ~ 0.0022
    CHECK(std::abs(m2 - 1.0) < 0.02); // sd ~ 0.0032
    CHECK(std::abs(m4 - 3.0) < 0.15); // sd ~ 0.022
}

TEST_CASE("distinct substream ids decorrelate") {
    Stream root(5);
    Stream a = root.substream(10);
    Stream b = root.substream(11);
    int agree = 0;
    for (int i = 0; i < 64; ++i)
        if ((a.next_u64() & 1ull) == (b.next_u64() & 1ull)) ++agree;
    CHECK(agree > 10);
    CHECK(agree < 54);
}
