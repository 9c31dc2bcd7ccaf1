#include <doctest.h>

#include <cmath>

#include "uavirs/rng.hpp"

using uavirs::rng::Substream;

TEST_CASE("identical keys reproduce the stream") {
    Substream a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream ids decorrelate") {
    Substream a(42, 7), b(42, 8), c(43, 7);
    int same_ab = 0, same_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const auto va = a.next_u64();
        if (va == b.next_u64()) ++same_ab;
        if (va == c.next_u64()) ++same_ac;
    }
    CHECK(same_ab == 0);
    CHECK(same_ac == 0);
}

TEST_CASE("uniform01 stays in the half-open interval with mean one half") {
    Substream s(1, 0);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal moments") {
    Substream s(3, 5);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = s.normal();
        sum += x;
        sum2 += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(1).scale(0.02));
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("complex normal carries unit total variance") {
    Substream s(9, 2);
    double power = 0.0, re = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto z = s.complex_normal();
        power += std::norm(z);
        re += z.real();
    }
    CHECK(power / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(re / n == doctest::Approx(0.0).epsilon(1).scale(0.01));
}
