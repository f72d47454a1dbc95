#include <cmath>
#include <vector>

#include "doctest.h"
#include "spintwa/rng.hpp"

using namespace spintwa;

TEST_CASE("philox known-answer vector (zero counter, zero key)") {
    const auto b = Philox::generate(0, 0, 0, 0);
    CHECK(b.v[0] == 0x6627e8d5u);
    CHECK(b.v[1] == 0xe169c58du);
    CHECK(b.v[2] == 0xbc57ac4cu);
    CHECK(b.v[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are deterministic and independent of interleaving") {
    RngStream a(42, 7, RngStream::kDomainDynamics);
    RngStream b(42, 7, RngStream::kDomainDynamics);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());

    RngStream c(42, 8, RngStream::kDomainDynamics);
    bool all_equal = true;
    RngStream a2(42, 7, RngStream::kDomainDynamics);
    for (int i = 0; i < 8; ++i) all_equal = all_equal && (a2.next_u32() == c.next_u32());
    CHECK_FALSE(all_equal);

    // domains separate the initial-sampling draws from the dynamics draws
    RngStream init(42, 7, RngStream::kDomainInitial);
    RngStream dyn(42, 7, RngStream::kDomainDynamics);
    bool domain_equal = true;
    for (int i = 0; i < 8; ++i) domain_equal = domain_equal && (init.next_u32() == dyn.next_u32());
    CHECK_FALSE(domain_equal);
}

TEST_CASE("normal moments") {
    RngStream rng(123, 0, 0);
    const int n = 200000;
    double sum = 0, sum2 = 0, sum3 = 0, sum4 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
        sum3 += x * x * x;
        sum4 += x * x * x * x;
    }
    const double stderr_mean = 1.0 / std::sqrt(double(n));
    CHECK(std::abs(sum / n) < 4 * stderr_mean);
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(sum3 / n) < 0.05);
    CHECK(sum4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("uniform stays in (0,1] and has the right mean") {
    RngStream rng(9, 1, 0);
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("gamma moments match shape") {
    RngStream rng(77, 3, 0);
    const double shape = 41.0;  // 2S+1 for S = 20
    const int n = 200000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gamma(shape);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(shape).epsilon(0.005));
    CHECK(var == doctest::Approx(shape).epsilon(0.05));
}
