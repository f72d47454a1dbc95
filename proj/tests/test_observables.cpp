#include <cmath>

#include "doctest.h"
#include "spintwa/observables.hpp"

using namespace spintwa;

TEST_CASE("correction table: exact coherent two-mode moments, k = 0") {
    // modes in coherent states |g_a>, |g_b>: Wigner moments are Gaussian
    const double na = 0.7, nb = 9.0;  // |g|^2
    SiteMoments m;
    m.xa = na + 0.5;
    m.xb = nb + 0.5;
    m.ab = complex_t(std::sqrt(na * nb), 0.0);
    m.a2b2 = m.ab * m.ab;
    m.xa2 = na * na + 2 * na + 0.5;
    m.xb2 = nb * nb + 2 * nb + 0.5;
    m.xab = (na + 0.5) * (nb + 0.5);
    const SpinMoments s = spin_from_phase_moments(m, 0);
    CHECK(s.sz == doctest::Approx(0.5 * (na - nb)));
    CHECK(s.len == doctest::Approx(0.5 * (na + nb)));
    // <n^2> of a coherent state is n^2 + n
    CHECK(s.szz == doctest::Approx(0.25 * (na * na + na + nb * nb + nb - 2 * na * nb)));
    CHECK(s.spsm == doctest::Approx(na * nb + na));
}

TEST_CASE("correction table: normal and anti-normal offsets") {
    // Fock-like exact moments of |n_a=0, n_b=2S>, S=3 (2S=6)
    const double twos = 6.0;
    SUBCASE("k=+1") {
        SiteMoments m;
        m.xa = 0.0;
        m.xb = twos;
        m.ab = {};
        m.a2b2 = {};
        m.xa2 = 0.0;
        m.xb2 = twos * twos - twos;  // <b'^2 b^2> = n(n-1)
        m.xab = 0.0;
        const SpinMoments s = spin_from_phase_moments(m, +1);
        CHECK(s.sz == doctest::Approx(-3.0));
        CHECK(s.szz == doctest::Approx(9.0));
        CHECK(s.spsm == doctest::Approx(0.0));
    }
    SUBCASE("k=-1") {
        SiteMoments m;
        m.xa = 1.0;             // <a a'> = n+1
        m.xb = twos + 1.0;
        m.ab = {};
        m.a2b2 = {};
        m.xa2 = 2.0;                                  // <n^2>+3n+2 at n=0
        m.xb2 = twos * twos + 3 * twos + 2.0;
        m.xab = (0.0 + 1.0) * (twos + 1.0);           // <(na+1)(nb+1)>
        const SpinMoments s = spin_from_phase_moments(m, -1);
        CHECK(s.sz == doctest::Approx(-3.0));
        CHECK(s.szz == doctest::Approx(9.0));
        CHECK(s.len == doctest::Approx(3.0));
    }
}

TEST_CASE("squeezing of an ideal coherent state is 1") {
    SpinMoments m;
    const double s = 40.0;
    m.sx = 0.0;
    m.sy = 0.0;
    m.sz = -s;
    m.sxx = s / 2;
    m.syy = s / 2;
    m.sxy = 0.0;
    CHECK(squeezing_parameter(m, s) == doctest::Approx(1.0));

    // squeezing the x-quadrature shows up regardless of the xy cross term
    m.sxx = s / 8;
    CHECK(squeezing_parameter(m, s) == doctest::Approx(0.25));
    m.sxy = 0.05 * s;
    CHECK(squeezing_parameter(m, s) < 0.25);
}

TEST_CASE("correlation profile: C(0)=1, exponential fit over even s") {
    const double xi = 3.0;
    std::vector<double> means, errs;
    for (int s = 0; s <= 10; ++s) {
        means.push_back(2.5 * std::exp(-s / xi));
        errs.push_back(1e-4);
    }
    const CorrelationProfile p = correlation_profile(means, errs);
    CHECK(p.c[0] == doctest::Approx(1.0));
    CHECK(p.xi_corr == doctest::Approx(xi).epsilon(1e-9));
    CHECK(p.residual < 1e-9);
    CHECK(p.points_used == 5);
}

TEST_CASE("correlation profile: non-positive values excluded, too few points -> no fit") {
    std::vector<double> means = {1.0, 0.5, -0.2, 0.1, 0.05, 0.01, -0.3, 0.2, 0.1, 0.0, 0.0};
    std::vector<double> errs(means.size(), 0.01);
    const CorrelationProfile p = correlation_profile(means, errs);
    CHECK(p.points_used == 2);  // s = 4, 8 only among even s with C > 0
    CHECK(std::isnan(p.xi_corr));
}

TEST_CASE("jackknife of a linear statistic matches the classic formula") {
    // per-block means of a single quantity with equal counts
    std::vector<double> block_means = {1.0, 2.0, 3.0, 4.0};
    std::vector<int64_t> counts = {10, 10, 10, 10};
    const double se = jackknife_stderr(block_means, counts, 1,
                                       [](std::span<const double> row) { return row[0]; });
    // var of block means = 5/3; se of mean over 4 blocks = sqrt(5/3)/2
    CHECK(se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
}
