#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "spintwa/observables.hpp"
#include "spintwa/sampler.hpp"

using namespace spintwa;

namespace {

SpinModel bare_model(int n_sites, double s) {
    SpinModel m;
    m.n_sites = n_sites;
    m.spin_s = s;
    return validate(m);
}

struct MeanAcc {
    double sum = 0, sum2 = 0;
    int n = 0;
    void add(double x) {
        sum += x;
        sum2 += x * x;
        ++n;
    }
    double mean() const { return sum / n; }
    double stderr_of_mean() const {
        const double v = sum2 / n - mean() * mean();
        return std::sqrt(v / n);
    }
};

}  // namespace

TEST_CASE("P down state is deterministic: (0, sqrt(2S))") {
    RngStream rng(1, 0, 0);
    const auto [a, b] = sample_down_state(Distribution::p(), 50.0, rng);
    CHECK(a == complex_t(0.0, 0.0));
    CHECK(b == complex_t(10.0, 0.0));
}

TEST_CASE("Wigner down-state moments") {
    const double s = 50.0;
    MeanAcc re_b, xa, xb;
    RngStream rng(7, 0, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = sample_down_state(Distribution::wigner(), s, rng);
        re_b.add(b.real());
        xa.add(std::norm(a));
        xb.add(std::norm(b));
    }
    CHECK(std::abs(re_b.mean() - 10.0) < 3 * re_b.stderr_of_mean());
    CHECK(std::abs(xa.mean() - 0.5) < 3 * xa.stderr_of_mean());
    // W0: E|beta|^2 = 2S + 1/2
    CHECK(std::abs(xb.mean() - (2 * s + 0.5)) < 3 * xb.stderr_of_mean());
}

TEST_CASE("Q down-state moments: anti-normal offsets") {
    const double s = 50.0;
    MeanAcc xa, xb;
    RngStream rng(11, 0, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto [a, b] = sample_down_state(Distribution::q(), s, rng);
        xa.add(std::norm(a));
        xb.add(std::norm(b));
    }
    CHECK(std::abs(xa.mean() - 1.0) < 3 * xa.stderr_of_mean());
    CHECK(std::abs(xb.mean() - 101.0) < 3 * xb.stderr_of_mean());
}

TEST_CASE("rotate: identity, spin flip, half angle") {
    const double s = 50.0;
    const double r = std::sqrt(2 * s);
    auto [a0, b0] = rotate(complex_t(0.3, -0.2), complex_t(1.5, 0.7), 0.0, 0.0);
    CHECK(a0 == complex_t(0.3, -0.2));
    CHECK(b0 == complex_t(1.5, 0.7));

    const double phi = 0.4;
    auto [a1, b1] = rotate(complex_t(0, 0), complex_t(r, 0), std::numbers::pi, phi);
    CHECK(std::abs(a1 - (-r) * std::polar(1.0, phi)) < 1e-12);
    CHECK(std::abs(b1) < 1e-12);

    auto [a2, b2] = rotate(complex_t(0, 0), complex_t(r, 0), std::numbers::pi / 2, 0.0);
    CHECK(a2.real() == doctest::Approx(-std::sqrt(s)).epsilon(1e-12));
    CHECK(b2.real() == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
}

TEST_CASE("rotate preserves |alpha|^2 + |beta|^2 to machine precision") {
    RngStream rng(3, 5, 0);
    for (int i = 0; i < 200; ++i) {
        const complex_t a(rng.normal(), rng.normal());
        const complex_t b(10 * rng.normal(), 10 * rng.normal());
        const double theta = 4 * std::numbers::pi * (rng.uniform() - 0.5);
        const double phi = 4 * std::numbers::pi * (rng.uniform() - 0.5);
        const auto [ra, rb] = rotate(a, b, theta, phi);
        CHECK(std::norm(ra) + std::norm(rb) ==
              doctest::Approx(std::norm(a) + std::norm(b)).epsilon(1e-13));
    }
}

TEST_CASE("empty ensemble and bit-identical replay") {
    const SpinModel m = bare_model(2, 10.0);
    CHECK(sample_initial_ensemble(m, Distribution::wigner(), 0, 0, 0, 1).empty());

    const PhasePoint p1 = sample_initial_point(m, Distribution::q(), 0.3, 0.9, 99, 41);
    const PhasePoint p2 = sample_initial_point(m, Distribution::q(), 0.3, 0.9, 99, 41);
    CHECK(p1 == p2);
}

TEST_CASE("down-state ensembles give <Sz> = -S for every k") {
    const double s = 50.0;
    const SpinModel m = bare_model(1, s);
    for (int k : {-1, 0, 1}) {
        MeanAcc sz;
        for (int j = 0; j < 20000; ++j) {
            const PhasePoint p = sample_initial_point(m, Distribution{k}, 0, 0, 5, j);
            sz.add(0.5 * (std::norm(p.alpha(0)) - std::norm(p.beta(0))));
        }
        const double err = std::max(sz.stderr_of_mean(), 1e-12);
        INFO("k = ", k);
        CHECK(std::abs(sz.mean() + s) < 3 * err);
    }
}

TEST_CASE("theta = pi ensemble points up: <Sz>/S = +1 within errors") {
    const double s = 100.0;
    const SpinModel m = bare_model(1, s);
    MeanAcc sz;
    for (int j = 0; j < 10000; ++j) {
        const PhasePoint p =
            sample_initial_point(m, Distribution::wigner(), std::numbers::pi, 0.0, 17, j);
        sz.add(0.5 * (std::norm(p.alpha(0)) - std::norm(p.beta(0))));
    }
    CHECK(std::abs(sz.mean() - s) < 3 * sz.stderr_of_mean());
}

TEST_CASE("spin length has the known per-k offset at t = 0") {
    const double s = 20.0;
    const SpinModel m = bare_model(1, s);
    for (int k : {-1, 0, 1}) {
        MeanAcc len;
        for (int j = 0; j < 20000; ++j) {
            const PhasePoint p = sample_initial_point(m, Distribution{k}, 1.1, 0.3, 23, j);
            len.add(0.5 * (std::norm(p.alpha(0)) + std::norm(p.beta(0))));
        }
        const double expected = s + 0.5 * (1 - k);
        const double err = std::max(len.stderr_of_mean(), 1e-12);
        INFO("k = ", k);
        CHECK(std::abs(len.mean() - expected) < 3.5 * err);
    }
}

TEST_CASE("corrected first and second moments of the coherent state") {
    // spin-coherent state along -z: <Sz> = -S, <Sx^2> = S/2 for every k
    const double s = 25.0;
    const SpinModel m = bare_model(1, s);
    for (int k : {-1, 0, 1}) {
        double wsum = 0;
        MeanAcc sz, sxx;
        for (int j = 0; j < 50000; ++j) {
            const PhasePoint p = sample_initial_point(m, Distribution{k}, 0, 0, 31, j);
            SiteMoments sm;
            sm.xa = std::norm(p.alpha(0));
            sm.xb = std::norm(p.beta(0));
            sm.ab = std::conj(p.alpha(0)) * p.beta(0);
            sm.a2b2 = sm.ab * sm.ab;
            sm.xa2 = sm.xa * sm.xa;
            sm.xb2 = sm.xb * sm.xb;
            sm.xab = sm.xa * sm.xb;
            const SpinMoments q = spin_from_phase_moments(sm, k);
            sz.add(q.sz);
            sxx.add(q.sxx);
            wsum += q.len;
        }
        INFO("k = ", k);
        CHECK(std::abs(sz.mean() + s) < 3 * std::max(sz.stderr_of_mean(), 1e-12));
        CHECK(std::abs(sxx.mean() - 0.5 * s) < 3.5 * std::max(sxx.stderr_of_mean(), 1e-9));
        CHECK(wsum / 50000 == doctest::Approx(s).epsilon(0.01));
    }
}
