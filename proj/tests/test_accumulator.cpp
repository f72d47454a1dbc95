#include <cmath>

#include "doctest.h"
#include "spintwa/accumulator.hpp"
#include "spintwa/rng.hpp"

using namespace spintwa;

TEST_CASE("running moments match direct formulas and merge exactly") {
    RngStream rng(5, 0, 0);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 1000; ++i) rows.push_back({rng.normal(), 3.0 + 2.0 * rng.normal()});

    RunningMoments all(2);
    RunningMoments a(2), b(2);
    for (int i = 0; i < 1000; ++i) {
        all.add(rows[i]);
        (i < 400 ? a : b).add(rows[i]);
    }
    a.merge(b);
    CHECK(a.count() == all.count());
    for (int q = 0; q < 2; ++q) {
        CHECK(a.mean()[q] == doctest::Approx(all.mean()[q]).epsilon(1e-13));
        CHECK(a.stderr_of_mean()[q] == doctest::Approx(all.stderr_of_mean()[q]).epsilon(1e-12));
    }

    double sum = 0;
    for (const auto& r : rows) sum += r[1];
    CHECK(all.mean()[1] == doctest::Approx(sum / 1000).epsilon(1e-13));
}

TEST_CASE("accumulator summary: block means, totals, counters") {
    EnsembleAccumulator acc(2, 1, 1);
    acc.add_trajectory(0, std::vector<double>{1.0});
    acc.add_trajectory(0, std::vector<double>{2.0});
    acc.add_trajectory(1, std::vector<double>{4.0});
    acc.add_clamp_events(0, 3);
    acc.add_diverged(1);
    const auto s = acc.finalize();
    CHECK(s.n_kept == 3);
    CHECK(s.clamp_events == 3);
    CHECK(s.n_diverged == 1);
    CHECK(s.mean[0] == doctest::Approx(7.0 / 3.0));
    CHECK(s.block_mean[0] == doctest::Approx(1.5));
    CHECK(s.block_mean[1] == doctest::Approx(4.0));
    CHECK(s.block_count[0] == 2);
    CHECK(s.block_count[1] == 1);
}
