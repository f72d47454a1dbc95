#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "spintwa/sde.hpp"

using namespace spintwa;

namespace {

RuleSet single_rule(TermRule rule, int n_sites, int k, double spin_s = 10.0) {
    RuleSet rs;
    rs.n_sites = n_sites;
    rs.spin_s = spin_s;
    rs.k = k;
    rule.wiener_offset = 0;
    rs.rules = {rule};
    rs.n_wieners = rule.n_wieners;
    return rs;
}

std::vector<complex_t> drift_of(const RuleSet& rs, const std::vector<complex_t>& x) {
    std::vector<complex_t> d(x.size(), complex_t(0, 0));
    accumulate_drift(rs, x.data(), d.data());
    return d;
}

std::vector<complex_t> noise_of(const RuleSet& rs, const std::vector<complex_t>& x,
                                const std::vector<double>& dw, int64_t& clamps) {
    std::vector<complex_t> d(x.size(), complex_t(0, 0));
    accumulate_noise(rs, x.data(), dw.data(), d.data(), clamps);
    return d;
}

SpinModel validated_decay_model(double s, double gamma) {
    SpinModel m;
    m.n_sites = 1;
    m.spin_s = s;
    m.dissipators.push_back({DissipatorKind::Decay, gamma, 0, std::nullopt});
    return validate(m);
}

}  // namespace

TEST_CASE("decay drift matches the hand evaluation at k = 0") {
    // alpha = 1, beta = 2, rate 0.1: dalpha/dt = -0.1 (4 + 1/2) = -0.45
    const RuleSet rs = single_rule(rule_decay(0.1, 0), 1, 0);
    const auto d = drift_of(rs, {complex_t(1, 0), complex_t(2, 0)});
    CHECK(d[0].real() == doctest::Approx(-0.45).epsilon(1e-14));
    CHECK(d[0].imag() == doctest::Approx(0.0));
    // dbeta/dt = +0.1 (1 - 1/2) 2 = +0.1
    CHECK(d[1].real() == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("decay noise for k = +1 vanishes on alpha") {
    const RuleSet rs = single_rule(rule_decay(0.3, 0), 1, +1);
    int64_t clamps = 0;
    const std::vector<double> dw = {1.0, 1.0, 0.0, 0.0};  // only alpha channels poked
    const auto d = noise_of(rs, {complex_t(0.7, 0.1), complex_t(2, 0)}, dw, clamps);
    CHECK(std::abs(d[0]) == doctest::Approx(0.0));
    CHECK(clamps == 0);
}

TEST_CASE("decay noise clamps the negative beta argument at k = 0") {
    // |alpha|^2 < 1/2 makes the beta noise argument negative
    const RuleSet rs = single_rule(rule_decay(0.3, 0), 1, 0);
    int64_t clamps = 0;
    const std::vector<double> dw = {0.0, 0.0, 1.0, 1.0};
    const auto d = noise_of(rs, {complex_t(0.1, 0.0), complex_t(2, 0)}, dw, clamps);
    CHECK(std::abs(d[1]) == doctest::Approx(0.0));
    CHECK(clamps == 1);
}

TEST_CASE("gain is decay with the two modes exchanged") {
    // swapped evaluation: beta = 1, alpha = 2 gives dbeta/dt = -0.45
    const RuleSet rs = single_rule(rule_gain(0.1, 0), 1, 0);
    const auto d = drift_of(rs, {complex_t(2, 0), complex_t(1, 0)});
    CHECK(d[1].real() == doctest::Approx(-0.45).epsilon(1e-14));
    CHECK(d[0].real() == doctest::Approx(0.1 * (1.0 - 0.5) * 2.0).epsilon(1e-14));

    // symmetry against the decay rule under alpha <-> beta
    const RuleSet rd = single_rule(rule_decay(0.1, 0), 1, 0);
    const auto dd = drift_of(rd, {complex_t(1, 0), complex_t(2, 0)});
    CHECK(d[1] == dd[0]);
    CHECK(d[0] == dd[1]);
}

TEST_CASE("dephasing: zero rate is the identity rule; per-step length error is O(dt)") {
    const RuleSet rz = single_rule(rule_dephasing(0.0, 0), 1, 0);
    const auto d0 = drift_of(rz, {complex_t(1, 1), complex_t(2, -1)});
    CHECK(std::abs(d0[0]) == 0.0);
    CHECK(std::abs(d0[1]) == 0.0);

    // One Euler-Maruyama step: |alpha|^2 violation has rms ~ |alpha|^2 gp dt / sqrt(2),
    // so halving dt halves the violation.
    const double gp = 0.8;
    const RuleSet rs = single_rule(rule_dephasing(gp, 0), 1, 0);
    RngStream rng(4, 0, 0);
    auto rms_violation = [&](double dt) {
        double acc = 0;
        const int n = 40000;
        for (int i = 0; i < n; ++i) {
            std::vector<complex_t> x = {complex_t(1.3, -0.4), complex_t(0.2, 2.0)};
            const double xa0 = std::norm(x[0]);
            std::vector<complex_t> dx(2, complex_t(0, 0));
            accumulate_drift(rs, x.data(), dx.data());
            for (auto& v : dx) v *= dt;
            int64_t clamps = 0;
            const std::vector<double> dw = {std::sqrt(dt) * rng.normal()};
            accumulate_noise(rs, x.data(), dw.data(), dx.data(), clamps);
            x[0] += dx[0];
            const double viol = std::norm(x[0]) - xa0;
            acc += viol * viol;
        }
        return std::sqrt(acc / n);
    };
    const double v1 = rms_violation(1e-3);
    const double v2 = rms_violation(5e-4);
    CHECK(v1 / v2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("drive: zero rate is the identity; finite drive mixes the modes") {
    const RuleSet rz = single_rule(rule_transverse_drive(0.0, 0), 1, 0);
    const auto d0 = drift_of(rz, {complex_t(1, 1), complex_t(2, -1)});
    CHECK(std::abs(d0[0]) == 0.0);

    const RuleSet rs = single_rule(rule_transverse_drive(2.0, 0), 1, 0);
    const auto d = drift_of(rs, {complex_t(0, 0), complex_t(3, 0)});
    CHECK(d[0] == complex_t(0, -3.0));  // -i (W/2) beta
}

TEST_CASE("one-axis twist drift") {
    const double s = 10.0;
    const double g_eff = 0.05;  // g / (2S)
    const RuleSet rs = single_rule(rule_one_axis_twist(g_eff, 0), 1, 0, s);

    // fully polarized +z state (beta = 0) is stationary
    const auto d0 = drift_of(rs, {complex_t(3.0, 0.5), complex_t(0, 0)});
    CHECK(std::abs(d0[0]) == 0.0);
    CHECK(std::abs(d0[1]) == 0.0);

    // alpha = beta = sqrt(S): dalpha/dt = -i g_eff S^{3/2}
    const double r = std::sqrt(s);
    const auto d = drift_of(rs, {complex_t(r, 0), complex_t(r, 0)});
    CHECK(d[0].real() == doctest::Approx(0.0));
    CHECK(d[0].imag() == doctest::Approx(-g_eff * std::pow(s, 1.5)).epsilon(1e-13));
}

TEST_CASE("bond drift: zero couplings and the down-polarized fixed point") {
    const RuleSet rz = single_rule(rule_heisenberg_bond(0, 0, 0, 0, 1), 2, 0);
    const auto d0 =
        drift_of(rz, {complex_t(1, 0), complex_t(2, 0), complex_t(0, 1), complex_t(1, 1)});
    for (const auto& v : d0) CHECK(std::abs(v) == 0.0);

    const RuleSet rs = single_rule(rule_heisenberg_bond(0.3, -0.2, 0.1, 0, 1), 2, 0);
    const double r = std::sqrt(20.0);
    const auto d =
        drift_of(rs, {complex_t(0, 0), complex_t(r, 0), complex_t(0, 0), complex_t(r, 0)});
    for (const auto& v : d) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("bond jz coupling variant changes only the beta equation") {
    RuleSet rs = single_rule(rule_heisenberg_bond(0.0, 0.0, 0.5, 0, 1), 2, 0);
    const std::vector<complex_t> x = {complex_t(1, 0.3), complex_t(0.5, -0.2),
                                      complex_t(0.2, 0.8), complex_t(1.5, 0.1)};
    rs.jz_couples_beta = true;
    const auto d_beta = drift_of(rs, x);
    rs.jz_couples_beta = false;
    const auto d_alpha = drift_of(rs, x);
    CHECK(d_beta[0] == d_alpha[0]);  // alpha equation unchanged
    CHECK(d_beta[1] != d_alpha[1]);
    // mean-field form: the Jz piece of dbeta_0 is +i/4 Jz (|a1|^2-|b1|^2) beta_0
    const double z1 = std::norm(x[2]) - std::norm(x[3]);
    const complex_t expected = complex_t(0, 0.25) * 0.5 * z1 * x[1];
    CHECK(std::abs(d_beta[1] - expected) < 1e-14);
}

TEST_CASE("assemble: wiener counts add up and k-gating works") {
    SpinModel m;
    m.n_sites = 1;
    m.spin_s = 100.0;
    m.hamiltonian.push_back(TransverseDrive{2.0, 0, std::nullopt});
    m.dissipators.push_back({DissipatorKind::Decay, 1.0, 0, std::nullopt});
    m.dissipators.push_back({DissipatorKind::Dephasing, 0.5, 0, std::nullopt});
    const SpinModel v = validate(m);
    const RuleSet rs = assemble(v, Distribution::wigner());
    CHECK(rs.n_wieners == 5);  // 4 decay + 1 dephasing
    CHECK(rs.rules.size() == 3);

    SpinModel tw = v;
    tw.hamiltonian.push_back(OneAxisTwist{1.0, 0, std::nullopt});
    const SpinModel tv = validate(tw);
    CHECK_THROWS_WITH_AS(assemble(tv, Distribution::q()),
                         doctest::Contains("Wigner"), ModelError);
    AssembleOptions allow;
    allow.allow_interactions_for_pq = true;
    CHECK_NOTHROW(assemble(tv, Distribution::q(), allow));
}

TEST_CASE("assembled drift is the sum of the per-rule drifts") {
    SpinModel m;
    m.n_sites = 1;
    m.spin_s = 100.0;
    m.hamiltonian.push_back(OneAxisTwist{1.0, 0, std::nullopt});
    m.dissipators.push_back({DissipatorKind::Decay, 0.25, 0, std::nullopt});
    m.dissipators.push_back({DissipatorKind::Dephasing, 0.1, 0, std::nullopt});
    const SpinModel v = validate(m);
    const RuleSet all = assemble(v, Distribution::wigner());

    const std::vector<complex_t> x = {complex_t(2.2, -1.1), complex_t(9.0, 3.5)};
    const auto total = drift_of(all, x);

    std::vector<complex_t> sum(2, complex_t(0, 0));
    for (const auto& rule : all.rules) {
        RuleSet one = all;
        one.rules = {rule};
        const auto d = drift_of(one, x);
        for (int i = 0; i < 2; ++i) sum[i] += d[i];
    }
    for (int i = 0; i < 2; ++i) CHECK(std::abs(total[i] - sum[i]) < 1e-14);
}

TEST_CASE("free evolution keeps all saved moments constant") {
    SpinModel m;
    m.n_sites = 1;
    m.spin_s = 10.0;
    const SpinModel v = validate(m);
    IntegratorConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_final = 1.0;
    cfg.save_times = {0.0, 0.5, 1.0};
    cfg.n_traj = 50;
    cfg.master_seed = 3;
    const EnsembleResult res = evolve_ensemble(v, Distribution::wigner(), cfg);
    for (int q = 0; q < kQuantPerSite; ++q) {
        CHECK(res.value(1, 0, q) == res.value(0, 0, q));
        CHECK(res.value(2, 0, q) == res.value(0, 0, q));
    }
    CHECK(res.diagnostics.clamp_events == 0);
    CHECK(res.diagnostics.diverged_trajectories == 0);
}

TEST_CASE("deterministic replay across worker counts") {
    const SpinModel v = validated_decay_model(20.0, 1.0);
    IntegratorConfig cfg;
    cfg.t_final = 1.0;
    cfg.save_times = {0.0, 0.25, 0.5, 0.75, 1.0};
    cfg.n_traj = 200;
    cfg.n_blocks = 8;
    cfg.master_seed = 2024;
    EvolveOptions opts;
    opts.theta = std::numbers::pi;

    cfg.n_workers = 1;
    const EnsembleResult r1 = evolve_ensemble(v, Distribution::wigner(), cfg, opts);
    cfg.n_workers = 4;
    const EnsembleResult r4 = evolve_ensemble(v, Distribution::wigner(), cfg, opts);
    REQUIRE(r1.mean.size() == r4.mean.size());
    for (size_t i = 0; i < r1.mean.size(); ++i) CHECK(r1.mean[i] == r4.mean[i]);
    for (size_t i = 0; i < r1.stderr_.size(); ++i) CHECK(r1.stderr_[i] == r4.stderr_[i]);
    CHECK(r1.diagnostics.clamp_events == r4.diagnostics.clamp_events);
}

TEST_CASE("diverging run is flagged and excluded") {
    // a huge dt makes the decay equations explode
    const SpinModel v = validated_decay_model(100.0, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 50.0;
    cfg.t_final = 5000.0;
    cfg.save_times = {0.0, 5000.0};
    cfg.n_traj = 20;
    cfg.master_seed = 11;
    EvolveOptions opts;
    opts.theta = std::numbers::pi / 2;
    const EnsembleResult res = evolve_ensemble(v, Distribution::wigner(), cfg, opts);
    CHECK(res.diagnostics.diverged_trajectories > 0);
    CHECK(res.diagnostics.diverged_warning);
}
