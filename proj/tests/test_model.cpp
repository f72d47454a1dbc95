#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "spintwa/model.hpp"

using namespace spintwa;

namespace {

SpinModel superradiance_model(double s = 100.0, double gamma = 1.0) {
    SpinModel m;
    m.n_sites = 1;
    m.spin_s = s;
    m.dissipators.push_back({DissipatorKind::Decay, gamma, 0, std::nullopt});
    return m;
}

}  // namespace

TEST_CASE("minimal single-site superradiance model validates") {
    const SpinModel m = validate(superradiance_model());
    CHECK(m.validated);
    CHECK(m.n_sites == 1);
    CHECK(m.spin_s == 100.0);
}

TEST_CASE("periodic wrap bond is legal, open wrap is not") {
    SpinModel m;
    m.n_sites = 100;
    m.spin_s = 1.0;
    m.boundary = Boundary::Periodic;
    m.hamiltonian.push_back(HeisenbergBond{0.5, -0.25, 0.0, 99, 0, std::nullopt});
    const SpinModel v = validate(m);
    const auto& b = std::get<HeisenbergBond>(v.hamiltonian[0]);
    CHECK(b.site_i == 0);  // canonicalized
    CHECK(b.site_j == 99);

    m.boundary = Boundary::Open;
    CHECK_THROWS_WITH_AS(validate(m), doctest::Contains("wrap-around"), ModelError);
}

TEST_CASE("negative rate is rejected") {
    SpinModel m = superradiance_model(100.0, -0.5);
    CHECK_THROWS_WITH_AS(validate(m), doctest::Contains("negative rate"), ModelError);
}

TEST_CASE("bad site indices and spins are rejected") {
    SpinModel m = superradiance_model();
    m.dissipators[0].site = 3;
    CHECK_THROWS_AS(validate(m), ModelError);

    SpinModel m2 = superradiance_model(0.75);
    CHECK_THROWS_WITH_AS(validate(m2), doctest::Contains("half-integer"), ModelError);

    SpinModel m3 = superradiance_model();
    m3.n_sites = 0;
    CHECK_THROWS_AS(validate(m3), ModelError);

    SpinModel m4 = superradiance_model();
    m4.hamiltonian.push_back(HeisenbergBond{1.0, 1.0, 1.0, 0, 0, std::nullopt});
    CHECK_THROWS_AS(validate(m4), ModelError);
}

TEST_CASE("all-sites dissipators are expanded") {
    SpinModel m;
    m.n_sites = 4;
    m.spin_s = 0.5;
    m.dissipators.push_back({DissipatorKind::Dephasing, 0.3, std::nullopt, std::nullopt});
    const SpinModel v = validate(m);
    REQUIRE(v.dissipators.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(v.dissipators[i].site == i);
}

TEST_CASE("validate is idempotent") {
    SpinModel m;
    m.n_sites = 6;
    m.spin_s = 2.5;
    m.boundary = Boundary::Periodic;
    add_heisenberg_chain(m, 0.5, -0.25, 0.1);
    m.hamiltonian.push_back(TransverseDrive{2.0, 3, std::nullopt});
    m.dissipators.push_back({DissipatorKind::Decay, 1.0, std::nullopt, std::nullopt});
    m.dissipators.push_back({DissipatorKind::Dephasing, 0.2, 1, false});
    const SpinModel once = validate(m);
    const SpinModel twice = validate(once);
    CHECK(once == twice);
}

TEST_CASE("effective couplings follow the rescaling conventions") {
    SpinModel m = superradiance_model(100.0, 1.0);
    m.rescale_by_2s = true;
    SpinModel v = validate(m);
    CHECK(effective_rate(v, v.dissipators[0]) == doctest::Approx(0.005).epsilon(1e-12));

    v.rescale_by_2s = false;
    CHECK(effective_rate(v, v.dissipators[0]) == doctest::Approx(1.0));

    SpinModel half;
    half.n_sites = 1;
    half.spin_s = 0.5;
    half.hamiltonian.push_back(OneAxisTwist{2.0, 0, std::nullopt});
    const SpinModel hv = validate(half);
    CHECK(effective_twist(hv, std::get<OneAxisTwist>(hv.hamiltonian[0])) ==
          doctest::Approx(2.0));  // 2S = 1

    // dephasing is unrescaled by default, overridable per term
    SpinModel d = superradiance_model(10.0, 1.0);
    d.dissipators.push_back({DissipatorKind::Dephasing, 1.0, 0, std::nullopt});
    d.dissipators.push_back({DissipatorKind::Dephasing, 1.0, 0, true});
    const SpinModel dv = validate(d);
    CHECK(effective_rate(dv, dv.dissipators[1]) == doctest::Approx(1.0));
    CHECK(effective_rate(dv, dv.dissipators[2]) == doctest::Approx(0.05));

    // linearity in the declared coupling
    SpinModel lin = superradiance_model(10.0, 3.0);
    const SpinModel lv = validate(lin);
    CHECK(effective_rate(lv, lv.dissipators[0]) ==
          doctest::Approx(3.0 * effective_rate(dv, dv.dissipators[0])));
}

TEST_CASE("model JSON round trip and unknown-key rejection") {
    const std::string text = R"({
        "n_sites": 2, "spin_s": 20, "boundary": "open", "rescale_by_2s": true,
        "hamiltonian": [
            {"type": "heisenberg_bond", "jx": 0.5, "jy": -0.25, "jz": 0.0,
             "site_i": 0, "site_j": 1}
        ],
        "dissipators": [{"type": "decay", "rate": 1.0, "site": "all"}]
    })";
    const SpinModel m = model_from_json_string(text);
    CHECK(m.n_sites == 2);
    CHECK(m.dissipators.size() == 2);
    const SpinModel again = model_from_json_string(model_to_json_string(m));
    CHECK(m == again);

    CHECK_THROWS_WITH_AS(model_from_json_string(R"({"n_sites": 1, "spin_s": 1, "typo": 3})"),
                         doctest::Contains("unknown key"), ModelError);
    CHECK_THROWS_AS(model_from_json_string(R"({"n_sites": 1, "spin_s": 1,
        "dissipators": [{"type": "decay", "rate": 1.0, "site": 0, "extra": 1}]})"),
                    ModelError);
}

TEST_CASE("heisenberg_chain convenience expands to bonds") {
    const std::string text = R"({
        "n_sites": 5, "spin_s": 1, "boundary": "periodic",
        "hamiltonian": [{"type": "heisenberg_chain", "jx": 1.0, "jy": 0.5, "jz": 0.0}],
        "dissipators": []
    })";
    const SpinModel m = model_from_json_string(text);
    CHECK(m.hamiltonian.size() == 5);  // 4 chain bonds + wrap
}

TEST_CASE("rate_scale reflects the dominant bare rate") {
    SpinModel m = superradiance_model(100.0, 2.0);
    m.hamiltonian.push_back(TransverseDrive{0.5, 0, std::nullopt});
    const SpinModel v = validate(m);
    CHECK(rate_scale(v) == doctest::Approx(2.0));
}
