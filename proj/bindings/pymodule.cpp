#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spintwa/oracle.hpp"
#include "spintwa/runner.hpp"
#include "spintwa/sampler.hpp"

namespace py = pybind11;
using namespace spintwa;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

// (n_times, n_sites) array of one moment
py::array_t<double> moment_array(const ObservableSeries& s, int quant, bool errors) {
    const py::ssize_t nt = static_cast<py::ssize_t>(s.times.size());
    const py::ssize_t ns = s.n_sites;
    py::array_t<double> out({nt, ns});
    auto view = out.mutable_unchecked<2>();
    double row[kQuantPerSite];
    for (py::ssize_t t = 0; t < nt; ++t)
        for (py::ssize_t i = 0; i < ns; ++i) {
            spin_moments_to_row((errors ? s.err : s.mean)[t * ns + i], row);
            view(t, i) = row[quant];
        }
    return out;
}

py::dict series_to_dict(const ObservableSeries& s) {
    py::dict d;
    d["times"] = to_array(s.times);
    d["n_sites"] = s.n_sites;
    d["spin_s"] = s.spin_s;
    d["n_traj"] = s.n_traj;
    const std::pair<const char*, int> names[] = {
        {"sx", kQuantSx},   {"sy", kQuantSy},   {"sz", kQuantSz},
        {"sxx", kQuantSxx}, {"syy", kQuantSyy}, {"szz", kQuantSzz},
        {"sxy", kQuantSxy}, {"spsm", kQuantSpSm}, {"len", kQuantLen}};
    for (const auto& [name, quant] : names) {
        d[name] = moment_array(s, quant, false);
        d[(std::string(name) + "_err").c_str()] = moment_array(s, quant, true);
    }
    if (!s.squeezing.xi2.empty()) {
        d["xi2"] = to_array(s.squeezing.xi2);
        d["xi2_err"] = to_array(s.squeezing.xi2_err);
        std::vector<double> rel(s.squeezing.reliable.begin(), s.squeezing.reliable.end());
        d["xi2_reliable"] = to_array(rel);
    }
    return d;
}

py::dict simulate_json(const std::string& config_json) {
    const RunConfig cfg = run_config_from_json_string(config_json);
    EvolveOptions opts;
    opts.record_correlations = cfg.observables.correlations;
    opts.assemble.allow_interactions_for_pq = cfg.allow_interactions_for_pq;
    opts.assemble.jz_couples_beta = cfg.jz_couples_beta;
    opts.theta = cfg.initial_state.theta;
    opts.phi = cfg.initial_state.phi;
    const EnsembleResult res = evolve_ensemble(cfg.model, cfg.distribution, cfg.integrator, opts);
    const bool with_xi = cfg.observables.squeezing && cfg.model.n_sites == 1;
    py::dict out = series_to_dict(series_from_ensemble(res, with_xi));
    py::dict diag;
    diag["clamp_events"] = res.diagnostics.clamp_events;
    diag["diverged_trajectories"] = res.diagnostics.diverged_trajectories;
    diag["diverged_warning"] = res.diagnostics.diverged_warning;
    diag["dt"] = res.dt;
    diag["max_abs_spin_length_drift"] = res.diagnostics.max_abs_spin_length_drift;
    out["diagnostics"] = diag;
    if (cfg.observables.correlations && res.n_corr > 0) {
        const int t_last = static_cast<int>(res.times.size()) - 1;
        std::vector<double> cm(res.n_corr), ce(res.n_corr);
        for (int s = 0; s < res.n_corr; ++s) {
            cm[s] = res.corr_value(t_last, s);
            ce[s] = res.corr_error(t_last, s);
        }
        const CorrelationProfile prof = correlation_profile(cm, ce);
        py::dict corr;
        corr["s"] = py::cast(prof.separations);
        corr["c"] = to_array(prof.c);
        corr["c_err"] = to_array(prof.c_err);
        corr["xi_corr"] = prof.xi_corr;
        corr["residual"] = prof.residual;
        out["correlations"] = corr;
    }
    return out;
}

py::dict oracle_series_json(const std::string& model_json, std::vector<double> times,
                            double theta, double phi, double rtol, double atol,
                            bool squeezing) {
    const SpinModel model = model_from_json_string(model_json);
    return series_to_dict(
        series_from_oracle(model, InitialState{theta, phi}, times, rtol, atol, squeezing));
}

py::dict oracle_steady_state_json(const std::string& model_json) {
    const SpinModel model = model_from_json_string(model_json);
    const auto lind = oracle::build_lindbladian(model);
    const oracle::DenseC rho = oracle::steady_state(lind);
    py::dict d;
    py::list sites;
    for (int i = 0; i < model.n_sites; ++i) {
        const SpinMoments m = oracle::spin_moments(lind.sites[i], rho, model.spin_s);
        py::dict s;
        s["sx"] = m.sx;
        s["sy"] = m.sy;
        s["sz"] = m.sz;
        s["sxx"] = m.sxx;
        s["syy"] = m.syy;
        s["szz"] = m.szz;
        s["sxy"] = m.sxy;
        s["spsm"] = m.spsm;
        sites.append(s);
    }
    d["sites"] = sites;
    return d;
}

}  // namespace

PYBIND11_MODULE(_spintwa, m) {
    m.doc() = "stochastic phase-space simulation of dissipative collective spin systems";
    m.attr("__version__") = "0.1.0";

    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
    py::register_exception<oracle::OracleError>(m, "OracleError", PyExc_RuntimeError);

    m.def("validate_model", [](const std::string& model_json) {
        return model_to_json_string(model_from_json_string(model_json));
    }, py::arg("model_json"), "validate and normalize a model description, returns JSON");

    m.def("simulate", &simulate_json, py::arg("config_json"),
          "run the stochastic simulation described by a config JSON string");

    m.def("oracle_series", &oracle_series_json, py::arg("model_json"), py::arg("times"),
          py::arg("theta") = 0.0, py::arg("phi") = 0.0, py::arg("rtol") = 1e-8,
          py::arg("atol") = 1e-10, py::arg("squeezing") = false,
          "exact master-equation observables on a time grid");

    m.def("oracle_steady_state", &oracle_steady_state_json, py::arg("model_json"),
          "exact steady-state spin moments per site");

    m.def("sample_down_state", [](int k, double spin_s, uint64_t seed) {
        RngStream rng(seed, 0, RngStream::kDomainInitial);
        const auto [a, b] = sample_down_state(Distribution{k}, spin_s, rng);
        return py::make_tuple(a, b);
    }, py::arg("k"), py::arg("spin_s"), py::arg("seed") = 0,
       "draw one (alpha, beta) pair for the down state");

    m.def("rotate", [](complex_t a, complex_t b, double theta, double phi) {
        const auto [ra, rb] = rotate(a, b, theta, phi);
        return py::make_tuple(ra, rb);
    }, py::arg("alpha"), py::arg("beta"), py::arg("theta"), py::arg("phi"));
}
