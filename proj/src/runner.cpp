#include "spintwa/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spintwa/oracle.hpp"

namespace spintwa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ModelError(where + ": expected a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ModelError(where + ": unknown key '" + item.key() + "'");
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    if (n <= 1) {
        out.push_back(b);
        return out;
    }
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
    return out;
}

std::vector<double> parse_save_times(const json& j, double t_final) {
    if (j.is_array()) return j.get<std::vector<double>>();
    check_keys(j, {"start", "stop", "num"}, "save_times");
    const int num = j.at("num").get<int>();
    const double start = j.value("start", 0.0);
    const double stop = j.value("stop", t_final);
    return linspace(start, stop, num);
}

IntegratorConfig integrator_from_json(const json& j) {
    check_keys(j,
               {"dt", "t_final", "save_times", "n_traj", "master_seed", "n_blocks",
                "n_workers", "divergence_factor", "max_diverged_fraction", "clamp_policy"},
               "integrator");
    IntegratorConfig c;
    c.t_final = j.at("t_final").get<double>();
    c.dt = j.value("dt", 0.0);
    if (j.contains("save_times"))
        c.save_times = parse_save_times(j.at("save_times"), c.t_final);
    c.n_traj = j.value("n_traj", 1000);
    c.master_seed = j.value("master_seed", static_cast<uint64_t>(12345));
    c.n_blocks = j.value("n_blocks", 0);
    c.n_workers = j.value("n_workers", 1);
    c.divergence_factor = j.value("divergence_factor", 1e3);
    c.max_diverged_fraction = j.value("max_diverged_fraction", 0.01);
    if (j.contains("clamp_policy") && j.at("clamp_policy").get<std::string>() != "clamp_to_zero")
        throw ModelError("integrator: only clamp_policy \"clamp_to_zero\" is supported");
    return c;
}

BenchmarkTolerance tolerance_from_json(const json& j, const std::string& where) {
    check_keys(j, {"max_abs", "max_abs_over_s", "max_sigma"}, where);
    BenchmarkTolerance t;
    if (j.contains("max_abs")) t.max_abs = j.at("max_abs").get<double>();
    if (j.contains("max_abs_over_s")) t.max_abs_over_s = j.at("max_abs_over_s").get<double>();
    if (j.contains("max_sigma")) t.max_sigma = j.at("max_sigma").get<double>();
    return t;
}

}  // namespace

RunConfig run_config_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelError(std::string("config JSON parse error: ") + e.what());
    }
    check_keys(j,
               {"model", "distribution", "integrator", "initial_state", "observables",
                "allow_interactions_for_pq", "jz_beta_coupling", "output_dir", "sweep",
                "benchmark"},
               "config");
    RunConfig cfg;
    try {
        cfg.model = model_from_json_string(j.at("model").dump());
        cfg.distribution = distribution_from_name(j.value("distribution", std::string("wigner")));
        cfg.integrator = integrator_from_json(j.at("integrator"));
        if (j.contains("initial_state")) {
            const auto& init = j.at("initial_state");
            check_keys(init, {"theta", "phi"}, "initial_state");
            cfg.initial_state.theta = init.value("theta", 0.0);
            cfg.initial_state.phi = init.value("phi", 0.0);
        }
        if (j.contains("observables")) {
            const auto& obs = j.at("observables");
            check_keys(obs, {"moments", "squeezing", "correlations"}, "observables");
            cfg.observables.moments = obs.value("moments", true);
            cfg.observables.squeezing = obs.value("squeezing", false);
            cfg.observables.correlations = obs.value("correlations", false);
        }
        cfg.allow_interactions_for_pq = j.value("allow_interactions_for_pq", false);
        if (j.contains("jz_beta_coupling")) {
            const std::string v = j.at("jz_beta_coupling").get<std::string>();
            if (v == "beta")
                cfg.jz_couples_beta = true;
            else if (v == "alpha")
                cfg.jz_couples_beta = false;
            else
                throw ModelError("jz_beta_coupling must be \"beta\" or \"alpha\"");
        }
        cfg.output_dir = j.value("output_dir", std::string("out"));
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            check_keys(s, {"parameter", "values", "t_start", "window", "n_window", "with_oracle"},
                       "sweep");
            SweepConfig sw;
            sw.parameter = s.at("parameter").get<std::string>();
            sw.values = s.at("values").get<std::vector<double>>();
            sw.t_start = s.value("t_start", 40.0);
            sw.window = s.value("window", 10.0);
            sw.n_window = s.value("n_window", 26);
            sw.with_oracle = s.value("with_oracle", false);
            cfg.sweep = sw;
        }
        if (j.contains("benchmark")) {
            const auto& b = j.at("benchmark");
            check_keys(b, {"oracle_rtol", "oracle_atol", "tolerances", "squeezing"}, "benchmark");
            BenchmarkConfig bc;
            bc.oracle_rtol = b.value("oracle_rtol", 1e-8);
            bc.oracle_atol = b.value("oracle_atol", 1e-10);
            if (b.contains("tolerances"))
                for (const auto& item : b.at("tolerances").items())
                    bc.tolerances[item.key()] =
                        tolerance_from_json(item.value(), "tolerances." + item.key());
            if (b.contains("squeezing")) {
                const auto& s = b.at("squeezing");
                check_keys(s, {"min_rel", "argmin_rel", "curve_rel_to_opt"},
                           "benchmark.squeezing");
                SqueezingTolerance st;
                if (s.contains("min_rel")) st.min_rel = s.at("min_rel").get<double>();
                if (s.contains("argmin_rel")) st.argmin_rel = s.at("argmin_rel").get<double>();
                if (s.contains("curve_rel_to_opt"))
                    st.curve_rel_to_opt = s.at("curve_rel_to_opt").get<double>();
                bc.squeezing = st;
            }
            cfg.benchmark = bc;
        }
    } catch (const json::exception& e) {
        throw ModelError(std::string("config JSON: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return run_config_from_json_string(ss.str());
}

std::string run_config_to_json_string(const RunConfig& cfg) {
    json j;
    j["model"] = json::parse(model_to_json_string(cfg.model));
    j["distribution"] = distribution_name(cfg.distribution);
    j["initial_state"] = {{"theta", cfg.initial_state.theta}, {"phi", cfg.initial_state.phi}};
    json integ;
    integ["dt"] = cfg.integrator.dt;
    integ["t_final"] = cfg.integrator.t_final;
    integ["save_times"] = cfg.integrator.save_times;
    integ["n_traj"] = cfg.integrator.n_traj;
    integ["master_seed"] = cfg.integrator.master_seed;
    integ["n_blocks"] = cfg.integrator.n_blocks;
    integ["n_workers"] = cfg.integrator.n_workers;
    integ["divergence_factor"] = cfg.integrator.divergence_factor;
    integ["max_diverged_fraction"] = cfg.integrator.max_diverged_fraction;
    integ["clamp_policy"] = "clamp_to_zero";
    j["integrator"] = integ;
    j["observables"] = {{"moments", cfg.observables.moments},
                        {"squeezing", cfg.observables.squeezing},
                        {"correlations", cfg.observables.correlations}};
    j["allow_interactions_for_pq"] = cfg.allow_interactions_for_pq;
    j["jz_beta_coupling"] = cfg.jz_couples_beta ? "beta" : "alpha";
    j["output_dir"] = cfg.output_dir;
    if (cfg.sweep) {
        j["sweep"] = {{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values},
                      {"t_start", cfg.sweep->t_start},     {"window", cfg.sweep->window},
                      {"n_window", cfg.sweep->n_window},   {"with_oracle", cfg.sweep->with_oracle}};
    }
    if (cfg.benchmark) {
        json b;
        b["oracle_rtol"] = cfg.benchmark->oracle_rtol;
        b["oracle_atol"] = cfg.benchmark->oracle_atol;
        json tols = json::object();
        for (const auto& [name, t] : cfg.benchmark->tolerances) {
            json tj = json::object();
            if (t.max_abs) tj["max_abs"] = *t.max_abs;
            if (t.max_abs_over_s) tj["max_abs_over_s"] = *t.max_abs_over_s;
            if (t.max_sigma) tj["max_sigma"] = *t.max_sigma;
            tols[name] = tj;
        }
        b["tolerances"] = tols;
        if (cfg.benchmark->squeezing) {
            json s = json::object();
            if (cfg.benchmark->squeezing->min_rel) s["min_rel"] = *cfg.benchmark->squeezing->min_rel;
            if (cfg.benchmark->squeezing->argmin_rel)
                s["argmin_rel"] = *cfg.benchmark->squeezing->argmin_rel;
            if (cfg.benchmark->squeezing->curve_rel_to_opt)
                s["curve_rel_to_opt"] = *cfg.benchmark->squeezing->curve_rel_to_opt;
            b["squeezing"] = s;
        }
        j["benchmark"] = b;
    }
    return j.dump(2);
}

// --- series -----------------------------------------------------------------

ObservableSeries series_from_ensemble(const EnsembleResult& res, bool with_squeezing) {
    ObservableSeries s;
    s.times = res.times;
    s.n_sites = res.n_sites;
    s.spin_s = res.spin_s;
    s.n_traj = res.diagnostics.n_traj - res.diagnostics.diverged_trajectories;
    const int n_times = static_cast<int>(res.times.size());
    s.mean.resize(static_cast<size_t>(n_times) * res.n_sites);
    s.err.resize(s.mean.size());
    for (int t = 0; t < n_times; ++t)
        for (int i = 0; i < res.n_sites; ++i) {
            s.mean[t * res.n_sites + i] = spin_moments_from_row(
                res.mean.data() + static_cast<size_t>(t) * res.row_len + i * kQuantPerSite);
            s.err[t * res.n_sites + i] = spin_moments_from_row(
                res.stderr_.data() + static_cast<size_t>(t) * res.row_len + i * kQuantPerSite);
        }
    if (with_squeezing) {
        s.squeezing.xi2.resize(n_times);
        s.squeezing.xi2_err.resize(n_times);
        s.squeezing.reliable.resize(n_times);
        const int n_blocks = static_cast<int>(res.block_count.size());
        std::vector<double> block_rows(static_cast<size_t>(n_blocks) * res.row_len);
        for (int t = 0; t < n_times; ++t) {
            const SpinMoments m = s.mean[t * res.n_sites];
            s.squeezing.xi2[t] = squeezing_parameter(m, res.spin_s);
            for (int b = 0; b < n_blocks; ++b)
                std::copy_n(res.block_mean.data() +
                                (static_cast<size_t>(b) * n_times + t) * res.row_len,
                            res.row_len, block_rows.begin() + static_cast<size_t>(b) * res.row_len);
            s.squeezing.xi2_err[t] = jackknife_stderr(
                block_rows, res.block_count, res.row_len, [&](std::span<const double> row) {
                    return squeezing_parameter(spin_moments_from_row(row.data()), res.spin_s);
                });
            const double sz_err = s.err[t * res.n_sites].sz;
            s.squeezing.reliable[t] = std::abs(m.sz) >= 5.0 * sz_err ? 1 : 0;
        }
    }
    return s;
}

ObservableSeries series_from_oracle(const SpinModel& model, const InitialState& init,
                                    const std::vector<double>& times, double rtol, double atol,
                                    bool with_squeezing) {
    const auto lind = oracle::build_lindbladian(model);
    oracle::DenseC site_rho =
        init.theta == 0.0 && init.phi == 0.0
            ? oracle::down_state_density(model.spin_s)
            : oracle::coherent_state_density(model.spin_s, init.theta, init.phi);
    oracle::DenseC rho0 = oracle::product_state_density(site_rho, model.n_sites);
    oracle::EvolveTolerances tol;
    tol.rtol = rtol;
    tol.atol = atol;
    const auto states = oracle::evolve(lind, rho0, times, tol);

    ObservableSeries s;
    s.times = times;
    s.n_sites = model.n_sites;
    s.spin_s = model.spin_s;
    s.n_traj = 0;
    const int n_times = static_cast<int>(times.size());
    s.mean.resize(static_cast<size_t>(n_times) * model.n_sites);
    s.err.assign(s.mean.size(), SpinMoments{});
    for (int t = 0; t < n_times; ++t)
        for (int i = 0; i < model.n_sites; ++i)
            s.mean[t * model.n_sites + i] =
                oracle::spin_moments(lind.sites[i], states[t], model.spin_s);
    if (with_squeezing) {
        s.squeezing.xi2.resize(n_times);
        s.squeezing.xi2_err.assign(n_times, 0.0);
        s.squeezing.reliable.assign(n_times, 1);
        for (int t = 0; t < n_times; ++t)
            s.squeezing.xi2[t] = squeezing_parameter(s.mean[t * model.n_sites], model.spin_s);
    }
    return s;
}

// --- CSV ---------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : path_(path), tmp_(path + ".tmp") {
        out_.open(tmp_, std::ios::binary);
        if (!out_) throw ModelError("cannot open output file '" + tmp_ + "'");
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << "\r\n";
    }
    void close() {
        out_.close();
        fs::rename(tmp_, path_);
    }

private:
    std::string path_, tmp_;
    std::ofstream out_;
};

const char* kMomentNames[kQuantPerSite] = {"sx",  "sy",  "sz",   "sxx", "syy",
                                           "szz", "sxy", "spsm", "len"};

double moment_by_index(const SpinMoments& m, int q) {
    double row[kQuantPerSite];
    spin_moments_to_row(m, row);
    return row[q];
}

}  // namespace

void write_series_csv(const std::string& path, const ObservableSeries& s) {
    CsvWriter w(path);
    std::vector<std::string> header = {"time"};
    for (int i = 0; i < s.n_sites; ++i)
        for (int q = 0; q < kQuantPerSite; ++q) {
            header.push_back(std::string(kMomentNames[q]) + "_" + std::to_string(i));
            header.push_back(std::string(kMomentNames[q]) + "_err_" + std::to_string(i));
        }
    const bool with_xi = !s.squeezing.xi2.empty();
    if (with_xi) {
        header.push_back("xi2");
        header.push_back("xi2_err");
        header.push_back("xi2_reliable");
    }
    w.row(header);
    for (size_t t = 0; t < s.times.size(); ++t) {
        std::vector<std::string> row = {format_double(s.times[t])};
        for (int i = 0; i < s.n_sites; ++i)
            for (int q = 0; q < kQuantPerSite; ++q) {
                row.push_back(format_double(moment_by_index(s.mean[t * s.n_sites + i], q)));
                row.push_back(format_double(moment_by_index(s.err[t * s.n_sites + i], q)));
            }
        if (with_xi) {
            row.push_back(format_double(s.squeezing.xi2[t]));
            row.push_back(format_double(s.squeezing.xi2_err[t]));
            row.push_back(s.squeezing.reliable[t] ? "1" : "0");
        }
        w.row(row);
    }
    w.close();
}

void write_correlation_csv(const std::string& path, const CorrelationProfile& p) {
    CsvWriter w(path);
    w.row({"s", "c", "c_err"});
    for (size_t i = 0; i < p.c.size(); ++i)
        w.row({std::to_string(p.separations[i]), format_double(p.c[i]),
               format_double(p.c_err[i])});
    w.close();
}

// --- orchestration -----------------------------------------------------------

namespace {

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ModelError("cannot open output file '" + tmp + "'");
        out << text;
    }
    fs::rename(tmp, path);
}

RunConfig resolved_config(const RunConfig& cfg, const EnsembleResult& res,
                          const std::string& out_dir) {
    RunConfig r = cfg;
    r.integrator.dt = res.dt;
    r.integrator.save_times = res.times;
    if (r.integrator.n_blocks <= 0)
        r.integrator.n_blocks = std::min(64, std::max(r.integrator.n_traj, 1));
    r.output_dir = out_dir;
    return r;
}

EnsembleResult run_engine(const RunConfig& cfg) {
    EvolveOptions opts;
    opts.record_correlations = cfg.observables.correlations;
    opts.assemble.allow_interactions_for_pq = cfg.allow_interactions_for_pq;
    opts.assemble.jz_couples_beta = cfg.jz_couples_beta;
    opts.theta = cfg.initial_state.theta;
    opts.phi = cfg.initial_state.phi;
    return evolve_ensemble(cfg.model, cfg.distribution, cfg.integrator, opts);
}

json diagnostics_json(const EnsembleResult& res) {
    json d;
    d["n_traj"] = res.diagnostics.n_traj;
    d["clamp_events"] = res.diagnostics.clamp_events;
    d["diverged_trajectories"] = res.diagnostics.diverged_trajectories;
    d["diverged_warning"] = res.diagnostics.diverged_warning;
    d["dt"] = res.dt;
    d["spin_length_drift"] = {{"max_abs", res.diagnostics.max_abs_spin_length_drift}};
    return d;
}

CorrelationProfile profile_at_time(const EnsembleResult& res, int t) {
    std::vector<double> means(res.n_corr), errs(res.n_corr);
    for (int sidx = 0; sidx < res.n_corr; ++sidx) {
        means[sidx] = res.corr_value(t, sidx);
        errs[sidx] = res.corr_error(t, sidx);
    }
    return correlation_profile(means, errs);
}

}  // namespace

int run_simulate(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const EnsembleResult res = run_engine(cfg);
    const bool with_xi = cfg.observables.squeezing && cfg.model.n_sites == 1;
    const ObservableSeries series = series_from_ensemble(res, with_xi);
    write_series_csv(out_dir + "/observables.csv", series);

    json diag = diagnostics_json(res);
    if (cfg.observables.correlations && res.n_corr > 0) {
        const CorrelationProfile prof =
            profile_at_time(res, static_cast<int>(res.times.size()) - 1);
        write_correlation_csv(out_dir + "/correlations.csv", prof);
        diag["correlation_fit"] = {{"xi_corr", prof.xi_corr},
                                   {"residual", prof.residual},
                                   {"points_used", prof.points_used}};
    }
    write_text_atomic(out_dir + "/diagnostics.json", diag.dump(2) + "\n");
    write_text_atomic(out_dir + "/manifest.json",
                      run_config_to_json_string(resolved_config(cfg, res, out_dir)) + "\n");
    return res.diagnostics.diverged_warning ? kExitDiverged : kExitOk;
}

namespace {

struct ObservableCheck {
    std::string name;
    double max_abs_dev = 0.0;
    double max_sigma_dev = 0.0;
    bool checked = false;
    bool pass = true;
};

ObservableCheck compare_observable(const ObservableSeries& sim, const ObservableSeries& oracle,
                                   int quant, const std::string& name,
                                   const BenchmarkTolerance* tol, double spin_s) {
    ObservableCheck c;
    c.name = name;
    for (size_t t = 0; t < sim.times.size(); ++t)
        for (int i = 0; i < sim.n_sites; ++i) {
            const double dev = std::abs(moment_by_index(sim.mean[t * sim.n_sites + i], quant) -
                                        moment_by_index(oracle.mean[t * sim.n_sites + i], quant));
            const double err =
                std::max(moment_by_index(sim.err[t * sim.n_sites + i], quant), 1e-300);
            c.max_abs_dev = std::max(c.max_abs_dev, dev);
            c.max_sigma_dev = std::max(c.max_sigma_dev, dev / err);
        }
    if (tol) {
        c.checked = true;
        if (tol->max_abs && c.max_abs_dev > *tol->max_abs) c.pass = false;
        if (tol->max_abs_over_s && c.max_abs_dev > *tol->max_abs_over_s * spin_s) c.pass = false;
        if (tol->max_sigma && c.max_sigma_dev > *tol->max_sigma) c.pass = false;
    }
    return c;
}

}  // namespace

int run_benchmark(const RunConfig& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const BenchmarkConfig bench = cfg.benchmark.value_or(BenchmarkConfig{});
    const EnsembleResult res = run_engine(cfg);
    const bool with_xi = cfg.observables.squeezing && cfg.model.n_sites == 1;
    const ObservableSeries sim = series_from_ensemble(res, with_xi);

    ObservableSeries orc;
    try {
        orc = series_from_oracle(cfg.model, cfg.initial_state, sim.times, bench.oracle_rtol,
                                 bench.oracle_atol, with_xi);
    } catch (const oracle::OracleError& e) {
        std::cerr << "benchmark: " << e.what() << "\n";
        return kExitOracleDim;
    }

    write_series_csv(out_dir + "/sim_observables.csv", sim);
    write_series_csv(out_dir + "/oracle_observables.csv", orc);

    const std::pair<std::string, int> observables[] = {
        {"sx", kQuantSx},   {"sy", kQuantSy},   {"sz", kQuantSz},  {"sxx", kQuantSxx},
        {"syy", kQuantSyy}, {"szz", kQuantSzz}, {"sxy", kQuantSxy}};
    json report;
    report["n_traj"] = sim.n_traj;
    bool overall = true;
    json obs_report = json::object();
    for (const auto& [name, quant] : observables) {
        const auto it = bench.tolerances.find(name);
        const ObservableCheck c = compare_observable(
            sim, orc, quant, name, it == bench.tolerances.end() ? nullptr : &it->second,
            cfg.model.spin_s);
        json cj = {{"max_abs_dev", c.max_abs_dev},
                   {"max_sigma_dev", c.max_sigma_dev},
                   {"checked", c.checked}};
        if (c.checked) {
            cj["pass"] = c.pass;
            overall = overall && c.pass;
            std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << name
                      << ": max|dev| = " << c.max_abs_dev
                      << ", max dev/sigma = " << c.max_sigma_dev << "\n";
        }
        obs_report[name] = cj;
    }
    report["observables"] = obs_report;

    if (with_xi && !sim.squeezing.xi2.empty()) {
        const auto argmin = [](const std::vector<double>& v) {
            return static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
        };
        const int io = argmin(orc.squeezing.xi2);
        const int is = argmin(sim.squeezing.xi2);
        const double min_o = orc.squeezing.xi2[io];
        const double min_s = sim.squeezing.xi2[is];
        const double t_o = orc.times[io];
        const double t_s = sim.times[is];
        double curve_dev = 0.0;
        for (int t = 0; t <= io; ++t)
            curve_dev = std::max(curve_dev, std::abs(sim.squeezing.xi2[t] - orc.squeezing.xi2[t]) /
                                                std::abs(orc.squeezing.xi2[t]));
        json sq = {{"xi2_min_sim", min_s},
                   {"xi2_min_oracle", min_o},
                   {"t_opt_sim", t_s},
                   {"t_opt_oracle", t_o},
                   {"min_rel_dev", std::abs(min_s - min_o) / std::abs(min_o)},
                   {"argmin_rel_dev", t_o != 0.0 ? std::abs(t_s - t_o) / std::abs(t_o) : 0.0},
                   {"curve_rel_dev_to_opt", curve_dev}};
        if (bench.squeezing) {
            bool pass = true;
            if (bench.squeezing->min_rel && sq["min_rel_dev"].get<double>() > *bench.squeezing->min_rel)
                pass = false;
            if (bench.squeezing->argmin_rel &&
                sq["argmin_rel_dev"].get<double>() > *bench.squeezing->argmin_rel)
                pass = false;
            if (bench.squeezing->curve_rel_to_opt &&
                sq["curve_rel_dev_to_opt"].get<double>() > *bench.squeezing->curve_rel_to_opt)
                pass = false;
            sq["pass"] = pass;
            overall = overall && pass;
            std::cout << (pass ? "[PASS] " : "[FAIL] ") << "xi2: min " << min_s << " vs "
                      << min_o << ", t_opt " << t_s << " vs " << t_o << "\n";
        }
        report["squeezing"] = sq;
    }

    report["overall_pass"] = overall;
    report["diagnostics"] = diagnostics_json(res);
    write_text_atomic(out_dir + "/report.json", report.dump(2) + "\n");
    write_text_atomic(out_dir + "/manifest.json",
                      run_config_to_json_string(resolved_config(cfg, res, out_dir)) + "\n");
    return res.diagnostics.diverged_warning ? kExitDiverged : kExitOk;
}

// --- sweep --------------------------------------------------------------------

namespace {

SpinModel apply_sweep_parameter(const SpinModel& base, const std::string& parameter,
                                double value) {
    SpinModel m = base;
    int hits = 0;
    if (parameter == "omega" || parameter == "delta" || parameter == "g" ||
        parameter == "jx" || parameter == "jy" || parameter == "jz") {
        for (auto& term : m.hamiltonian)
            std::visit(
                [&](auto& t) {
                    using T = std::decay_t<decltype(t)>;
                    if constexpr (std::is_same_v<T, TransverseDrive>) {
                        if (parameter == "omega") {
                            t.omega = value;
                            ++hits;
                        }
                    } else if constexpr (std::is_same_v<T, LongitudinalField>) {
                        if (parameter == "delta") {
                            t.delta = value;
                            ++hits;
                        }
                    } else if constexpr (std::is_same_v<T, OneAxisTwist>) {
                        if (parameter == "g") {
                            t.g = value;
                            ++hits;
                        }
                    } else if constexpr (std::is_same_v<T, HeisenbergBond>) {
                        if (parameter == "jx") {
                            t.jx = value;
                            ++hits;
                        } else if (parameter == "jy") {
                            t.jy = value;
                            ++hits;
                        } else if (parameter == "jz") {
                            t.jz = value;
                            ++hits;
                        }
                    }
                },
                term);
    } else if (parameter == "gamma_decay" || parameter == "gamma_gain" ||
               parameter == "gamma_phi") {
        const DissipatorKind kind = parameter == "gamma_decay" ? DissipatorKind::Decay
                                    : parameter == "gamma_gain" ? DissipatorKind::Gain
                                                                : DissipatorKind::Dephasing;
        for (auto& d : m.dissipators)
            if (d.kind == kind) {
                d.rate = value;
                ++hits;
            }
    } else {
        throw ModelError("unknown sweep parameter '" + parameter + "'");
    }
    if (hits == 0)
        throw ModelError("sweep parameter '" + parameter + "' matches no model term");
    return validate(std::move(m));
}

struct SteadyEstimate {
    double value = 0.0;
    double err = 0.0;
};

// Window-averaged block rows for jackknifed steady-state estimators.
struct WindowStats {
    std::vector<double> mean;        // row_len
    std::vector<double> block_mean;  // n_blocks x row_len
    std::vector<int64_t> counts;
    int row_len = 0;
};

WindowStats window_average(const EnsembleResult& res, double t_start) {
    std::vector<int> idx;
    for (size_t t = 0; t < res.times.size(); ++t)
        if (res.times[t] >= t_start - 1e-12) idx.push_back(static_cast<int>(t));
    if (idx.empty()) throw ModelError("steady-state window contains no save times");
    WindowStats w;
    w.row_len = res.row_len;
    w.mean.assign(res.row_len, 0.0);
    const int n_blocks = static_cast<int>(res.block_count.size());
    w.block_mean.assign(static_cast<size_t>(n_blocks) * res.row_len, 0.0);
    w.counts = res.block_count;
    const int n_times = static_cast<int>(res.times.size());
    for (int t : idx) {
        for (int q = 0; q < res.row_len; ++q)
            w.mean[q] += res.mean[static_cast<size_t>(t) * res.row_len + q];
        for (int b = 0; b < n_blocks; ++b)
            for (int q = 0; q < res.row_len; ++q)
                w.block_mean[static_cast<size_t>(b) * res.row_len + q] +=
                    res.block_mean[(static_cast<size_t>(b) * n_times + t) * res.row_len + q];
    }
    const double inv = 1.0 / static_cast<double>(idx.size());
    for (auto& v : w.mean) v *= inv;
    for (auto& v : w.block_mean) v *= inv;
    return w;
}

SteadyEstimate estimate(const WindowStats& w,
                        const std::function<double(std::span<const double>)>& f) {
    SteadyEstimate e;
    e.value = f(w.mean);
    e.err = jackknife_stderr(w.block_mean, w.counts, w.row_len, f);
    return e;
}

double site_avg(std::span<const double> row, int n_sites, int quant) {
    double acc = 0.0;
    for (int i = 0; i < n_sites; ++i) acc += row[i * kQuantPerSite + quant];
    return acc / n_sites;
}

}  // namespace

int run_sweep(const RunConfig& cfg, const std::string& out_dir) {
    if (!cfg.sweep) {
        std::cerr << "sweep: no sweep block in config\n";
        return kExitConfig;
    }
    const SweepConfig& sw = *cfg.sweep;
    if (sw.values.empty()) {
        std::cerr << "sweep: empty value list\n";
        return kExitConfig;
    }
    fs::create_directories(out_dir);

    const int n_sites = cfg.model.n_sites;
    int exit_code = kExitOk;
    std::vector<std::vector<std::string>> rows;

    for (size_t ip = 0; ip < sw.values.size(); ++ip) {
        const double value = sw.values[ip];
        const SpinModel model_v = apply_sweep_parameter(cfg.model, sw.parameter, value);

        RunConfig point = cfg;
        point.model = model_v;
        point.integrator.t_final = sw.t_start + sw.window;
        point.integrator.save_times = linspace(sw.t_start, sw.t_start + sw.window, sw.n_window);
        point.integrator.save_times.insert(point.integrator.save_times.begin(), 0.0);

        const EnsembleResult res = run_engine(point);
        if (res.diagnostics.diverged_warning) exit_code = std::max(exit_code, kExitDiverged);

        const WindowStats w = window_average(res, sw.t_start);
        auto q_est = [&](int quant) {
            return estimate(w, [&, quant](std::span<const double> row) {
                return site_avg(row, n_sites, quant);
            });
        };
        auto var_est = [&](int q2, int q1) {
            return estimate(w, [&, q2, q1](std::span<const double> row) {
                double acc = 0.0;
                for (int i = 0; i < n_sites; ++i) {
                    const double m2 = row[i * kQuantPerSite + q2];
                    const double m1 = row[i * kQuantPerSite + q1];
                    acc += m2 - m1 * m1;
                }
                return acc / n_sites;
            });
        };
        const SteadyEstimate est[] = {q_est(kQuantSx),  q_est(kQuantSy),  q_est(kQuantSz),
                                      q_est(kQuantSxx), q_est(kQuantSyy), q_est(kQuantSzz)};
        const SteadyEstimate var[] = {var_est(kQuantSxx, kQuantSx), var_est(kQuantSyy, kQuantSy),
                                      var_est(kQuantSzz, kQuantSz)};

        CorrelationProfile prof;
        SteadyEstimate xi_corr{std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN()};
        if (cfg.observables.correlations && res.n_corr > 0) {
            std::vector<double> cm(res.n_corr), ce(res.n_corr, 0.0);
            for (int sidx = 0; sidx < res.n_corr; ++sidx)
                cm[sidx] = w.mean[n_sites * kQuantPerSite + sidx];
            prof = correlation_profile(cm, ce);
            const auto fit_xi = [&](std::span<const double> row) {
                std::vector<double> c(res.n_corr), e(res.n_corr, 0.0);
                for (int sidx = 0; sidx < res.n_corr; ++sidx)
                    c[sidx] = row[n_sites * kQuantPerSite + sidx];
                return correlation_profile(c, e).xi_corr;
            };
            xi_corr = estimate(w, fit_xi);
            // recompute errors on C(s) from block spread for the profile file
            for (int sidx = 1; sidx < res.n_corr; ++sidx) {
                prof.c_err[sidx] = jackknife_stderr(
                    w.block_mean, w.counts, w.row_len, [&, sidx](std::span<const double> row) {
                        return row[n_sites * kQuantPerSite + sidx] /
                               row[n_sites * kQuantPerSite];
                    });
            }
        }

        // per-point outputs
        const std::string point_dir = out_dir + "/point_" + std::to_string(ip);
        fs::create_directories(point_dir);
        write_series_csv(point_dir + "/observables.csv", series_from_ensemble(res, false));
        json diag = diagnostics_json(res);
        diag["sweep_value"] = value;
        if (cfg.observables.correlations && res.n_corr > 0) {
            write_correlation_csv(point_dir + "/correlations.csv", prof);
            diag["correlation_fit"] = {{"xi_corr", prof.xi_corr},
                                       {"residual", prof.residual},
                                       {"points_used", prof.points_used}};
        }
        write_text_atomic(point_dir + "/diagnostics.json", diag.dump(2) + "\n");

        std::vector<std::string> row = {sw.parameter,
                                        format_double(value),
                                        std::to_string(res.diagnostics.n_traj -
                                                       res.diagnostics.diverged_trajectories)};
        for (const auto& e : est) {
            row.push_back(format_double(e.value));
            row.push_back(format_double(e.err));
        }
        for (const auto& e : var) {
            row.push_back(format_double(e.value));
            row.push_back(format_double(e.err));
        }
        row.push_back(format_double(xi_corr.value));
        row.push_back(format_double(xi_corr.err));
        row.push_back(format_double(prof.residual));
        row.push_back(std::to_string(res.diagnostics.clamp_events));
        row.push_back(std::to_string(res.diagnostics.diverged_trajectories));

        if (sw.with_oracle) {
            try {
                const auto lind = oracle::build_lindbladian(model_v);
                const oracle::DenseC rho = oracle::steady_state(lind);
                double osx = 0, osy = 0, osz = 0, osxx = 0, osyy = 0, oszz = 0;
                for (int i = 0; i < n_sites; ++i) {
                    const SpinMoments m = oracle::spin_moments(lind.sites[i], rho, model_v.spin_s);
                    osx += m.sx / n_sites;
                    osy += m.sy / n_sites;
                    osz += m.sz / n_sites;
                    osxx += m.sxx / n_sites;
                    osyy += m.syy / n_sites;
                    oszz += m.szz / n_sites;
                }
                for (double v : {osx, osy, osz, osxx, osyy, oszz,
                                 osxx - osx * osx, osyy - osy * osy, oszz - osz * osz})
                    row.push_back(format_double(v));
            } catch (const oracle::OracleError& e) {
                std::cerr << "sweep: " << e.what() << "\n";
                return kExitOracleDim;
            }
        }
        rows.push_back(std::move(row));
    }

    CsvWriter w(out_dir + "/sweep.csv");
    std::vector<std::string> header = {"parameter", "value", "n_traj"};
    for (const char* n : {"sx", "sy", "sz", "sxx", "syy", "szz"}) {
        header.push_back(n);
        header.push_back(std::string(n) + "_err");
    }
    for (const char* n : {"var_sx", "var_sy", "var_sz"}) {
        header.push_back(n);
        header.push_back(std::string(n) + "_err");
    }
    header.insert(header.end(),
                  {"xi_corr", "xi_corr_err", "corr_residual", "clamp_events", "diverged"});
    if (sw.with_oracle)
        for (const char* n : {"oracle_sx", "oracle_sy", "oracle_sz", "oracle_sxx", "oracle_syy",
                              "oracle_szz", "oracle_var_sx", "oracle_var_sy", "oracle_var_sz"})
            header.push_back(n);
    w.row(header);
    for (const auto& r : rows) w.row(r);
    w.close();

    write_text_atomic(out_dir + "/manifest.json", run_config_to_json_string(cfg) + "\n");
    return exit_code;
}

}  // namespace spintwa
