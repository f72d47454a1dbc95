#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spintwa/model.hpp"
#include "spintwa/observables.hpp"
#include "spintwa/sde.hpp"

namespace spintwa {

struct InitialState {
    double theta = 0.0;
    double phi = 0.0;
};

struct ObservablesSelection {
    bool moments = true;
    bool squeezing = false;
    bool correlations = false;
};

struct SweepConfig {
    std::string parameter;  // omega|delta|g|jx|jy|jz|gamma_decay|gamma_gain|gamma_phi
    std::vector<double> values;
    double t_start = 40.0;
    double window = 10.0;
    int n_window = 26;  // save points inside the averaging window
    bool with_oracle = false;
};

struct BenchmarkTolerance {
    std::optional<double> max_abs;
    std::optional<double> max_abs_over_s;
    std::optional<double> max_sigma;
};

struct SqueezingTolerance {
    std::optional<double> min_rel;           // relative deviation of min xi^2
    std::optional<double> argmin_rel;        // relative deviation of the optimum time
    std::optional<double> curve_rel_to_opt;  // max relative deviation for t <= t_opt
};

struct BenchmarkConfig {
    double oracle_rtol = 1e-8;
    double oracle_atol = 1e-10;
    std::map<std::string, BenchmarkTolerance> tolerances;
    std::optional<SqueezingTolerance> squeezing;
};

struct RunConfig {
    SpinModel model;
    Distribution distribution = Distribution::wigner();
    IntegratorConfig integrator;
    InitialState initial_state;
    ObservablesSelection observables;
    bool allow_interactions_for_pq = false;
    bool jz_couples_beta = true;
    std::string output_dir = "out";
    std::optional<SweepConfig> sweep;
    std::optional<BenchmarkConfig> benchmark;
};

RunConfig run_config_from_json_string(const std::string& text);
RunConfig load_run_config(const std::string& path);
/// Serializes the fully resolved configuration (explicit save times, seed,
/// dt). The emitted document is itself a valid run config.
std::string run_config_to_json_string(const RunConfig& cfg);

/// Time series of per-site quantum spin moments, shared between the
/// stochastic engine and the exact reference so outputs are file-diffable.
struct ObservableSeries {
    std::vector<double> times;
    int n_sites = 1;
    double spin_s = 0.5;
    int64_t n_traj = 0;  // 0 for exact results
    std::vector<SpinMoments> mean;  // [time * n_sites + site]
    std::vector<SpinMoments> err;
    SqueezingSeries squeezing;  // empty unless enabled

    const SpinMoments& at(int t, int site) const { return mean[t * n_sites + site]; }
};

ObservableSeries series_from_ensemble(const EnsembleResult& res, bool with_squeezing);
/// Exact master-equation series for the same model/initial state/time grid.
/// Throws oracle::OracleError beyond the dimension limits.
ObservableSeries series_from_oracle(const SpinModel& model, const InitialState& init,
                                    const std::vector<double>& times, double rtol = 1e-8,
                                    double atol = 1e-10, bool with_squeezing = false);

void write_series_csv(const std::string& path, const ObservableSeries& s);
void write_correlation_csv(const std::string& path, const CorrelationProfile& p);

// exit codes: 0 ok, 2 config error, 3 diverged fraction above limit,
// 4 oracle dimension limit
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitOracleDim = 4;

int run_simulate(const RunConfig& cfg, const std::string& out_dir);
int run_benchmark(const RunConfig& cfg, const std::string& out_dir);
int run_sweep(const RunConfig& cfg, const std::string& out_dir);

}  // namespace spintwa
