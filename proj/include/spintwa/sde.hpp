#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spintwa/model.hpp"
#include "spintwa/observables.hpp"
#include "spintwa/sampler.hpp"

namespace spintwa {

/// One drift/noise contribution of the Ito equations. Couplings are already
/// rescaled; Wiener indices point into the per-step increment buffer.
struct TermRule {
    enum class Kind { Decay, Gain, Dephasing, Drive, Longitudinal, Twist, Bond };
    Kind kind = Kind::Decay;
    int site = 0;
    int site_b = 0;                  // bond partner
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    int wiener_offset = 0;
    int n_wieners = 0;
};

TermRule rule_decay(double rate_eff, int site);
TermRule rule_gain(double rate_eff, int site);
TermRule rule_dephasing(double rate_eff, int site);
TermRule rule_transverse_drive(double omega_eff, int site);
TermRule rule_longitudinal_field(double delta_eff, int site);
TermRule rule_one_axis_twist(double g_eff, int site);
TermRule rule_heisenberg_bond(double jx_eff, double jy_eff, double jz_eff, int site_i,
                              int site_j);

struct AssembleOptions {
    // Interaction terms (twist, bond) are only meaningful for the Wigner
    // distribution; k = +-1 requires this override.
    bool allow_interactions_for_pq = false;
    // Which amplitude the Jz drift multiplies in the beta equation. The
    // symmetric mean-field form couples beta; "alpha" selects an alternative
    // published form of the bond equations.
    bool jz_couples_beta = true;
};

struct RuleSet {
    std::vector<TermRule> rules;
    int n_sites = 0;
    double spin_s = 0.5;
    int k = 0;
    int n_wieners = 0;  // per step, totalled over rules
    bool jz_couples_beta = true;
};

/// One TermRule per model term with effective couplings; throws ModelError
/// when an interaction term is combined with k = +-1 without the override.
RuleSet assemble(const SpinModel& model, Distribution k, const AssembleOptions& opts = {});

/// Accumulates A(x) into dxdt (per unit time).
void accumulate_drift(const RuleSet& rules, const complex_t* x, complex_t* dxdt);
/// Accumulates B(x) dW into dx; dw holds n_wieners increments already scaled
/// by sqrt(dt). Negative square-root arguments are clamped to zero and
/// counted.
void accumulate_noise(const RuleSet& rules, const complex_t* x, const double* dw,
                      complex_t* dx, int64_t& clamp_events);

struct IntegratorConfig {
    double dt = 0.0;  // <= 0: use 1e-3 / rate_scale(model)
    double t_final = 1.0;
    std::vector<double> save_times;  // snapped to the step grid; empty: {0, t_final}
    int n_traj = 1000;
    uint64_t master_seed = 12345;
    int n_blocks = 0;  // <= 0: min(64, n_traj)
    int n_workers = 1;
    double divergence_factor = 1e3;  // bound = factor * (2S+1) on site |alpha|^2+|beta|^2
    double max_diverged_fraction = 0.01;
};

struct Diagnostics {
    int64_t clamp_events = 0;
    int64_t diverged_trajectories = 0;
    int64_t n_traj = 0;
    bool diverged_warning = false;
    // ensemble <(|alpha|^2+|beta|^2)/2> per time x site, minus its t=0 value
    std::vector<double> spin_length_drift;
    double max_abs_spin_length_drift = 0.0;
};

struct EnsembleResult {
    std::vector<double> times;  // snapped save times
    int n_sites = 0;
    double spin_s = 0.5;
    int k = 0;
    int n_corr = 0;  // 0 when correlations were not recorded
    int row_len = 0; // n_sites * kQuantPerSite + n_corr
    double dt = 0.0;
    // layout: [time][site * kQuantPerSite + q] then [time][corr s]
    std::vector<double> mean;
    std::vector<double> stderr_;
    // jackknife inputs: [block][time][row]
    std::vector<double> block_mean;
    std::vector<int64_t> block_count;
    Diagnostics diagnostics;

    double value(int t, int site, int quant) const {
        return mean[static_cast<size_t>(t) * row_len + site * kQuantPerSite + quant];
    }
    double error(int t, int site, int quant) const {
        return stderr_[static_cast<size_t>(t) * row_len + site * kQuantPerSite + quant];
    }
    double corr_value(int t, int s) const {
        return mean[static_cast<size_t>(t) * row_len + n_sites * kQuantPerSite + s];
    }
    double corr_error(int t, int s) const {
        return stderr_[static_cast<size_t>(t) * row_len + n_sites * kQuantPerSite + s];
    }
    SpinMoments site_moments(int t, int site) const {
        return spin_moments_from_row(mean.data() + static_cast<size_t>(t) * row_len +
                                     site * kQuantPerSite);
    }
};

struct EvolveOptions {
    bool record_correlations = false;
    AssembleOptions assemble;
    double theta = 0.0;
    double phi = 0.0;
};

/// Euler-Maruyama integration of the assembled Ito equations over n_traj
/// trajectories. Bit-reproducible for fixed (master_seed, config) regardless
/// of n_workers.
EnsembleResult evolve_ensemble(const SpinModel& model, Distribution k,
                               const IntegratorConfig& integrator,
                               const EvolveOptions& opts = {});

/// Step grid the save times snap to.
std::vector<int> snap_save_steps(const std::vector<double>& save_times, double dt,
                                 int n_steps);

}  // namespace spintwa
