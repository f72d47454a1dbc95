#include "spintwa/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "spintwa/accumulator.hpp"

namespace spintwa {

TermRule rule_decay(double rate_eff, int site) {
    return {TermRule::Kind::Decay, site, 0, rate_eff, 0.0, 0.0, 0, 4};
}
TermRule rule_gain(double rate_eff, int site) {
    return {TermRule::Kind::Gain, site, 0, rate_eff, 0.0, 0.0, 0, 4};
}
TermRule rule_dephasing(double rate_eff, int site) {
    return {TermRule::Kind::Dephasing, site, 0, rate_eff, 0.0, 0.0, 0, 1};
}
TermRule rule_transverse_drive(double omega_eff, int site) {
    return {TermRule::Kind::Drive, site, 0, omega_eff, 0.0, 0.0, 0, 0};
}
TermRule rule_longitudinal_field(double delta_eff, int site) {
    return {TermRule::Kind::Longitudinal, site, 0, delta_eff, 0.0, 0.0, 0, 0};
}
TermRule rule_one_axis_twist(double g_eff, int site) {
    return {TermRule::Kind::Twist, site, 0, g_eff, 0.0, 0.0, 0, 0};
}
TermRule rule_heisenberg_bond(double jx_eff, double jy_eff, double jz_eff, int site_i,
                              int site_j) {
    return {TermRule::Kind::Bond, site_i, site_j, jx_eff, jy_eff, jz_eff, 0, 0};
}

RuleSet assemble(const SpinModel& model, Distribution k, const AssembleOptions& opts) {
    if (!model.validated) throw ModelError("assemble requires a validated model");
    RuleSet rs;
    rs.n_sites = model.n_sites;
    rs.spin_s = model.spin_s;
    rs.k = k.k;
    rs.jz_couples_beta = opts.jz_couples_beta;

    for (const auto& term : model.hamiltonian) {
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, TransverseDrive>)
                    rs.rules.push_back(rule_transverse_drive(effective_drive(model, t), t.site));
                else if constexpr (std::is_same_v<T, LongitudinalField>)
                    rs.rules.push_back(
                        rule_longitudinal_field(effective_field(model, t), t.site));
                else if constexpr (std::is_same_v<T, OneAxisTwist>) {
                    if (k.k != 0 && !opts.allow_interactions_for_pq)
                        throw ModelError("interaction terms require the Wigner distribution");
                    rs.rules.push_back(rule_one_axis_twist(effective_twist(model, t), t.site));
                } else if constexpr (std::is_same_v<T, HeisenbergBond>) {
                    if (k.k != 0 && !opts.allow_interactions_for_pq)
                        throw ModelError("interaction terms require the Wigner distribution");
                    const auto j = effective_bond(model, t);
                    rs.rules.push_back(
                        rule_heisenberg_bond(j[0], j[1], j[2], t.site_i, t.site_j));
                }
            },
            term);
    }
    for (const auto& d : model.dissipators) {
        const double rate = effective_rate(model, d);
        const int site = d.site.value();
        switch (d.kind) {
            case DissipatorKind::Decay: rs.rules.push_back(rule_decay(rate, site)); break;
            case DissipatorKind::Gain: rs.rules.push_back(rule_gain(rate, site)); break;
            case DissipatorKind::Dephasing:
                rs.rules.push_back(rule_dephasing(rate, site));
                break;
        }
    }
    int offset = 0;
    for (auto& r : rs.rules) {
        r.wiener_offset = offset;
        offset += r.n_wieners;
    }
    rs.n_wieners = offset;
    return rs;
}

namespace {

inline double norm2(const complex_t& z) {
    return z.real() * z.real() + z.imag() * z.imag();
}

inline double clamped_sqrt(double arg, int64_t& clamp_events) {
    if (arg < 0.0) {
        ++clamp_events;
        return 0.0;
    }
    return std::sqrt(arg);
}

}  // namespace

void accumulate_drift(const RuleSet& rules, const complex_t* x, complex_t* dxdt) {
    const int k = rules.k;
    const double kp = 0.5 * (1 + k);  // (1+k)/2
    const double km = 0.5 * (1 - k);  // (1-k)/2
    constexpr complex_t I(0.0, 1.0);
    for (const auto& r : rules.rules) {
        const complex_t a = x[2 * r.site];
        const complex_t b = x[2 * r.site + 1];
        switch (r.kind) {
            case TermRule::Kind::Decay: {
                dxdt[2 * r.site] += -r.c0 * (norm2(b) + kp) * a;
                dxdt[2 * r.site + 1] += r.c0 * (norm2(a) - km) * b;
                break;
            }
            case TermRule::Kind::Gain: {
                dxdt[2 * r.site] += r.c0 * (norm2(b) - km) * a;
                dxdt[2 * r.site + 1] += -r.c0 * (norm2(a) + kp) * b;
                break;
            }
            case TermRule::Kind::Dephasing: {
                dxdt[2 * r.site] += -0.25 * r.c0 * a;
                dxdt[2 * r.site + 1] += -0.25 * r.c0 * b;
                break;
            }
            case TermRule::Kind::Drive: {
                dxdt[2 * r.site] += -I * (0.5 * r.c0) * b;
                dxdt[2 * r.site + 1] += -I * (0.5 * r.c0) * a;
                break;
            }
            case TermRule::Kind::Longitudinal: {
                dxdt[2 * r.site] += -I * (0.5 * r.c0) * a;
                dxdt[2 * r.site + 1] += I * (0.5 * r.c0) * b;
                break;
            }
            case TermRule::Kind::Twist: {
                dxdt[2 * r.site] += -I * (0.5 * r.c0) * (std::conj(a) * b * b + a * norm2(b));
                dxdt[2 * r.site + 1] +=
                    -I * (0.5 * r.c0) * (std::conj(b) * a * a + norm2(a) * b);
                break;
            }
            case TermRule::Kind::Bond: {
                // symmetric contribution to both bond ends
                const int sites[2] = {r.site, r.site_b};
                for (int which = 0; which < 2; ++which) {
                    const int n = sites[which];
                    const int m = sites[1 - which];
                    const complex_t am = x[2 * m];
                    const complex_t bm = x[2 * m + 1];
                    const complex_t xm = (r.c0 + r.c1) * (am * std::conj(bm)) +
                                         (r.c0 - r.c1) * (std::conj(am) * bm);
                    const double zm = r.c2 * (norm2(am) - norm2(bm));
                    const complex_t an = x[2 * n];
                    const complex_t bn = x[2 * n + 1];
                    dxdt[2 * n] += -0.25 * I * (xm * bn + zm * an);
                    dxdt[2 * n + 1] +=
                        -0.25 * I * (std::conj(xm) * an - zm * (rules.jz_couples_beta ? bn : an));
                }
                break;
            }
        }
    }
}

void accumulate_noise(const RuleSet& rules, const complex_t* x, const double* dw,
                      complex_t* dx, int64_t& clamp_events) {
    const int k = rules.k;
    const double kp = 0.5 * (1 + k);
    const double km = 0.5 * (1 - k);
    for (const auto& r : rules.rules) {
        const double* w = dw + r.wiener_offset;
        switch (r.kind) {
            case TermRule::Kind::Decay: {
                const complex_t a = x[2 * r.site];
                const complex_t b = x[2 * r.site + 1];
                if (km > 0.0) {
                    const double amp = clamped_sqrt(r.c0 * km * (norm2(b) + kp), clamp_events);
                    dx[2 * r.site] += amp * complex_t(w[0], w[1]);
                }
                if (kp > 0.0) {
                    const double amp = clamped_sqrt(r.c0 * kp * (norm2(a) - km), clamp_events);
                    dx[2 * r.site + 1] += amp * complex_t(w[2], w[3]);
                }
                break;
            }
            case TermRule::Kind::Gain: {
                const complex_t a = x[2 * r.site];
                const complex_t b = x[2 * r.site + 1];
                if (km > 0.0) {
                    const double amp = clamped_sqrt(r.c0 * km * (norm2(a) + kp), clamp_events);
                    dx[2 * r.site + 1] += amp * complex_t(w[0], w[1]);
                }
                if (kp > 0.0) {
                    const double amp = clamped_sqrt(r.c0 * kp * (norm2(b) - km), clamp_events);
                    dx[2 * r.site] += amp * complex_t(w[2], w[3]);
                }
                break;
            }
            case TermRule::Kind::Dephasing: {
                // one shared Wiener, opposite-sign multiplicative noise
                const double amp = std::sqrt(0.5 * r.c0);
                const complex_t iw(0.0, amp * w[0]);
                dx[2 * r.site] += iw * x[2 * r.site];
                dx[2 * r.site + 1] += -iw * x[2 * r.site + 1];
                break;
            }
            default:
                break;  // Hamiltonian rules carry no noise
        }
    }
}

std::vector<int> snap_save_steps(const std::vector<double>& save_times, double dt,
                                 int n_steps) {
    std::vector<int> steps;
    steps.reserve(save_times.size());
    for (double t : save_times) {
        int s = static_cast<int>(std::llround(t / dt));
        s = std::clamp(s, 0, n_steps);
        steps.push_back(s);
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    return steps;
}

namespace {

struct ResolvedGrid {
    double dt;
    int n_steps;
    std::vector<int> save_steps;
    std::vector<double> times;
};

ResolvedGrid resolve_grid(const SpinModel& model, const IntegratorConfig& cfg) {
    ResolvedGrid g;
    g.dt = cfg.dt > 0.0 ? cfg.dt : 1e-3 / rate_scale(model);
    if (!(cfg.t_final >= 0.0)) throw ModelError("t_final must be >= 0");
    g.n_steps = static_cast<int>(std::llround(cfg.t_final / g.dt));
    std::vector<double> save = cfg.save_times;
    if (save.empty()) save = {0.0, cfg.t_final};
    g.save_steps = snap_save_steps(save, g.dt, g.n_steps);
    g.times.reserve(g.save_steps.size());
    for (int s : g.save_steps) g.times.push_back(s * g.dt);
    return g;
}

class TrajectoryRecorder {
public:
    TrajectoryRecorder(int n_times, int n_sites, int n_corr, int k)
        : n_sites_(n_sites), n_corr_(n_corr), k_(k), row_len_(n_sites * kQuantPerSite + n_corr),
          rows_(static_cast<size_t>(n_times) * row_len_) {}

    int row_len() const { return row_len_; }
    std::span<const double> rows() const { return rows_; }

    void record(int save_idx, const complex_t* x) {
        double* row = rows_.data() + static_cast<size_t>(save_idx) * row_len_;
        for (int i = 0; i < n_sites_; ++i) {
            const complex_t a = x[2 * i];
            const complex_t b = x[2 * i + 1];
            SiteMoments m;
            m.xa = norm2(a);
            m.xb = norm2(b);
            m.ab = std::conj(a) * b;
            m.a2b2 = m.ab * m.ab;
            m.xa2 = m.xa * m.xa;
            m.xb2 = m.xb * m.xb;
            m.xab = m.xa * m.xb;
            spin_moments_to_row(spin_from_phase_moments(m, k_), row + i * kQuantPerSite);
        }
        if (n_corr_ > 0) {
            double* corr = row + n_sites_ * kQuantPerSite;
            // s = 0: site-averaged <S+S-> (the C(s) denominator)
            double d = 0.0;
            for (int i = 0; i < n_sites_; ++i) d += row[i * kQuantPerSite + kQuantSpSm];
            corr[0] = d / n_sites_;
            for (int s = 1; s < n_corr_; ++s) {
                double acc = 0.0;
                for (int n = 0; n < n_sites_; ++n) {
                    const int m = (n + s) % n_sites_;
                    const complex_t ab_n = std::conj(x[2 * n]) * x[2 * n + 1];
                    const complex_t ab_m = std::conj(x[2 * m]) * x[2 * m + 1];
                    acc += (ab_n * std::conj(ab_m)).real();
                }
                corr[s] = acc / n_sites_;
            }
        }
    }

private:
    int n_sites_;
    int n_corr_;
    int k_;
    int row_len_;
    std::vector<double> rows_;
};

}  // namespace

EnsembleResult evolve_ensemble(const SpinModel& model, Distribution k,
                               const IntegratorConfig& cfg, const EvolveOptions& opts) {
    const RuleSet rules = assemble(model, k, opts.assemble);
    const ResolvedGrid grid = resolve_grid(model, cfg);
    if (cfg.n_traj < 0) throw ModelError("n_traj must be >= 0");

    const int n_traj = cfg.n_traj;
    const int n_blocks = cfg.n_blocks > 0 ? std::min(cfg.n_blocks, std::max(n_traj, 1))
                                          : std::min(64, std::max(n_traj, 1));
    const int n_times = static_cast<int>(grid.save_steps.size());
    const int n_corr = opts.record_correlations ? model.n_sites / 2 + 1 : 0;
    const int row_len = model.n_sites * kQuantPerSite + n_corr;
    const int dim = 2 * model.n_sites;
    const double bound = cfg.divergence_factor * (2.0 * model.spin_s + 1.0);

    EnsembleAccumulator acc(n_blocks, n_times, row_len);

    auto run_block = [&](int block) {
        const int64_t lo = static_cast<int64_t>(block) * n_traj / n_blocks;
        const int64_t hi = static_cast<int64_t>(block + 1) * n_traj / n_blocks;
        std::vector<complex_t> x(dim), dx(dim);
        std::vector<double> dw(std::max(rules.n_wieners, 1));
        const double sqrt_dt = std::sqrt(grid.dt);
        TrajectoryRecorder rec(n_times, model.n_sites, n_corr, k.k);

        for (int64_t traj = lo; traj < hi; ++traj) {
            PhasePoint p = sample_initial_point(model, k, opts.theta, opts.phi,
                                                cfg.master_seed, traj);
            std::copy(p.amplitudes.begin(), p.amplitudes.end(), x.begin());
            RngStream rng(cfg.master_seed, traj, RngStream::kDomainDynamics);
            int64_t clamps = 0;
            bool diverged = false;
            int save_ptr = 0;
            for (int step = 0; step <= grid.n_steps; ++step) {
                while (save_ptr < n_times && grid.save_steps[save_ptr] == step) {
                    rec.record(save_ptr, x.data());
                    ++save_ptr;
                }
                if (step == grid.n_steps) break;
                std::fill(dx.begin(), dx.end(), complex_t(0.0, 0.0));
                accumulate_drift(rules, x.data(), dx.data());
                for (int i = 0; i < dim; ++i) dx[i] *= grid.dt;
                if (rules.n_wieners > 0) {
                    for (int j = 0; j < rules.n_wieners; ++j) dw[j] = sqrt_dt * rng.normal();
                    accumulate_noise(rules, x.data(), dw.data(), dx.data(), clamps);
                }
                for (int i = 0; i < dim; ++i) x[i] += dx[i];
                for (int i = 0; i < model.n_sites; ++i) {
                    const double len2 = norm2(x[2 * i]) + norm2(x[2 * i + 1]);
                    if (!std::isfinite(len2) || len2 > bound) {
                        diverged = true;
                        break;
                    }
                }
                if (diverged) break;
            }
            acc.add_clamp_events(block, clamps);
            if (diverged)
                acc.add_diverged(block);
            else
                acc.add_trajectory(block, rec.rows());
        }
    };

    const int n_workers = std::max(1, cfg.n_workers);
    if (n_workers == 1 || n_blocks == 1) {
        for (int b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> threads;
        const int nw = std::min(n_workers, n_blocks);
        threads.reserve(nw);
        for (int w = 0; w < nw; ++w)
            threads.emplace_back([&] {
                for (;;) {
                    const int b = next.fetch_add(1);
                    if (b >= n_blocks) return;
                    run_block(b);
                }
            });
        for (auto& t : threads) t.join();
    }

    auto summary = acc.finalize();
    EnsembleResult res;
    res.times = grid.times;
    res.n_sites = model.n_sites;
    res.spin_s = model.spin_s;
    res.k = k.k;
    res.n_corr = n_corr;
    res.row_len = row_len;
    res.dt = grid.dt;
    res.mean = std::move(summary.mean);
    res.stderr_ = std::move(summary.stderr_);
    res.block_mean = std::move(summary.block_mean);
    res.block_count = std::move(summary.block_count);
    res.diagnostics.clamp_events = summary.clamp_events;
    res.diagnostics.diverged_trajectories = summary.n_diverged;
    res.diagnostics.n_traj = n_traj;
    res.diagnostics.diverged_warning =
        n_traj > 0 && summary.n_diverged > cfg.max_diverged_fraction * n_traj;
    res.diagnostics.spin_length_drift.resize(static_cast<size_t>(n_times) * model.n_sites);
    for (int t = 0; t < n_times; ++t)
        for (int i = 0; i < model.n_sites; ++i) {
            const double drift =
                res.value(t, i, kQuantLen) - res.value(0, i, kQuantLen);
            res.diagnostics.spin_length_drift[static_cast<size_t>(t) * model.n_sites + i] =
                drift;
            res.diagnostics.max_abs_spin_length_drift =
                std::max(res.diagnostics.max_abs_spin_length_drift, std::abs(drift));
        }
    return res;
}

}  // namespace spintwa
