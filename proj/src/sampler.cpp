#include "spintwa/sampler.hpp"

#include <cmath>
#include <numbers>
#include <tuple>

namespace spintwa {

std::pair<complex_t, complex_t> sample_down_state(Distribution k, double spin_s,
                                                  RngStream& rng) {
    const double root_2s = std::sqrt(2.0 * spin_s);
    switch (k.k) {
        case +1:
            return {complex_t(0.0, 0.0), complex_t(root_2s, 0.0)};
        case 0: {
            const complex_t a(0.5 * rng.normal(), 0.5 * rng.normal());
            const complex_t b(root_2s + 0.5 * rng.normal(), 0.5 * rng.normal());
            return {a, b};
        }
        case -1: {
            const double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
            const complex_t a(inv_sqrt2 * rng.normal(), inv_sqrt2 * rng.normal());
            const double r = std::sqrt(rng.gamma(2.0 * spin_s + 1.0));
            const double phase = 2.0 * std::numbers::pi * rng.uniform();
            return {a, complex_t(r * std::cos(phase), r * std::sin(phase))};
        }
        default:
            throw ModelError("distribution k must be -1, 0 or +1");
    }
}

std::pair<complex_t, complex_t> rotate(complex_t alpha, complex_t beta, double theta,
                                       double phi) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const complex_t phase = std::polar(1.0, phi);
    return {phase * (c * alpha - s * beta), s * alpha + c * beta};
}

PhasePoint sample_initial_point(const SpinModel& model, Distribution k, double theta,
                                double phi, uint64_t master_seed, uint64_t traj_index) {
    RngStream rng(master_seed, traj_index, RngStream::kDomainInitial);
    PhasePoint p;
    p.amplitudes.resize(2 * model.n_sites);
    for (int i = 0; i < model.n_sites; ++i) {
        auto [a, b] = sample_down_state(k, model.spin_s, rng);
        std::tie(p.alpha(i), p.beta(i)) = rotate(a, b, theta, phi);
    }
    return p;
}

std::vector<PhasePoint> sample_initial_ensemble(const SpinModel& model, Distribution k,
                                                double theta, double phi, int n_traj,
                                                uint64_t master_seed) {
    std::vector<PhasePoint> out;
    out.reserve(std::max(n_traj, 0));
    for (int j = 0; j < n_traj; ++j)
        out.push_back(sample_initial_point(model, k, theta, phi, master_seed,
                                           static_cast<uint64_t>(j)));
    return out;
}

}  // namespace spintwa
