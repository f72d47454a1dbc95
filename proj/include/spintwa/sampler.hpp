#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "spintwa/model.hpp"
#include "spintwa/rng.hpp"

namespace spintwa {

using complex_t = std::complex<double>;

/// One trajectory's phase-space point: 2N complex Schwinger amplitudes
/// ordered (alpha_1, beta_1, alpha_2, beta_2, ...).
struct PhasePoint {
    std::vector<complex_t> amplitudes;

    int n_sites() const { return static_cast<int>(amplitudes.size() / 2); }
    complex_t& alpha(int site) { return amplitudes[2 * site]; }
    complex_t& beta(int site) { return amplitudes[2 * site + 1]; }
    const complex_t& alpha(int site) const { return amplitudes[2 * site]; }
    const complex_t& beta(int site) const { return amplitudes[2 * site + 1]; }

    bool operator==(const PhasePoint&) const = default;
};

/// Draws one site's (alpha, beta) for the fully polarized down state:
///   k = +1 : deterministic (0, sqrt(2S))
///   k =  0 : coherent-state Gaussian, quadrature variance 1/4 per mode
///   k = -1 : alpha unit complex Gaussian, |beta|^2 ~ Gamma(2S+1), uniform phase
std::pair<complex_t, complex_t> sample_down_state(Distribution k, double spin_s,
                                                  RngStream& rng);

/// Beam-splitter rotation taking the down state to the spin-coherent state
/// (theta, phi). Preserves |alpha|^2 + |beta|^2.
std::pair<complex_t, complex_t> rotate(complex_t alpha, complex_t beta, double theta,
                                       double phi);

/// All sites initialized to the same (theta, phi) state; the stream is derived
/// from (master_seed, traj_index) only.
PhasePoint sample_initial_point(const SpinModel& model, Distribution k, double theta,
                                double phi, uint64_t master_seed, uint64_t traj_index);

std::vector<PhasePoint> sample_initial_ensemble(const SpinModel& model, Distribution k,
                                                double theta, double phi, int n_traj,
                                                uint64_t master_seed);

}  // namespace spintwa
