#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <vector>

#include "spintwa/model.hpp"
#include "spintwa/observables.hpp"

namespace spintwa::oracle {

using DenseC = Eigen::MatrixXcd;
using SparseC = Eigen::SparseMatrix<complex_t>;

class OracleError : public std::runtime_error {
public:
    explicit OracleError(const std::string& what) : std::runtime_error(what) {}
};

/// Collective spin operators in the Dicke basis |S,m>, index 0 -> m = -S.
struct SpinOperators {
    int dim = 0;
    double spin_s = 0.0;
    SparseC sp, sm, sz, sx, sy;
};
SpinOperators make_spin_operators(double spin_s);

SparseC kron(const SparseC& a, const SparseC& b);
SparseC sparse_identity(int dim);

/// Per-site operators (including precomputed second-moment products) on the
/// full 1- or 2-site Hilbert space.
struct SiteOperators {
    SparseC sx, sy, sz, sp, sm;
    SparseC sxx, syy, szz, sxy_sym, spsm;
};
std::vector<SiteOperators> site_operators(double spin_s, int n_sites);

struct Lindbladian {
    int n_sites = 1;
    double spin_s = 0.5;
    int dim = 0;
    SparseC h;
    struct Channel {
        double rate;
        SparseC c, cdag, cdag_c;
    };
    std::vector<Channel> channels;
    std::vector<SiteOperators> sites;
};

/// Compiles the model onto the Dicke basis. Supports one site (dim <= 2001)
/// and two sites (total dim <= 10201, i.e. S <= 50).
Lindbladian build_lindbladian(const SpinModel& model);

/// drho = -i[H, rho] + sum_n rate_n (2 c rho c' - c'c rho - rho c'c)
void liouvillian_rhs(const Lindbladian& lind, const DenseC& rho, DenseC& drho);

struct EvolveTolerances {
    double rtol = 1e-8;
    double atol = 1e-10;
    bool validate = true;       // check trace and hermiticity at save times
    double check_tol = 1e-8;
};

/// Adaptive 4(5)-order integration, saving at t_grid (must be increasing,
/// first entry is the initial time).
std::vector<DenseC> evolve(const Lindbladian& lind, const DenseC& rho0,
                           const std::vector<double>& t_grid,
                           const EvolveTolerances& tol = {});

enum class SteadyStateMethod { Auto, NullSpace, LongTime };

/// Steady state via null-space extraction of the vectorized Liouvillian
/// (default) or long-time evolution until ||drho/dt||_inf < residual_tol.
DenseC steady_state(const Lindbladian& lind, SteadyStateMethod method = SteadyStateMethod::Auto,
                    double residual_tol = 1e-10);

DenseC down_state_density(double spin_s);
/// Spin-coherent state matching the sampler's rotation convention:
/// <S> = (-S sin(theta) cos(phi), S sin(theta) sin(phi), -S cos(theta)).
DenseC coherent_state_density(double spin_s, double theta, double phi);
/// n-fold tensor power of a single-site state (n_sites <= 2).
DenseC product_state_density(const DenseC& site_rho, int n_sites);

SpinMoments spin_moments(const SiteOperators& ops, const DenseC& rho, double spin_s);

double min_eigenvalue(const DenseC& rho);

// --- Exact k-ordered phase-space moments (ordering oracle) -----------------

/// Two-mode truncated Fock space; mode a is the slow index.
struct TwoModeFock {
    int nmax = 0;
    int dim = 0;  // (nmax+1)^2
    DenseC a, b;
};
TwoModeFock make_two_mode_fock(int nmax);

/// Embeds a Dicke-basis density matrix into the two-mode Fock space with
/// n_a + n_b = 2S.
DenseC dicke_to_fock(const DenseC& rho_dicke, double spin_s, const TwoModeFock& fock);

/// Exact second-order symbol moments by brute-force operator reordering
/// (normal / symmetric / anti-normal per k). Spin moments above order 2 are
/// not supported.
SiteMoments symbol_moments_fock(const DenseC& rho_fock, const TwoModeFock& fock, int k);

/// Convenience wrapper for a single-site Dicke state; requires S <= 5.
SiteMoments symbol_moments(const DenseC& rho_dicke, double spin_s, int k);

}  // namespace spintwa::oracle
