#include "spintwa/oracle.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include <Eigen/SparseLU>

namespace spintwa::oracle {

namespace ode = boost::numeric::odeint;

SpinOperators make_spin_operators(double spin_s) {
    const int dim = static_cast<int>(std::llround(2.0 * spin_s)) + 1;
    SpinOperators ops;
    ops.dim = dim;
    ops.spin_s = spin_s;
    std::vector<Eigen::Triplet<complex_t>> tp, tz;
    tp.reserve(dim);
    tz.reserve(dim);
    for (int i = 0; i < dim; ++i) {
        const double m = i - spin_s;
        tz.emplace_back(i, i, complex_t(m, 0.0));
        if (i + 1 < dim) {
            // S+|S,m> = sqrt(S(S+1) - m(m+1)) |S,m+1>
            const double amp = std::sqrt(spin_s * (spin_s + 1.0) - m * (m + 1.0));
            tp.emplace_back(i + 1, i, complex_t(amp, 0.0));
        }
    }
    ops.sp.resize(dim, dim);
    ops.sp.setFromTriplets(tp.begin(), tp.end());
    ops.sm = SparseC(ops.sp.adjoint());
    ops.sz.resize(dim, dim);
    ops.sz.setFromTriplets(tz.begin(), tz.end());
    ops.sx = 0.5 * (ops.sp + ops.sm);
    ops.sy = complex_t(0.0, -0.5) * (ops.sp - ops.sm);
    return ops;
}

SparseC sparse_identity(int dim) {
    SparseC id(dim, dim);
    id.setIdentity();
    return id;
}

SparseC kron(const SparseC& a, const SparseC& b) {
    SparseC out(a.rows() * b.rows(), a.cols() * b.cols());
    std::vector<Eigen::Triplet<complex_t>> trips;
    trips.reserve(static_cast<size_t>(a.nonZeros()) * b.nonZeros());
    for (int ka = 0; ka < a.outerSize(); ++ka)
        for (SparseC::InnerIterator ita(a, ka); ita; ++ita)
            for (int kb = 0; kb < b.outerSize(); ++kb)
                for (SparseC::InnerIterator itb(b, kb); itb; ++itb)
                    trips.emplace_back(ita.row() * b.rows() + itb.row(),
                                       ita.col() * b.cols() + itb.col(),
                                       ita.value() * itb.value());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

std::vector<SiteOperators> site_operators(double spin_s, int n_sites) {
    if (n_sites < 1 || n_sites > 2)
        throw OracleError("oracle supports 1 or 2 sites");
    const SpinOperators local = make_spin_operators(spin_s);
    const SparseC id = sparse_identity(local.dim);
    std::vector<SiteOperators> out(n_sites);
    for (int i = 0; i < n_sites; ++i) {
        SiteOperators s;
        if (n_sites == 1) {
            s.sx = local.sx;
            s.sy = local.sy;
            s.sz = local.sz;
            s.sp = local.sp;
            s.sm = local.sm;
        } else {
            s.sx = i == 0 ? kron(local.sx, id) : kron(id, local.sx);
            s.sy = i == 0 ? kron(local.sy, id) : kron(id, local.sy);
            s.sz = i == 0 ? kron(local.sz, id) : kron(id, local.sz);
            s.sp = i == 0 ? kron(local.sp, id) : kron(id, local.sp);
            s.sm = i == 0 ? kron(local.sm, id) : kron(id, local.sm);
        }
        s.sxx = SparseC(s.sx * s.sx);
        s.syy = SparseC(s.sy * s.sy);
        s.szz = SparseC(s.sz * s.sz);
        s.sxy_sym = SparseC(complex_t(0.5, 0.0) * (s.sx * s.sy + s.sy * s.sx));
        s.spsm = SparseC(s.sp * s.sm);
        out[i] = std::move(s);
    }
    return out;
}

Lindbladian build_lindbladian(const SpinModel& model) {
    if (!model.validated) throw OracleError("build_lindbladian requires a validated model");
    if (model.n_sites > 2)
        throw OracleError("oracle dimension limit: at most 2 sites");
    const int local_dim = static_cast<int>(std::llround(2.0 * model.spin_s)) + 1;
    const int dim = model.n_sites == 1 ? local_dim : local_dim * local_dim;
    if (model.n_sites == 1 && dim > 2001)
        throw OracleError("oracle dimension limit: single-site dim <= 2001");
    if (model.n_sites == 2 && dim > 10201)
        throw OracleError("oracle dimension limit: two-site dim <= 10201");

    Lindbladian l;
    l.n_sites = model.n_sites;
    l.spin_s = model.spin_s;
    l.dim = dim;
    l.sites = site_operators(model.spin_s, model.n_sites);
    SparseC h(dim, dim);
    for (const auto& term : model.hamiltonian) {
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, TransverseDrive>)
                    h = h + SparseC(complex_t(effective_drive(model, t), 0.0) *
                                    l.sites[t.site].sx);
                else if constexpr (std::is_same_v<T, LongitudinalField>)
                    h = h + SparseC(complex_t(effective_field(model, t), 0.0) *
                                    l.sites[t.site].sz);
                else if constexpr (std::is_same_v<T, OneAxisTwist>)
                    h = h + SparseC(complex_t(effective_twist(model, t), 0.0) *
                                    l.sites[t.site].sxx);
                else if constexpr (std::is_same_v<T, HeisenbergBond>) {
                    const auto j = effective_bond(model, t);
                    const auto& si = l.sites[t.site_i];
                    const auto& sj = l.sites[t.site_j];
                    h = h + SparseC(complex_t(j[0], 0.0) * (si.sx * sj.sx)) +
                        SparseC(complex_t(j[1], 0.0) * (si.sy * sj.sy)) +
                        SparseC(complex_t(j[2], 0.0) * (si.sz * sj.sz));
                }
            },
            term);
    }
    l.h = h;
    for (const auto& d : model.dissipators) {
        Lindbladian::Channel ch;
        ch.rate = effective_rate(model, d);
        const auto& so = l.sites[d.site.value()];
        switch (d.kind) {
            case DissipatorKind::Decay: ch.c = so.sm; break;
            case DissipatorKind::Gain: ch.c = so.sp; break;
            case DissipatorKind::Dephasing: ch.c = so.sz; break;
        }
        ch.cdag = SparseC(ch.c.adjoint());
        ch.cdag_c = SparseC(ch.cdag * ch.c);
        l.channels.push_back(std::move(ch));
    }
    return l;
}

namespace {

template <class RhoT, class OutT>
void rhs_impl(const Lindbladian& l, const RhoT& rho, OutT&& drho) {
    const complex_t minus_i(0.0, -1.0);
    drho = minus_i * (l.h * rho - rho * l.h);
    for (const auto& ch : l.channels) {
        const DenseC t = ch.c * rho;
        drho += ch.rate * (2.0 * (t * ch.cdag) - DenseC(ch.cdag_c * rho) -
                           DenseC(rho * ch.cdag_c));
    }
}

complex_t trace_prod(const DenseC& rho, const SparseC& op) {
    // tr(rho * op) = sum over op nonzeros op(r,c) * rho(c,r)
    complex_t sum(0.0, 0.0);
    for (int k = 0; k < op.outerSize(); ++k)
        for (SparseC::InnerIterator it(op, k); it; ++it)
            sum += it.value() * rho(it.col(), it.row());
    return sum;
}

}  // namespace

void liouvillian_rhs(const Lindbladian& l, const DenseC& rho, DenseC& drho) {
    drho.resize(rho.rows(), rho.cols());
    rhs_impl(l, rho, drho);
}

std::vector<DenseC> evolve(const Lindbladian& l, const DenseC& rho0,
                           const std::vector<double>& t_grid, const EvolveTolerances& tol) {
    if (t_grid.empty()) return {};
    if (!std::is_sorted(t_grid.begin(), t_grid.end()))
        throw OracleError("evolve: t_grid must be increasing");
    const int dim = l.dim;
    if (rho0.rows() != dim || rho0.cols() != dim)
        throw OracleError("evolve: state dimension mismatch");

    using state_type = std::vector<complex_t>;
    state_type x(rho0.data(), rho0.data() + static_cast<size_t>(dim) * dim);

    auto rhs = [&](const state_type& in, state_type& out, double) {
        out.resize(in.size());
        Eigen::Map<const DenseC> rho(in.data(), dim, dim);
        Eigen::Map<DenseC> drho(out.data(), dim, dim);
        rhs_impl(l, rho, drho);
    };

    std::vector<DenseC> result;
    result.reserve(t_grid.size());
    auto observer = [&](const state_type& s, double) {
        Eigen::Map<const DenseC> rho(s.data(), dim, dim);
        DenseC r = rho;
        const double trace_err = std::abs(r.trace() - complex_t(1.0, 0.0));
        const double herm_err = (r - r.adjoint()).cwiseAbs().maxCoeff();
        if (tol.validate && (trace_err > tol.check_tol || herm_err > tol.check_tol))
            throw OracleError("evolve: density-matrix invariants violated (trace err " +
                              std::to_string(trace_err) + ", herm err " +
                              std::to_string(herm_err) + ")");
        // project back onto the physical manifold at save times
        r = 0.5 * (r + r.adjoint().eval());
        r /= r.trace().real();
        result.push_back(std::move(r));
    };

    const double span = t_grid.back() - t_grid.front();
    const double dt0 = span > 0.0 ? span / 1000.0 : 1e-3;
    auto stepper =
        ode::make_controlled(tol.atol, tol.rtol, ode::runge_kutta_dopri5<state_type>());
    ode::integrate_times(stepper, rhs, x, t_grid.begin(), t_grid.end(), dt0, observer);
    return result;
}

namespace {

SparseC vectorized_liouvillian(const Lindbladian& l) {
    const int dim = l.dim;
    const SparseC id = sparse_identity(dim);
    const complex_t minus_i(0.0, -1.0);
    SparseC ht = SparseC(l.h.transpose());
    SparseC L = SparseC(minus_i * (kron(id, l.h) - kron(ht, id)));
    for (const auto& ch : l.channels) {
        SparseC cconj = ch.c.conjugate();
        SparseC nt = SparseC(ch.cdag_c.transpose());
        L = L + SparseC(complex_t(ch.rate, 0.0) *
                        SparseC(2.0 * kron(cconj, ch.c) - kron(id, ch.cdag_c) - kron(nt, id)));
    }
    return L;
}

DenseC unvec_to_state(const Eigen::VectorXcd& x, int dim) {
    Eigen::Map<const DenseC> rho(x.data(), dim, dim);
    DenseC r = 0.5 * (rho + rho.adjoint().eval());
    const double tr = r.trace().real();
    if (std::abs(tr) < 1e-300) throw OracleError("steady state: zero-trace null vector");
    r /= tr;
    return r;
}

double residual_norm(const Lindbladian& l, const DenseC& rho) {
    DenseC drho;
    liouvillian_rhs(l, rho, drho);
    return drho.cwiseAbs().maxCoeff();
}

DenseC steady_state_nullspace(const Lindbladian& l, double residual_tol) {
    const int dim = l.dim;
    const long n = static_cast<long>(dim) * dim;
    if (n > 200000)
        throw OracleError("steady state: vectorized dimension too large for null-space solve");
    const SparseC L = vectorized_liouvillian(l);

    auto attempt = [&](int replaced_row) -> DenseC {
        std::vector<Eigen::Triplet<complex_t>> trips;
        trips.reserve(static_cast<size_t>(L.nonZeros()) + dim);
        for (int k = 0; k < L.outerSize(); ++k)
            for (SparseC::InnerIterator it(L, k); it; ++it)
                if (it.row() != replaced_row)
                    trips.emplace_back(it.row(), it.col(), it.value());
        for (int i = 0; i < dim; ++i)
            trips.emplace_back(replaced_row, i * (dim + 1), complex_t(1.0, 0.0));
        SparseC A(n, n);
        A.setFromTriplets(trips.begin(), trips.end());
        A.makeCompressed();
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(n);
        b(replaced_row) = complex_t(1.0, 0.0);

        Eigen::SparseLU<SparseC> lu;
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success)
            throw OracleError("steady state: sparse factorization failed");
        const Eigen::VectorXcd x = lu.solve(b);
        if (lu.info() != Eigen::Success)
            throw OracleError("steady state: sparse solve failed");
        return unvec_to_state(x, dim);
    };

    std::vector<int> rows = {0, static_cast<int>(n - 1)};
    std::string last_error;
    for (int r : rows) {
        try {
            DenseC rho = attempt(r);
            if (residual_norm(l, rho) <= residual_tol) return rho;
            last_error = "residual above tolerance";
        } catch (const OracleError& e) {
            last_error = e.what();
        }
    }
    throw OracleError("steady state (null space): " + last_error);
}

DenseC steady_state_longtime(const Lindbladian& l, double residual_tol) {
    const int dim = l.dim;
    DenseC rho = DenseC::Identity(dim, dim) / static_cast<double>(dim);
    double scale = 0.0;
    for (const auto& ch : l.channels) scale = std::max(scale, ch.rate);
    double tau = scale > 0.0 ? 1.0 / scale : 1.0;
    double t = 0.0;
    EvolveTolerances tol;
    tol.validate = false;
    for (int iter = 0; iter < 200; ++iter) {
        auto states = evolve(l, rho, {0.0, tau}, tol);
        rho = states.back();
        t += tau;
        if (residual_norm(l, rho) < residual_tol) return rho;
        tau = std::min(tau * 1.5, 1e4);
        if (t > 1e7) break;
    }
    throw OracleError("steady state (long time): no convergence within iteration budget");
}

}  // namespace

DenseC steady_state(const Lindbladian& l, SteadyStateMethod method, double residual_tol) {
    switch (method) {
        case SteadyStateMethod::NullSpace:
            return steady_state_nullspace(l, residual_tol);
        case SteadyStateMethod::LongTime:
            return steady_state_longtime(l, residual_tol);
        case SteadyStateMethod::Auto: {
            try {
                return steady_state_nullspace(l, residual_tol);
            } catch (const OracleError&) {
                return steady_state_longtime(l, residual_tol);
            }
        }
    }
    throw OracleError("unreachable");
}

DenseC down_state_density(double spin_s) {
    const int dim = static_cast<int>(std::llround(2.0 * spin_s)) + 1;
    DenseC rho = DenseC::Zero(dim, dim);
    rho(0, 0) = complex_t(1.0, 0.0);
    return rho;
}

DenseC coherent_state_density(double spin_s, double theta, double phi) {
    const SpinOperators ops = make_spin_operators(spin_s);
    const int dim = ops.dim;
    Eigen::SelfAdjointEigenSolver<DenseC> es(DenseC(ops.sy));
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi(0) = complex_t(1.0, 0.0);  // |S, -S>
    Eigen::VectorXcd phase =
        (complex_t(0.0, -theta) * es.eigenvalues().cast<complex_t>()).array().exp();
    psi = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint() * psi;
    for (int i = 0; i < dim; ++i)
        psi(i) *= std::polar(1.0, phi * (i - spin_s));
    return psi * psi.adjoint();
}

DenseC product_state_density(const DenseC& site_rho, int n_sites) {
    if (n_sites == 1) return site_rho;
    if (n_sites != 2) throw OracleError("product_state_density supports 1 or 2 sites");
    const int d = static_cast<int>(site_rho.rows());
    DenseC out(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out.block(i * d, j * d, d, d) = site_rho(i, j) * site_rho;
    return out;
}

SpinMoments spin_moments(const SiteOperators& ops, const DenseC& rho, double spin_s) {
    SpinMoments m;
    m.sx = trace_prod(rho, ops.sx).real();
    m.sy = trace_prod(rho, ops.sy).real();
    m.sz = trace_prod(rho, ops.sz).real();
    m.sxx = trace_prod(rho, ops.sxx).real();
    m.syy = trace_prod(rho, ops.syy).real();
    m.szz = trace_prod(rho, ops.szz).real();
    m.sxy = trace_prod(rho, ops.sxy_sym).real();
    m.spsm = trace_prod(rho, ops.spsm).real();
    m.len = spin_s;
    return m;
}

double min_eigenvalue(const DenseC& rho) {
    Eigen::SelfAdjointEigenSolver<DenseC> es(DenseC(0.5 * (rho + rho.adjoint())),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// --- ordering oracle --------------------------------------------------------

TwoModeFock make_two_mode_fock(int nmax) {
    TwoModeFock f;
    f.nmax = nmax;
    const int d = nmax + 1;
    f.dim = d * d;
    DenseC a1 = DenseC::Zero(d, d);
    for (int nph = 1; nph <= nmax; ++nph) a1(nph - 1, nph) = std::sqrt(double(nph));
    DenseC id = DenseC::Identity(d, d);
    f.a = DenseC::Zero(f.dim, f.dim);
    f.b = DenseC::Zero(f.dim, f.dim);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (a1(i, j) != complex_t(0.0, 0.0)) {
                for (int kk = 0; kk < d; ++kk) {
                    f.a(i * d + kk, j * d + kk) = a1(i, j);  // a acts on slow index
                    f.b(kk * d + i, kk * d + j) = a1(i, j);  // b acts on fast index
                }
            }
        }
    return f;
}

DenseC dicke_to_fock(const DenseC& rho_dicke, double spin_s, const TwoModeFock& fock) {
    const int dim = static_cast<int>(rho_dicke.rows());
    const int two_s = static_cast<int>(std::llround(2.0 * spin_s));
    if (dim != two_s + 1) throw OracleError("dicke_to_fock: dimension mismatch");
    if (fock.nmax < two_s) throw OracleError("dicke_to_fock: Fock cutoff too small");
    const int d = fock.nmax + 1;
    DenseC out = DenseC::Zero(fock.dim, fock.dim);
    auto fock_index = [&](int i) { return i * d + (two_s - i); };  // n_a = i, n_b = 2S - i
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) out(fock_index(i), fock_index(j)) = rho_dicke(i, j);
    return out;
}

namespace {

DenseC matrix_power(const DenseC& op, int p) {
    DenseC out = DenseC::Identity(op.rows(), op.cols());
    for (int i = 0; i < p; ++i) out = out * op;
    return out;
}

// Ordered product of p creation and q annihilation operators of one mode:
// normal (k=+1), anti-normal (k=-1), or the average over all interleavings
// (k=0, Weyl).
DenseC ordered_product(const DenseC& op, int p, int q, int k) {
    const DenseC dag = op.adjoint();
    if (k == +1) return matrix_power(dag, p) * matrix_power(op, q);
    if (k == -1) return matrix_power(op, q) * matrix_power(dag, p);
    std::vector<int> word(p, 1);
    word.insert(word.end(), q, 0);
    std::sort(word.begin(), word.end(), std::greater<int>());
    DenseC sum = DenseC::Zero(op.rows(), op.cols());
    int count = 0;
    do {
        DenseC prod = DenseC::Identity(op.rows(), op.cols());
        for (int w : word) prod = prod * (w ? dag : op);
        sum += prod;
        ++count;
    } while (std::prev_permutation(word.begin(), word.end()));
    return sum / static_cast<double>(count);
}

}  // namespace

SiteMoments symbol_moments_fock(const DenseC& rho, const TwoModeFock& f, int k) {
    if (k != -1 && k != 0 && k != 1) throw OracleError("symbol moments: k must be -1, 0 or +1");
    auto tr = [&](const DenseC& op) { return (rho * op).trace(); };
    SiteMoments m;
    m.xa = tr(ordered_product(f.a, 1, 1, k)).real();
    m.xb = tr(ordered_product(f.b, 1, 1, k)).real();
    m.ab = tr(f.a.adjoint() * f.b);
    m.a2b2 = tr(f.a.adjoint() * f.a.adjoint() * f.b * f.b);
    m.xa2 = tr(ordered_product(f.a, 2, 2, k)).real();
    m.xb2 = tr(ordered_product(f.b, 2, 2, k)).real();
    m.xab = tr(ordered_product(f.a, 1, 1, k) * ordered_product(f.b, 1, 1, k)).real();
    return m;
}

SiteMoments symbol_moments(const DenseC& rho_dicke, double spin_s, int k) {
    if (spin_s > 5.0) throw OracleError("symbol moments: S <= 5 required");
    const int two_s = static_cast<int>(std::llround(2.0 * spin_s));
    const TwoModeFock f = make_two_mode_fock(two_s + 2);
    return symbol_moments_fock(dicke_to_fock(rho_dicke, spin_s, f), f, k);
}

}  // namespace spintwa::oracle
