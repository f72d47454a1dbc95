#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spintwa/model.hpp"

namespace spintwa {

using complex_t = std::complex<double>;

/// Raw phase-space monomial averages of one site (or of one trajectory, by
/// linearity), taken against the k-ordered distribution.
struct SiteMoments {
    double xa = 0.0;        // <|alpha|^2>
    double xb = 0.0;        // <|beta|^2>
    complex_t ab{};         // <alpha* beta>
    complex_t a2b2{};       // <alpha*^2 beta^2>
    double xa2 = 0.0;       // <|alpha|^4>
    double xb2 = 0.0;       // <|beta|^4>
    double xab = 0.0;       // <|alpha|^2 |beta|^2>
};

/// Quantum spin moments of one site after operator-ordering corrections.
struct SpinMoments {
    double sx = 0.0, sy = 0.0, sz = 0.0;
    double sxx = 0.0, syy = 0.0, szz = 0.0;  // <Sx^2>, <Sy^2>, <Sz^2>
    double sxy = 0.0;                        // <{Sx,Sy}>/2
    double spsm = 0.0;                       // <S+ S->
    double len = 0.0;                        // <a'a + b'b>/2, equals S
};

/// Ordering-correction map from k-ordered boson moments to quantum spin
/// moments. Affine in the inputs, so it may be applied per trajectory.
///
/// Mode occupations: <n> = x - (1-k)/2 and
///   <n^2> = x2 + n       (k = +1)
///   <n^2> = x2 - n - 1/2 (k =  0)
///   <n^2> = x2 - 3n - 2  (k = -1)
/// Cross occupation: <na nb> = xab - c(xa + xb) + c^2 with c = (1-k)/2.
/// Cross-mode products <a'b> and <a'^2 b^2> carry no correction.
SpinMoments spin_from_phase_moments(const SiteMoments& m, int k);

/// Number of real quantities recorded per site per save time.
inline constexpr int kQuantPerSite = 9;
enum SiteQuant {
    kQuantSx = 0,
    kQuantSy,
    kQuantSz,
    kQuantSxx,
    kQuantSyy,
    kQuantSzz,
    kQuantSxy,
    kQuantSpSm,
    kQuantLen,
};

void spin_moments_to_row(const SpinMoments& m, double* row);
SpinMoments spin_moments_from_row(const double* row);

/// Squeezing parameter xi^2 = 2S min_phi Var(S^phi) / <Sz>^2, minimized in
/// closed form via the smaller eigenvalue of the (Sx, Sy) covariance matrix.
double squeezing_parameter(const SpinMoments& m, double spin_s);

struct SqueezingSeries {
    std::vector<double> xi2;
    std::vector<double> xi2_err;
    std::vector<uint8_t> reliable;  // 0 when |<Sz>| < 5 stderr(Sz)
};

struct CorrelationProfile {
    std::vector<int> separations;  // 0 .. N/2
    std::vector<double> c;         // C(s), C(0) = 1 by construction
    std::vector<double> c_err;
    double xi_corr = 0.0;     // NaN when no fit was possible
    double residual = 0.0;    // rms residual of log C(s) fit
    int points_used = 0;
};

/// Builds C(s) from raw <S+_n S-_{n+s}> averages (index 0 holds the on-site
/// denominator) and fits log C(s) = -s/xi over even s >= 2 with C(s) > 0.
/// Fewer than 3 usable points leaves xi_corr = NaN.
CorrelationProfile correlation_profile(std::span<const double> corr_means,
                                       std::span<const double> corr_errs);

/// Delete-block jackknife standard error of estimator(weighted mean of rows).
/// block_means is B rows of row_len values; counts holds per-block samples.
double jackknife_stderr(std::span<const double> block_means, std::span<const int64_t> counts,
                        int row_len,
                        const std::function<double(std::span<const double>)>& estimator);

}  // namespace spintwa
