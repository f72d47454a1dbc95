#include "spintwa/observables.hpp"

#include <cmath>
#include <limits>

namespace spintwa {

SpinMoments spin_from_phase_moments(const SiteMoments& m, int k) {
    const double c = 0.5 * (1 - k);
    double e = 0.0, f = 0.0;  // <n^2> = x2 - e*n - f
    switch (k) {
        case +1: e = -1.0; f = 0.0; break;
        case 0: e = 1.0; f = 0.5; break;
        case -1: e = 3.0; f = 2.0; break;
        default: throw ModelError("distribution k must be -1, 0 or +1");
    }
    const double na = m.xa - c;
    const double nb = m.xb - c;
    const double na2 = m.xa2 - e * na - f;
    const double nb2 = m.xb2 - e * nb - f;
    const double nanb = m.xab - c * (m.xa + m.xb) + c * c;

    SpinMoments s;
    s.sx = m.ab.real();
    s.sy = m.ab.imag();
    s.sz = 0.5 * (na - nb);
    const double sym = 2.0 * nanb + na + nb;  // <S+S- + S-S+>
    s.sxx = 0.25 * (2.0 * m.a2b2.real() + sym);
    s.syy = 0.25 * (-2.0 * m.a2b2.real() + sym);
    s.sxy = 0.5 * m.a2b2.imag();
    s.szz = 0.25 * (na2 + nb2 - 2.0 * nanb);
    s.spsm = nanb + na;
    s.len = 0.5 * (na + nb);
    return s;
}

void spin_moments_to_row(const SpinMoments& m, double* row) {
    row[kQuantSx] = m.sx;
    row[kQuantSy] = m.sy;
    row[kQuantSz] = m.sz;
    row[kQuantSxx] = m.sxx;
    row[kQuantSyy] = m.syy;
    row[kQuantSzz] = m.szz;
    row[kQuantSxy] = m.sxy;
    row[kQuantSpSm] = m.spsm;
    row[kQuantLen] = m.len;
}

SpinMoments spin_moments_from_row(const double* row) {
    SpinMoments m;
    m.sx = row[kQuantSx];
    m.sy = row[kQuantSy];
    m.sz = row[kQuantSz];
    m.sxx = row[kQuantSxx];
    m.syy = row[kQuantSyy];
    m.szz = row[kQuantSzz];
    m.sxy = row[kQuantSxy];
    m.spsm = row[kQuantSpSm];
    m.len = row[kQuantLen];
    return m;
}

double squeezing_parameter(const SpinMoments& m, double spin_s) {
    const double vxx = m.sxx - m.sx * m.sx;
    const double vyy = m.syy - m.sy * m.sy;
    const double vxy = m.sxy - m.sx * m.sy;
    const double half_tr = 0.5 * (vxx + vyy);
    const double disc = std::sqrt(0.25 * (vxx - vyy) * (vxx - vyy) + vxy * vxy);
    const double lambda_min = half_tr - disc;
    return 2.0 * spin_s * lambda_min / (m.sz * m.sz);
}

CorrelationProfile correlation_profile(std::span<const double> corr_means,
                                       std::span<const double> corr_errs) {
    CorrelationProfile p;
    const int n = static_cast<int>(corr_means.size());
    if (n == 0) return p;
    const double denom = corr_means[0];
    p.separations.resize(n);
    p.c.resize(n);
    p.c_err.resize(n);
    for (int s = 0; s < n; ++s) {
        p.separations[s] = s;
        p.c[s] = corr_means[s] / denom;
        // first-order ratio error; the s = 0 entry is exact by construction
        p.c_err[s] = s == 0 ? 0.0
                            : std::sqrt(corr_errs[s] * corr_errs[s] +
                                        p.c[s] * p.c[s] * corr_errs[0] * corr_errs[0]) /
                                  std::abs(denom);
    }
    // Single-parameter fit of log C(s) = -s/xi through the origin, even s only.
    double sxx = 0.0, sxy = 0.0, count = 0.0;
    std::vector<std::pair<double, double>> used;
    for (int s = 2; s < n; s += 2) {
        if (p.c[s] <= 0.0) continue;
        const double y = std::log(p.c[s]);
        sxx += static_cast<double>(s) * s;
        sxy += s * y;
        used.emplace_back(s, y);
        count += 1.0;
    }
    if (used.size() < 3) {
        p.xi_corr = std::numeric_limits<double>::quiet_NaN();
        p.residual = std::numeric_limits<double>::quiet_NaN();
        p.points_used = static_cast<int>(used.size());
        return p;
    }
    const double slope = sxy / sxx;
    p.xi_corr = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
    double rss = 0.0;
    for (const auto& [s, y] : used) {
        const double r = y - slope * s;
        rss += r * r;
    }
    p.residual = std::sqrt(rss / count);
    p.points_used = static_cast<int>(used.size());
    return p;
}

double jackknife_stderr(std::span<const double> block_means, std::span<const int64_t> counts,
                        int row_len,
                        const std::function<double(std::span<const double>)>& estimator) {
    const int n_blocks = static_cast<int>(counts.size());
    if (n_blocks < 2) return std::numeric_limits<double>::quiet_NaN();
    int64_t total = 0;
    for (int64_t c : counts) total += c;
    if (total == 0) return std::numeric_limits<double>::quiet_NaN();

    std::vector<double> grand(row_len, 0.0);
    for (int b = 0; b < n_blocks; ++b)
        for (int q = 0; q < row_len; ++q)
            grand[q] += static_cast<double>(counts[b]) * block_means[b * row_len + q];

    std::vector<double> replicates;
    replicates.reserve(n_blocks);
    std::vector<double> loo(row_len);
    for (int b = 0; b < n_blocks; ++b) {
        const int64_t rest = total - counts[b];
        if (rest == 0) continue;
        for (int q = 0; q < row_len; ++q)
            loo[q] = (grand[q] - static_cast<double>(counts[b]) * block_means[b * row_len + q]) /
                     static_cast<double>(rest);
        replicates.push_back(estimator(loo));
    }
    const int nb = static_cast<int>(replicates.size());
    if (nb < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double r : replicates) mean += r;
    mean /= nb;
    double ss = 0.0;
    for (double r : replicates) ss += (r - mean) * (r - mean);
    return std::sqrt(ss * (nb - 1) / nb);
}

}  // namespace spintwa
