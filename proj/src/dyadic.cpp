#include "wp/dyadic.hpp"

#include <algorithm>
#include <cmath>

#include "wp/fft.hpp"

namespace wp {

namespace {

double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace

double chi_profile(double u) {
    const double t = 2.0 * (1.0 - std::abs(u));
    const double a = bump(t);
    if (a == 0.0) return 0.0;
    const double b = bump(1.0 - t);
    return a / (a + b);
}

double beta_profile(int k, double xi) {
    if (k == 0) return chi_profile(xi);
    return chi_profile(std::ldexp(xi, -k)) - chi_profile(std::ldexp(xi, -k + 1));
}

double beta_wide_profile(int k, double xi, int l0) {
    // telescoping: sum_{j=max(0,k-l0)}^{k+l0} beta_j
    const int jlo = std::max(0, k - l0);
    if (jlo == 0) return chi_profile(std::ldexp(xi, -(k + l0)));
    return chi_profile(std::ldexp(xi, -(k + l0))) - chi_profile(std::ldexp(xi, -jlo + 1));
}

double BandPartition::partition_defect(const SpatialGrid& g) const {
    const int kmax = g.max_band();
    double worst = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double xi = g.freq(i);
        double s = 0.0;
        for (int k = 0; k <= kmax; ++k) s += beta(k, xi);
        worst = std::max(worst, std::abs(1.0 - s));
    }
    return worst;
}

SampledField truncate_field(const SampledField& f, int k) {
    const double scale = std::pow(2.0, -k / 2.0);
    const int n = f.grid().n;
    std::vector<cplx> sp = f.spectrum();
    for (int i = 0; i < n; ++i) sp[static_cast<std::size_t>(i)] *= chi_profile(scale * f.grid().freq(i));
    if (f.is_real(1e-9)) {
        // keep the result exactly real without a sample round trip: enforce
        // Hermitian symmetry in place (preserves the exact zeros outside the cutoff)
        for (int i = 1; i < n / 2; ++i) {
            const cplx avg = 0.5 * (sp[static_cast<std::size_t>(i)] +
                                    std::conj(sp[static_cast<std::size_t>(n - i)]));
            sp[static_cast<std::size_t>(i)] = avg;
            sp[static_cast<std::size_t>(n - i)] = std::conj(avg);
        }
        sp[0] = sp[0].real();
        sp[static_cast<std::size_t>(n / 2)] = sp[static_cast<std::size_t>(n / 2)].real();
    }
    return SampledField::from_spectrum(f.grid(), std::move(sp));
}

const SampledField& truncate_coefficient(const Metric& m, int k) { return m.truncation(k); }

SampledField apply_band(const SampledField& f, int k) {
    return multiplier(f, [k](double xi) { return beta_profile(k, xi); });
}

SampledField apply_wide_band(const SampledField& f, int k, int l0) {
    return multiplier(f, [k, l0](double xi) { return beta_wide_profile(k, xi, l0); });
}

BandOperatorSet::BandOperatorSet(const Metric& m, int k) : k_(k), lambda_(std::ldexp(1.0, k)) {
    if (k < 0 || k > m.max_band()) throw std::invalid_argument("band index outside metric range");
    m_bound_ = m.m_bound();
    const SampledField& ak = m.truncation(k);
    const auto av = ak.real_samples();
    std::vector<double> sq(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av[i] <= 0.0) throw std::runtime_error("truncated coefficient lost positivity; increase M or k");
        sq[i] = std::sqrt(av[i]);
    }
    s_ = truncate_field(SampledField::from_real(ak.grid(), sq), k);

    const auto sv = s_.real_samples();
    min_s_ = sv[0];
    max_s_ = sv[0];
    for (double q : sv) {
        min_s_ = std::min(min_s_, q);
        max_s_ = std::max(max_s_, q);
    }
    if (min_s_ < 0.5 / m_bound_)
        throw std::runtime_error("band symbol s_k below ellipticity floor; increase M or band index");

    std::vector<double> rin(sv.size());
    for (std::size_t i = 0; i < sv.size(); ++i) rin[i] = 1.0 / sv[i];
    r_ = truncate_field(SampledField::from_real(ak.grid(), rin), k);
    for (double q : r_.real_samples())
        if (q <= 0.0) throw std::runtime_error("band symbol r_k lost positivity");

    sp_ = multiplier(s_, [](double xi) { return cplx(0.0, xi); });
    spp_ = multiplier(s_, [](double xi) { return cplx(-xi * xi, 0.0); });

    fine_n_ = std::max(8192, 4 * ak.grid().n);
    tab_s_ = sample_s(fine_n_);
    tab_sp_ = sample_s_deriv(fine_n_);
    tab_spp_ = sample_s_deriv2(fine_n_);
    max_sp_ = 0.0;
    for (double q : tab_sp_) max_sp_ = std::max(max_sp_, std::abs(q));
}

namespace {

// exact resampling of a band-limited field onto an n-point uniform grid
std::vector<double> resample(const SampledField& f, int n) {
    const int nin = f.grid().n;
    if ((n & (n - 1)) != 0) throw std::invalid_argument("resample target must be a power of two");
    std::vector<cplx> sp(static_cast<std::size_t>(n), cplx(0.0, 0.0));
    const auto& src = f.spectrum();
    const double scale = f.l2_norm();
    for (int i = 0; i < nin; ++i) {
        const int m = f.grid().signed_mode(i);
        if (m < -n / 2 || m >= n / 2) {
            if (std::abs(src[static_cast<std::size_t>(i)]) > 1e-12 * (1.0 + scale))
                throw std::invalid_argument("resample would drop non-negligible modes");
            continue;
        }
        const int j = m >= 0 ? m : m + n;
        sp[static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(i)];
    }
    auto out = fft::backward(sp);
    std::vector<double> v(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) v[i] = out[i].real() / f.grid().length;
    return v;
}

}  // namespace

std::vector<double> BandOperatorSet::sample_s(int n) const { return resample(s_, n); }
std::vector<double> BandOperatorSet::sample_s_deriv(int n) const { return resample(sp_, n); }
std::vector<double> BandOperatorSet::sample_s_deriv2(int n) const { return resample(spp_, n); }

double BandOperatorSet::interp(const std::vector<double>& tab, double x) const {
    const double L = s_.grid().length;
    double u = x / L * fine_n_;
    u -= std::floor(u / fine_n_) * fine_n_;
    const int i1 = static_cast<int>(std::floor(u));
    const double t = u - i1;
    const int n = fine_n_;
    const int i0 = (i1 + n - 1) % n, i2 = (i1 + 1) % n, i3 = (i1 + 2) % n;
    const double f0 = tab[static_cast<std::size_t>(i0)], f1 = tab[static_cast<std::size_t>(i1 % n)];
    const double f2 = tab[static_cast<std::size_t>(i2)], f3 = tab[static_cast<std::size_t>(i3)];
    // 4-point Lagrange at offsets -1,0,1,2
    const double c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return c0 * f0 + c1 * f1 + c2 * f2 + c3 * f3;
}

namespace {

SampledField abs_d_pow(const SampledField& f, double p) {
    std::vector<cplx> sp = f.spectrum();
    for (int i = 0; i < f.grid().n; ++i) {
        const double xi = f.grid().freq(i);
        sp[static_cast<std::size_t>(i)] *= (xi == 0.0 ? (p < 0 ? 0.0 : (p == 0.0 ? 1.0 : 0.0))
                                                      : std::pow(std::abs(xi), p));
    }
    return SampledField::from_spectrum(f.grid(), std::move(sp));
}

}  // namespace

SampledField apply_P(const BandOperatorSet& ops, int sign, const SampledField& f) {
    SampledField fw = apply_wide_band(f, ops.band());
    SampledField v = abs_d_pow(fw, 1.0);
    SampledField out = pointwise(ops.s(), v);
    return sign >= 0 ? out : out * cplx(-1.0);
}

SampledField apply_Q(const BandOperatorSet& ops, int sign, const SampledField& f) {
    const double mean = std::abs(f.spectrum()[0]);
    if (mean > 1e-10 * (1.0 + f.l2_norm()))
        throw std::invalid_argument("apply_Q requires zero-mean input");
    SampledField fw = apply_wide_band(f, ops.band());
    SampledField v = abs_d_pow(fw, -1.0);
    SampledField out = pointwise(ops.r(), v);
    return sign >= 0 ? out : out * cplx(-1.0);
}

SampledField apply_R(const BandOperatorSet& ops, int sign, const SampledField& f) {
    SampledField bf = apply_band(f, ops.band());
    return apply_P(ops, sign, apply_Q(ops, sign, bf)) - bf;
}

}  // namespace wp
