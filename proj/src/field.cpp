#include "wp/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wp/dyadic.hpp"
#include "wp/fft.hpp"

namespace wp {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SpatialGrid::SpatialGrid(int n_, double length_) : length(length_), n(n_) {
    if (!is_pow2(n) || n < 16) throw std::invalid_argument("grid size must be a power of two >= 16");
    if (!(length > 0.0)) throw std::invalid_argument("grid length must be positive");
}

int SpatialGrid::max_band() const {
    const double fmax = kTwoPi * (n / 2) / length;
    int k = 0;
    while (std::pow(2.0, k - 1) < fmax) ++k;  // band k occupies (2^{k-2}, 2^k)
    return k;
}

SampledField SampledField::from_samples(const SpatialGrid& g, std::vector<cplx> samples) {
    if (static_cast<int>(samples.size()) != g.n) throw std::invalid_argument("sample count != grid size");
    SampledField f;
    f.grid_ = g;
    f.spectrum_ = fft::forward(samples);
    const double h = g.spacing();
    for (auto& c : f.spectrum_) c *= h;
    f.samples_ = std::move(samples);
    return f;
}

SampledField SampledField::from_spectrum(const SpatialGrid& g, std::vector<cplx> spectrum) {
    if (static_cast<int>(spectrum.size()) != g.n) throw std::invalid_argument("spectrum size != grid size");
    SampledField f;
    f.grid_ = g;
    f.samples_ = fft::backward(spectrum);
    for (auto& c : f.samples_) c *= 1.0 / g.length;
    f.spectrum_ = std::move(spectrum);
    return f;
}

SampledField SampledField::from_real(const SpatialGrid& g, const std::vector<double>& samples) {
    std::vector<cplx> c(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) c[i] = samples[i];
    return from_samples(g, std::move(c));
}

SampledField SampledField::zero(const SpatialGrid& g) {
    return from_samples(g, std::vector<cplx>(static_cast<std::size_t>(g.n)));
}

double SampledField::max_imag() const {
    double m = 0.0;
    for (const auto& c : samples_) m = std::max(m, std::abs(c.imag()));
    return m;
}

bool SampledField::is_real(double tol) const { return max_imag() <= tol * (1.0 + max_abs()); }

std::vector<double> SampledField::real_samples() const {
    std::vector<double> out(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) out[i] = samples_[i].real();
    return out;
}

double SampledField::l2_norm() const {
    double s = 0.0;
    for (const auto& c : samples_) s += std::norm(c);
    return std::sqrt(s * grid_.spacing());
}

double SampledField::max_abs() const {
    double m = 0.0;
    for (const auto& c : samples_) m = std::max(m, std::abs(c));
    return m;
}

double SampledField::sobolev_norm(double alpha) const {
    double s = 0.0;
    for (int i = 0; i < grid_.n; ++i) {
        const double xi = grid_.freq(i);
        s += std::pow(1.0 + xi * xi, alpha) * std::norm(spectrum_[static_cast<std::size_t>(i)]);
    }
    return std::sqrt(s / grid_.length);
}

SampledField& SampledField::operator+=(const SampledField& o) {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("grid mismatch");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        samples_[i] += o.samples_[i];
        spectrum_[i] += o.spectrum_[i];
    }
    return *this;
}

SampledField& SampledField::operator-=(const SampledField& o) {
    if (!(grid_ == o.grid_)) throw std::invalid_argument("grid mismatch");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        samples_[i] -= o.samples_[i];
        spectrum_[i] -= o.spectrum_[i];
    }
    return *this;
}

SampledField& SampledField::operator*=(cplx c) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        samples_[i] *= c;
        spectrum_[i] *= c;
    }
    return *this;
}

SampledField pointwise(const SampledField& a, const SampledField& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("grid mismatch");
    std::vector<cplx> v(a.samples());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= b.samples()[i];
    return SampledField::from_samples(a.grid(), std::move(v));
}

SampledField derivative(const SampledField& f, int order) {
    return multiplier(f, [order](double xi) { return std::pow(cplx(0.0, xi), order); });
}

double sobolev_norm(const SampledField& f, SobolevIndex alpha) { return f.sobolev_norm(alpha.alpha); }

double holder_norm(const SampledField& f, int order) {
    if (order != 0 && order != 1) throw std::invalid_argument("holder order must be 0 or 1");
    if (!f.is_real(1e-9)) throw std::invalid_argument("holder norm requires a real field");
    const int n = f.grid().n;
    const double h = f.grid().spacing();
    const auto& v = f.samples();
    auto at = [&](int i) { return v[static_cast<std::size_t>(((i % n) + n) % n)].real(); };
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        m0 = std::max(m0, std::abs(at(i)));
        m1 = std::max(m1, std::abs((at(i + 1) - at(i - 1)) / (2.0 * h)));
        if (order == 1) m2 = std::max(m2, std::abs((at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h)));
    }
    return order == 0 ? m0 + m1 : m0 + m1 + m2;
}

// ---------------------------------------------------------------------------

Metric::Metric(SampledField a, double m_bound, MetricRecipe recipe)
    : a_(std::move(a)), m_bound_(m_bound), recipe_(std::move(recipe)) {
    if (!a_.is_real(1e-9)) throw std::invalid_argument("metric coefficient must be real");
    if (min_a() <= 0.0) throw std::invalid_argument("metric coefficient must be positive");
    const int kmax = a_.grid().max_band();
    truncations_.reserve(static_cast<std::size_t>(kmax) + 1);
    for (int k = 0; k <= kmax; ++k) truncations_.push_back(truncate_field(a_, k));
}

const SampledField& Metric::truncation(int k) const {
    if (k < 0 || k >= static_cast<int>(truncations_.size()))
        throw std::invalid_argument("truncation band out of range");
    return truncations_[static_cast<std::size_t>(k)];
}

double Metric::min_a() const {
    double m = a_.samples()[0].real();
    for (const auto& c : a_.samples()) m = std::min(m, c.real());
    return m;
}

MetricDiagnostics validate_metric(const Metric& m) {
    MetricDiagnostics d;
    if (!m.a().is_real(1e-9)) throw std::invalid_argument("metric coefficient must be real");
    d.min_a = m.min_a();
    if (d.min_a <= 0.0) throw std::invalid_argument("metric coefficient must be positive");
    d.c01_norm = holder_norm(m.a(), 0);
    d.c11_norm = holder_norm(m.a(), 1);
    const double M = m.m_bound();
    d.ellipticity_ok = d.min_a >= 1.0 / (M * M);
    d.c11_ok = d.c11_norm <= M;
    d.truncations_ok = true;
    for (int k = 0; k <= m.max_band(); ++k) {
        const auto& ak = m.truncation(k);
        const double cut = std::pow(2.0, k / 2.0);
        const double scale = ak.l2_norm();
        for (int i = 0; i < ak.grid().n; ++i) {
            if (std::abs(ak.grid().freq(i)) > cut &&
                std::abs(ak.spectrum()[static_cast<std::size_t>(i)]) > 1e-12 * (1.0 + scale)) {
                d.truncations_ok = false;
                break;
            }
        }
        if (!d.truncations_ok) break;
    }
    d.pass = d.ellipticity_ok && d.c11_ok && d.truncations_ok;
    return d;
}

namespace {

struct SplineCoeffs {
    // periodic piecewise quadratic: on [t_i, t_i+dx): v + d s + c s^2/2
    std::vector<double> v, d, c;
    double dx = 0.0;
    double sup = 1.0;  // normalization so that sup|spline| == 1
};

SplineCoeffs build_spline(int knots, std::uint64_t seed, double length) {
    if (knots < 2) throw std::invalid_argument("spline needs at least 2 knots");
    SplineCoeffs sc;
    const int K = knots;
    sc.dx = length / K;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    sc.c.resize(static_cast<std::size_t>(K));
    double mean = 0.0;
    for (auto& ci : sc.c) {
        ci = uni(rng);
        mean += ci;
    }
    mean /= K;
    for (auto& ci : sc.c) ci -= mean;  // periodic derivative
    sc.d.assign(static_cast<std::size_t>(K), 0.0);
    for (int i = 1; i < K; ++i) sc.d[i] = sc.d[i - 1] + sc.c[i - 1] * sc.dx;
    // shift slopes so the value closes up over one period
    double jump = 0.0;
    for (int i = 0; i < K; ++i) jump += sc.d[i] * sc.dx + sc.c[i] * sc.dx * sc.dx / 2.0;
    const double shift = -jump / length;
    for (auto& di : sc.d) di += shift;
    sc.v.assign(static_cast<std::size_t>(K), 0.0);
    for (int i = 1; i < K; ++i)
        sc.v[i] = sc.v[i - 1] + sc.d[i - 1] * sc.dx + sc.c[i - 1] * sc.dx * sc.dx / 2.0;
    // exact sup over each parabola piece
    double sup = 0.0;
    for (int i = 0; i < K; ++i) {
        sup = std::max(sup, std::abs(sc.v[i]));
        if (sc.c[i] != 0.0) {
            const double sstar = -sc.d[i] / sc.c[i];
            if (sstar > 0.0 && sstar < sc.dx)
                sup = std::max(sup, std::abs(sc.v[i] + sc.d[i] * sstar + sc.c[i] * sstar * sstar / 2.0));
        }
        sup = std::max(sup, std::abs(sc.v[i] + sc.d[i] * sc.dx + sc.c[i] * sc.dx * sc.dx / 2.0));
    }
    sc.sup = sup > 0.0 ? sup : 1.0;
    return sc;
}

double eval_spline(const SplineCoeffs& sc, double length, double x) {
    double xm = std::fmod(x, length);
    if (xm < 0.0) xm += length;
    int i = static_cast<int>(xm / sc.dx);
    if (i >= static_cast<int>(sc.c.size())) i = static_cast<int>(sc.c.size()) - 1;
    const double s = xm - i * sc.dx;
    return (sc.v[static_cast<std::size_t>(i)] + sc.d[static_cast<std::size_t>(i)] * s +
            sc.c[static_cast<std::size_t>(i)] * s * s / 2.0) /
           sc.sup;
}

}  // namespace

double eval_metric_recipe(const MetricRecipe& r, double length, double x) {
    if (r.kind == "constant") return r.base;
    if (r.kind == "smooth-trig") return r.base + r.amplitude * std::sin(r.harmonic * kTwoPi * x / length);
    if (r.kind == "quadratic-spline-rough") {
        static thread_local std::uint64_t cached_seed = ~0ull;
        static thread_local int cached_knots = -1;
        static thread_local double cached_len = -1.0;
        static thread_local SplineCoeffs cached;
        if (cached_seed != r.seed || cached_knots != r.knots || cached_len != length) {
            cached = build_spline(r.knots, r.seed, length);
            cached_seed = r.seed;
            cached_knots = r.knots;
            cached_len = length;
        }
        return r.base + r.amplitude * eval_spline(cached, length, x);
    }
    throw std::invalid_argument("unknown metric kind: " + r.kind);
}

Metric make_metric(const SpatialGrid& grid, const MetricRecipe& r) {
    std::vector<double> v(static_cast<std::size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i) v[static_cast<std::size_t>(i)] = eval_metric_recipe(r, grid.length, grid.x(i));
    SampledField a = SampledField::from_real(grid, v);

    double mina = v[0], sup = 0.0, sup1 = 0.0, sup2 = 0.0;
    for (double q : v) {
        mina = std::min(mina, q);
        sup = std::max(sup, std::abs(q));
    }
    if (mina <= 0.0) throw std::invalid_argument("metric family parameters violate ellipticity");
    if (r.kind == "constant") {
        sup1 = sup2 = 0.0;
    } else if (r.kind == "smooth-trig") {
        const double w = r.harmonic * kTwoPi / grid.length;
        sup1 = std::abs(r.amplitude) * w;
        sup2 = std::abs(r.amplitude) * w * w;
    } else {
        const SplineCoeffs sc = build_spline(r.knots, r.seed, grid.length);
        for (std::size_t i = 0; i < sc.c.size(); ++i) {
            sup1 = std::max({sup1, std::abs(sc.d[i]), std::abs(sc.d[i] + sc.c[i] * sc.dx)});
            sup2 = std::max(sup2, std::abs(sc.c[i]));
        }
        sup1 *= std::abs(r.amplitude) / sc.sup;
        sup2 *= std::abs(r.amplitude) / sc.sup;
    }
    const double c11 = sup + sup1 + sup2;
    const double m_bound = 1.02 * std::max(c11, 1.0 / std::sqrt(mina));
    return Metric(std::move(a), m_bound, r);
}

Metric make_metric_family(const SpatialGrid& grid, const std::string& kind, double base,
                          double amplitude, int knots, std::uint64_t seed, int harmonic) {
    MetricRecipe r;
    r.kind = kind;
    r.base = base;
    r.amplitude = amplitude;
    r.knots = knots;
    r.seed = seed;
    r.harmonic = harmonic;
    return make_metric(grid, r);
}

SampledField dalembert_reference(const SampledField& data, double c, double t, CauchyData branch) {
    if (!(c > 0.0)) throw std::invalid_argument("wave speed must be positive");
    if (branch == CauchyData::position)
        return multiplier(data, [c, t](double xi) { return std::cos(c * xi * t); });
    return multiplier(data, [c, t](double xi) {
        return xi == 0.0 ? cplx(t) : cplx(std::sin(c * xi * t) / (c * xi));
    });
}

}  // namespace wp
