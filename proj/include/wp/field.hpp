#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wp {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.28318530717958647692528676656;

/// Uniform periodic grid on [0, length). n must be a power of two >= 16.
struct SpatialGrid {
    double length = kTwoPi;
    int n = 1024;

    SpatialGrid() = default;
    SpatialGrid(int n_, double length_ = kTwoPi);

    double spacing() const { return length / n; }
    double x(int i) const { return i * spacing(); }
    /// Signed integer mode for in-order FFT index m.
    int signed_mode(int m) const { return m < n / 2 ? m : m - n; }
    /// Physical frequency of FFT index m.
    double freq(int m) const { return kTwoPi * signed_mode(m) / length; }
    /// Largest band index k with any grid frequency in supp(beta_k).
    int max_band() const;

    bool operator==(const SpatialGrid&) const = default;
};

// Periodic grid function together with its spectrum. Both representations
// are kept in sync at construction; instances are immutable afterwards.
// Conventions: spectrum[m] = h * sum_j samples[j] e^{-i freq(m) x_j},
// samples[j] = (1/L) * sum_m spectrum[m] e^{+i freq(m) x_j}, so that
// ||f||_L2^2 = h sum |f_j|^2 = (1/L) sum |fhat_m|^2.
class SampledField {
  public:
    SampledField() = default;

    static SampledField from_samples(const SpatialGrid& g, std::vector<cplx> samples);
    static SampledField from_spectrum(const SpatialGrid& g, std::vector<cplx> spectrum);
    static SampledField from_real(const SpatialGrid& g, const std::vector<double>& samples);
    static SampledField zero(const SpatialGrid& g);

    const SpatialGrid& grid() const { return grid_; }
    const std::vector<cplx>& samples() const { return samples_; }
    const std::vector<cplx>& spectrum() const { return spectrum_; }

    bool empty() const { return samples_.empty(); }
    double max_imag() const;
    bool is_real(double tol = 1e-12) const;
    std::vector<double> real_samples() const;

    double l2_norm() const;
    double max_abs() const;
    /// (1/L sum (1+|xi|^2)^alpha |fhat|^2)^{1/2}; any real alpha.
    double sobolev_norm(double alpha) const;

    SampledField& operator+=(const SampledField& o);
    SampledField& operator-=(const SampledField& o);
    SampledField& operator*=(cplx c);

    friend SampledField operator+(SampledField a, const SampledField& b) { return a += b; }
    friend SampledField operator-(SampledField a, const SampledField& b) { return a -= b; }
    friend SampledField operator*(cplx c, SampledField a) { return a *= c; }
    friend SampledField operator*(SampledField a, cplx c) { return a *= c; }

  private:
    SpatialGrid grid_;
    std::vector<cplx> samples_;
    std::vector<cplx> spectrum_;
};

/// Pointwise product (samples) of two fields on the same grid.
SampledField pointwise(const SampledField& a, const SampledField& b);

/// Apply a spectral multiplier m(freq).
template <class Fn>
SampledField multiplier(const SampledField& f, Fn&& m) {
    std::vector<cplx> sp = f.spectrum();
    for (int i = 0; i < f.grid().n; ++i) sp[static_cast<std::size_t>(i)] *= m(f.grid().freq(i));
    return SampledField::from_spectrum(f.grid(), std::move(sp));
}

/// k-th spectral derivative.
SampledField derivative(const SampledField& f, int order);

/// Sobolev smoothness index constrained to the solvable range [-1, 2].
struct SobolevIndex {
    double alpha;
    explicit SobolevIndex(double a) : alpha(a) {
        if (a < -1.0 || a > 2.0) throw std::invalid_argument("sobolev index outside [-1,2]");
    }
};

double sobolev_norm(const SampledField& f, SobolevIndex alpha);

/// Discrete Holder norms from centered differences.
/// order 0: sup|f| + sup|f'|  (C^{0,1});  order 1: additionally + sup|f''| (C^{1,1}).
double holder_norm(const SampledField& f, int order);

// ---------------------------------------------------------------------------
// Sound-speed coefficient a(x) with C^{1,1} control and dyadic truncations.

struct MetricRecipe {
    std::string kind = "constant";  // constant | smooth-trig | quadratic-spline-rough
    double base = 1.0;
    double amplitude = 0.0;
    int knots = 8;
    int harmonic = 1;
    std::uint64_t seed = 0;
};

class Metric {
  public:
    Metric() = default;
    /// Truncations a_k are precomputed for k = 0..grid.max_band().
    Metric(SampledField a, double m_bound, MetricRecipe recipe = {});

    const SampledField& a() const { return a_; }
    const SpatialGrid& grid() const { return a_.grid(); }
    double m_bound() const { return m_bound_; }
    const MetricRecipe& recipe() const { return recipe_; }

    /// a_k = chi(2^{-k/2} D) a; spectrum vanishes for |xi| > 2^{k/2}.
    const SampledField& truncation(int k) const;
    int max_band() const { return static_cast<int>(truncations_.size()) - 1; }

    double min_a() const;

  private:
    SampledField a_;
    double m_bound_ = 0.0;
    MetricRecipe recipe_;
    std::vector<SampledField> truncations_;
};

struct MetricDiagnostics {
    double min_a = 0.0;
    double c01_norm = 0.0;
    double c11_norm = 0.0;
    bool ellipticity_ok = false;
    bool c11_ok = false;
    bool truncations_ok = false;
    bool pass = false;
};

/// Checks realness/positivity of a, the C^{1,1} bound against m_bound, and
/// the spectral support of every stored truncation. Throws if a is not real
/// or not positive.
MetricDiagnostics validate_metric(const Metric& m);

/// Deterministic test-coefficient generator.
/// kinds: "constant" (a == base), "smooth-trig" (base + amplitude sin(harmonic x)),
/// "quadratic-spline-rough" (C^{1,1} but not C^2 periodic quadratic spline).
Metric make_metric_family(const SpatialGrid& grid, const std::string& kind, double base,
                          double amplitude, int knots, std::uint64_t seed, int harmonic = 1);

Metric make_metric(const SpatialGrid& grid, const MetricRecipe& recipe);

/// Exact evaluator for the family member at arbitrary x (used to re-sample
/// the same coefficient on finer oracle grids).
double eval_metric_recipe(const MetricRecipe& recipe, double length, double x);

// ---------------------------------------------------------------------------
// Closed-form constant-speed references.

enum class CauchyData { position, velocity };

/// Constant-speed solution by spectral phase shift:
///  position: u = (f(x-ct)+f(x+ct))/2;
///  velocity: uhat = ghat sin(c xi t)/(c xi), with t ghat(0) at xi = 0.
SampledField dalembert_reference(const SampledField& data, double c, double t,
                                 CauchyData branch = CauchyData::velocity);

}  // namespace wp
