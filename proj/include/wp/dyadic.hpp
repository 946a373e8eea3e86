#pragma once

#include <memory>
#include <vector>

#include "wp/field.hpp"

namespace wp {

/// Smooth even cutoff: 1 for |u| <= 1/2, 0 for |u| >= 1, C^infinity bump
/// transition in between.
double chi_profile(double u);

/// Littlewood-Paley window beta_k; beta_0 = chi, beta_k(xi) = chi(2^-k xi) - chi(2^-k+1 xi).
/// Telescoping gives sum_k beta_k == 1 exactly on any bounded frequency set.
double beta_profile(int k, double xi);

/// Wide cutoff sum_{|j-k|<=l0} beta_j; equals 1 on supp(beta_k) and its l0-dilate.
double beta_wide_profile(int k, double xi, int l0 = 3);

/// Dyadic partition of unity on the grid frequencies.
struct BandPartition {
    int l0 = 3;
    double chi(double xi) const { return chi_profile(xi); }
    double beta(int k, double xi) const { return beta_profile(k, xi); }
    double wide(int k, double xi) const { return beta_wide_profile(k, xi, l0); }
    /// max over grid frequencies of |1 - sum_{k<=kmax} beta_k|.
    double partition_defect(const SpatialGrid& g) const;
};

/// chi(2^{-k/2} D) f; input real -> output real.
SampledField truncate_field(const SampledField& f, int k);

/// Cached coefficient truncation a_k of a metric.
const SampledField& truncate_coefficient(const Metric& m, int k);

/// f restricted to band k: beta_k(D) f.
SampledField apply_band(const SampledField& f, int k);

/// Wide band cutoff beta~_k(D) f.
SampledField apply_wide_band(const SampledField& f, int k, int l0 = 3);

// Per-band symbol data at frequency level lambda = 2^k:
//   s_k = chi(2^{-k/2}D) sqrt(a_k), so p_k^{+-}(x,xi) = +- s_k(x)|xi|,
//   r_k = chi(2^{-k/2}D) (1/s_k), so q_k^{+-}(x,xi) = +- r_k(x)|xi|^{-1}.
// Holds band-limited spectra plus a fine lookup table for off-grid
// evaluation of s, s', s'' along Hamilton trajectories. Immutable.
class BandOperatorSet {
  public:
    BandOperatorSet(const Metric& m, int k);

    int band() const { return k_; }
    double lambda() const { return lambda_; }
    double m_bound() const { return m_bound_; }
    const SpatialGrid& grid() const { return s_.grid(); }

    const SampledField& s() const { return s_; }
    const SampledField& r() const { return r_; }
    const SampledField& s_deriv() const { return sp_; }
    const SampledField& s_deriv2() const { return spp_; }

    double min_s() const { return min_s_; }
    double max_s() const { return max_s_; }
    /// sup |s_k'| over the fine table; controls the flow frequency drift.
    double max_s_deriv() const { return max_sp_; }

    // 4-point local cubic interpolation on the fine table (periodic).
    double s_at(double x) const { return interp(tab_s_, x); }
    double s_deriv_at(double x) const { return interp(tab_sp_, x); }
    double s_deriv2_at(double x) const { return interp(tab_spp_, x); }

    /// Exact band-limited samples of s, s', s'' on an n-point uniform grid
    /// (n >= grid size, power of two).
    std::vector<double> sample_s(int n) const;
    std::vector<double> sample_s_deriv(int n) const;
    std::vector<double> sample_s_deriv2(int n) const;

  private:
    double interp(const std::vector<double>& tab, double x) const;

    int k_ = 0;
    double lambda_ = 0.0;
    double m_bound_ = 0.0;
    SampledField s_, r_, sp_, spp_;
    double min_s_ = 0.0, max_s_ = 0.0, max_sp_ = 0.0;
    int fine_n_ = 0;
    std::vector<double> tab_s_, tab_sp_, tab_spp_;
};

/// p_k(x,D) f = sign * s_k(x) (|D| f), applied after the wide cutoff.
SampledField apply_P(const BandOperatorSet& ops, int sign, const SampledField& f);

/// q_k(x,D) f = sign * r_k(x) (|D|^{-1} f); requires zero mean.
SampledField apply_Q(const BandOperatorSet& ops, int sign, const SampledField& f);

/// R_k beta_k(D) f = (P Q - I) beta_k(D) f.
SampledField apply_R(const BandOperatorSet& ops, int sign, const SampledField& f);

}  // namespace wp
