#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "wp/field.hpp"
#include "wp/parametrix.hpp"

namespace wp {

struct TimeGrid {
    double horizon = 1.0;
    int steps = 64;

    TimeGrid() = default;
    TimeGrid(double T, int n) : horizon(T), steps(n) {
        if (n < 1) throw std::invalid_argument("time grid needs >= 1 step");
        if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    }
    double dt() const { return horizon / steps; }
    double node(int m) const { return m * dt(); }
    int count() const { return steps + 1; }
};

struct SpaceTimeField {
    TimeGrid tgrid;
    std::vector<SampledField> at;  // one field per node

    double linf_sobolev(double alpha) const {
        double m = 0.0;
        for (const auto& f : at) m = std::max(m, f.sobolev_norm(alpha));
        return m;
    }
};

/// kernel(m, j, g) = T(t_m, s_j) g on the shared time grid.
using KernelFn = std::function<SampledField(int, int, const SampledField&)>;

struct VolterraOptions {
    // skip the quadratic iteration entirely when the kernel action on the
    // data is below this relative size (the correction is then G = F)
    double negligible_tol = 1e-9;
    double data_scale = 0.0;  // reference norm; 0 -> use max_j ||F_j||
};

struct VolterraStats {
    int kernel_applications = 0;
    bool iteration_skipped = false;
    double kernel_norm_estimate = 0.0;
    double fixed_point_defect = 0.0;  // residual of the implicit diagonal sweep
};

/// Forward substitution with trapezoid quadrature for
/// G(t_m) - int_0^{t_m} T(t_m,s) G(s) ds = F(t_m); the diagonal (implicit)
/// term is resolved by one fixed-point sweep, valid while dt ||T|| / 2 < 1/2.
SpaceTimeField volterra_solve(const KernelFn& kernel, const SpaceTimeField& F,
                              VolterraOptions opt = {}, VolterraStats* stats = nullptr);

/// Truncated fixed-point (Picard) iteration G_{n+1} = F + Quad(T G_n);
/// test-side reference for volterra_solve.
SpaceTimeField picard_solve(const KernelFn& kernel, const SpaceTimeField& F, int terms);

// ---------------------------------------------------------------------------

struct SolveResult {
    SampledField u;   // u(t)
    SampledField ut;  // del_t u(t)
    double residual_certificate = 0.0;
    VolterraStats vstats;
};

// Full solution operator S(t) g = S^(t) g + int_0^t S^(t,s) V(T(.) g)(s) ds
// on a fixed time grid, with per-(band, sign, tau) flow checkpoints shared
// across kernel applications.
class Propagator {
  public:
    Propagator(std::shared_ptr<const ParametrixConfig> cfg, TimeGrid tg,
               std::size_t flow_cache_budget = 600u << 20);

    const ParametrixConfig& config() const { return *cfg_; }
    const TimeGrid& tgrid() const { return tg_; }

    /// T(t_m, s_j) g via the cached flows.
    SampledField kernel(int m, int j, const SampledField& g) const;
    /// S^(tau_d) g via the cached flows.
    SampledField shat_cached(int d, const SampledField& g) const;
    /// del_t S^(tau_d) g.
    SampledField shat_dt_cached(int d, const SampledField& g) const;

    /// F(s_j) = T(s_j, 0) g for j = 0..m_top.
    SpaceTimeField source(const SampledField& g, int m_top) const;

    SolveResult solve(const SampledField& g, double t) const;

  private:
    struct CachedBand {
        std::vector<std::vector<std::pair<float, float>>> pos;  // [d][node]
    };
    const std::vector<HamiltonState>* fetch(int k, int sign, int d,
                                            std::vector<HamiltonState>& scratch) const;

    std::shared_ptr<const ParametrixConfig> cfg_;
    TimeGrid tg_;
    bool cache_enabled_ = false;
    std::vector<CachedBand> cache_;  // [band-index * 2 + (sign<0)]
};

/// solve on a fresh propagator (convenience; prefer a Propagator when
/// solving repeatedly with one metric).
SolveResult solve(const ParametrixConfig& cfg, const SampledField& g, double t,
                  const TimeGrid& tg);

// ---------------------------------------------------------------------------

/// Leapfrog reference for u_tt = a u_xx with data u(0) = f, u_t(0) = g,
/// run on an n_fd-point refinement and projected back to the data grid.
/// cfl is the Courant factor against sqrt(max a).
SampledField fd_reference(const Metric& m, const SampledField& g, const SampledField& f, double t,
                          double cfl = 0.9, int n_fd = 0);

/// Same scheme with a driving term: u_tt = a u_xx + force(t, x).
/// force is sampled on the fine grid via the callback (t, fine grid) -> field.
SampledField fd_reference_forced(const Metric& m, const SampledField& g, const SampledField& f,
                                 double t,
                                 const std::function<std::vector<double>(double, const SpatialGrid&)>& force,
                                 double cfl = 0.9, int n_fd = 0);

/// Exact spectral resampling onto another grid (band-limited content only;
/// finer-grid content beyond the target Nyquist is discarded).
SampledField spectral_resample(const SampledField& f, const SpatialGrid& to);

/// Energy ||u_t||^2 + <a u_x, u_x> of a state pair.
double wave_energy(const Metric& m, const SampledField& u, const SampledField& ut);

}  // namespace wp
