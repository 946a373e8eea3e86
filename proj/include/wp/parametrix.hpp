#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "wp/dyadic.hpp"
#include "wp/fbi.hpp"
#include "wp/field.hpp"
#include "wp/hamflow.hpp"
#include "wp/window.hpp"

namespace wp {

struct ParametrixSettings {
    int k0 = 5;      // requested low-frequency cutoff; raised if K is too large
    int k_top = 8;   // highest packet band
    double neumann_tol = 1e-12;
    int neumann_max_terms = 64;
    double flow_tol = 1e-10;
    double xi_spacing_factor = 8.0;
    double window_sharpness = 4.0;
};

// Everything one band needs: symbols, phase grid, transform tables and the
// node coefficient fields d_xi p, d_x p and their derivatives.
class BandPipeline {
  public:
    BandPipeline(const Metric& m, int k, const ParametrixSettings& st, const Window& w);

    int band() const { return k_; }
    double lambda() const { return ops_->lambda(); }
    const BandOperatorSet& ops() const { return *ops_; }
    std::shared_ptr<const BandOperatorSet> ops_ptr() const { return ops_; }
    const FbiTables& tables() const { return *tables_; }
    const PhaseGrid& pgrid() const { return tables_->pgrid(); }

    // per x-node symbol samples (exact band-limited values)
    const std::vector<double>& s_x() const { return s_x_; }
    const std::vector<double>& sp_x() const { return sp_x_; }
    const std::vector<double>& spp_x() const { return spp_x_; }

  private:
    int k_;
    std::shared_ptr<const BandOperatorSet> ops_;
    std::unique_ptr<FbiTables> tables_;
    std::vector<double> s_x_, sp_x_, spp_x_;
};

/// Per-band state after transport: the evolved phase field and the
/// analytically assembled time derivatives of u = T^* U(tau) T (i/2 Q beta g).
struct BandEvolution {
    SampledField u;
    SampledField dtu;   // D_t u
    SampledField dt2u;  // D_t^2 u (only when requested)
    bool has_second = false;
};

/// Assembled evolution state at one time.
struct EvolvedState {
    double t = 0.0;
    SampledField u;
    SampledField ut;   // del_t u
    SampledField utt;  // del_t^2 u
};

class ParametrixConfig {
  public:
    ParametrixConfig(Metric m, ParametrixSettings st = {});

    const Metric& metric() const { return metric_; }
    const SpatialGrid& grid() const { return metric_.grid(); }
    const Window& window() const { return *window_; }
    const ParametrixSettings& settings() const { return st_; }

    int k0() const { return k0_; }
    int k_top() const { return st_.k_top; }
    std::vector<int> bands() const;
    const BandPipeline& band(int k) const;

    double k_norm_estimate() const { return k_norm_; }

    /// Spectral projection onto the sub-k0 part, chi(2^{-(k0-1)} xi).
    SampledField low_part(const SampledField& g) const;
    /// Relative spectral mass above the covered bands.
    double uncovered_mass(const SampledField& g) const;

    /// Evolve one band: W = U(tau) T f_in at the phase nodes and the scatter
    /// assemblies. `positions` optionally supplies precomputed chi_{0,tau}
    /// node images (skips the flow integration).
    BandEvolution evolve_band(int k, int sign, double tau, const SampledField& g,
                              bool need_second,
                              const std::vector<HamiltonState>* positions = nullptr) const;

    /// chi_{0,tau} over the band's phase nodes (constant-coefficient fast path).
    std::vector<HamiltonState> flow_positions(int k, int sign, double tau) const;

    // operator pieces
    SampledField apply_K(const SampledField& g) const;         // matrix path
    SampledField apply_K_pipeline(const SampledField& g) const;  // reference
    SampledField invert_IplusK(const SampledField& g) const;   // Neumann series

    const std::vector<cplx>& k_matrix() const { return k_dense_; }

  private:
    void build_k_matrix();
    double estimate_k_norm() const;

    Metric metric_;
    ParametrixSettings st_;
    std::shared_ptr<const Window> window_;
    int k0_ = 0;
    std::vector<std::unique_ptr<BandPipeline>> pipes_;  // k0..k_top
    std::vector<std::vector<cplx>> k_band_;             // per-band dense contribution
    std::vector<cplx> k_dense_;                         // sum over active bands
    double k_norm_ = 0.0;
};

// ---------------------------------------------------------------------------
// Spec surface

/// E_k^{sign}(t) g = T^* U(t) T ((i/2) Q beta_k g).
SampledField apply_E(const ParametrixConfig& cfg, int k, int sign, double t,
                     const SampledField& g);

/// (D_t + P) E_k^{sign}(t) g, assembled through the packet identities.
SampledField apply_halfwave_residual(const ParametrixConfig& cfg, int k, int sign, double t,
                                     const SampledField& g);

/// (D_t^2 - P^2) E_k^{sign}(t) g.
SampledField apply_fullwave_residual(const ParametrixConfig& cfg, int k, int sign, double t,
                                     const SampledField& g);

/// S~(t) g = t sum_{k<k0} g_k + sum_{k>=k0} (u_k^+ + u_k^-).
SampledField assemble_Stilde(const ParametrixConfig& cfg, double t, const SampledField& g);

/// K = sum_k (i R~_k^+(0) + i R~_k^-(0) + R_k^+ beta_k/2 + R_k^- beta_k/2).
SampledField build_K(const ParametrixConfig& cfg, const SampledField& g);

SampledField invert_IplusK(const ParametrixConfig& cfg, const SampledField& g);

/// S^(t) = S~(t) (I+K)^{-1}.
SampledField apply_Shat(const ParametrixConfig& cfg, double t, const SampledField& g);

/// del_t^order of S^(t) g, order 1 or 2, assembled analytically.
SampledField shat_timederiv(const ParametrixConfig& cfg, double t, const SampledField& g,
                            int order);

/// T(t,s) = (D_t^2 - A(x,D)) S^(t-s), assembled as the low-frequency part,
/// the per-band wave residuals, and the coefficient-truncation term.
SampledField apply_T(const ParametrixConfig& cfg, double t, double s, const SampledField& g);

struct TPieces {
    SampledField low;        // -tau A(x,D) low-frequency part
    SampledField band_wave;  // sum (D_t^2 - A_k) u_k
    SampledField gamma;      // sum (A_k - A) u_k
    std::vector<double> gamma_band_norms;
};

TPieces apply_T_pieces(const ParametrixConfig& cfg, double t, double s, const SampledField& g);

/// u, del_t u, del_t^2 u of S^(t)g in one pass.
EvolvedState evolve_Shat(const ParametrixConfig& cfg, double t, const SampledField& g);

}  // namespace wp
