#pragma once

#include <array>
#include <memory>
#include <vector>

#include "wp/dyadic.hpp"
#include "wp/field.hpp"

namespace wp {

struct HamiltonState {
    double x = 0.0;
    double xi = 0.0;
};

struct FlowStats {
    long steps = 0;
    double max_local_err = 0.0;
};

/// chi_{t,s}(y, eta) for the band symbol p = sign * s_k(x)|xi|:
/// integrates x' = sign s(x) sgn(xi), xi' = -sign s'(x)|xi| from time s to t
/// with adaptive Dormand-Prince 5(4), local tolerance `tol`.
HamiltonState flow_integrate(const BandOperatorSet& ops, int sign, double y, double eta,
                             double s, double t, FlowStats* stats = nullptr, double tol = 1e-10);

/// Discretized canonical map chi_{t,s} for one band and sign.
class FlowMap {
  public:
    FlowMap(std::shared_ptr<const BandOperatorSet> ops, int sign, double t, double s)
        : ops_(std::move(ops)), sign_(sign), t_(t), s_(s) {}

    HamiltonState operator()(double y, double eta) const {
        return flow_integrate(*ops_, sign_, y, eta, s_, t_, nullptr);
    }
    HamiltonState eval(double y, double eta, FlowStats* st) const {
        return flow_integrate(*ops_, sign_, y, eta, s_, t_, st);
    }

    int sign() const { return sign_; }
    double t() const { return t_; }
    double s() const { return s_; }
    const BandOperatorSet& ops() const { return *ops_; }

  private:
    std::shared_ptr<const BandOperatorSet> ops_;
    int sign_;
    double t_, s_;
};

/// Batch map of chi_{t,s} over many starting points (data-parallel).
std::vector<HamiltonState> flow_batch(const BandOperatorSet& ops, int sign,
                                      const std::vector<HamiltonState>& z, double s, double t);
std::vector<HamiltonState> flow_batch_serial(const BandOperatorSet& ops, int sign,
                                             const std::vector<HamiltonState>& z, double s, double t);

/// One backward pass per point recording chi_{0,tau_i}(z) at every
/// checkpoint; times must be ascending and start at >= 0.
std::vector<std::vector<HamiltonState>> flow_checkpoints(const BandOperatorSet& ops, int sign,
                                                         const std::vector<HamiltonState>& z,
                                                         const std::vector<double>& times);

struct FlowCheckReport {
    double max_compose_dev = 0.0;  // chi_{t,s} o chi_{s,r} vs chi_{t,r}
    double max_inverse_dev = 0.0;  // chi_{s,t} o chi_{t,s} vs id
    int samples = 0;
};

FlowCheckReport flow_compose_check(const BandOperatorSet& ops, int sign, double t, double s,
                                   double r, int samples, std::uint64_t seed = 1);

struct SymplecticReport {
    double max_det_dev = 0.0;  // max |det Dchi_{t,0} - 1|
    int samples = 0;
};

SymplecticReport symplectic_check(const BandOperatorSet& ops, int sign, double t, int samples,
                                  std::uint64_t seed = 1);

// Convex deformation C_r = r A + (1-r) B between two metrics on one grid,
// with per-band flows for the truncated interpolants.
class DeformationPath {
  public:
    DeformationPath(const Metric& a, const Metric& b);

    const Metric& metric_a() const { return a_; }
    const Metric& metric_b() const { return b_; }
    /// Interpolated metric r A + (1-r) B (fresh object, truncations included).
    Metric at(double r) const;
    /// Band symbols of C_r.
    std::shared_ptr<const BandOperatorSet> ops_at(double r, int k) const;
    /// d/dr of the band symbol: chi(2^{-k/2}D)[(a_k - b_k) / (2 sqrt((C_r)_k))].
    SampledField symbol_derivative(double r, int k) const;

  private:
    Metric a_, b_;
};

struct DeformationDerivative {
    double dx = 0.0;   // d/dr of x_r(t)
    double dxi = 0.0;  // d/dr of xi_r(t)
    double richardson_defect = 0.0;
};

/// Central difference in r of chi^{C_r}_{t,0}(y,eta) with Richardson
/// validation (steps dr and dr/2).
DeformationDerivative deformation_derivative(const DeformationPath& path, int k, int sign,
                                             double y, double eta, double t, double r = 0.5,
                                             double dr = 1e-3);

/// Same derivative from the variational ODE along the base trajectory.
DeformationDerivative deformation_derivative_variational(const DeformationPath& path, int k,
                                                         int sign, double y, double eta, double t,
                                                         double r = 0.5);

}  // namespace wp
