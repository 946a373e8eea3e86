#pragma once

#include <vector>

namespace wp {

// Wave-packet profile: real even g with ghat supported in [-1,1] and
// ||g||_{L2(R)} = (2 pi)^{-1/2}. Shape ghat(z) = c exp(-a/(1-z^2)),
// normalized so that int ghat^2 = 1. Frequency-side values are served
// from a cubic-interpolated table (hot path); exact closed forms and
// quadrature-based spatial evaluation are kept for verification.
class Window {
  public:
    explicit Window(double sharpness = 4.0);

    double sharpness() const { return a_; }
    double norm_const() const { return c_; }

    // closed forms
    double ghat_exact(double z) const;
    double ghat_d1_exact(double z) const;
    double ghat_d2_exact(double z) const;

    // table-interpolated; order 0,1,2 selects ghat, ghat', ghat''
    double ghat(double z) const { return interp(tab_[0], z); }
    double ghat_deriv(double z, int order) const;

    /// Spatial profile g and derivatives, orders 0..4, by quadrature of the
    /// inverse transform g(y) = (1/2pi) int ghat(z) e^{iyz} dz.
    double g_deriv(double y, int order) const;
    double g(double y) const { return g_deriv(y, 0); }

    /// ||g||_{L2(R)} computed from the quadrature nodes.
    double l2_norm() const;

  private:
    double interp(const std::vector<double>& tab, double z) const;
    double ghat_raw(double z) const;

    double a_ = 4.0;
    double c_ = 1.0;
    int tab_n_ = 8192;  // points per unit interval half-width
    std::vector<double> tab_[3];
    std::vector<double> qz_, qg_;  // quadrature nodes/values of ghat on [-1,1]
};

}  // namespace wp
