#include "wp/window.hpp"

#include <cmath>
#include <stdexcept>

#include "wp/field.hpp"

namespace wp {

Window::Window(double sharpness) : a_(sharpness) {
    if (!(a_ > 0.0)) throw std::invalid_argument("window sharpness must be positive");
    // quadrature nodes (trapezoid; integrand is smooth and compactly supported)
    const int nq = 4096;
    qz_.resize(nq + 1);
    qg_.resize(nq + 1);
    const double hq = 2.0 / nq;
    double norm2 = 0.0;
    for (int i = 0; i <= nq; ++i) {
        const double z = -1.0 + i * hq;
        qz_[static_cast<std::size_t>(i)] = z;
        const double v = ghat_raw(z);
        qg_[static_cast<std::size_t>(i)] = v;
        norm2 += (i == 0 || i == nq ? 0.5 : 1.0) * v * v * hq;
    }
    c_ = 1.0 / std::sqrt(norm2);
    for (auto& v : qg_) v *= c_;

    for (int d = 0; d < 3; ++d) tab_[d].resize(static_cast<std::size_t>(2 * tab_n_) + 1);
    for (int i = 0; i <= 2 * tab_n_; ++i) {
        const double z = -1.0 + static_cast<double>(i) / tab_n_;
        tab_[0][static_cast<std::size_t>(i)] = ghat_exact(z);
        tab_[1][static_cast<std::size_t>(i)] = ghat_d1_exact(z);
        tab_[2][static_cast<std::size_t>(i)] = ghat_d2_exact(z);
    }
}

double Window::ghat_raw(double z) const {
    const double z2 = z * z;
    if (z2 >= 1.0) return 0.0;
    return std::exp(-a_ / (1.0 - z2));
}

double Window::ghat_exact(double z) const { return c_ * ghat_raw(z); }

double Window::ghat_d1_exact(double z) const {
    const double z2 = z * z;
    if (z2 >= 1.0) return 0.0;
    const double d = 1.0 - z2;
    return ghat_exact(z) * (-2.0 * a_ * z / (d * d));
}

double Window::ghat_d2_exact(double z) const {
    const double z2 = z * z;
    if (z2 >= 1.0) return 0.0;
    const double d = 1.0 - z2;
    const double w = -2.0 * a_ * z / (d * d);
    return ghat_exact(z) * (w * w - 2.0 * a_ / (d * d) - 8.0 * a_ * z2 / (d * d * d));
}

double Window::interp(const std::vector<double>& tab, double z) const {
    if (z <= -1.0 || z >= 1.0) return 0.0;
    const double u = (z + 1.0) * tab_n_;
    int i1 = static_cast<int>(u);
    const double t = u - i1;
    const int n = 2 * tab_n_;
    auto at = [&](int i) { return (i < 0 || i > n) ? 0.0 : tab[static_cast<std::size_t>(i)]; };
    const double f0 = at(i1 - 1), f1 = at(i1), f2 = at(i1 + 1), f3 = at(i1 + 2);
    const double c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    const double c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    const double c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    const double c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    return c0 * f0 + c1 * f1 + c2 * f2 + c3 * f3;
}

double Window::ghat_deriv(double z, int order) const {
    if (order < 0 || order > 2) throw std::invalid_argument("ghat derivative order must be 0..2");
    return interp(tab_[order], z);
}

double Window::g_deriv(double y, int order) const {
    if (order < 0 || order > 4) throw std::invalid_argument("g derivative order must be 0..4");
    // g^{(p)}(y) = (1/2pi) int z^p ghat(z) cos(yz + p pi/2) dz
    const double hq = qz_[1] - qz_[0];
    double s = 0.0;
    const double ph = order * kTwoPi / 4.0;
    for (std::size_t i = 0; i < qz_.size(); ++i) {
        const double z = qz_[i];
        const double w = (i == 0 || i + 1 == qz_.size()) ? 0.5 : 1.0;
        s += w * std::pow(z, order) * qg_[i] * std::cos(y * z + ph);
    }
    return s * hq / kTwoPi;
}

double Window::l2_norm() const {
    // Parseval: int g^2 = (1/2pi) int ghat^2 = 1/2pi by normalization
    const double hq = qz_[1] - qz_[0];
    double s = 0.0;
    for (std::size_t i = 0; i < qz_.size(); ++i) {
        const double w = (i == 0 || i + 1 == qz_.size()) ? 0.5 : 1.0;
        s += w * qg_[i] * qg_[i] * hq;
    }
    return std::sqrt(s / kTwoPi);
}

}  // namespace wp
