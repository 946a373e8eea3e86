#include "wp/hamflow.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wp/parallel.hpp"

namespace wp {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// embedded 4th order
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

template <int D, class Rhs>
struct Dopri {
    using State = std::array<double, D>;
    Rhs rhs;
    double tol;
    FlowStats* stats = nullptr;

    // integrate from tau0 to tau1 with dense checkpoints handled by caller
    State run(State y, double tau0, double tau1) {
        const double dir = tau1 >= tau0 ? 1.0 : -1.0;
        double tau = tau0;
        double h = dir * std::max(1e-3, std::abs(tau1 - tau0) / 50.0);
        State k1 = rhs(y);
        int guard = 0;
        while (dir * (tau1 - tau) > 1e-300) {
            if (++guard > 1000000) throw std::runtime_error("flow integrator stalled");
            if (dir * (tau + h - tau1) > 0.0) h = tau1 - tau;
            State k2, k3, k4, k5, k6, k7, yt, y5;
            auto stage = [&](const State& base) { return rhs(base); };
            for (int d = 0; d < D; ++d) yt[d] = y[d] + h * a21 * k1[d];
            k2 = stage(yt);
            for (int d = 0; d < D; ++d) yt[d] = y[d] + h * (a31 * k1[d] + a32 * k2[d]);
            k3 = stage(yt);
            for (int d = 0; d < D; ++d) yt[d] = y[d] + h * (a41 * k1[d] + a42 * k2[d] + a43 * k3[d]);
            k4 = stage(yt);
            for (int d = 0; d < D; ++d)
                yt[d] = y[d] + h * (a51 * k1[d] + a52 * k2[d] + a53 * k3[d] + a54 * k4[d]);
            k5 = stage(yt);
            for (int d = 0; d < D; ++d)
                yt[d] = y[d] + h * (a61 * k1[d] + a62 * k2[d] + a63 * k3[d] + a64 * k4[d] + a65 * k5[d]);
            k6 = stage(yt);
            for (int d = 0; d < D; ++d)
                y5[d] = y[d] + h * (b1 * k1[d] + b3 * k3[d] + b4 * k4[d] + b5 * k5[d] + b6 * k6[d]);
            k7 = stage(y5);
            double err = 0.0;
            for (int d = 0; d < D; ++d) {
                const double e = h * (e1 * k1[d] + e3 * k3[d] + e4 * k4[d] + e5 * k5[d] +
                                      e6 * k6[d] + e7 * k7[d]);
                const double sc = tol * (1.0 + std::abs(y[d]) + std::abs(y5[d]));
                err = std::max(err, std::abs(e) / sc);
            }
            if (err <= 1.0) {
                tau += h;
                y = y5;
                k1 = k7;  // FSAL
                if (stats) {
                    ++stats->steps;
                    stats->max_local_err = std::max(stats->max_local_err, err * tol);
                }
            }
            const double fac = std::clamp(0.9 * std::pow(err > 0 ? err : 1e-16, -0.2), 0.2, 5.0);
            h *= fac;
        }
        return y;
    }
};

}  // namespace

HamiltonState flow_integrate(const BandOperatorSet& ops, int sign, double y, double eta, double s,
                             double t, FlowStats* stats, double tol) {
    if (eta == 0.0) throw std::invalid_argument("hamilton flow requires xi != 0");
    const double sgn = eta > 0.0 ? 1.0 : -1.0;
    const double sig = sign >= 0 ? 1.0 : -1.0;
    auto rhs = [&ops, sgn, sig](const std::array<double, 2>& z) {
        return std::array<double, 2>{sig * sgn * ops.s_at(z[0]),
                                     -sig * sgn * ops.s_deriv_at(z[0]) * z[1]};
    };
    Dopri<2, decltype(rhs)> stepper{rhs, tol, stats};
    auto out = stepper.run({y, eta}, s, t);
    return {out[0], out[1]};
}

namespace {

template <bool kParallel>
std::vector<HamiltonState> flow_batch_impl(const BandOperatorSet& ops, int sign,
                                           const std::vector<HamiltonState>& z, double s, double t) {
    std::vector<HamiltonState> out(z.size());
    auto body = [&](std::ptrdiff_t i) {
        const auto& p = z[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = flow_integrate(ops, sign, p.x, p.xi, s, t);
    };
    if constexpr (kParallel)
        parallel_for(static_cast<std::ptrdiff_t>(z.size()), body);
    else
        serial_for(static_cast<std::ptrdiff_t>(z.size()), body);
    return out;
}

}  // namespace

std::vector<HamiltonState> flow_batch(const BandOperatorSet& ops, int sign,
                                      const std::vector<HamiltonState>& z, double s, double t) {
    return flow_batch_impl<true>(ops, sign, z, s, t);
}
std::vector<HamiltonState> flow_batch_serial(const BandOperatorSet& ops, int sign,
                                             const std::vector<HamiltonState>& z, double s, double t) {
    return flow_batch_impl<false>(ops, sign, z, s, t);
}

std::vector<std::vector<HamiltonState>> flow_checkpoints(const BandOperatorSet& ops, int sign,
                                                         const std::vector<HamiltonState>& z,
                                                         const std::vector<double>& times) {
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] < times[i - 1]) throw std::invalid_argument("checkpoint times must ascend");
    std::vector<std::vector<HamiltonState>> out(times.size(),
                                                std::vector<HamiltonState>(z.size()));
    parallel_for(static_cast<std::ptrdiff_t>(z.size()), [&](std::ptrdiff_t i) {
        // chi_{0,tau} = exp(-tau X_H): one backward integration, segment by segment
        HamiltonState cur = z[static_cast<std::size_t>(i)];
        double prev = 0.0;
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            const double tau = times[ti];
            if (tau != prev) {
                // advance exp(-(tau - prev) X_H): integrate chi_{0, tau-prev}
                cur = flow_integrate(ops, sign, cur.x, cur.xi, tau - prev, 0.0);
                prev = tau;
            }
            out[ti][static_cast<std::size_t>(i)] = cur;
        }
    });
    return out;
}

FlowCheckReport flow_compose_check(const BandOperatorSet& ops, int sign, double t, double s,
                                   double r, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, ops.grid().length);
    std::uniform_real_distribution<double> ue(ops.lambda() / 4.0, ops.lambda());
    FlowCheckReport rep;
    rep.samples = samples;
    for (int i = 0; i < samples; ++i) {
        const double y = ux(rng);
        const double eta = (i % 2 == 0 ? 1.0 : -1.0) * ue(rng);
        auto sr = flow_integrate(ops, sign, y, eta, r, s);
        auto ts_sr = flow_integrate(ops, sign, sr.x, sr.xi, s, t);
        auto tr = flow_integrate(ops, sign, y, eta, r, t);
        rep.max_compose_dev = std::max({rep.max_compose_dev, std::abs(ts_sr.x - tr.x),
                                        std::abs(ts_sr.xi - tr.xi) / std::abs(eta)});
        auto fwd = flow_integrate(ops, sign, y, eta, s, t);
        auto back = flow_integrate(ops, sign, fwd.x, fwd.xi, t, s);
        rep.max_inverse_dev = std::max({rep.max_inverse_dev, std::abs(back.x - y),
                                        std::abs(back.xi - eta) / std::abs(eta)});
    }
    return rep;
}

SymplecticReport symplectic_check(const BandOperatorSet& ops, int sign, double t, int samples,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, ops.grid().length);
    std::uniform_real_distribution<double> ue(ops.lambda() / 4.0, ops.lambda());
    SymplecticReport rep;
    rep.samples = samples;
    const double tol = 1e-12;
    for (int i = 0; i < samples; ++i) {
        const double y = ux(rng);
        const double eta = (i % 2 == 0 ? 1.0 : -1.0) * ue(rng);
        const double dy = 1e-5;
        const double de = 1e-5 * std::abs(eta);
        auto f = [&](double yy, double ee) { return flow_integrate(ops, sign, yy, ee, 0.0, t, nullptr, tol); };
        auto xp = f(y + dy, eta), xm = f(y - dy, eta);
        auto ep = f(y, eta + de), em = f(y, eta - de);
        const double dxdy = (xp.x - xm.x) / (2 * dy);
        const double dxidy = (xp.xi - xm.xi) / (2 * dy);
        const double dxde = (ep.x - em.x) / (2 * de);
        const double dxide = (ep.xi - em.xi) / (2 * de);
        const double det = dxdy * dxide - dxde * dxidy;
        rep.max_det_dev = std::max(rep.max_det_dev, std::abs(det - 1.0));
    }
    return rep;
}

DeformationPath::DeformationPath(const Metric& a, const Metric& b) : a_(a), b_(b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("deformation metrics need one grid");
}

Metric DeformationPath::at(double r) const {
    std::vector<double> v(static_cast<std::size_t>(a_.grid().n));
    const auto& va = a_.a().samples();
    const auto& vb = b_.a().samples();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = r * va[i].real() + (1.0 - r) * vb[i].real();
    MetricRecipe rec;
    rec.kind = "deformation";
    Metric m(SampledField::from_real(a_.grid(), v), std::max(a_.m_bound(), b_.m_bound()), rec);
    return m;
}

std::shared_ptr<const BandOperatorSet> DeformationPath::ops_at(double r, int k) const {
    return std::make_shared<BandOperatorSet>(at(r), k);
}

SampledField DeformationPath::symbol_derivative(double r, int k) const {
    const SampledField& ak = a_.truncation(k);
    const SampledField& bk = b_.truncation(k);
    const Metric cr = at(r);
    const SampledField& ck = cr.truncation(k);
    std::vector<double> v(static_cast<std::size_t>(ak.grid().n));
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double num = ak.samples()[i].real() - bk.samples()[i].real();
        v[i] = num / (2.0 * std::sqrt(ck.samples()[i].real()));
    }
    return truncate_field(SampledField::from_real(ak.grid(), v), k);
}

DeformationDerivative deformation_derivative(const DeformationPath& path, int k, int sign,
                                             double y, double eta, double t, double r, double dr) {
    auto endpoint = [&](double rr) {
        auto ops = path.ops_at(rr, k);
        return flow_integrate(*ops, sign, y, eta, 0.0, t);
    };
    auto diff = [&](double step) {
        auto p = endpoint(r + step);
        auto m = endpoint(r - step);
        return std::array<double, 2>{(p.x - m.x) / (2 * step), (p.xi - m.xi) / (2 * step)};
    };
    const auto d1 = diff(dr);
    const auto d2 = diff(dr / 2);
    DeformationDerivative out;
    out.dx = (4.0 * d2[0] - d1[0]) / 3.0;
    out.dxi = (4.0 * d2[1] - d1[1]) / 3.0;
    out.richardson_defect =
        std::max(std::abs(d1[0] - d2[0]) / (1.0 + std::abs(out.dx)),
                 std::abs(d1[1] - d2[1]) / (1.0 + std::abs(out.dxi)));
    return out;
}

DeformationDerivative deformation_derivative_variational(const DeformationPath& path, int k,
                                                         int sign, double y, double eta, double t,
                                                         double r) {
    if (eta == 0.0) throw std::invalid_argument("hamilton flow requires xi != 0");
    auto ops = path.ops_at(r, k);
    const SampledField ds_field = path.symbol_derivative(r, k);
    const SampledField dsp_field = derivative(ds_field, 1);
    // fine tables via a throwaway resample of band-limited fields
    const Metric cr = path.at(r);
    const double sgn = eta > 0.0 ? 1.0 : -1.0;
    const double sig = sign >= 0 ? 1.0 : -1.0;
    // state: (x, xi, dx, dxi)
    auto eval = [](const SampledField& f, double xx) {
        // direct trig summation (band-limited, small support)
        cplx acc(0.0, 0.0);
        const auto& sp = f.spectrum();
        for (int i = 0; i < f.grid().n; ++i) {
            const cplx c = sp[static_cast<std::size_t>(i)];
            if (std::abs(c) < 1e-16) continue;
            const double xi = f.grid().freq(i);
            acc += c * cplx(std::cos(xi * xx), std::sin(xi * xx));
        }
        return acc.real() / f.grid().length;
    };
    auto rhs = [&](const std::array<double, 4>& z) {
        const double sv = ops->s_at(z[0]);
        const double sp = ops->s_deriv_at(z[0]);
        const double spp = ops->s_deriv2_at(z[0]);
        const double dsv = eval(ds_field, z[0]);
        const double dspv = eval(dsp_field, z[0]);
        return std::array<double, 4>{
            sig * sgn * sv,
            -sig * sgn * sp * z[1],
            sig * sgn * (sp * z[2] + dsv),
            -sig * sgn * (spp * z[2] * z[1] + sp * z[3] + dspv * z[1])};
    };
    Dopri<4, decltype(rhs)> stepper{rhs, 1e-10, nullptr};
    auto out = stepper.run({y, eta, 0.0, 0.0}, 0.0, t);
    DeformationDerivative d;
    d.dx = out[2];
    d.dxi = out[3];
    return d;
}

}  // namespace wp
