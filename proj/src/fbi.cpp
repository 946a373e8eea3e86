#include "wp/fbi.hpp"

#include <algorithm>
#include <cmath>

#include "wp/parallel.hpp"

namespace wp {

PhaseGrid::PhaseGrid(const SpatialGrid& grid, int band, double spacing_factor, double x_factor) {
    if (band < 4) throw std::invalid_argument("phase grid needs band >= 4");
    if (spacing_factor < 4.0) throw std::invalid_argument("xi spacing must satisfy h_xi <= sqrt(lambda)/4");
    if (x_factor < 8.0) throw std::invalid_argument("x spacing must satisfy h_x <= 2pi/(8 lambda)");
    k = band;
    lambda = std::ldexp(1.0, band);
    length = grid.length;
    const double sq = std::sqrt(lambda);
    nx = static_cast<int>(std::ceil(x_factor * lambda * length / kTwoPi));
    hx = length / nx;
    hxi = sq / spacing_factor;
    double lo = std::min(lambda / 8.0, lambda / 4.0 - 1.02 * sq);
    lo = std::max(lo, hxi / 2.0);
    const double hi = std::max(2.0 * lambda, lambda + 1.02 * sq);
    const int npos = static_cast<int>(std::ceil((hi - lo) / hxi));
    xi.resize(static_cast<std::size_t>(2 * npos));
    for (int j = 0; j < npos; ++j) {
        const double v = lo + (j + 0.5) * hxi;
        xi[static_cast<std::size_t>(npos + j)] = v;
        xi[static_cast<std::size_t>(npos - 1 - j)] = -v;
    }
}

double PhaseGrid::multiplier_defect(const Window& w, double eta_lo, double eta_hi) const {
    const double sq = std::sqrt(lambda);
    double worst = 0.0;
    const int mlo = static_cast<int>(std::ceil(eta_lo * length / kTwoPi));
    const int mhi = static_cast<int>(std::floor(eta_hi * length / kTwoPi));
    for (int m = mlo; m <= mhi; ++m) {
        const double eta = kTwoPi * m / length;
        double s = 0.0;
        for (double xj : xi) {
            const double g = w.ghat((eta - xj) / sq);
            s += g * g;
        }
        worst = std::max(worst, std::abs(s * hxi / sq - 1.0));
    }
    return worst;
}

double PhaseSpaceField::l2_norm() const {
    const double s = chunked_sum(static_cast<std::ptrdiff_t>(v.size()),
                                 [this](std::ptrdiff_t i) { return std::norm(v[static_cast<std::size_t>(i)]); });
    return std::sqrt(s * grid->weight());
}

PhaseSpaceField& PhaseSpaceField::operator*=(cplx c) {
    for (auto& z : v) z *= c;
    return *this;
}

FbiTables::FbiTables(const Window& w, std::shared_ptr<const PhaseGrid> pg, const SpatialGrid& grid)
    : w_(w), pg_(std::move(pg)), grid_(grid) {
    const PhaseGrid& p = *pg_;
    if (std::abs(p.length - grid.length) > 1e-12) throw std::invalid_argument("period mismatch");
    const double sq = std::sqrt(p.lambda);
    qnorm_ = std::pow(p.lambda, -0.25);
    const int nxi = p.nxi();
    mspan_ = static_cast<int>(std::floor(2.0 * sq * grid.length / kTwoPi)) + 3;
    mlo_.resize(static_cast<std::size_t>(nxi));
    for (int d = 0; d < 3; ++d) wtab_[d].assign(static_cast<std::size_t>(nxi) * mspan_, 0.0);
    for (int j = 0; j < nxi; ++j) {
        const double xj = p.xi[static_cast<std::size_t>(j)];
        const int mlo = static_cast<int>(std::ceil((xj - sq) * grid.length / kTwoPi));
        mlo_[static_cast<std::size_t>(j)] = mlo;
        for (int t = 0; t < mspan_; ++t) {
            const int m = mlo + t;
            if (m < -grid.n / 2 || m >= grid.n / 2) continue;  // off-grid modes carry no data
            const double u = (kTwoPi * m / grid.length - xj) / sq;
            for (int d = 0; d < 3; ++d)
                wtab_[d][static_cast<std::size_t>(j) * mspan_ + t] = w_.ghat_deriv(u, d);
        }
    }
    unit_.resize(static_cast<std::size_t>(p.nx));
    for (int t = 0; t < p.nx; ++t) {
        const double ph = kTwoPi * t / p.nx;
        unit_[static_cast<std::size_t>(t)] = cplx(std::cos(ph), std::sin(ph));
    }
    // exact frame multiplier over grid modes
    mult_.assign(static_cast<std::size_t>(grid.n), 0.0);
    for (int i = 0; i < grid.n; ++i) {
        const double eta = grid.freq(i);
        double s = 0.0;
        for (double xj : p.xi) {
            const double g = w_.ghat((eta - xj) / sq);
            s += g * g;
        }
        mult_[static_cast<std::size_t>(i)] = s * p.hxi / sq;
    }
}

template <bool kParallel>
PhaseSpaceField FbiTables::forward_impl(const SampledField& f) const {
    const PhaseGrid& p = *pg_;
    const int nxi = p.nxi();
    const int nx = p.nx;
    const int n = grid_.n;
    const auto& fh = f.spectrum();
    PhaseSpaceField out{pg_, std::vector<cplx>(static_cast<std::size_t>(p.nodes()))};
    auto row = [&](std::ptrdiff_t i) {
        cplx* dst = out.v.data() + i * nxi;
        for (int j = 0; j < nxi; ++j) {
            const int mlo = mlo_[static_cast<std::size_t>(j)];
            const double* wt = wtab_[0].data() + static_cast<std::size_t>(j) * mspan_;
            long long idx = (static_cast<long long>(mlo) * i) % nx;
            if (idx < 0) idx += nx;
            cplx acc(0.0, 0.0);
            for (int t = 0; t < mspan_; ++t) {
                const double wv = wt[t];
                if (wv != 0.0) {
                    const int m = mlo + t;
                    const int fi = m >= 0 ? m : m + n;
                    acc += fh[static_cast<std::size_t>(fi)] * wv * unit_[static_cast<std::size_t>(idx)];
                }
                idx += i;
                if (idx >= nx) idx -= nx;
            }
            dst[j] = acc * (qnorm_ / grid_.length);
        }
    };
    if constexpr (kParallel)
        parallel_for(nx, row);
    else
        serial_for(nx, row);
    return out;
}

PhaseSpaceField FbiTables::forward(const SampledField& f) const { return forward_impl<true>(f); }
PhaseSpaceField FbiTables::forward_serial(const SampledField& f) const { return forward_impl<false>(f); }

SampledField FbiTables::scatter(const std::vector<cplx>& c, int deriv_order) const {
    if (c.size() != static_cast<std::size_t>(pg_->nodes())) throw std::invalid_argument("node count mismatch");
    const int nxi = pg_->nxi();
    return scatter_impl<true>(
        [&c, nxi](int i, int j) { return c[static_cast<std::size_t>(i) * nxi + static_cast<std::size_t>(j)]; },
        deriv_order);
}
SampledField FbiTables::scatter_serial(const std::vector<cplx>& c, int deriv_order) const {
    if (c.size() != static_cast<std::size_t>(pg_->nodes())) throw std::invalid_argument("node count mismatch");
    const int nxi = pg_->nxi();
    return scatter_impl<false>(
        [&c, nxi](int i, int j) { return c[static_cast<std::size_t>(i) * nxi + static_cast<std::size_t>(j)]; },
        deriv_order);
}

cplx FbiTables::eval_offgrid(const SampledField& f, double x, double xi) const {
    const double sq = std::sqrt(pg_->lambda);
    const int n = grid_.n;
    const auto& fh = f.spectrum();
    const double mstep = kTwoPi / grid_.length;
    int mlo = static_cast<int>(std::ceil((xi - sq) / mstep));
    int mhi = static_cast<int>(std::floor((xi + sq) / mstep));
    mlo = std::max(mlo, -n / 2);
    mhi = std::min(mhi, n / 2 - 1);
    if (mlo > mhi) return {0.0, 0.0};
    const cplx step(std::cos(mstep * x), std::sin(mstep * x));
    cplx ph(std::cos(mlo * mstep * x), std::sin(mlo * mstep * x));
    cplx acc(0.0, 0.0);
    for (int m = mlo; m <= mhi; ++m) {
        const double wv = w_.ghat((m * mstep - xi) / sq);
        if (wv != 0.0) {
            const int fi = m >= 0 ? m : m + n;
            acc += fh[static_cast<std::size_t>(fi)] * wv * ph;
        }
        ph *= step;
    }
    return acc * (qnorm_ / grid_.length);
}

cplx packet_eval(const Window& w, double lambda, double x, double xi, double y, double length) {
    const double sq = std::sqrt(lambda);
    const double mstep = kTwoPi / length;
    const int mlo = static_cast<int>(std::ceil((xi - sq) / mstep));
    const int mhi = static_cast<int>(std::floor((xi + sq) / mstep));
    cplx acc(0.0, 0.0);
    for (int m = mlo; m <= mhi; ++m) {
        const double eta = m * mstep;
        const double wv = w.ghat((eta - xi) / sq);
        if (wv != 0.0) acc += wv * cplx(std::cos(eta * (y - x)), std::sin(eta * (y - x)));
    }
    return acc * std::pow(lambda, -0.25) / length;
}

PhaseSpaceField fbi_forward(const Window& w, std::shared_ptr<const PhaseGrid> pg,
                            const SampledField& f, bool enforce_band) {
    if (enforce_band) {
        const double lam = pg->lambda;
        double inside = 0.0, outside = 0.0;
        for (int i = 0; i < f.grid().n; ++i) {
            const double a = std::abs(f.grid().freq(i));
            const double e = std::norm(f.spectrum()[static_cast<std::size_t>(i)]);
            (a > lam / 4.0 && a < lam ? inside : outside) += e;
        }
        if (outside > 1e-18 * (inside + outside))
            throw std::invalid_argument("fbi_forward: data not band-limited to lambda/4 < |xi| < lambda");
    }
    FbiTables tab(w, std::move(pg), f.grid());
    return tab.forward(f);
}

SampledField fbi_adjoint(const Window& w, const PhaseSpaceField& f, const SpatialGrid& grid) {
    FbiTables tab(w, f.grid, grid);
    return tab.scatter(f.v, 0);
}

cplx fbi_eval_offgrid(const Window& w, const SampledField& f, double lambda, double x, double xi) {
    const double sq = std::sqrt(lambda);
    const int n = f.grid().n;
    const double mstep = kTwoPi / f.grid().length;
    int mlo = std::max(static_cast<int>(std::ceil((xi - sq) / mstep)), -n / 2);
    int mhi = std::min(static_cast<int>(std::floor((xi + sq) / mstep)), n / 2 - 1);
    cplx acc(0.0, 0.0);
    for (int m = mlo; m <= mhi; ++m) {
        const double eta = m * mstep;
        const double wv = w.ghat((eta - xi) / sq);
        if (wv != 0.0) {
            const int fi = m >= 0 ? m : m + n;
            acc += f.spectrum()[static_cast<std::size_t>(fi)] * wv *
                   cplx(std::cos(eta * x), std::sin(eta * x));
        }
    }
    return acc * std::pow(lambda, -0.25) / f.grid().length;
}

namespace {

// packet spectrum over signed modes [mlo, mhi] relative to a node
struct PacketSpec {
    int mlo = 0;
    std::vector<cplx> v;
};

// apply P = sign * s(y) |D_y| to a packet spectrum (exact banded convolution)
PacketSpec apply_P_packet(const BandOperatorSet& ops, int sign, const PacketSpec& in,
                          const SpatialGrid& grid) {
    const auto& sh = ops.s().spectrum();
    const double cut = std::pow(2.0, ops.band() / 2.0);
    const int n = grid.n;
    const double mstep = kTwoPi / grid.length;
    const int sw = static_cast<int>(std::floor(cut / mstep)) + 1;
    PacketSpec out;
    out.mlo = in.mlo - sw;
    out.v.assign(in.v.size() + 2 * static_cast<std::size_t>(sw), cplx(0.0, 0.0));
    for (std::size_t t = 0; t < in.v.size(); ++t) {
        const int mz = in.mlo + static_cast<int>(t);
        const cplx base = in.v[t] * std::abs(mz * mstep) * (sign >= 0 ? 1.0 : -1.0) / grid.length;
        if (base == cplx(0.0, 0.0)) continue;
        for (int d = -sw; d <= sw; ++d) {
            const int md = ((d % n) + n) % n;
            const cplx sv = sh[static_cast<std::size_t>(md)];
            if (sv == cplx(0.0, 0.0)) continue;
            out.v[t + static_cast<std::size_t>(d + sw)] += sv * base;
        }
    }
    return out;
}

CorrectionPacket finalize_packet(const PacketSpec& ps, const BandOperatorSet& ops, double x,
                                 double xi, const SpatialGrid& grid) {
    CorrectionPacket cp;
    const double lam = ops.lambda();
    const double sq = std::sqrt(lam);
    const double mstep = kTwoPi / grid.length;
    std::vector<cplx> spec(static_cast<std::size_t>(grid.n), cplx(0.0, 0.0));
    cp.window_hat.reserve(ps.v.size());
    cp.window_zeta.reserve(ps.v.size());
    for (std::size_t t = 0; t < ps.v.size(); ++t) {
        const int m = ps.mlo + static_cast<int>(t);
        const double eta = m * mstep;
        cp.window_zeta.push_back((eta - xi) / sq);
        cp.window_hat.push_back(std::pow(lam, 0.25) * ps.v[t] *
                                cplx(std::cos(eta * x), std::sin(eta * x)));
        if (m >= -grid.n / 2 && m < grid.n / 2) {
            const int fi = m >= 0 ? m : m + grid.n;
            spec[static_cast<std::size_t>(fi)] += ps.v[t];
        }
    }
    cp.field = SampledField::from_spectrum(grid, std::move(spec));
    return cp;
}

// (L g)^ and (L^2 g)^ node dictionaries; windows taken from w via ghat_deriv.
PacketSpec packet_base(const Window& w, const BandOperatorSet& ops, double x, double xi,
                       const SpatialGrid& grid) {
    const double lam = ops.lambda();
    const double sq = std::sqrt(lam);
    const double mstep = kTwoPi / grid.length;
    PacketSpec ps;
    ps.mlo = static_cast<int>(std::ceil((xi - sq) / mstep));
    const int mhi = static_cast<int>(std::floor((xi + sq) / mstep));
    ps.v.resize(static_cast<std::size_t>(mhi - ps.mlo + 1));
    const double qn = std::pow(lam, -0.25);
    for (std::size_t t = 0; t < ps.v.size(); ++t) {
        const int m = ps.mlo + static_cast<int>(t);
        const double eta = m * mstep;
        ps.v[t] = qn * w.ghat((eta - xi) / sq) * cplx(std::cos(eta * x), -std::sin(eta * x));
    }
    return ps;
}

PacketSpec packet_L(const Window& w, const BandOperatorSet& ops, int sign, double x, double xi,
                    const SpatialGrid& grid) {
    const double lam = ops.lambda();
    const double sq = std::sqrt(lam);
    const double mstep = kTwoPi / grid.length;
    const double sgn = xi >= 0.0 ? 1.0 : -1.0;
    const double sig = sign >= 0 ? 1.0 : -1.0;
    const double a = sig * ops.s_at(x) * sgn;          // d_xi p
    const double b = sig * ops.s_deriv_at(x) * std::abs(xi);  // d_x p
    PacketSpec ps;
    ps.mlo = static_cast<int>(std::ceil((xi - sq) / mstep));
    const int mhi = static_cast<int>(std::floor((xi + sq) / mstep));
    ps.v.resize(static_cast<std::size_t>(mhi - ps.mlo + 1));
    const double qn = std::pow(lam, -0.25);
    for (std::size_t t = 0; t < ps.v.size(); ++t) {
        const int m = ps.mlo + static_cast<int>(t);
        const double eta = m * mstep;
        const double u = (eta - xi) / sq;
        const cplx ph(std::cos(eta * x), -std::sin(eta * x));
        // (L g)^ = -d_xi p * eta * ghat - i lam^{-1/2} d_x p * ghat'
        ps.v[t] = qn * ph * (-a * eta * w.ghat(u) - cplx(0.0, 1.0) / sq * b * w.ghat_deriv(u, 1));
    }
    return ps;
}

PacketSpec packet_L2(const Window& w, const BandOperatorSet& ops, int sign, double x, double xi,
                     const SpatialGrid& grid) {
    const double lam = ops.lambda();
    const double sq = std::sqrt(lam);
    const double mstep = kTwoPi / grid.length;
    const double sgn = xi >= 0.0 ? 1.0 : -1.0;
    const double sig = sign >= 0 ? 1.0 : -1.0;
    const double sv = ops.s_at(x), sp = ops.s_deriv_at(x), spp = ops.s_deriv2_at(x);
    const double a = sig * sv * sgn, b = sig * sp * std::abs(xi);
    const cplx Dx_a = cplx(0.0, -1.0) * sig * sp * sgn;
    const cplx Dx_b = cplx(0.0, -1.0) * sig * spp * std::abs(xi);
    const cplx Dxi_b = cplx(0.0, -1.0) * sig * sp * sgn;
    PacketSpec ps;
    ps.mlo = static_cast<int>(std::ceil((xi - sq) / mstep));
    const int mhi = static_cast<int>(std::floor((xi + sq) / mstep));
    ps.v.resize(static_cast<std::size_t>(mhi - ps.mlo + 1));
    const double qn = std::pow(lam, -0.25);
    for (std::size_t t = 0; t < ps.v.size(); ++t) {
        const int m = ps.mlo + static_cast<int>(t);
        const double eta = m * mstep;
        const double u = (eta - xi) / sq;
        const cplx ph(std::cos(eta * x), -std::sin(eta * x));
        const cplx c0 = (a * a * eta * eta) - a * Dx_a * eta;
        const cplx c1 = cplx(0.0, 1.0) / sq * (-a * Dx_b + b * Dxi_b + 2.0 * a * b * eta);
        const double c2 = -b * b / lam;
        ps.v[t] = qn * ph * (c0 * w.ghat(u) + c1 * w.ghat_deriv(u, 1) + c2 * w.ghat_deriv(u, 2));
    }
    return ps;
}

PacketSpec add_specs(const PacketSpec& a, const PacketSpec& b) {
    PacketSpec out;
    out.mlo = std::min(a.mlo, b.mlo);
    const int hi = std::max(a.mlo + static_cast<int>(a.v.size()), b.mlo + static_cast<int>(b.v.size()));
    out.v.assign(static_cast<std::size_t>(hi - out.mlo), cplx(0.0, 0.0));
    for (std::size_t t = 0; t < a.v.size(); ++t) out.v[static_cast<std::size_t>(a.mlo - out.mlo) + t] += a.v[t];
    for (std::size_t t = 0; t < b.v.size(); ++t) out.v[static_cast<std::size_t>(b.mlo - out.mlo) + t] += b.v[t];
    return out;
}

}  // namespace

CorrectionPacket correction_packet(const Window& w, const BandOperatorSet& ops, int sign,
                                   double x, double xi) {
    const SpatialGrid& grid = ops.grid();
    PacketSpec g0 = packet_base(w, ops, x, xi, grid);
    PacketSpec total = add_specs(apply_P_packet(ops, sign, g0, grid), packet_L(w, ops, sign, x, xi, grid));
    CorrectionPacket cp = finalize_packet(total, ops, x, xi, grid);
    const double sgn = xi >= 0.0 ? 1.0 : -1.0;
    const double sig = sign >= 0 ? 1.0 : -1.0;
    cp.d_xi_p = sig * ops.s_at(x) * sgn;
    cp.d_x_p = sig * ops.s_deriv_at(x) * std::abs(xi);
    return cp;
}

CorrectionPacket correction_packet_second(const Window& w, const BandOperatorSet& ops, int sign,
                                          double x, double xi) {
    const SpatialGrid& grid = ops.grid();
    // (P+L)^2 g = P^2 g + 2 P(L g) + L^2 g  (P_y and the frozen-node L commute)
    PacketSpec g0 = packet_base(w, ops, x, xi, grid);
    PacketSpec Pg = apply_P_packet(ops, sign, g0, grid);
    PacketSpec PPg = apply_P_packet(ops, sign, Pg, grid);
    PacketSpec Lg = packet_L(w, ops, sign, x, xi, grid);
    PacketSpec PLg = apply_P_packet(ops, sign, Lg, grid);
    PacketSpec L2g = packet_L2(w, ops, sign, x, xi, grid);
    PacketSpec total = add_specs(PPg, add_specs(PLg, add_specs(PLg, L2g)));
    CorrectionPacket cp = finalize_packet(total, ops, x, xi, grid);
    const double sgn = xi >= 0.0 ? 1.0 : -1.0;
    const double sig = sign >= 0 ? 1.0 : -1.0;
    cp.d_xi_p = sig * ops.s_at(x) * sgn;
    cp.d_x_p = sig * ops.s_deriv_at(x) * std::abs(xi);
    return cp;
}

}  // namespace wp
