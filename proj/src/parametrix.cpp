#include "wp/parametrix.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wp/parallel.hpp"

namespace wp {

namespace {

double physical_freq(int m, double length) { return kTwoPi * m / length; }

// Banded matrix over signed-mode indices: columns col_lo..col_hi, rows within
// col +- bw. Used only to assemble the initial-value correction K.
struct Banded {
    int col_lo = 0, col_hi = -1, bw = 0;
    std::vector<cplx> a;

    Banded() = default;
    Banded(int lo, int hi, int bandw) : col_lo(lo), col_hi(hi), bw(bandw) {
        a.assign(static_cast<std::size_t>(hi - lo + 1) * (2 * bandw + 1), cplx(0.0, 0.0));
    }
    cplx get(int row, int col) const {
        if (col < col_lo || col > col_hi) return {0.0, 0.0};
        const int d = row - col;
        if (d < -bw || d > bw) return {0.0, 0.0};
        return a[static_cast<std::size_t>(col - col_lo) * (2 * bw + 1) + (d + bw)];
    }
    cplx& at(int row, int col) {
        return a[static_cast<std::size_t>(col - col_lo) * (2 * bw + 1) + (row - col + bw)];
    }
};

Banded mul(const Banded& lhs, const Banded& rhs) {
    Banded out(rhs.col_lo, rhs.col_hi, lhs.bw + rhs.bw);
    for (int c = rhs.col_lo; c <= rhs.col_hi; ++c)
        for (int dr = -out.bw; dr <= out.bw; ++dr) {
            const int r = c + dr;
            cplx s(0.0, 0.0);
            for (int dm = -rhs.bw; dm <= rhs.bw; ++dm) {
                const int m = c + dm;
                const cplx rv = rhs.get(m, c);
                if (rv == cplx(0.0, 0.0)) continue;
                s += lhs.get(r, m) * rv;
            }
            if (s != cplx(0.0, 0.0)) out.at(r, c) = s;
        }
    return out;
}

Banded add(const Banded& lhs, const Banded& rhs, cplx wl, cplx wr) {
    Banded out(std::min(lhs.col_lo, rhs.col_lo), std::max(lhs.col_hi, rhs.col_hi),
               std::max(lhs.bw, rhs.bw));
    for (int c = out.col_lo; c <= out.col_hi; ++c)
        for (int d = -out.bw; d <= out.bw; ++d) {
            const cplx v = wl * lhs.get(c + d, c) + wr * rhs.get(c + d, c);
            if (v != cplx(0.0, 0.0)) out.at(c + d, c) = v;
        }
    return out;
}

Banded scale_rows(Banded m, const std::vector<double>& roww, int n) {
    for (int c = m.col_lo; c <= m.col_hi; ++c)
        for (int d = -m.bw; d <= m.bw; ++d) {
            const int r = c + d;
            if (r < -n / 2 || r >= n / 2) {
                m.at(r, c) = 0.0;
                continue;
            }
            const int fi = r >= 0 ? r : r + n;
            m.at(r, c) *= roww[static_cast<std::size_t>(fi)];
        }
    return m;
}

Banded scale_rows_fn(Banded m, const std::vector<cplx>& roww, int n) {
    for (int c = m.col_lo; c <= m.col_hi; ++c)
        for (int d = -m.bw; d <= m.bw; ++d) {
            const int r = c + d;
            if (r < -n / 2 || r >= n / 2) {
                m.at(r, c) = 0.0;
                continue;
            }
            const int fi = r >= 0 ? r : r + n;
            m.at(r, c) *= roww[static_cast<std::size_t>(fi)];
        }
    return m;
}

}  // namespace

BandPipeline::BandPipeline(const Metric& m, int k, const ParametrixSettings& st, const Window& w)
    : k_(k) {
    ops_ = std::make_shared<BandOperatorSet>(m, k);
    auto pg = std::make_shared<PhaseGrid>(m.grid(), k, st.xi_spacing_factor);
    tables_ = std::make_unique<FbiTables>(w, pg, m.grid());
    const int nx = pg->nx;
    s_x_ = ops_->sample_s(nx);
    sp_x_ = ops_->sample_s_deriv(nx);
    spp_x_ = ops_->sample_s_deriv2(nx);
}

ParametrixConfig::ParametrixConfig(Metric m, ParametrixSettings st)
    : metric_(std::move(m)), st_(st) {
    if (st_.k0 < 4) throw std::invalid_argument("k0 must be >= 4");
    if (st_.k_top < st_.k0) throw std::invalid_argument("k_top < k0");
    if (st_.k_top > metric_.grid().max_band() - 1)
        throw std::invalid_argument("k_top too large for the grid");
    window_ = std::make_shared<Window>(st_.window_sharpness);
    k0_ = st_.k0;
    for (int k = st_.k0; k <= st_.k_top; ++k)
        pipes_.push_back(std::make_unique<BandPipeline>(metric_, k, st_, *window_));
    build_k_matrix();
    k_norm_ = estimate_k_norm();
    while (k_norm_ > 0.5 && k0_ < st_.k_top) {
        ++k0_;  // move the lowest band into the exact low-frequency part
        build_k_matrix();
        k_norm_ = estimate_k_norm();
    }
    if (k_norm_ > 0.5)
        throw std::runtime_error("initial-value correction stays above 1/2 up to the top band");
}

std::vector<int> ParametrixConfig::bands() const {
    std::vector<int> out;
    for (int k = k0_; k <= st_.k_top; ++k) out.push_back(k);
    return out;
}

const BandPipeline& ParametrixConfig::band(int k) const {
    if (k < st_.k0 || k > st_.k_top) throw std::invalid_argument("band outside configured range");
    return *pipes_[static_cast<std::size_t>(k - st_.k0)];
}

SampledField ParametrixConfig::low_part(const SampledField& g) const {
    const double sc = std::ldexp(1.0, -(k0_ - 1));
    return multiplier(g, [sc](double xi) { return chi_profile(sc * xi); });
}

double ParametrixConfig::uncovered_mass(const SampledField& g) const {
    const double sc = std::ldexp(1.0, -st_.k_top);
    double inside = 0.0, outside = 0.0;
    for (int i = 0; i < g.grid().n; ++i) {
        const double covered = chi_profile(sc * g.grid().freq(i));
        const double e = std::norm(g.spectrum()[static_cast<std::size_t>(i)]);
        inside += covered * e;
        outside += (1.0 - covered) * e;
    }
    return outside / std::max(inside + outside, 1e-300);
}

std::vector<HamiltonState> ParametrixConfig::flow_positions(int k, int sign, double tau) const {
    const BandPipeline& bp = band(k);
    const PhaseGrid& pg = bp.pgrid();
    const int nxi = pg.nxi();
    std::vector<HamiltonState> pos(static_cast<std::size_t>(pg.nodes()));
    if (bp.ops().max_s_deriv() < 1e-12) {
        // constant speed: straight transport, frequency unchanged
        const double c = bp.ops().s_at(0.0);
        const double sig = sign >= 0 ? 1.0 : -1.0;
        parallel_for(pg.nx, [&](std::ptrdiff_t i) {
            const double x = pg.x(static_cast<int>(i));
            for (int j = 0; j < nxi; ++j) {
                const double sgn = pg.xi[static_cast<std::size_t>(j)] >= 0.0 ? 1.0 : -1.0;
                pos[static_cast<std::size_t>(i) * nxi + j] = {x - sig * sgn * c * tau,
                                                              pg.xi[static_cast<std::size_t>(j)]};
            }
        });
        return pos;
    }
    std::vector<HamiltonState> start(pos.size());
    for (int i = 0; i < pg.nx; ++i)
        for (int j = 0; j < nxi; ++j)
            start[static_cast<std::size_t>(i) * nxi + j] = {pg.x(i), pg.xi[static_cast<std::size_t>(j)]};
    // chi_{0,tau} = integrate from time tau back to 0
    return flow_batch(bp.ops(), sign, start, tau, 0.0);
}

BandEvolution ParametrixConfig::evolve_band(int k, int sign, double tau, const SampledField& g,
                                            bool need_second,
                                            const std::vector<HamiltonState>* positions) const {
    const BandPipeline& bp = band(k);
    const FbiTables& tab = bp.tables();
    const PhaseGrid& pg = bp.pgrid();
    const int nxi = pg.nxi();
    const double lam = pg.lambda;
    const double isq = 1.0 / std::sqrt(lam);

    SampledField fin = apply_Q(bp.ops(), sign, apply_band(g, k)) * cplx(0.0, 0.5);
    if (fin.l2_norm() <= 1e-15 * (1.0 + g.l2_norm())) {
        BandEvolution ev;
        ev.u = SampledField::zero(grid());
        ev.dtu = SampledField::zero(grid());
        if (need_second) {
            ev.dt2u = SampledField::zero(grid());
            ev.has_second = true;
        }
        return ev;
    }

    std::vector<cplx> w;
    if (tau == 0.0) {
        w = tab.forward(fin).v;
    } else {
        std::vector<HamiltonState> store;
        const std::vector<HamiltonState>* pos = positions;
        if (pos == nullptr) {
            store = flow_positions(k, sign, tau);
            pos = &store;
        }
        w.resize(static_cast<std::size_t>(pg.nodes()));
        parallel_for(pg.nodes(), [&](std::ptrdiff_t n) {
            const HamiltonState& z = (*pos)[static_cast<std::size_t>(n)];
            w[static_cast<std::size_t>(n)] = tab.eval_offgrid(fin, z.x, z.xi);
        });
    }

    const double sig = sign >= 0 ? 1.0 : -1.0;
    const auto& sx = bp.s_x();
    const auto& spx = bp.sp_x();
    const auto& sppx = bp.spp_x();
    const auto& xiv = pg.xi;
    auto wat = [&](int i, int j) { return w[static_cast<std::size_t>(i) * nxi + j]; };
    auto ac = [&](int i, int j) {
        return sig * sx[static_cast<std::size_t>(i)] * (xiv[static_cast<std::size_t>(j)] >= 0 ? 1.0 : -1.0);
    };
    auto bc = [&](int i, int j) {
        return sig * spx[static_cast<std::size_t>(i)] * std::abs(xiv[static_cast<std::size_t>(j)]);
    };

    BandEvolution ev;
    ev.u = tab.scatter_weighted([&](int i, int j) { return wat(i, j); }, 0);
    {
        SampledField sa = tab.scatter_weighted([&](int i, int j) { return ac(i, j) * wat(i, j); }, 0);
        SampledField sb = tab.scatter_weighted([&](int i, int j) { return bc(i, j) * wat(i, j); }, 1);
        ev.dtu = multiplier(sa, [](double xi) { return -xi; }) + sb * cplx(0.0, -isq);
    }
    if (need_second) {
        // (L^2 g)^ = [a^2 eta^2 - a D_x(a) eta] ghat
        //            + i lam^{-1/2} [ -a D_x(b) + b D_xi(b) + 2 a b eta ] ghat'
        //            - lam^{-1} b^2 ghat''
        // with D_x(a) = -i sig s' sgn, D_x(b) = -i sig s'' |xi|, D_xi(b) = -i sig s' sgn.
        auto dxa = [&](int i, int j) {
            return cplx(0.0, -1.0) * sig * spx[static_cast<std::size_t>(i)] *
                   (xiv[static_cast<std::size_t>(j)] >= 0 ? 1.0 : -1.0);
        };
        auto dxb = [&](int i, int j) {
            return cplx(0.0, -1.0) * sig * sppx[static_cast<std::size_t>(i)] *
                   std::abs(xiv[static_cast<std::size_t>(j)]);
        };
        SampledField saa = tab.scatter_weighted(
            [&](int i, int j) { const double a = ac(i, j); return a * a * wat(i, j); }, 0);
        SampledField sada = tab.scatter_weighted(
            [&](int i, int j) { return ac(i, j) * dxa(i, j) * wat(i, j); }, 0);
        SampledField smix = tab.scatter_weighted(
            [&](int i, int j) { return (-ac(i, j) * dxb(i, j) + bc(i, j) * dxa(i, j)) * wat(i, j); }, 1);
        SampledField sab = tab.scatter_weighted(
            [&](int i, int j) { return ac(i, j) * bc(i, j) * wat(i, j); }, 1);
        SampledField sbb = tab.scatter_weighted(
            [&](int i, int j) { const double b = bc(i, j); return b * b * wat(i, j); }, 2);
        ev.dt2u = multiplier(saa, [](double xi) { return xi * xi; }) -
                  multiplier(sada, [](double xi) { return xi; }) + smix * cplx(0.0, isq) +
                  multiplier(sab, [isq](double xi) { return cplx(0.0, 2.0 * isq * xi); }) +
                  sbb * (-1.0 / lam);
        ev.has_second = true;
    }
    return ev;
}

// --------------------------------------------------------------------------
// K matrix

void ParametrixConfig::build_k_matrix() {
    const SpatialGrid& grid = metric_.grid();
    const int n = grid.n;
    if (k_band_.empty()) {
        k_band_.resize(pipes_.size());
        for (std::size_t bi = 0; bi < pipes_.size(); ++bi) {
            const BandPipeline& bp = *pipes_[bi];
            const int k = bp.band();
            const double lam = bp.lambda();
            const double sq = std::sqrt(lam);
            const double isq = 1.0 / sq;
            const PhaseGrid& pg = bp.pgrid();
            const auto& mult = bp.tables().frame_multiplier();
            const auto& sh = bp.ops().s().spectrum();
            const auto& rh = bp.ops().r().spectrum();
            const Window& wdw = *window_;
            const double mstep = kTwoPi / grid.length;
            const int sw = static_cast<int>(std::floor(std::pow(2.0, k / 2.0) / mstep)) + 1;

            auto sym_spec = [&](const std::vector<cplx>& spec, int d) -> cplx {
                if (d < -n / 2 || d >= n / 2) return {0.0, 0.0};
                const int fi = d >= 0 ? d : d + n;
                return spec[static_cast<std::size_t>(fi)] / grid.length;
            };

            // J-factor: sum_j h_xi lam^{-1/2} q(xi_j) w_out(u'_j) ghat(u_j)
            auto jfac = [&](double etar, double etac, int order, int qmode) {
                double srm = 0.0, sim = 0.0;
                for (double xj : pg.xi) {
                    const double u = (etac - xj) * isq;
                    if (u <= -1.0 || u >= 1.0) continue;
                    const double up = (etar - xj) * isq;
                    if (up <= -1.0 || up >= 1.0) continue;
                    double q = 1.0;
                    if (qmode == 1) q = xj >= 0 ? 1.0 : -1.0;
                    if (qmode == 2) q = std::abs(xj);
                    srm += q * wdw.ghat_deriv(up, order) * wdw.ghat(u);
                    (void)sim;
                }
                return srm * pg.hxi * isq;
            };

            std::vector<cplx> kb(static_cast<std::size_t>(n) * n, cplx(0.0, 0.0));
            for (int sign = 0; sign < 2; ++sign) {
                const double sig = sign == 0 ? 1.0 : -1.0;
                // column range: supp beta_k per sign... both signs of eta included
                const int chi_hi = static_cast<int>(std::floor(std::pow(2.0, k) / mstep));
                const int chi_lo = static_cast<int>(std::ceil(std::pow(2.0, k - 2) / mstep));
                Banded qmat(-chi_hi, chi_hi, sw);
                for (int c = -chi_hi; c <= chi_hi; ++c) {
                    const double eta = physical_freq(c, grid.length);
                    const double bk = beta_profile(k, eta);
                    if (bk == 0.0 || c == 0) continue;
                    for (int d = -sw; d <= sw; ++d)
                        qmat.at(c + d, c) = sig * sym_spec(rh, d) * bk / std::abs(eta);
                }
                (void)chi_lo;
                // u0 = diag(mult) (i/2) qmat; pmat on top
                Banded u0 = qmat;
                for (auto& v : u0.a) v *= cplx(0.0, 0.5);
                u0 = scale_rows(std::move(u0), mult, n);
                Banded pmat(u0.col_lo - sw, u0.col_hi + sw, sw);
                for (int c = pmat.col_lo; c <= pmat.col_hi; ++c) {
                    const double eta = physical_freq(c, grid.length);
                    const double bw = beta_wide_profile(k, eta);
                    if (bw == 0.0) continue;
                    for (int d = -sw; d <= sw; ++d)
                        pmat.at(c + d, c) = sig * sym_spec(sh, d) * bw * std::abs(eta);
                }
                Banded term1 = mul(pmat, u0);

                // Dt part: (-diag(eta') M_a - (i/sq) M_b) o (i/2) qmat
                Banded fin = qmat;
                for (auto& v : fin.a) v *= cplx(0.0, 0.5);
                const int mbw = 2 * sw + 2;
                Banded ma(fin.col_lo - mbw, fin.col_hi + mbw, mbw);
                Banded mb(fin.col_lo - mbw, fin.col_hi + mbw, mbw);
                for (int c = ma.col_lo; c <= ma.col_hi; ++c) {
                    const double etac = physical_freq(c, grid.length);
                    for (int d = -mbw; d <= mbw; ++d) {
                        const int r = c + d;
                        const double etar = physical_freq(r, grid.length);
                        const cplx sv = sym_spec(sh, d);
                        if (sv != cplx(0.0, 0.0)) {
                            const double j0 = jfac(etar, etac, 0, 1);
                            if (j0 != 0.0) ma.at(r, c) = sv * (sig * j0);
                            const double j1 = jfac(etar, etac, 1, 2);
                            if (j1 != 0.0)
                                mb.at(r, c) = sv * cplx(0.0, physical_freq(d, grid.length)) * (sig * j1);
                        }
                    }
                }
                std::vector<cplx> negeta(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) negeta[static_cast<std::size_t>(i)] = -grid.freq(i);
                Banded dt = add(scale_rows_fn(mul(ma, fin), negeta, n), mul(mb, fin), 1.0,
                                cplx(0.0, -isq));

                // R~ = term1 + dt ; R beta = pmat qmat - diag(beta_k)
                Banded rt = add(term1, dt, 1.0, 1.0);
                Banded rmat = mul(pmat, qmat);

                // accumulate i*rt + (1/2) rmat - (1/2) diag(beta)
                auto acc = [&](const Banded& m, cplx wgt) {
                    for (int c = m.col_lo; c <= m.col_hi; ++c) {
                        if (c < -n / 2 || c >= n / 2) continue;
                        const int ci = c >= 0 ? c : c + n;
                        for (int d = -m.bw; d <= m.bw; ++d) {
                            const int r = c + d;
                            if (r < -n / 2 || r >= n / 2) continue;
                            const cplx v = m.get(r, c);
                            if (v == cplx(0.0, 0.0)) continue;
                            const int ri = r >= 0 ? r : r + n;
                            kb[static_cast<std::size_t>(ri) * n + ci] += wgt * v;
                        }
                    }
                };
                acc(rt, cplx(0.0, 1.0));
                acc(rmat, cplx(0.5, 0.0));
                for (int c = -n / 2; c < n / 2; ++c) {
                    const double bk = beta_profile(k, physical_freq(c, grid.length));
                    if (bk == 0.0) continue;
                    const int ci = c >= 0 ? c : c + n;
                    kb[static_cast<std::size_t>(ci) * n + ci] -= 0.5 * bk;
                }
            }
            k_band_[bi] = std::move(kb);
        }
    }
    // sum active bands
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    k_dense_.assign(nn, cplx(0.0, 0.0));
    for (std::size_t bi = 0; bi < pipes_.size(); ++bi) {
        if (pipes_[bi]->band() < k0_) continue;
        const auto& kb = k_band_[bi];
        for (std::size_t i = 0; i < nn; ++i) k_dense_[i] += kb[i];
    }
}

SampledField ParametrixConfig::apply_K(const SampledField& g) const {
    const int n = grid().n;
    std::vector<cplx> out(static_cast<std::size_t>(n), cplx(0.0, 0.0));
    const auto& gs = g.spectrum();
    parallel_for(n, [&](std::ptrdiff_t r) {
        const cplx* row = k_dense_.data() + static_cast<std::size_t>(r) * n;
        cplx s(0.0, 0.0);
        for (int c = 0; c < n; ++c) s += row[c] * gs[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = s;
    });
    return SampledField::from_spectrum(grid(), std::move(out));
}

SampledField ParametrixConfig::apply_K_pipeline(const SampledField& g) const {
    SampledField out = SampledField::zero(grid());
    for (int k : bands()) {
        for (int sign : {+1, -1}) {
            BandEvolution ev = evolve_band(k, sign, 0.0, g, false);
            SampledField rt = apply_P(band(k).ops(), sign, ev.u) + ev.dtu;
            out += rt * cplx(0.0, 1.0);
            out += apply_R(band(k).ops(), sign, g) * cplx(0.5, 0.0);
        }
    }
    return out;
}

SampledField ParametrixConfig::invert_IplusK(const SampledField& g) const {
    SampledField acc = g;
    SampledField term = g;
    const double scale = g.l2_norm();
    for (int j = 1; j <= st_.neumann_max_terms; ++j) {
        term = apply_K(term) * cplx(-1.0, 0.0);
        acc += term;
        if (term.l2_norm() <= st_.neumann_tol * (1.0 + scale)) return acc;
    }
    throw std::runtime_error("Neumann series for (I+K)^{-1} did not converge");
}

double ParametrixConfig::estimate_k_norm() const {
    const int n = grid().n;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss;
    std::vector<cplx> v(static_cast<std::size_t>(n));
    for (auto& z : v) z = cplx(gauss(rng), gauss(rng));
    SampledField f = SampledField::from_spectrum(grid(), std::move(v));
    f *= cplx(1.0 / f.l2_norm());
    double est = 0.0;
    for (int it = 0; it < 10; ++it) {
        // power iteration on K* K
        SampledField kv = apply_K(f);
        // K* w: conj-transpose matvec
        const int nn = grid().n;
        std::vector<cplx> out(static_cast<std::size_t>(nn), cplx(0.0, 0.0));
        const auto& ws = kv.spectrum();
        parallel_for(nn, [&](std::ptrdiff_t c) {
            cplx s(0.0, 0.0);
            for (int r = 0; r < nn; ++r)
                s += std::conj(k_dense_[static_cast<std::size_t>(r) * nn + c]) *
                     ws[static_cast<std::size_t>(r)];
            out[static_cast<std::size_t>(c)] = s;
        });
        SampledField kkv = SampledField::from_spectrum(grid(), std::move(out));
        const double lam2 = kkv.l2_norm();
        est = std::sqrt(lam2);
        if (lam2 == 0.0) return 0.0;
        f = kkv * cplx(1.0 / lam2);
    }
    return est;
}

// --------------------------------------------------------------------------

SampledField apply_E(const ParametrixConfig& cfg, int k, int sign, double t,
                     const SampledField& g) {
    return cfg.evolve_band(k, sign, t, g, false).u;
}

SampledField apply_halfwave_residual(const ParametrixConfig& cfg, int k, int sign, double t,
                                     const SampledField& g) {
    BandEvolution ev = cfg.evolve_band(k, sign, t, g, false);
    return apply_P(cfg.band(k).ops(), sign, ev.u) + ev.dtu;
}

SampledField apply_fullwave_residual(const ParametrixConfig& cfg, int k, int sign, double t,
                                     const SampledField& g) {
    BandEvolution ev = cfg.evolve_band(k, sign, t, g, true);
    const auto& ops = cfg.band(k).ops();
    return ev.dt2u - apply_P(ops, sign, apply_P(ops, sign, ev.u));
}

SampledField assemble_Stilde(const ParametrixConfig& cfg, double t, const SampledField& g) {
    if (cfg.uncovered_mass(g) > 1e-8)
        throw std::invalid_argument("data has spectral mass above the configured bands");
    SampledField out = cfg.low_part(g) * cplx(t, 0.0);
    for (int k : cfg.bands())
        for (int sign : {+1, -1}) out += cfg.evolve_band(k, sign, t, g, false).u;
    return out;
}

SampledField build_K(const ParametrixConfig& cfg, const SampledField& g) { return cfg.apply_K(g); }

SampledField invert_IplusK(const ParametrixConfig& cfg, const SampledField& g) {
    return cfg.invert_IplusK(g);
}

SampledField apply_Shat(const ParametrixConfig& cfg, double t, const SampledField& g) {
    return assemble_Stilde(cfg, t, cfg.invert_IplusK(g));
}

SampledField shat_timederiv(const ParametrixConfig& cfg, double t, const SampledField& g,
                            int order) {
    if (order != 1 && order != 2) throw std::invalid_argument("time derivative order must be 1 or 2");
    const SampledField w = cfg.invert_IplusK(g);
    if (order == 1) {
        SampledField out = cfg.low_part(w);
        for (int k : cfg.bands())
            for (int sign : {+1, -1})
                out += cfg.evolve_band(k, sign, t, w, false).dtu * cplx(0.0, 1.0);
        return out;
    }
    SampledField out = SampledField::zero(cfg.grid());
    for (int k : cfg.bands())
        for (int sign : {+1, -1})
            out -= cfg.evolve_band(k, sign, t, w, true).dt2u;
    return out;
}

EvolvedState evolve_Shat(const ParametrixConfig& cfg, double t, const SampledField& g) {
    const SampledField w = cfg.invert_IplusK(g);
    EvolvedState st;
    st.t = t;
    const SampledField wlow = cfg.low_part(w);
    st.u = wlow * cplx(t, 0.0);
    st.ut = wlow;
    st.utt = SampledField::zero(cfg.grid());
    for (int k : cfg.bands())
        for (int sign : {+1, -1}) {
            BandEvolution ev = cfg.evolve_band(k, sign, t, w, true);
            st.u += ev.u;
            st.ut += ev.dtu * cplx(0.0, 1.0);
            st.utt -= ev.dt2u;
        }
    return st;
}

namespace {

SampledField apply_a_dxx(const SampledField& a, const SampledField& v) {
    return pointwise(a, multiplier(v, [](double xi) { return xi * xi; }));
}

}  // namespace

TPieces apply_T_pieces(const ParametrixConfig& cfg, double t, double s, const SampledField& g) {
    const double tau = t - s;
    const SampledField w = cfg.invert_IplusK(g);
    TPieces out;
    out.low = apply_a_dxx(cfg.metric().a(), cfg.low_part(w)) * cplx(-tau, 0.0);
    out.band_wave = SampledField::zero(cfg.grid());
    out.gamma = SampledField::zero(cfg.grid());
    for (int k : cfg.bands()) {
        const SampledField& ak = cfg.metric().truncation(k);
        SampledField gamma_k = SampledField::zero(cfg.grid());
        for (int sign : {+1, -1}) {
            BandEvolution ev = cfg.evolve_band(k, sign, tau, w, true);
            out.band_wave += ev.dt2u - apply_a_dxx(ak, ev.u);
            gamma_k += apply_a_dxx(ak, ev.u) - apply_a_dxx(cfg.metric().a(), ev.u);
        }
        out.gamma_band_norms.push_back(gamma_k.l2_norm());
        out.gamma += gamma_k;
    }
    return out;
}

SampledField apply_T(const ParametrixConfig& cfg, double t, double s, const SampledField& g) {
    TPieces p = apply_T_pieces(cfg, t, s, g);
    return p.low + p.band_wave + p.gamma;
}

}  // namespace wp
