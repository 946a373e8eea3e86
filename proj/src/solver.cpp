#include "wp/solver.hpp"

#include <algorithm>
#include <cmath>

#include "wp/parallel.hpp"

namespace wp {

SpaceTimeField volterra_solve(const KernelFn& kernel, const SpaceTimeField& F,
                              VolterraOptions opt, VolterraStats* stats) {
    const TimeGrid& tg = F.tgrid;
    const int n = static_cast<int>(F.at.size()) - 1;
    if (n < 0) throw std::invalid_argument("empty source");
    const double dt = tg.dt();
    VolterraStats st;

    SpaceTimeField G;
    G.tgrid = tg;
    G.at = F.at;

    double fscale = 0.0;
    for (const auto& f : F.at) fscale = std::max(fscale, f.l2_norm());
    const double scale = opt.data_scale > 0.0 ? opt.data_scale : fscale;
    if (fscale <= opt.negligible_tol * scale || n == 0) {
        st.iteration_skipped = true;
        if (stats) *stats = st;
        return G;  // kernel correction below tolerance
    }

    double diag_norm = 0.0;
    auto apply = [&](int m, int j, const SampledField& g) {
        SampledField out = kernel(m, j, g);
        ++st.kernel_applications;
        const double gn = g.l2_norm();
        if (gn > 0.0) {
            const double r = out.l2_norm() / gn;
            st.kernel_norm_estimate = std::max(st.kernel_norm_estimate, r);
            if (m == j) diag_norm = std::max(diag_norm, r);
        }
        return out;
    };

    for (int m = 1; m <= n; ++m) {
        // trapezoid weights w_0 = w_m = dt/2, interior dt
        SampledField rhs = F.at[static_cast<std::size_t>(m)];
        for (int j = 0; j < m; ++j) {
            const double w = (j == 0) ? dt / 2.0 : dt;
            rhs += apply(m, j, G.at[static_cast<std::size_t>(j)]) * cplx(w, 0.0);
        }
        // implicit diagonal (T at coincident times) by one fixed-point sweep
        SampledField diag = apply(m, m, rhs) * cplx(dt / 2.0, 0.0);
        if (diag_norm * dt / 2.0 >= 0.5)
            throw std::runtime_error("volterra diagonal weight not contractive; refine the time grid");
        G.at[static_cast<std::size_t>(m)] = rhs + diag;
        st.fixed_point_defect =
            std::max(st.fixed_point_defect,
                     diag_norm * (dt / 2.0) * diag.l2_norm() /
                         std::max(1e-300, G.at[static_cast<std::size_t>(m)].l2_norm()));
    }
    if (stats) *stats = st;
    return G;
}

SpaceTimeField picard_solve(const KernelFn& kernel, const SpaceTimeField& F, int terms) {
    const TimeGrid& tg = F.tgrid;
    const int n = static_cast<int>(F.at.size()) - 1;
    const double dt = tg.dt();
    SpaceTimeField G = F;
    for (int it = 0; it < terms; ++it) {
        SpaceTimeField next = F;
        for (int m = 1; m <= n; ++m) {
            for (int j = 0; j <= m; ++j) {
                const double w = (j == 0 || j == m) ? dt / 2.0 : dt;
                next.at[static_cast<std::size_t>(m)] +=
                    kernel(m, j, G.at[static_cast<std::size_t>(j)]) * cplx(w, 0.0);
            }
        }
        G = std::move(next);
    }
    return G;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(std::shared_ptr<const ParametrixConfig> cfg, TimeGrid tg,
                       std::size_t flow_cache_budget)
    : cfg_(std::move(cfg)), tg_(tg) {
    // constant metrics use the closed-form transport; no cache needed
    bool constant = true;
    for (int k : cfg_->bands())
        if (cfg_->band(k).ops().max_s_deriv() >= 1e-12) constant = false;
    if (constant) return;

    std::size_t nodes = 0;
    for (int k : cfg_->bands()) nodes += static_cast<std::size_t>(cfg_->band(k).pgrid().nodes());
    const std::size_t bytes = nodes * 2 * static_cast<std::size_t>(tg_.count()) * sizeof(std::pair<float, float>);
    if (bytes > flow_cache_budget) return;  // fall back to per-application integration

    std::vector<double> times(static_cast<std::size_t>(tg_.count()));
    for (int d = 0; d < tg_.count(); ++d) times[static_cast<std::size_t>(d)] = tg_.node(d);

    const auto bands = cfg_->bands();
    cache_.resize(bands.size() * 2);
    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
        const BandPipeline& bp = cfg_->band(bands[bi]);
        const PhaseGrid& pg = bp.pgrid();
        std::vector<HamiltonState> start(static_cast<std::size_t>(pg.nodes()));
        for (int i = 0; i < pg.nx; ++i)
            for (int j = 0; j < pg.nxi(); ++j)
                start[static_cast<std::size_t>(i) * pg.nxi() + j] = {pg.x(i),
                                                                     pg.xi[static_cast<std::size_t>(j)]};
        for (int sign : {+1, -1}) {
            auto chk = flow_checkpoints(bp.ops(), sign, start, times);
            CachedBand cb;
            cb.pos.resize(chk.size());
            for (std::size_t d = 0; d < chk.size(); ++d) {
                cb.pos[d].resize(chk[d].size());
                for (std::size_t i = 0; i < chk[d].size(); ++i)
                    cb.pos[d][i] = {static_cast<float>(chk[d][i].x), static_cast<float>(chk[d][i].xi)};
            }
            cache_[bi * 2 + (sign < 0 ? 1 : 0)] = std::move(cb);
        }
    }
    cache_enabled_ = true;
}

const std::vector<HamiltonState>* Propagator::fetch(int k, int sign, int d,
                                                    std::vector<HamiltonState>& scratch) const {
    if (!cache_enabled_ || d < 0 || d >= tg_.count()) return nullptr;
    const auto bands = cfg_->bands();
    std::size_t bi = 0;
    while (bi < bands.size() && bands[bi] != k) ++bi;
    if (bi == bands.size()) return nullptr;
    const auto& pos = cache_[bi * 2 + (sign < 0 ? 1 : 0)].pos[static_cast<std::size_t>(d)];
    scratch.resize(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) scratch[i] = {pos[i].first, pos[i].second};
    return &scratch;
}

SampledField Propagator::kernel(int m, int j, const SampledField& g) const {
    const int d = m - j;
    const double tau = tg_.node(d);
    const ParametrixConfig& cfg = *cfg_;
    const SampledField w = cfg.invert_IplusK(g);
    SampledField out = pointwise(cfg.metric().a(),
                                 multiplier(cfg.low_part(w), [](double xi) { return xi * xi; })) *
                       cplx(-tau, 0.0);
    std::vector<HamiltonState> scratch;
    for (int k : cfg.bands()) {
        for (int sign : {+1, -1}) {
            const std::vector<HamiltonState>* pos = fetch(k, sign, d, scratch);
            BandEvolution ev = cfg.evolve_band(k, sign, tau, w, true, pos);
            // (D_t^2 - A_k) u + (A_k - A) u collapses to D_t^2 u - A u
            out += ev.dt2u - pointwise(cfg.metric().a(),
                                       multiplier(ev.u, [](double xi) { return xi * xi; }));
        }
    }
    return out;
}

SampledField Propagator::shat_cached(int d, const SampledField& g) const {
    const double tau = tg_.node(d);
    const ParametrixConfig& cfg = *cfg_;
    const SampledField w = cfg.invert_IplusK(g);
    SampledField out = cfg.low_part(w) * cplx(tau, 0.0);
    std::vector<HamiltonState> scratch;
    for (int k : cfg.bands())
        for (int sign : {+1, -1}) {
            const std::vector<HamiltonState>* pos = fetch(k, sign, d, scratch);
            out += cfg.evolve_band(k, sign, tau, w, false, pos).u;
        }
    return out;
}

SampledField Propagator::shat_dt_cached(int d, const SampledField& g) const {
    const double tau = tg_.node(d);
    const ParametrixConfig& cfg = *cfg_;
    const SampledField w = cfg.invert_IplusK(g);
    SampledField out = cfg.low_part(w);
    std::vector<HamiltonState> scratch;
    for (int k : cfg.bands())
        for (int sign : {+1, -1}) {
            const std::vector<HamiltonState>* pos = fetch(k, sign, d, scratch);
            out += cfg.evolve_band(k, sign, tau, w, false, pos).dtu * cplx(0.0, 1.0);
        }
    return out;
}

SpaceTimeField Propagator::source(const SampledField& g, int m_top) const {
    SpaceTimeField F;
    F.tgrid = tg_;
    F.at.reserve(static_cast<std::size_t>(m_top) + 1);
    for (int j = 0; j <= m_top; ++j) F.at.push_back(kernel(j, 0, g));
    return F;
}

SolveResult Propagator::solve(const SampledField& g, double t) const {
    const double dt = tg_.dt();
    const double mr = t / dt;
    const int m = static_cast<int>(std::lround(mr));
    if (m < 0 || m > tg_.steps || std::abs(mr - m) > 1e-9)
        throw std::invalid_argument("solve time must lie on the time grid");

    SolveResult res;
    if (m == 0) {
        res.u = SampledField::zero(cfg_->grid());
        res.ut = shat_dt_cached(0, g);
        return res;
    }

    SpaceTimeField F = source(g, m);
    VolterraOptions vopt;
    vopt.data_scale = g.l2_norm();
    SpaceTimeField G = volterra_solve(
        [this](int mm, int jj, const SampledField& v) { return kernel(mm, jj, v); }, F, vopt,
        &res.vstats);

    // u(t) = S^(t) g + sum_j w_j S^(t - s_j) G_j
    res.u = shat_cached(m, g);
    res.ut = shat_dt_cached(m, g);
    for (int j = 0; j <= m; ++j) {
        const double w = (j == 0 || j == m) ? dt / 2.0 : dt;
        const SampledField& gj = G.at[static_cast<std::size_t>(j)];
        if (gj.l2_norm() == 0.0) continue;
        res.u += shat_cached(m - j, gj) * cplx(w, 0.0);
        res.ut += shat_dt_cached(m - j, gj) * cplx(w, 0.0);
    }

    // residual certificate: defect of the discrete Volterra identity at t
    SampledField defect = F.at[static_cast<std::size_t>(m)] - G.at[static_cast<std::size_t>(m)];
    for (int j = 0; j <= m; ++j) {
        const double w = (j == 0 || j == m) ? dt / 2.0 : dt;
        if (res.vstats.iteration_skipped) break;
        defect += kernel(m, j, G.at[static_cast<std::size_t>(j)]) * cplx(w, 0.0);
    }
    res.residual_certificate =
        res.vstats.iteration_skipped
            ? F.linf_sobolev(0.0) / std::max(1e-300, g.l2_norm())
            : defect.l2_norm() / std::max(1e-300, g.l2_norm());
    return res;
}

SolveResult solve(const ParametrixConfig& cfg, const SampledField& g, double t, const TimeGrid& tg) {
    std::shared_ptr<const ParametrixConfig> alias(std::shared_ptr<void>(), &cfg);
    Propagator prop(alias, tg);
    return prop.solve(g, t);
}

// ---------------------------------------------------------------------------

SampledField spectral_resample(const SampledField& f, const SpatialGrid& to) {
    std::vector<cplx> sp(static_cast<std::size_t>(to.n), cplx(0.0, 0.0));
    const int nin = f.grid().n;
    for (int i = 0; i < nin; ++i) {
        const int m = f.grid().signed_mode(i);
        if (m < -to.n / 2 || m >= to.n / 2) continue;
        sp[static_cast<std::size_t>(m >= 0 ? m : m + to.n)] = f.spectrum()[static_cast<std::size_t>(i)];
    }
    return SampledField::from_spectrum(to, std::move(sp));
}

namespace {

std::vector<double> metric_on_grid(const Metric& m, const SpatialGrid& g) {
    const MetricRecipe& r = m.recipe();
    std::vector<double> v(static_cast<std::size_t>(g.n));
    if (r.kind == "constant" || r.kind == "smooth-trig" || r.kind == "quadratic-spline-rough") {
        for (int i = 0; i < g.n; ++i) v[static_cast<std::size_t>(i)] = eval_metric_recipe(r, g.length, g.x(i));
    } else {
        // trig interpolation of the sampled coefficient
        SampledField fine = spectral_resample(m.a(), g);
        v = fine.real_samples();
    }
    return v;
}

SampledField leapfrog(const Metric& m, const SampledField& g, const SampledField& f, double t,
                      const std::function<std::vector<double>(double, const SpatialGrid&)>* force,
                      double cfl, int n_fd) {
    if (!(cfl > 0.0 && cfl < 1.0)) throw std::invalid_argument("cfl must be in (0,1)");
    const SpatialGrid& coarse = g.grid();
    if (n_fd == 0) n_fd = std::max(4096, 4 * coarse.n);
    SpatialGrid fine(n_fd, coarse.length);
    const double h = fine.spacing();
    std::vector<double> a = metric_on_grid(m, fine);
    double amax = a[0];
    for (double q : a) amax = std::max(amax, q);

    const int nsteps = std::max(1, static_cast<int>(std::ceil(t * std::sqrt(amax) / (cfl * h))));
    const double dt = t / nsteps;
    if (dt * std::sqrt(amax) / h > 1.0) throw std::runtime_error("CFL violation");

    std::vector<double> gn = spectral_resample(g, fine).real_samples();
    std::vector<double> u0 = f.empty() ? std::vector<double>(static_cast<std::size_t>(n_fd), 0.0)
                                       : spectral_resample(f, fine).real_samples();

    auto lap = [&](const std::vector<double>& u, std::vector<double>& out) {
        const int n = n_fd;
        parallel_for(n, [&](std::ptrdiff_t i) {
            const int ip = (static_cast<int>(i) + 1) % n, im = (static_cast<int>(i) + n - 1) % n;
            out[static_cast<std::size_t>(i)] =
                (u[static_cast<std::size_t>(ip)] - 2.0 * u[static_cast<std::size_t>(i)] +
                 u[static_cast<std::size_t>(im)]) /
                (h * h);
        });
    };

    std::vector<double> lap0(static_cast<std::size_t>(n_fd)), lapg(static_cast<std::size_t>(n_fd));
    lap(u0, lap0);
    lap(gn, lapg);
    std::vector<double> uprev = u0, ucur(static_cast<std::size_t>(n_fd)), unext(static_cast<std::size_t>(n_fd));
    std::vector<double> f0;
    if (force) f0 = (*force)(0.0, fine);
    // second-order start: u1 = u0 + dt g + dt^2/2 (a lap u0 + F0) + dt^3/6 a lap g
    for (int i = 0; i < n_fd; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        ucur[ii] = u0[ii] + dt * gn[ii] + 0.5 * dt * dt * (a[ii] * lap0[ii] + (force ? f0[ii] : 0.0)) +
                   dt * dt * dt / 6.0 * a[ii] * lapg[ii];
    }
    std::vector<double> lapc(static_cast<std::size_t>(n_fd)), fs;
    for (int s = 1; s < nsteps; ++s) {
        lap(ucur, lapc);
        if (force) fs = (*force)(s * dt, fine);
        parallel_for(n_fd, [&](std::ptrdiff_t i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            unext[ii] = 2.0 * ucur[ii] - uprev[ii] +
                        dt * dt * (a[ii] * lapc[ii] + (force ? fs[ii] : 0.0));
        });
        std::swap(uprev, ucur);
        std::swap(ucur, unext);
    }
    return spectral_resample(SampledField::from_real(fine, ucur), coarse);
}

}  // namespace

SampledField fd_reference(const Metric& m, const SampledField& g, const SampledField& f, double t,
                          double cfl, int n_fd) {
    return leapfrog(m, g, f, t, nullptr, cfl, n_fd);
}

SampledField fd_reference_forced(const Metric& m, const SampledField& g, const SampledField& f,
                                 double t,
                                 const std::function<std::vector<double>(double, const SpatialGrid&)>& force,
                                 double cfl, int n_fd) {
    return leapfrog(m, g, f, t, &force, cfl, n_fd);
}

double wave_energy(const Metric& m, const SampledField& u, const SampledField& ut) {
    const SampledField ux = multiplier(u, [](double xi) { return cplx(0.0, xi); });
    double flux = 0.0;
    const auto& av = m.a().samples();
    for (int i = 0; i < u.grid().n; ++i)
        flux += av[static_cast<std::size_t>(i)].real() * std::norm(ux.samples()[static_cast<std::size_t>(i)]);
    flux *= u.grid().spacing();
    const double kin = ut.l2_norm();
    return kin * kin + flux;
}

}  // namespace wp
