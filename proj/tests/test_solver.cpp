#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wp/io.hpp"
#include "wp/solver.hpp"

using namespace wp;

namespace {

SampledField const_field(const SpatialGrid& g, double v) {
    return SampledField::from_real(g, std::vector<double>(static_cast<std::size_t>(g.n), v));
}

SampledField random_multiband(const SpatialGrid& g, int klo, int khi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const double lo = std::ldexp(1.0, klo - 1), hi = std::ldexp(1.0, khi - 1);
    std::vector<cplx> sp(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        const double a = std::abs(g.freq(i));
        if (a > lo && a < hi) {
            const cplx z(gauss(rng), gauss(rng));
            sp[static_cast<std::size_t>(i)] = z;
        }
    }
    // hermitian symmetrization -> real data
    std::vector<cplx> sym(sp.size());
    for (int i = 0; i < g.n; ++i) {
        const int mi = (g.n - i) % g.n;
        sym[static_cast<std::size_t>(i)] =
            0.5 * (sp[static_cast<std::size_t>(i)] + std::conj(sp[static_cast<std::size_t>(mi)]));
    }
    return SampledField::from_spectrum(g, std::move(sym));
}

}  // namespace

TEST_CASE("scalar volterra kernel") {
    // T(t,s) = kappa I; with F == 1, G(t) = e^{kappa t}.
    SpatialGrid g(16);
    const double kappa = 0.3;
    TimeGrid tg(1.0, 256);
    KernelFn kernel = [kappa](int, int, const SampledField& v) { return v * cplx(kappa, 0.0); };
    SpaceTimeField F;
    F.tgrid = tg;
    for (int m = 0; m <= tg.steps; ++m) F.at.push_back(const_field(g, 1.0));

    SUBCASE("closed form") {
        SpaceTimeField G = volterra_solve(kernel, F);
        for (int m = 0; m <= tg.steps; m += 16) {
            const double expect = std::exp(kappa * tg.node(m));
            CHECK(std::abs(G.at[static_cast<std::size_t>(m)].samples()[3].real() - expect) < 1e-6);
        }
    }
    SUBCASE("picard agreement after 8 terms") {
        SpaceTimeField G = volterra_solve(kernel, F);
        SpaceTimeField P = picard_solve(kernel, F, 8);
        double dev = 0.0;
        for (int m = 0; m <= tg.steps; ++m)
            dev = std::max(dev, (G.at[static_cast<std::size_t>(m)] - P.at[static_cast<std::size_t>(m)]).l2_norm() /
                                    G.at[static_cast<std::size_t>(m)].l2_norm());
        CHECK(dev < 1e-6);
    }
    SUBCASE("zero kernel returns the source") {
        KernelFn zero = [](int, int, const SampledField& v) { return v * cplx(0.0, 0.0); };
        VolterraStats st;
        SpaceTimeField G = volterra_solve(zero, F, {}, &st);
        for (int m = 0; m <= tg.steps; m += 64)
            CHECK((G.at[static_cast<std::size_t>(m)] - F.at[static_cast<std::size_t>(m)]).l2_norm() < 1e-14);
    }
    SUBCASE("linearity and exponential bound") {
        VolterraStats st;
        SpaceTimeField G = volterra_solve(kernel, F, {}, &st);
        CHECK(st.kernel_norm_estimate == doctest::Approx(kappa).epsilon(1e-10));
        double gmax = 0.0, fmax = 0.0;
        for (int m = 0; m <= tg.steps; ++m) {
            gmax = std::max(gmax, G.at[static_cast<std::size_t>(m)].l2_norm());
            fmax = std::max(fmax, F.at[static_cast<std::size_t>(m)].l2_norm());
        }
        CHECK(gmax <= std::exp(st.kernel_norm_estimate * tg.horizon) * fmax * (1.0 + 1e-6));

        SpaceTimeField F2 = F;
        for (auto& f : F2.at) f *= cplx(2.0, 0.0);
        SpaceTimeField G2 = volterra_solve(kernel, F2);
        CHECK((G2.at.back() - G.at.back() * cplx(2.0, 0.0)).l2_norm() < 1e-12);
    }
    SUBCASE("contraction guard") {
        TimeGrid coarse(1.0, 1);
        KernelFn big = [](int, int, const SampledField& v) { return v * cplx(1.5, 0.0); };
        SpaceTimeField Fc;
        Fc.tgrid = coarse;
        Fc.at = {const_field(g, 1.0), const_field(g, 1.0)};
        CHECK_THROWS(volterra_solve(big, Fc));
    }
}

TEST_CASE("finite-difference oracle") {
    SpatialGrid g(512);
    SampledField gdata = random_multiband(g, 5, 6, 3);
    SUBCASE("zero data stays zero") {
        Metric m = make_metric_family(g, "constant", 1.0, 0.0, 0, 0);
        SampledField u = fd_reference(m, SampledField::zero(g), SampledField(), 0.7);
        CHECK(u.l2_norm() < 1e-14);
    }
    SUBCASE("second-order self-convergence on the constant metric") {
        Metric m = make_metric_family(g, "constant", 1.0, 0.0, 0, 0);
        SampledField ref = dalembert_reference(gdata, 1.0, 1.0, CauchyData::velocity);
        const double e1 = (fd_reference(m, gdata, SampledField(), 1.0, 0.9, 2048) - ref).l2_norm();
        const double e2 = (fd_reference(m, gdata, SampledField(), 1.0, 0.9, 4096) - ref).l2_norm();
        CHECK(e1 / e2 > 3.0);
        CHECK(e1 / e2 < 5.0);
    }
    SUBCASE("self-convergence on the rough metric") {
        Metric m = make_metric_family(g, "quadratic-spline-rough", 1.0, 0.15, 8, 7);
        SampledField u1 = fd_reference(m, gdata, SampledField(), 1.0, 0.9, 2048);
        SampledField u2 = fd_reference(m, gdata, SampledField(), 1.0, 0.9, 4096);
        SampledField u3 = fd_reference(m, gdata, SampledField(), 1.0, 0.9, 8192);
        const double r = (u1 - u2).l2_norm() / (u2 - u3).l2_norm();
        CHECK(r > 3.0);
        CHECK(r < 5.0);
    }
    SUBCASE("position data branch") {
        Metric m = make_metric_family(g, "constant", 1.0, 0.0, 0, 0);
        SampledField ref = dalembert_reference(gdata, 1.0, 0.8, CauchyData::position);
        SampledField u = fd_reference(m, SampledField::zero(g), gdata, 0.8, 0.9, 8192);
        CHECK((u - ref).l2_norm() < 1e-3 * ref.l2_norm());
    }
}

TEST_CASE("full solve against the constant-speed closed form") {
    SpatialGrid g(512);
    ParametrixSettings st;
    st.k0 = 5;
    st.k_top = 6;
    auto cfg = std::make_shared<ParametrixConfig>(make_metric_family(g, "constant", 1.0, 0.0, 0, 0), st);
    Propagator prop(cfg, TimeGrid(1.0, 16));
    SampledField gdata = random_multiband(g, 5, 6, 5);
    SolveResult r = prop.solve(gdata, 1.0);
    SampledField ref = dalembert_reference(gdata, 1.0, 1.0, CauchyData::velocity);
    CHECK((r.u - ref).l2_norm() < 1e-3 * ref.l2_norm());
    CHECK(r.vstats.iteration_skipped);  // kernel is negligible here
    SampledField refdt = multiplier(gdata, [](double xi) { return std::cos(std::abs(xi) * 1.0); });
    CHECK((r.ut - refdt).l2_norm() < 1e-3 * refdt.l2_norm());
}

TEST_CASE("solve on a smooth variable metric") {
    SpatialGrid g(512);
    ParametrixSettings st;
    st.k0 = 5;
    st.k_top = 6;
    Metric m = make_metric_family(g, "smooth-trig", 1.0, 0.1, 0, 0);
    auto cfg = std::make_shared<ParametrixConfig>(m, st);
    Propagator prop(cfg, TimeGrid(1.0, 12));
    SampledField gdata = random_multiband(g, 5, 6, 7);

    SolveResult r = prop.solve(gdata, 1.0);
    SUBCASE("fd oracle agreement") {
        SampledField ref = fd_reference(m, gdata, SampledField(), 1.0, 0.9, 8192);
        CHECK((r.u - ref).l2_norm() / ref.l2_norm() < 0.02);
    }
    SUBCASE("initial conditions") {
        SolveResult r0 = prop.solve(gdata, 0.0);
        CHECK(r0.u.l2_norm() < 1e-8 * gdata.l2_norm());
        CHECK((r0.ut - gdata).l2_norm() < 2e-4 * gdata.l2_norm());
    }
    SUBCASE("energy drift within budget") {
        const double e0 = wave_energy(m, SampledField::zero(g), gdata);
        double worst = 0.0;
        for (double t : {0.25, 0.5, 0.75, 1.0}) {
            SolveResult rt = prop.solve(gdata, t);
            worst = std::max(worst, std::abs(wave_energy(m, rt.u, rt.ut) - e0) / e0);
        }
        CHECK(worst < 0.03);
    }
    SUBCASE("residual certificate is reported") { CHECK(r.residual_certificate < 1e-2); }
}

TEST_CASE("serialization round trips") {
    SpatialGrid g(64);
    SampledField f = random_multiband(g, 4, 5, 11);
    SampledField back = field_from_json(to_json(f));
    CHECK((back - f).l2_norm() < 1e-14);

    Metric m = make_metric_family(g, "quadratic-spline-rough", 1.0, 0.1, 8, 3);
    Metric mb = metric_from_json(to_json(m));
    CHECK((mb.a() - m.a()).l2_norm() < 1e-14);
    CHECK(mb.m_bound() == doctest::Approx(m.m_bound()).epsilon(1e-12));
}
