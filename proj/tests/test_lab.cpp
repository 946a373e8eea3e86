#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wp/lab.hpp"

using namespace wp;

TEST_CASE("sobolev-regular data synthesis") {
    SpatialGrid g(1024);
    SampledField f1 = synth_sobolev(g, 1.0, 7, 42);
    SampledField f2 = synth_sobolev(g, 1.0, 7, 42);
    SUBCASE("deterministic and normalized") {
        CHECK((f1 - f2).l2_norm() == 0.0);
        CHECK(f1.sobolev_norm(1.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f1.is_real(1e-10));
    }
    SUBCASE("band-limited to the covered range") {
        for (int i = 0; i < g.n; ++i)
            if (std::abs(g.freq(i)) >= 64.0)
                CHECK(std::abs(f1.spectrum()[static_cast<std::size_t>(i)]) < 1e-14);
    }
    SUBCASE("envelope matches the prescribed decay") {
        // |ghat| (1+xi^2)^{s/2+1/4+eps/2} should be flat in xi
        double lo = 1e300, hi = 0.0;
        for (int i = 1; i < g.n / 2; ++i) {
            const double xi = g.freq(i);
            if (xi < 2.0 || xi > 60.0) continue;
            const double v = std::abs(f1.spectrum()[static_cast<std::size_t>(i)]) *
                             std::pow(1.0 + xi * xi, 1.0 / 2.0 + 0.25 + 0.05);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(hi / lo < 1.0 + 1e-9);  // flat by construction (phases only)
    }
}

TEST_CASE("perturbation sweep basics") {
    SpatialGrid g(512);
    Metric base = make_metric_family(g, "smooth-trig", 1.0, 0.1, 0, 0);
    SampledField dir = synth_direction(g, 21);
    SUBCASE("direction is admissible") {
        CHECK(holder_norm(dir, 0) == doctest::Approx(1.0).epsilon(1e-12));
        double mean = 0.0;
        for (const auto& c : dir.samples()) mean += c.real();
        CHECK(std::abs(mean / g.n) < 1e-12);
    }
    PerturbationSweep sweep(base, dir, {1e-3, 1e-2, 1e-1});
    SUBCASE("zero amplitude returns the base") {
        CHECK((sweep.perturbed(0.0).a() - base.a()).l2_norm() < 1e-15);
        CHECK(sweep.distance(0.0) == 0.0);
    }
    SUBCASE("distance increases with delta") {
        CHECK(sweep.distance(1e-2) == doctest::Approx(1e-2).epsilon(1e-12));
        CHECK(sweep.distance(1e-1) > sweep.distance(1e-2));
    }
    SUBCASE("ellipticity guard") {
        CHECK_THROWS(PerturbationSweep(base, dir * cplx(30.0, 0.0), {1e-1, 1.0}));
    }
}

TEST_CASE("constant-pair sweep has unit slope") {
    SolverSpec spec;
    spec.n = 512;
    spec.k0 = 5;
    spec.k_top = 6;
    spec.steps = 8;
    SpatialGrid g = spec.grid();
    Metric base = make_metric_family(g, "constant", 1.0, 0.0, 0, 0);
    SampledField dir = SampledField::from_real(g, std::vector<double>(512, 1.0));
    PerturbationSweep sweep(base, dir, {1e-3, 3.16e-3, 1e-2, 3.16e-2});
    SampledField gd = synth_sobolev(g, 1.0, spec.k_top, 5);
    StabilityReport rep = run_lipschitz_sweep(sweep, gd, 0.0, 1.0, spec);
    CHECK(rep.slope == doctest::Approx(1.0).epsilon(0.02));
    CHECK(rep.pass);
    CHECK(rep.rows.size() == 4);
    SUBCASE("emission") {
        const std::string csv = to_csv(rep);
        CHECK(csv.find("delta,dist,diff,ratio") == 0);
        const std::string js = to_json(rep);
        CHECK(js.find("\"slope\"") != std::string::npos);
        std::vector<double> xs, ys;
        for (const auto& r : rep.rows) {
            xs.push_back(r.dist);
            ys.push_back(r.diff);
        }
        const std::string svg = svg_loglog(xs, ys, rep.slope, rep.constant, "dist", "diff");
        CHECK(svg.find("<svg") == 0);
        CHECK(svg.find("circle") != std::string::npos);
    }
}

TEST_CASE("uniform sweep monotonicity on a smooth pair") {
    SolverSpec spec;
    spec.n = 512;
    spec.k0 = 5;
    spec.k_top = 6;
    spec.steps = 8;
    SpatialGrid g = spec.grid();
    Metric base = make_metric_family(g, "smooth-trig", 1.0, 0.1, 0, 0);
    PerturbationSweep sweep(base, synth_direction(g, 23), {1e-3, 1e-2, 1e-1});
    SampledField gd = synth_sobolev(g, 1.5, spec.k_top, 9);
    UniformReport rep = run_uniform_sweep(sweep, gd, 1.5, 1.0, spec);
    CHECK(rep.monotone_pass);
    CHECK(rep.rows.front().diff < rep.rows.back().diff);
}

TEST_CASE("probe coverage ids") {
    const auto& ids = probe_coverage_ids();
    CHECK(ids.size() == 9);
    CHECK(std::find(ids.begin(), ids.end(), "flow-transport") != ids.end());
}

TEST_CASE("operator difference probes on a small configuration") {
    SolverSpec spec;
    spec.n = 512;
    spec.k0 = 5;
    spec.k_top = 6;
    spec.steps = 8;
    SpatialGrid g = spec.grid();
    Metric base = make_metric_family(g, "smooth-trig", 1.0, 0.1, 0, 0);
    PerturbationSweep sweep(base, synth_direction_lowfreq(g, 25), {3e-3, 3e-2});
    ProbeReport rep = operator_difference_probes(sweep, {5, 6}, 0.5, spec);
    CHECK(rep.coverage_ok);
    for (const auto& row : rep.rows) {
        CAPTURE(row.id);
        CAPTURE(row.delta_exp);
        CAPTURE(row.lambda_exp);
        CHECK(row.delta_exp > 0.9);
        CHECK(row.delta_exp < 1.1);
    }
}

TEST_CASE("two-method stability crosscheck") {
    SolverSpec spec;
    spec.n = 512;
    spec.k0 = 5;
    spec.k_top = 6;
    spec.steps = 8;
    SpatialGrid g = spec.grid();
    Metric a = make_metric_family(g, "smooth-trig", 1.0, 0.1, 0, 0);
    SampledField dir = synth_direction(g, 27);
    PerturbationSweep sweep(a, dir, {1e-2});
    Metric b = sweep.perturbed(1e-2);
    SampledField gd = synth_sobolev(g, 1.0, spec.k_top, 11, 0.1, std::ldexp(1.0, spec.k0 - 1));
    CrosscheckReport rep = energy_stability_crosscheck(a, b, gd, 0.0, 1.0, spec);
    CAPTURE(rep.rel_dev);
    CHECK(rep.pass);
    CHECK(rep.diff_norm > 0.0);
    CHECK(rep.bound_rhs > 0.0);
}
