#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "wp/field.hpp"

using namespace wp;

namespace {

SampledField random_field(const SpatialGrid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<cplx> v(static_cast<std::size_t>(g.n));
    for (auto& z : v) z = cplx(gauss(rng), gauss(rng));
    return SampledField::from_samples(g, std::move(v));
}

SampledField pure_mode(const SpatialGrid& g, int m) {
    std::vector<cplx> v(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) v[static_cast<std::size_t>(i)] = std::exp(cplx(0.0, m * g.x(i)));
    return SampledField::from_samples(g, std::move(v));
}

// O(n^2) DFT, independent of the FFT path
std::vector<cplx> slow_spectrum(const SampledField& f) {
    const auto& g = f.grid();
    std::vector<cplx> out(static_cast<std::size_t>(g.n));
    for (int m = 0; m < g.n; ++m) {
        cplx acc(0.0, 0.0);
        for (int j = 0; j < g.n; ++j)
            acc += f.samples()[static_cast<std::size_t>(j)] *
                   std::exp(cplx(0.0, -g.freq(m) * g.x(j)));
        out[static_cast<std::size_t>(m)] = acc * g.spacing();
    }
    return out;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_THROWS(SpatialGrid(100));
    CHECK_THROWS(SpatialGrid(8));
    SpatialGrid g(1024);
    CHECK(g.spacing() * g.n == doctest::Approx(g.length).epsilon(1e-15));
    CHECK(g.max_band() == 10);
}

TEST_CASE("fourier transform basics") {
    SpatialGrid g(256);
    SUBCASE("constant function concentrates at zero") {
        SampledField f = SampledField::from_real(g, std::vector<double>(256, 1.0));
        for (int i = 1; i < g.n; ++i) CHECK(std::abs(f.spectrum()[static_cast<std::size_t>(i)]) < 1e-12);
        CHECK(f.spectrum()[0].real() == doctest::Approx(g.length).epsilon(1e-13));
    }
    SUBCASE("pure mode") {
        SampledField f = pure_mode(g, 3);
        for (int i = 0; i < g.n; ++i) {
            const double expect = g.signed_mode(i) == 3 ? g.length : 0.0;
            CHECK(std::abs(f.spectrum()[static_cast<std::size_t>(i)] - expect) < 1e-10);
        }
    }
    SUBCASE("round trip") {
        SampledField f = random_field(g, 7);
        SampledField back = SampledField::from_spectrum(g, f.spectrum());
        double dev = 0.0;
        for (int i = 0; i < g.n; ++i)
            dev = std::max(dev, std::abs(back.samples()[static_cast<std::size_t>(i)] -
                                         f.samples()[static_cast<std::size_t>(i)]));
        CHECK(dev < 1e-12 * f.max_abs());
    }
    SUBCASE("parseval") {
        SampledField f = random_field(g, 8);
        double spec = 0.0;
        for (const auto& c : f.spectrum()) spec += std::norm(c);
        spec = std::sqrt(spec / g.length);
        CHECK(std::abs(f.l2_norm() - spec) < 1e-10 * f.l2_norm());
    }
}

TEST_CASE("sobolev norms") {
    SpatialGrid g(256);
    SampledField f = pure_mode(g, 3);
    CHECK(f.sobolev_norm(0.0) == doctest::Approx(std::sqrt(kTwoPi)).epsilon(1e-12));
    CHECK(f.sobolev_norm(1.0) == doctest::Approx(std::sqrt(10.0) * std::sqrt(kTwoPi)).epsilon(1e-12));

    SUBCASE("independent weighted-spectrum oracle") {
        // smooth bump
        std::vector<double> v(static_cast<std::size_t>(g.n));
        for (int i = 0; i < g.n; ++i) v[static_cast<std::size_t>(i)] = std::exp(std::cos(g.x(i)) * 3.0);
        SampledField b = SampledField::from_real(g, v);
        auto slow = slow_spectrum(b);
        for (double alpha : {-1.0, 2.0}) {
            double acc = 0.0;
            for (int m = 0; m < g.n; ++m)
                acc += std::pow(1.0 + g.freq(m) * g.freq(m), alpha) * std::norm(slow[static_cast<std::size_t>(m)]);
            const double oracle = std::sqrt(acc / g.length);
            CHECK(b.sobolev_norm(alpha) == doctest::Approx(oracle).epsilon(1e-9));
        }
    }
    SUBCASE("monotone in alpha") {
        SampledField r = random_field(g, 11);
        double prev = r.sobolev_norm(-1.0);
        for (double a : {-0.5, 0.0, 0.7, 1.5, 2.0}) {
            const double cur = r.sobolev_norm(a);
            CHECK(cur >= prev * (1.0 - 1e-13));
            prev = cur;
        }
    }
    SUBCASE("band-limited comparability with 2^{k alpha}") {
        const int k = 6;
        std::mt19937_64 rng(5);
        std::normal_distribution<double> gauss;
        std::vector<cplx> sp(static_cast<std::size_t>(g.n));
        for (int i = 0; i < g.n; ++i) {
            const double a = std::abs(g.freq(i));
            if (a > std::ldexp(1.0, k - 2) && a < std::ldexp(1.0, k))
                sp[static_cast<std::size_t>(i)] = cplx(gauss(rng), gauss(rng));
        }
        SampledField f2 = SampledField::from_spectrum(g, std::move(sp));
        for (double a : {-1.0, 0.0, 1.0, 2.0}) {
            const double ratio = f2.sobolev_norm(a) / (std::pow(std::ldexp(1.0, k), a) * f2.l2_norm());
            CHECK(ratio < 4.0);
            CHECK(ratio > 0.25);
        }
    }
}

TEST_CASE("holder norms") {
    SUBCASE("constant") {
        SpatialGrid g(64);
        SampledField f = SampledField::from_real(g, std::vector<double>(64, -2.5));
        CHECK(holder_norm(f, 0) == doctest::Approx(2.5).epsilon(1e-14));
    }
    SUBCASE("sine approaches 2") {
        SpatialGrid g(4096);
        std::vector<double> v(4096);
        for (int i = 0; i < 4096; ++i) v[static_cast<std::size_t>(i)] = std::sin(g.x(i));
        SampledField f = SampledField::from_real(g, v);
        CHECK(std::abs(holder_norm(f, 0) - 2.0) < 1e-5);
    }
    SUBCASE("spline metric: C11 finite, third differences blow up") {
        double prev_second = 0.0, prev_third = 0.0;
        for (int n : {512, 1024, 2048}) {
            SpatialGrid g(n);
            Metric m = make_metric_family(g, "quadratic-spline-rough", 1.0, 0.1, 8, 7);
            const auto v = m.a().real_samples();
            const double h = g.spacing();
            double second = 0.0, third = 0.0;
            auto at = [&](int i) { return v[static_cast<std::size_t>(((i % n) + n) % n)]; };
            for (int i = 0; i < n; ++i) {
                second = std::max(second, std::abs(at(i + 1) - 2 * at(i) + at(i - 1)) / (h * h));
                third = std::max(third, std::abs(at(i + 2) - 3 * at(i + 1) + 3 * at(i) - at(i - 1)) /
                                            (h * h * h));
            }
            if (prev_second > 0.0) {
                CHECK(second / prev_second < 1.3);           // bounded
                CHECK(third / prev_third > 1.5);             // ~ doubles with n
                CHECK(third / prev_third < 2.5);
            }
            prev_second = second;
            prev_third = third;
        }
    }
}

TEST_CASE("metric validation") {
    SpatialGrid g(512);
    SUBCASE("unit metric passes") {
        Metric m(SampledField::from_real(g, std::vector<double>(512, 1.0)), 2.0);
        CHECK(validate_metric(m).pass);
    }
    SUBCASE("trig metric with tight and generous bounds") {
        std::vector<double> v(512);
        for (int i = 0; i < 512; ++i) v[static_cast<std::size_t>(i)] = 1.0 + 0.6 * std::sin(g.x(i));
        SampledField a = SampledField::from_real(g, v);
        Metric tight(a, 2.0);
        auto d = validate_metric(tight);
        CHECK(d.min_a == doctest::Approx(0.4).epsilon(1e-3));
        CHECK(d.c11_norm == doctest::Approx(2.8).epsilon(1e-3));
        CHECK(d.ellipticity_ok);  // 0.4 >= 1/4
        CHECK_FALSE(d.c11_ok);    // 2.8 > 2
        CHECK_FALSE(d.pass);
        Metric loose(a, 3.0);
        CHECK(validate_metric(loose).pass);
    }
    SUBCASE("negative coefficient rejected") {
        std::vector<double> v(512);
        for (int i = 0; i < 512; ++i) v[static_cast<std::size_t>(i)] = 0.1 + std::sin(g.x(i));
        CHECK_THROWS(Metric(SampledField::from_real(g, v), 2.0));
    }
}

TEST_CASE("metric family") {
    SpatialGrid g(512);
    SUBCASE("constant") {
        Metric m = make_metric_family(g, "constant", 1.0, 0.0, 0, 0);
        for (const auto& c : m.a().samples()) CHECK(c.real() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(validate_metric(m).pass);
    }
    SUBCASE("smooth trig formula") {
        Metric m = make_metric_family(g, "smooth-trig", 1.0, 0.1, 0, 0);
        for (int i = 0; i < g.n; i += 37)
            CHECK(m.a().samples()[static_cast<std::size_t>(i)].real() ==
                  doctest::Approx(1.0 + 0.1 * std::sin(g.x(i))).epsilon(1e-13));
        CHECK(validate_metric(m).pass);
    }
    SUBCASE("rough spline deterministic and valid") {
        Metric m1 = make_metric_family(g, "quadratic-spline-rough", 1.0, 0.1, 8, 7);
        Metric m2 = make_metric_family(g, "quadratic-spline-rough", 1.0, 0.1, 8, 7);
        for (int i = 0; i < g.n; ++i)
            CHECK(m1.a().samples()[static_cast<std::size_t>(i)].real() ==
                  m2.a().samples()[static_cast<std::size_t>(i)].real());
        CHECK(validate_metric(m1).pass);
        CHECK(eval_metric_recipe(m1.recipe(), g.length, g.x(13)) ==
              doctest::Approx(m1.a().samples()[13].real()).epsilon(1e-13));
    }
    SUBCASE("ellipticity guarded") {
        CHECK_THROWS(make_metric_family(g, "constant", -1.0, 0.0, 0, 0));
        CHECK_THROWS(make_metric_family(g, "smooth-trig", 1.0, 1.5, 0, 0));
    }
}

TEST_CASE("dalembert reference") {
    SpatialGrid g(512);
    std::vector<double> v(512);
    for (int i = 0; i < 512; ++i) v[static_cast<std::size_t>(i)] = std::sin(g.x(i));
    SampledField f = SampledField::from_real(g, v);

    SUBCASE("zero time is identity") {
        SampledField u = dalembert_reference(f, 1.0, 0.0, CauchyData::position);
        CHECK((u - f).l2_norm() < 1e-13);
    }
    SUBCASE("half period flips sine") {
        SampledField u = dalembert_reference(f, 1.0, kTwoPi / 2.0, CauchyData::position);
        CHECK((u + f).l2_norm() < 1e-12 * f.l2_norm());
    }
    SUBCASE("velocity branch at zero frequency") {
        SampledField ones = SampledField::from_real(g, std::vector<double>(512, 2.0));
        SampledField u = dalembert_reference(ones, 1.0, 0.7, CauchyData::velocity);
        CHECK(u.samples()[17].real() == doctest::Approx(1.4).epsilon(1e-13));
    }
    SUBCASE("translation is lipschitz in the speed") {
        const double grad = derivative(f, 1).l2_norm();
        for (double dc : {1e-1, 1e-2}) {
            SampledField shifted = multiplier(f, [dc](double xi) {
                return std::exp(cplx(0.0, -xi * dc));
            });
            CHECK((shifted - f).l2_norm() <= grad * dc * (1.0 + 1e-10));
        }
    }
}
