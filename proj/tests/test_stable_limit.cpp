#include "models.hpp"
#include "oracles.hpp"

#include "srl/error.hpp"
#include "srl/sampling.hpp"
#include "srl/stable_limit.hpp"
#include "srl/tail_measure.hpp"
#include "srl/tail_stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace srl;
using namespace srl::stable;
using namespace testmodels;

namespace {

RecursionModel two_point_model(double alpha) {
    return make_model(Kind::Affine, 1, Norm::Euclidean, scalar_two_point(0.2, 0.8),
                      HeavyTailLaw::pareto(alpha, 1.0, point_mass({1})));
}

StableLimitSpec spec_for(const RecursionModel& m, std::optional<Vector> mean = std::nullopt, std::size_t w_mc = 1000) {
    const auto series = measure::sum_series(m, Stream(100));
    SpecOptions opt;
    opt.w_mc = w_mc;
    return make_spec(m, series.lambda1, Stream(101), opt, mean);
}

SampleEnsemble ensemble_of(const std::vector<double>& x) {
    SampleEnsemble e;
    e.points = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    return e;
}

}  // namespace

TEST_SUITE("stable_limit") {

TEST_CASE("regimes") {
    CHECK(regime_of(0.5) == Regime::Below1);
    CHECK(regime_of(1.0) == Regime::One);
    CHECK(regime_of(1.5) == Regime::Above1);
    CHECK_THROWS_AS(regime_of(2.0), ConfigError);
}

TEST_CASE("W for a deterministic scalar") {
    const auto m = scalar_affine(0.5, 0.5);
    WOptions opt;
    opt.n_terms = 60;
    const auto s = make_w_sampler(m, Stream(1), opt);
    CHECK(std::abs(sample_W(s, vec({1}), Stream(2))(0) - 1.0) <= 1e-9);
    CHECK(sample_W(s, vec({0}), Stream(2))(0) == 0.0);
    const auto dflt = make_w_sampler(m, Stream(1));
    CHECK(dflt.tail_bound <= 1e-6);
    CHECK(dflt.n_terms <= 128);
}

TEST_CASE("mean of W for the two-point law") {
    const auto m = two_point_model(0.5);
    const auto s = make_w_sampler(m, Stream(1));
    const std::size_t n = 100000;
    double total = 0;
    for (std::size_t j = 0; j < n; ++j) total += sample_W(s, vec({1}), Stream(3).child(j))(0);
    CHECK(total / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("W diverges for expanding laws") {
    const auto m = scalar_affine(1.5, 0.5);
    WSampler s{&m, 200, 0, "manual"};
    CHECK_THROWS_AS(sample_W(s, vec({1}), Stream(1)), NumericError);
}

TEST_CASE("h_v for deterministic and two-point laws") {
    const auto m = scalar_affine(0.5, 0.5);
    const auto s = make_w_sampler(m, Stream(1), {60, 1e-6, 128});
    const auto h = estimate_h_v(s, vec({1}), vec({1}), 5, Stream(2));
    CHECK(std::abs(h - std::exp(Complex(0, 1.0))) <= 1e-9);
    CHECK(estimate_h_v(s, vec({1}), vec({0}), 5, Stream(2)) == Complex(1, 0));

    const auto m2 = two_point_model(0.5);
    const auto s2 = make_w_sampler(m2, Stream(1), {12, 1e-6, 128});
    const std::size_t mc = 40000;
    const auto est = estimate_h_v(s2, vec({1}), vec({1}), mc, Stream(4));
    const auto exact = oracles::h_v_enumerated({0.2, 0.8}, 1.0, 1.0, 12);
    // Each coordinate of exp(i phase) has variance at most 1/2.
    const double se = std::sqrt(0.5 / mc);
    CHECK(std::abs(est.real() - exact.real()) <= 3 * se);
    CHECK(std::abs(est.imag() - exact.imag()) <= 3 * se);
    CHECK(std::abs(est) <= 1.0);
}

TEST_CASE("scaling law of C_alpha") {
    for (double alpha : {0.5, 1.5}) {
        const auto m = two_point_model(alpha);
        const auto spec = alpha > 1 ? spec_for(m, vec({3.0}), 300) : spec_for(m, std::nullopt, 300);
        const Vector v = vec({1});
        const Complex base = compute_C_alpha(spec, 1.0, v);
        for (double t : {0.01, 0.3, 2.0, 40.0}) {
            const Complex ct = compute_C_alpha(spec, t, v);
            CHECK(std::abs(ct - std::pow(t, alpha) * base) <= 1e-12 * std::abs(ct));
        }
    }
}

TEST_CASE("log correction at alpha = 1") {
    const auto m = two_point_model(1.0);
    const auto spec = spec_for(m, std::nullopt, 300);
    CHECK(spec.m_sigma(0) > 0);
    for (const Vector& v : {vec({1}), vec({-1})}) {
        const Complex base = compute_C_alpha(spec, 1.0, v);
        for (double t : {0.05, 0.5, 3.0, 25.0}) {
            const Complex diff = compute_C_alpha(spec, t, v) - t * base;
            const Complex expect = Complex(0, -1) * (t * std::log(t) * v.dot(spec.m_sigma) / spec.c);
            CHECK(std::abs(diff - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("C_alpha against the quadrature oracle") {
    for (double alpha : {0.5, 1.5}) {
        const auto m = scalar_affine(0.5, alpha);
        const double mean = 0;  // compensator term only; the mean enters d_n, not C
        const auto spec = alpha > 1 ? spec_for(m, vec({mean})) : spec_for(m);
        for (auto [t, v] : std::vector<std::pair<double, double>>{{0.25, 1}, {0.5, -1}, {1, 1}, {2, -1}, {3, 1}}) {
            const auto got = compute_C_alpha(spec, t, vec({v}));
            const auto want = oracles::scalar_deterministic_logcf(0.5, alpha, 1.0, t, v);
            CHECK(std::abs(got - want) <= 1e-3);
        }
    }
}

TEST_CASE("spec validation") {
    const auto m = two_point_model(1.5);
    const auto series = measure::sum_series(m, Stream(1));
    CHECK_THROWS_AS(make_spec(m, series.lambda1, Stream(2)), ConfigError);
    auto spec = make_spec(m, series.lambda1, Stream(2), {}, vec({1.0}));
    CHECK_THROWS_AS(compute_C_alpha(spec, -1.0, vec({1})), ConfigError);
    CHECK_THROWS_AS(compute_C_alpha(spec, 1.0, vec({1, 0})), ConfigError);
    spec.m.reset();
    CHECK_THROWS_AS(compute_C_alpha(spec, 1.0, vec({1})), ConfigError);
}

TEST_CASE("centering by regime") {
    std::vector<double> two(500, 2.0);
    const auto e = ensemble_of(two);
    CHECK(centering(0.5, e, 10, 100, Norm::Euclidean).d(0) == 0.0);
    const auto c15 = centering(1.5, e, 10, 100, Norm::Euclidean);
    CHECK(c15.d(0) == doctest::Approx(20.0));

    const auto sym_model = make_model(Kind::Affine, 1, Norm::Euclidean, scalar_a(0.5),
                                      HeavyTailLaw::pareto(1.0, 1.0, plus_minus()));
    const auto sym = stationary_ensemble(sym_model, 100000, Stream(3));
    const auto c1 = centering(1.0, sym, 1000.0, 100, Norm::Euclidean);
    CHECK(std::abs(c1.d(0)) < 0.5);
    CHECK(std::abs(xi_hat(sym, 0.01, Norm::Euclidean)(0)) < 0.01);
}

TEST_CASE("xi bound diagnostics") {
    Engine eng = Stream(5).at(0);
    std::vector<double> x(100000);
    for (auto& v : x) v = 1 / (1 - eng.uniform());
    const auto e = ensemble_of(x);
    std::vector<double> grid;
    for (double t = 1e-3; t <= 1.0001; t *= 2) grid.push_back(t);
    const auto rep = xi_bound_check(e, 0.5, grid, Norm::Euclidean);
    CHECK(rep.finite);
    CHECK(std::isfinite(rep.C_fit));
    CHECK(rep.xi_at_1 <= 0.5);
    CHECK_THROWS_AS(xi_bound_check(e, 1.5, grid, Norm::Euclidean), ConfigError);
}

TEST_CASE("empirical CF basics") {
    Matrix sums(3, 1);
    sums << 1.0, -2.0, 5.0;
    const Vector shift = vec({0.3});
    CHECK(empirical_cf_value(sums, 1.0, shift, 0.0, vec({1})) == Complex(1, 0));
    const auto small = empirical_cf_value(sums, 1.0, shift, 1e-9, vec({1}));
    CHECK(std::abs(small - 1.0) < 1e-8);
    CHECK(std::abs(empirical_cf_value(sums, 2.0, shift, 3.0, vec({1}))) <= 1.0);
}

TEST_CASE("empirical CF needs enough trials") {
    const auto m = scalar_affine(0.5, 0.5);
    auto spec = spec_for(m);
    spec.a_n.n = {100};
    spec.a_n.a = {1000.0};
    CHECK_THROWS_AS(empirical_cf(m, spec, 100, 10, {{1.0, vec({1})}}, Stream(1)), ConfigError);
}

TEST_CASE("stability self-check of the partial sums") {
    const double alpha = 0.5;
    const auto m = scalar_affine(0.5, alpha);
    const std::size_t n = 1000, trials = 6000;
    const auto s1 = partial_sums(m, vec({0}), n, trials, Stream(7).child(0));
    const auto s2 = partial_sums(m, vec({0}), n, trials, Stream(7).child(1));
    const auto s3 = partial_sums(m, vec({0}), n, trials, Stream(7).child(2));
    const double a_n = std::pow(static_cast<double>(n) / (1 - std::sqrt(0.5)), 1 / alpha);
    const Matrix pooled = s1.sums + s2.sums;
    const Vector zero = vec({0});
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
        const auto a = empirical_cf_value(pooled, std::pow(2.0, 1 / alpha) * a_n, zero, t, vec({1}));
        const auto b = empirical_cf_value(s3.sums, a_n, zero, t, vec({1}));
        CHECK(std::abs(a - b) <= 0.05);
    }
}

TEST_CASE("nondegeneracy for the scalar model") {
    const double a = 0.5, alpha = 0.5;
    const auto m = scalar_affine(a, alpha);
    const auto g1 = measure::merge(measure::gamma1_particles(m, 10, Stream(1)));
    const double c = 1 / (1 - std::pow(a, alpha));
    const auto rep = nondegeneracy(m, g1, c, {vec({1}), vec({-1})}, 10, Stream(2));
    CHECK(rep.status == "pass");
    const double want = alpha / c * oracles::cos_constant_quadrature(alpha) * std::pow(1 / (1 - a), alpha);
    CHECK(rep.entries[0].re_C == doctest::Approx(want).epsilon(1e-9));
    CHECK(rep.C_alpha_constant == doctest::Approx(oracles::cos_constant_quadrature(alpha)).epsilon(1e-9));
    const auto spec = spec_for(m);
    const auto with = nondegeneracy(m, g1, c, {vec({1})}, 10, Stream(2), &spec);
    CHECK(*with.entries[0].re_C_direct == doctest::Approx(with.entries[0].re_C).epsilon(1e-6));
}

TEST_CASE("cosine constant is negative") {
    for (double alpha : {0.1, 0.5, 0.9, 1.0, 1.1, 1.5, 1.9}) {
        CHECK(cos_integral_constant(alpha) < 0);
        if (alpha != 1.0) CHECK(cos_integral_constant(alpha) == doctest::Approx(oracles::cos_constant_quadrature(alpha)).epsilon(1e-6));
    }
    CHECK(cos_integral_constant(1.0) == doctest::Approx(-M_PI / 2));
}

TEST_CASE("nondegeneracy flags a hyperplane-supported input") {
    SphericalLaw e1(PointMass{vec({1, 0})}, 2, Norm::Euclidean);
    const auto m = make_model(Kind::Affine, 2, Norm::Euclidean, diag_pair(), HeavyTailLaw::pareto(0.5, 1.0, e1));
    const auto g1 = measure::merge(measure::gamma1_particles(m, 10, Stream(1)));
    const auto rep = nondegeneracy(m, g1, 10.0, {vec({1, 0}), vec({0, 1})}, 200, Stream(2));
    CHECK(rep.status == "fail");
    CHECK(rep.min_spherical_integral <= 1e-12);
}

TEST_CASE("nondegeneracy is unsupported for non-affine maps") {
    const auto m = scalar_affine(0.5, 0.5, 1.0, Kind::Extremal);
    const auto g1 = measure::gamma1_particles(m, 10, Stream(1));
    CHECK(nondegeneracy(m, g1, 1.0, {vec({1})}, 10, Stream(2)).status == "unsupported");
}

}
