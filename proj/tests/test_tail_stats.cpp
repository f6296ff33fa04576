#include "models.hpp"

#include "srl/error.hpp"
#include "srl/sampling.hpp"
#include "srl/tail_stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace srl;
using namespace srl::tail;
using namespace testmodels;

namespace {

std::vector<double> pareto_sample(double alpha, std::size_t m, std::uint64_t seed) {
    Engine eng = Stream(seed).at(0);
    std::vector<double> x(m);
    for (auto& v : x) v = std::pow(1.0 - eng.uniform(), -1.0 / alpha);
    return x;
}

SampleEnsemble ensemble_of(const std::vector<double>& x) {
    SampleEnsemble e;
    e.points = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    return e;
}

}  // namespace

TEST_SUITE("tail_stats") {

TEST_CASE("hill estimator on a hand example") {
    const std::vector<double> x{8, 4, 2, 1};
    CHECK(hill_estimator(x, 2) == doctest::Approx(2 / (3 * std::log(2.0))));
}

TEST_CASE("hill estimator on a quantile grid") {
    const std::size_t n = 10000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(n) / static_cast<double>(i + 1);
    CHECK(hill_estimator(x, n / 2) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("hill estimator errors") {
    const std::vector<double> flat(20, 3.0);
    CHECK_THROWS_AS(hill_estimator(flat, 5), NumericError);
    const std::vector<double> x{1, 2, 3};
    CHECK_THROWS_AS(hill_estimator(x, 1), Error);
    CHECK_THROWS_AS(hill_estimator(x, 3), Error);
    const std::vector<double> neg{1, -2, 3, 4};
    CHECK_THROWS_AS(hill_estimator(neg, 2), Error);
}

TEST_CASE("hill estimator is scale invariant") {
    auto x = pareto_sample(0.7, 5000, 3);
    const double a = hill_estimator(x, 300);
    for (double s : {1e-3, 7.0, 1e6}) {
        std::vector<double> y(x);
        for (auto& v : y) v *= s;
        CHECK(std::abs(hill_estimator(y, 300) - a) <= 1e-12 * a);
    }
    CHECK(default_hill_k(1000000) == static_cast<std::size_t>(std::floor(std::pow(1e6, 0.6))));
}

TEST_CASE("tail constant of an exact pareto sample") {
    const auto x = pareto_sample(1.0, 1000000, 4);
    const auto fit = tail_constant(std::span<const double>(x), 1.0);
    CHECK(fit.c_hat == doctest::Approx(1.0).epsilon(0.05));
    CHECK(fit.flatness <= 1.3);
    for (double v : fit.per_t) CHECK(v == doctest::Approx(1.0).epsilon(0.15));
    CHECK(fit.alpha_hat == doctest::Approx(1.0).epsilon(0.05));
    CHECK(fit.t_grid.size() == 12);
}

TEST_CASE("tail constant needs exceedances") {
    const auto x = pareto_sample(1.0, 200, 5);
    TailOptions opt;
    opt.t_grid = std::vector<double>{1e6};
    CHECK_THROWS_AS(tail_constant(std::span<const double>(x), 1.0, opt), InsufficientData);
}

TEST_CASE("spherical empirical for positive and symmetric chains") {
    EnsembleOptions opt;
    const auto pos = stationary_ensemble(scalar_affine(0.5, 0.5), 20000, Stream(6), opt);
    const auto sp = spherical_empirical(pos, 100.0, Norm::Euclidean);
    REQUIRE(sp.points.rows() == 1);
    CHECK(sp.points(0, 0) == 1.0);
    CHECK(sp.weights(0) == doctest::Approx(1.0));

    const auto sym_model = make_model(Kind::Affine, 1, Norm::Euclidean, scalar_a(0.5),
                                      HeavyTailLaw::pareto(0.5, 1.0, plus_minus()));
    const auto sym = stationary_ensemble(sym_model, 100000, Stream(7), opt);
    const auto ss = spherical_empirical(sym, 1000.0, Norm::Euclidean);
    REQUIRE(ss.points.rows() == 2);
    CHECK(ss.weights.sum() == doctest::Approx(1.0));
    CHECK(ss.weights(0) == doctest::Approx(0.5).epsilon(0.04));
    CHECK(ss.weights(1) == doctest::Approx(0.5).epsilon(0.04));

    CHECK_THROWS_AS(spherical_empirical(sym, 1e300, Norm::Euclidean), InsufficientData);
}

TEST_CASE("normalization from pareto quantiles") {
    const auto x1 = pareto_sample(1.0, 1000000, 8);
    const auto s1 = compute_a_n(std::span<const double>(x1), {10, 100, 1000});
    for (std::size_t i = 0; i < s1.n.size(); ++i) CHECK(s1.a[i] == doctest::Approx(static_cast<double>(s1.n[i])).epsilon(0.1));
    for (std::size_t i = 1; i < s1.a.size(); ++i) CHECK(s1.a[i] >= s1.a[i - 1]);
    const auto x2 = pareto_sample(0.5, 1000000, 9);
    const auto s2 = compute_a_n(std::span<const double>(x2), {100, 1000});
    for (std::size_t i = 0; i < s2.n.size(); ++i) {
        const double n = static_cast<double>(s2.n[i]);
        CHECK(s2.a[i] == doctest::Approx(n * n).epsilon(0.2));
    }
    for (double r : exceedance_ratios(std::span<const double>(x1), s1)) {
        CHECK(r >= 0.8);
        CHECK(r <= 1.25);
    }
    CHECK(s1.at(1000) == s1.a[2]);
    CHECK_THROWS_AS(compute_a_n(std::span<const double>(x1), {200000}), InsufficientData);
}

TEST_CASE("ensemble overload uses the declared norm") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    const auto e = ensemble_of(x);
    const auto s = compute_a_n(e, {2}, Norm::Sup);
    CHECK(s.a[0] == doctest::Approx(10.0).epsilon(0.11));
}

}
