#include "models.hpp"
#include "oracles.hpp"

#include "srl/error.hpp"
#include "srl/sampling.hpp"
#include "srl/tail_stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

using namespace srl;
using namespace testmodels;

TEST_SUITE("sampling") {

TEST_CASE("forward path of the deterministic affine chain") {
    const auto t = forward_path(deterministic(0.5, 1), vec({0}), 3, Stream(1));
    REQUIRE(t.states.size() == 4);
    CHECK(t.states[0](0) == 0.0);
    CHECK(t.states[1](0) == doctest::Approx(1.0));
    CHECK(t.states[2](0) == doctest::Approx(1.5));
    CHECK(t.states[3](0) == doctest::Approx(1.75));
    CHECK(t.length() == 3);
}

TEST_CASE("empty composition") {
    const auto t = forward_path(deterministic(0.5, 1), vec({7}), 0, Stream(1));
    REQUIRE(t.states.size() == 1);
    CHECK(t.states[0](0) == 7.0);
    CHECK(backward_path(deterministic(0.5, 1), vec({7}), 0, Stream(1)).states.size() == 1);
}

TEST_CASE("extremal forward path") {
    const auto t = forward_path(deterministic(0.5, 1, Kind::Extremal), vec({4}), 2, Stream(1));
    CHECK(t.states[1](0) == doctest::Approx(2.0));
    CHECK(t.states[2](0) == doctest::Approx(1.0));
}

TEST_CASE("backward equals forward for deterministic maps and for n = 1") {
    const auto m = deterministic(0.5, 1);
    const auto f = forward_path(m, vec({3}), 6, Stream(2));
    const auto b = backward_path(m, vec({3}), 6, Stream(2));
    for (std::size_t k = 0; k < f.states.size(); ++k) CHECK(f.states[k](0) == doctest::Approx(b.states[k](0)));

    const auto r = diag_model(0.5);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Vector x1 = forward_endpoint(r, vec({1, -1}), 1, Stream(s));
        const Vector y1 = backward_endpoint(r, vec({1, -1}), 1, Stream(s));
        CHECK((x1 - y1).norm() == 0.0);
    }
}

TEST_CASE("endpoints agree with the stored paths") {
    const auto r = diag_model(0.5);
    const auto f = forward_path(r, vec({0, 0}), 9, Stream(5));
    const auto b = backward_path(r, vec({0, 0}), 9, Stream(5));
    CHECK((f.states.back() - forward_endpoint(r, vec({0, 0}), 9, Stream(5))).norm() == 0.0);
    CHECK((b.states.back() - backward_endpoint(r, vec({0, 0}), 9, Stream(5))).norm() <= 1e-12 * b.states.back().norm());
}

TEST_CASE("forward and backward endpoints have the same law") {
    const auto m = make_model(Kind::Affine, 1, Norm::Euclidean, scalar_two_point(0.2, 0.8),
                              HeavyTailLaw::constant(vec({1}), 1.0, Norm::Euclidean));
    const std::size_t n_seeds = 100000;
    std::vector<double> f(n_seeds), b(n_seeds);
    const Stream fs = Stream(21).child(0), bs = Stream(21).child(1);
    for (std::size_t i = 0; i < n_seeds; ++i) {
        f[i] = forward_endpoint(m, vec({0}), 20, fs.child(i))(0);
        b[i] = backward_endpoint(m, vec({0}), 20, bs.child(i))(0);
    }
    CHECK(oracles::ks_statistic(f, b) < oracles::ks_critical(1.628, n_seeds, n_seeds));
}

TEST_CASE("pathwise geometric bound for a deterministic contraction") {
    const auto m = deterministic(0.5, 1);
    CHECK(std::abs(backward_endpoint(m, vec({0}), 11, Stream(1))(0) - backward_endpoint(m, vec({0}), 10, Stream(1))(0)) <=
          std::pow(0.5, 10) + 1e-15);
}

TEST_CASE("stationary ensemble of a deterministic chain") {
    EnsembleOptions opt;
    opt.n = 30;
    const auto e = stationary_ensemble(deterministic(0.5, 1), 50, Stream(3), opt);
    CHECK(e.size() == 50);
    for (std::size_t i = 0; i < e.size(); ++i)
        CHECK(e.points(static_cast<Eigen::Index>(i), 0) == doctest::Approx(2 * (1 - std::pow(0.5, 30))));
    CHECK(e.meta.n == 30);
    CHECK(e.meta.n_source == "declared");
}

TEST_CASE("empty ensemble is rejected") {
    CHECK_THROWS_AS(stationary_ensemble(deterministic(0.5, 1), 0, Stream(3)), ConfigError);
}

TEST_CASE("bias budget picks the chain length") {
    const auto c = choose_chain_length(scalar_affine(0.5, 0.5), 1e-3, Stream(4));
    CHECK(c.n > 10);
    CHECK(c.n < 200);
    CHECK(c.bound < 1e-3);
    CHECK(c.rho_hat < 1);
    const auto tighter = choose_chain_length(scalar_affine(0.5, 0.5), 1e-6, Stream(4));
    CHECK(tighter.n > c.n);
}

TEST_CASE("non-contractive models fail the precheck") {
    CHECK_THROWS_AS(stationary_ensemble(scalar_affine(1.5, 0.5), 10, Stream(1)), HypothesisError);
}

TEST_CASE("ensemble recovers the input tail index") {
    const auto e = stationary_ensemble(scalar_affine(0.5, 0.5), 200000, Stream(6));
    const auto nv = e.norms(Norm::Euclidean);
    std::vector<double> norms(nv.data(), nv.data() + nv.size());
    const double a = tail::hill_estimator(norms, tail::default_hill_k(norms.size()));
    CHECK(a == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("partial sums of deterministic chains") {
    const auto s1 = partial_sums(deterministic(0.0, 1), vec({0}), 25, 4, Stream(1));
    for (Eigen::Index i = 0; i < s1.sums.rows(); ++i) CHECK(s1.sums(i, 0) == doctest::Approx(25));
    const auto s2 = partial_sums(deterministic(0.5, 1), vec({0}), 2, 3, Stream(1));
    CHECK(s2.sums(0, 0) == doctest::Approx(2.5));
    CHECK(s2.n == 2);
    CHECK_THROWS_AS(partial_sums(deterministic(0.5, 1), vec({0}), 0, 3, Stream(1)), ConfigError);
}

TEST_CASE("partial sums scale like a_n") {
    const auto m = scalar_affine(0.5, 0.5);
    const std::size_t n = 10000;
    const auto batch = partial_sums(m, vec({0}), n, 2000, Stream(8));
    const double c = 1 / (1 - std::sqrt(0.5));
    const double a_n = std::pow(c * static_cast<double>(n), 2.0);
    std::vector<double> r(batch.sums.rows());
    for (Eigen::Index i = 0; i < batch.sums.rows(); ++i) r[static_cast<std::size_t>(i)] = std::abs(batch.sums(i, 0)) / a_n;
    std::nth_element(r.begin(), r.begin() + r.size() / 2, r.end());
    CHECK(std::isfinite(*std::max_element(r.begin(), r.end())));
    CHECK(r[r.size() / 2] > 0.1);
    CHECK(r[r.size() / 2] < 10);
}

TEST_CASE("ensembles do not depend on the worker count") {
    EnsembleOptions o1, o4;
    o4.workers = 4;
    const auto a = stationary_ensemble(diag_model(0.5), 3000, Stream(12), o1);
    const auto b = stationary_ensemble(diag_model(0.5), 3000, Stream(12), o4);
    CHECK(a.meta.n == b.meta.n);
    CHECK((a.points.array() == b.points.array()).all());
}

TEST_CASE("csv round trip") {
    EnsembleOptions opt;
    opt.n = 12;
    const auto e = stationary_ensemble(diag_model(0.5), 20, Stream(2), opt);
    const auto path = (std::filesystem::temp_directory_path() / "srl_ens_roundtrip.csv").string();
    write_ensemble_csv(e, path);
    const auto back = read_ensemble_csv(path);
    std::remove(path.c_str());
    CHECK((back.points.array() == e.points.array()).all());
    CHECK(back.meta.n == 12);
}

}
