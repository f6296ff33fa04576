#include "models.hpp"

#include "srl/error.hpp"
#include "srl/model.hpp"

#include <doctest.h>

using namespace srl;
using namespace testmodels;

TEST_SUITE("model") {

TEST_CASE("make_model accepts the minimal scalar affine model") {
    const auto m = scalar_affine(0.5, 0.5);
    CHECK(m.dim() == 1);
    CHECK(m.alpha() == doctest::Approx(0.5));
    CHECK(m.kind() == Kind::Affine);
    CHECK(m.affine_type());
}

TEST_CASE("probabilities must sum to one") {
    Matrix a(1, 1), b(1, 1);
    a << 0.3;
    b << 0.7;
    CHECK_THROWS_AS(MatrixLaw(DiscreteSet{{{a, 0.5, std::nullopt}, {b, 0.6, std::nullopt}}}, 1), ConfigError);
    CHECK_THROWS_AS(SphericalLaw(DiscreteSphere{{vec({1}), vec({-1})}, {0.5, 0.6}}, 1, Norm::Euclidean), ConfigError);
}

TEST_CASE("two-dimensional diagonal model is valid") {
    const auto m = diag_model(0.5);
    CHECK(m.dim() == 2);
    CHECK(m.matrix_law().atoms()->size() == 2);
}

TEST_CASE("dimension mismatches are rejected") {
    CHECK_THROWS_AS(make_model(Kind::Affine, 2, Norm::Euclidean, scalar_a(0.5),
                               HeavyTailLaw::pareto(0.5, 1, point_mass({1, 0}))),
                    ConfigError);
    CHECK_THROWS_AS(HeavyTailLaw::pareto(0.0, 1, point_mass({1})), ConfigError);
    CHECK_THROWS_AS(HeavyTailLaw::pareto(0.5, -1, point_mass({1})), ConfigError);
}

TEST_CASE("phi on the worked examples") {
    const auto affine = deterministic(0.5, 2);
    CHECK(affine.apply(affine.draw(SeedTag{Stream(1), 1}), vec({4}))(0) == doctest::Approx(4.0));

    const auto ext = deterministic(1.0, 5, Kind::Extremal);
    CHECK(ext.apply(ext.draw(SeedTag{Stream(1), 1}), vec({3}))(0) == doctest::Approx(5.0));

    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << 2.0, 1.0 / 3.0;
    const auto m2 = make_model(Kind::Affine, 2, Norm::Euclidean, MatrixLaw(DeterministicMatrix{a}, 2),
                               HeavyTailLaw::constant(vec({1, 1}), 1.0, Norm::Euclidean));
    const Vector out = m2.apply(m2.draw(SeedTag{Stream(1), 1}), vec({1, 3}));
    CHECK(out(0) == doctest::Approx(3.0));
    CHECK(out(1) == doctest::Approx(2.0));
}

TEST_CASE("phi and phi_bar for the extremal map") {
    const auto m = scalar_affine(0.5, 0.5, 1.0, Kind::Extremal);
    CHECK(m.phi(vec({-1}), vec({-3}))(0) == doctest::Approx(-1));
    CHECK(m.phi_bar(vec({2}))(0) == doctest::Approx(2));
    CHECK(m.phi_bar(vec({-2}))(0) == doctest::Approx(0));
    CHECK_FALSE(m.affine_type());
}

TEST_CASE("homogeneity of built-in maps") {
    for (Kind k : {Kind::Affine, Kind::Extremal}) {
        const auto m = scalar_affine(0.5, 0.5, 1.0, k);
        const auto rep = check_homogeneity(m, 200, {0.5, 2.0, 10.0}, Stream(3));
        CHECK(rep.max_relative_error <= 1e-12);
        CHECK(rep.passed(1e-9));
    }
    const auto rep2 = check_homogeneity(diag_model(0.5), 200, {0.1, 3.0}, Stream(4));
    CHECK(rep2.max_relative_error <= 1e-12);
}

TEST_CASE("a broken custom map is caught by the homogeneity check") {
    ModelOptions opt;
    opt.custom = CustomMap{"x+y+1", [](const Vector& x, const Vector& y) { return Vector(x + y + Vector::Ones(x.size())); }};
    const auto m = make_model(Kind::Custom, 1, Norm::Euclidean, scalar_a(0.5),
                              HeavyTailLaw::pareto(0.5, 1, point_mass({1})), opt);
    const auto rep = check_homogeneity(m, 10, {2.0}, Stream(5));
    CHECK_FALSE(rep.passed(1e-9));
    CHECK(rep.max_abs_violation == doctest::Approx(1.0));
    CHECK(rep.worst_t == doctest::Approx(2.0));
}

TEST_CASE("json round trip keeps the model hash") {
    const auto m = diag_model(0.7);
    const auto back = model_from_json(m.to_json());
    CHECK(back.hash() == m.hash());
    CHECK(back.to_json() == m.to_json());
    CHECK(scalar_affine(0.5, 0.5).hash() != scalar_affine(0.5, 0.6).hash());
}

TEST_CASE("unknown json keys are rejected") {
    auto j = scalar_affine(0.5, 0.5).to_json();
    j["colour"] = "blue";
    CHECK_THROWS_AS(model_from_json(j), ConfigError);
    j = scalar_affine(0.5, 0.5).to_json();
    j["input_law"]["bogus"] = 1;
    CHECK_THROWS_AS(model_from_json(j), ConfigError);
}

TEST_CASE("draws are a pure function of the seed tag") {
    const auto m = diag_model(0.5);
    const auto s1 = m.draw(SeedTag{Stream(9).child(3), 17});
    const auto s2 = m.draw(SeedTag{Stream(9).child(3), 17});
    CHECK(s1.a == s2.a);
    CHECK(s1.b1 == s2.b1);
    const auto s3 = m.draw(SeedTag{Stream(9).child(3), 18});
    CHECK((s1.b1 != s3.b1));
}

TEST_CASE("overflow is reported with the step") {
    const auto m = deterministic(1e300, 1);
    Vector x = vec({1e300});
    CHECK_THROWS_AS(step(m, x, Stream(1)), OverflowError);
}

TEST_CASE("pareto radius has the declared survival") {
    const auto law = HeavyTailLaw::pareto(0.5, 1.0, point_mass({1}));
    Engine eng = Stream(11).at(0);
    const std::size_t n = 200000;
    std::size_t above = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (law.sample_radius(eng) > 100.0) ++above;
    CHECK(static_cast<double>(above) / n == doctest::Approx(0.1).epsilon(0.03));
    CHECK(law.radial_survival(100.0) == doctest::Approx(0.1));
}

}
