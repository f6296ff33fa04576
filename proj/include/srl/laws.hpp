#pragma once

#include "srl/linalg.hpp"
#include "srl/rng.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace srl {

// ---------------------------------------------------------------------------
// Scalar laws

struct Constant {
    double value = 0;
};
struct Discrete {
    std::vector<double> values;
    std::vector<double> probabilities;
};
struct Uniform {
    double low = 0;
    double high = 1;
};
struct LogNormal {
    double mu = 0;
    double sigma = 1;
};

/// A distribution on the real line with analytic absolute moments.
class ScalarLaw {
public:
    using Variant = std::variant<Constant, Discrete, Uniform, LogNormal>;

    ScalarLaw() : law_(Constant{0}) {}
    ScalarLaw(Variant v);  // validates

    static ScalarLaw constant(double v) { return ScalarLaw(Constant{v}); }
    static ScalarLaw discrete(std::vector<double> values, std::vector<double> probabilities) {
        return ScalarLaw(Discrete{std::move(values), std::move(probabilities)});
    }
    static ScalarLaw uniform(double lo, double hi) { return ScalarLaw(Uniform{lo, hi}); }
    static ScalarLaw lognormal(double mu, double sigma) { return ScalarLaw(LogNormal{mu, sigma}); }

    double sample(Engine& eng) const;
    /// E|X|^p (may be +inf).
    double abs_moment(double p) const;
    /// Essential supremum of |X|, +inf when unbounded.
    double abs_sup() const;
    double min_value() const;
    /// (value, probability) atoms when the law is discrete.
    std::optional<std::vector<std::pair<double, double>>> atoms() const;

    const Variant& variant() const noexcept { return law_; }
    nlohmann::json to_json() const;
    static ScalarLaw from_json(const nlohmann::json& j);

private:
    Variant law_;
};

// ---------------------------------------------------------------------------
// Matrix laws

struct DeterministicScalar {
    double a = 0;
};
struct DeterministicMatrix {
    Matrix m;
};
struct MatrixAtom {
    Matrix m;
    double probability = 0;
    /// Direction of B^1 drawn together with this matrix (Joint coupling only).
    std::optional<Vector> b1_direction;
};
struct DiscreteSet {
    std::vector<MatrixAtom> atoms;
};
struct DiagonalIID {
    std::vector<ScalarLaw> entries;
};
struct ScalarMultiple {
    ScalarLaw law;  // A = a * I
};

/// Law of the random matrix A.
class MatrixLaw {
public:
    using Variant = std::variant<DeterministicScalar, DeterministicMatrix, DiscreteSet, DiagonalIID, ScalarMultiple>;

    MatrixLaw() = default;
    /// Validates shapes and probabilities; `dim` is the ambient dimension.
    MatrixLaw(Variant v, int dim, std::optional<double> moment_beta = std::nullopt);

    int dim() const noexcept { return dim_; }
    const Variant& variant() const noexcept { return law_; }
    std::optional<double> moment_beta() const noexcept { return moment_beta_; }
    void set_moment_beta(double b) { moment_beta_ = b; }

    /// Draws A into `out`; returns the atom index for DiscreteSet (else -1).
    int sample(Engine& eng, Matrix& out) const;
    Matrix sample(Engine& eng) const {
        Matrix m;
        sample(eng, m);
        return m;
    }

    /// Exact (matrix, probability) support when finite.
    std::optional<std::vector<MatrixAtom>> atoms() const;
    bool deterministic() const;

    /// E||A||^beta for the operator norm of `n` (+inf when infinite). Exact for
    /// finite-support and scalar-multiple laws; for continuous diagonal laws it is the
    /// upper bound sum_i E|a_i|^beta and `exact` is false.
    struct Moment {
        double value = 0;
        bool exact = true;
    };
    Moment norm_moment(double beta, Norm n) const;

    nlohmann::json to_json() const;
    static MatrixLaw from_json(const nlohmann::json& j, int dim);

private:
    Variant law_ = DeterministicScalar{0};
    int dim_ = 1;
    std::optional<double> moment_beta_;
};

// ---------------------------------------------------------------------------
// Spherical and heavy-tailed input laws

struct PointMass {
    Vector direction;
};
struct DiscreteSphere {
    std::vector<Vector> points;
    std::vector<double> probabilities;
};
struct UniformSphere {};

/// Law of the direction of B^1 on the unit sphere of the model norm.
class SphericalLaw {
public:
    using Variant = std::variant<PointMass, DiscreteSphere, UniformSphere>;

    SphericalLaw() : law_(UniformSphere{}) {}
    /// Normalizes support points to unit norm in `n`.
    SphericalLaw(Variant v, int dim, Norm n);

    Vector sample(Engine& eng) const;
    void sample(Engine& eng, Vector& out) const;
    std::optional<std::vector<std::pair<Vector, double>>> support() const;
    const Variant& variant() const noexcept { return law_; }
    int dim() const noexcept { return dim_; }

    nlohmann::json to_json() const;
    static SphericalLaw from_json(const nlohmann::json& j, int dim, Norm n);

private:
    Variant law_;
    int dim_ = 1;
    Norm norm_ = Norm::Euclidean;
};

/// P(R > t) = (scale / t)^alpha for t >= scale, scale = c_b^(1/alpha).
struct ExactPareto {};
/// Pareto tail c_b t^-alpha above `threshold`, body law (restricted to (0, threshold]) below.
struct ParetoAboveThreshold {
    double threshold = 1;
    ScalarLaw body = ScalarLaw::uniform(0, 1);
};
/// R is the fixed value `radius`; the input is not regularly varying.
struct Degenerate {
    double radius = 0;
};

/// B^1 = R * Theta with Theta ~ spherical law independent of R.
class HeavyTailLaw {
public:
    using Radial = std::variant<ExactPareto, ParetoAboveThreshold, Degenerate>;

    HeavyTailLaw() = default;
    HeavyTailLaw(double alpha, double c_b, SphericalLaw spherical, Radial radial);

    static HeavyTailLaw pareto(double alpha, double c_b, SphericalLaw spherical) {
        return HeavyTailLaw(alpha, c_b, std::move(spherical), ExactPareto{});
    }
    /// Deterministic input vector b (tail constant reported as 0).
    static HeavyTailLaw constant(const Vector& b, double alpha, Norm n);

    double alpha() const noexcept { return alpha_; }
    double c_b() const noexcept { return c_b_; }
    double pareto_scale() const;
    bool regularly_varying() const { return !std::holds_alternative<Degenerate>(radial_); }
    const SphericalLaw& spherical() const noexcept { return spherical_; }
    const Radial& radial() const noexcept { return radial_; }

    double sample_radius(Engine& eng) const;
    /// Exact P(R > t) for the radial law (body part only for t >= threshold).
    double radial_survival(double t) const;
    /// E R^p (an upper bound for the threshold form), +inf when p >= alpha.
    double radial_moment_bound(double p) const;

    nlohmann::json to_json() const;
    static HeavyTailLaw from_json(const nlohmann::json& j, int dim, Norm n);

private:
    double alpha_ = 1;
    double c_b_ = 1;
    SphericalLaw spherical_;
    Radial radial_ = ExactPareto{};
};

/// B^2(x) = B^3 * min(|x|, clip)^delta0 * u(x / |x|), u radial (u(w) = w) or a fixed vector.
struct PerturbationLaw {
    ScalarLaw b3 = ScalarLaw::constant(0);
    double delta0 = 0;
    double clip = std::numeric_limits<double>::infinity();
    std::optional<Vector> fixed_direction;  // nullopt: radial
    /// Declares that |B^2| <= C must hold (limit-theorem use); requires a finite bound.
    bool bounded_for_limit = false;

    /// Upper bound C on |B^2(x)| (inf when unbounded).
    double bound(Norm n) const;
    nlohmann::json to_json() const;
    static PerturbationLaw from_json(const nlohmann::json& j, int dim);
};

}  // namespace srl
