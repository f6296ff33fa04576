#pragma once

#include "srl/laws.hpp"
#include "srl/linalg.hpp"
#include "srl/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace srl {

enum class Kind { Affine, Extremal, MaxShift, AffinePerturbed, Custom };
enum class Coupling { Independent, Joint };

std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);
std::string to_string(Coupling c);
Coupling coupling_from_string(const std::string& s);

/// User-supplied combining map Phi(x, y), expected to commute with dilations.
struct CustomMap {
    std::string name;
    std::function<Vector(const Vector&, const Vector&)> phi;
    /// Phi(x, y) = x + y structurally; enables the adjoint series used for nondegeneracy.
    bool additive = false;
};

/// One drawn transition (A, B^1, B^3, C). Reproducible from `tag`.
struct StepSample {
    Matrix a;
    Vector b1;
    double b3 = 0;
    Vector shift;
    SeedTag tag;
};

struct ModelOptions {
    Coupling coupling = Coupling::Independent;
    std::optional<PerturbationLaw> perturbation;
    /// Law of each coordinate of the shift C (MaxShift only).
    std::optional<ScalarLaw> shift;
    std::optional<CustomMap> custom;
};

/// Immutable description of X_n = Phi(A_n X_{n-1}, B_n(X_{n-1})) with B = B^1 + B^2(x).
class RecursionModel {
public:
    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    Norm norm() const noexcept { return norm_; }
    Coupling coupling() const noexcept { return coupling_; }
    const MatrixLaw& matrix_law() const noexcept { return matrix_law_; }
    const HeavyTailLaw& input_law() const noexcept { return input_law_; }
    const std::optional<PerturbationLaw>& perturbation() const noexcept { return perturbation_; }
    const std::optional<ScalarLaw>& shift_law() const noexcept { return shift_; }
    const std::optional<CustomMap>& custom() const noexcept { return custom_; }
    double alpha() const noexcept { return input_law_.alpha(); }

    /// Phi(x, y); for MaxShift `shift` is the added C (zero when null).
    Vector phi(const Vector& x, const Vector& y, const Vector* shift = nullptr) const;
    /// x -> Phi(x, 0).
    Vector phi_bar(const Vector& x) const;
    /// Phi(x, 0) is linear in x (affine-type models).
    bool affine_type() const;

    /// B^2(x) for the drawn B^3 (zero vector unless AffinePerturbed).
    Vector perturbation_at(const Vector& x, double b3) const;

    void draw(const SeedTag& tag, StepSample& out) const;
    StepSample draw(const SeedTag& tag) const {
        StepSample s;
        draw(tag, s);
        return s;
    }

    /// out = Phi(A x, B^1 + B^2(x)) (+ C). `out` must not alias `x`.
    void apply(const StepSample& s, const Vector& x, Vector& out) const;
    Vector apply(const StepSample& s, const Vector& x) const {
        Vector out(dim_);
        apply(s, x, out);
        return out;
    }

    /// Marginal law of the direction of B^1 (mixture over atoms under Joint coupling).
    SphericalLaw input_direction_law() const;

    nlohmann::json to_json() const;
    /// FNV-1a over the canonical JSON description.
    std::uint64_t hash() const;

    friend RecursionModel make_model(Kind, int, Norm, MatrixLaw, HeavyTailLaw, ModelOptions);

private:
    RecursionModel() = default;

    Kind kind_ = Kind::Affine;
    int dim_ = 1;
    Norm norm_ = Norm::Euclidean;
    Coupling coupling_ = Coupling::Independent;
    MatrixLaw matrix_law_;
    HeavyTailLaw input_law_;
    std::optional<PerturbationLaw> perturbation_;
    std::optional<ScalarLaw> shift_;
    std::optional<CustomMap> custom_;
    std::vector<Vector> joint_directions_;
};

/// Validates and builds a model; throws ConfigError on any inconsistency.
RecursionModel make_model(Kind kind, int dim, Norm norm, MatrixLaw matrix_law, HeavyTailLaw input_law,
                          ModelOptions options = {});

RecursionModel model_from_json(const nlohmann::json& j);

/// One transition from x using the draw at (stream, counter). Throws OverflowError
/// when the result is not finite.
Vector step(const RecursionModel& model, const Vector& x, const Stream& stream, std::uint64_t counter = 1);

struct HomogeneityCheck {
    double t = 0;
    double max_relative_error = 0;
    double max_abs_violation = 0;
    Vector worst_x;
    Vector worst_y;
};

struct HomogeneityReport {
    double max_relative_error = 0;
    double max_abs_violation = 0;
    double worst_t = 0;
    Vector worst_x;
    Vector worst_y;
    std::vector<HomogeneityCheck> per_t;
    bool passed(double tol) const { return max_relative_error <= tol; }
};

/// Samples (x, y) pairs (the first pair is the origin) and measures
/// |Phi(tx, ty) - t Phi(x, y)| / (t (1 + |Phi(x, y)|)) on every grid t.
HomogeneityReport check_homogeneity(const RecursionModel& model, std::size_t n_samples,
                                    const std::vector<double>& t_grid, const Stream& stream);

}  // namespace srl
