#pragma once

#include "srl/contraction.hpp"
#include "srl/linalg.hpp"
#include "srl/model.hpp"
#include "srl/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace srl::measure {

enum class Support { Sphere, PuncturedSpace };

struct Provenance {
    std::string construction;
    std::size_t series_terms = 0;
    std::vector<std::size_t> mc_sizes;
    double truncation_bound = 0;
    /// True while every step so far was an exact enumeration.
    bool exact = true;
};

/// Weighted point masses. With Sphere support a particle (w, weight) stands for
/// weight * delta_w(dw) * alpha r^(-1-alpha) dr, so the mass of {|x| > 1} is the
/// total weight. With PuncturedSpace support the particles are plain point masses.
struct ParticleMeasure {
    Support support = Support::Sphere;
    Matrix points;
    Eigen::VectorXd weights;
    double alpha = 1;
    Norm norm = Norm::Euclidean;
    Provenance provenance;

    std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
    double total_mass() const;
    /// sum_i weight_i * point_i.
    Vector first_moment() const;
};

ParticleMeasure make_sphere_measure(const std::vector<Vector>& points, const std::vector<double>& weights, double alpha,
                                    Norm norm);

/// Particles at Phi(0, w)/|Phi(0, w)| with weight c_b |Phi(0, w)|^alpha per unit
/// direction mass. Exact for a discrete input direction law, else m Monte Carlo draws.
ParticleMeasure gamma1_particles(const RecursionModel& model, std::size_t m, const Stream& stream);

struct PushOptions {
    /// Enumerate finite-support matrix laws when particles * atoms stays below this.
    std::size_t max_branches = 1000000;
    unsigned workers = 1;
};

/// One push w -> A*w with weight factor |A w|^alpha. Output is particle-major,
/// then branch (atom index or draw index); zero-weight branches are dropped.
ParticleMeasure push_spherical(const ParticleMeasure& in, const MatrixLaw& law, std::size_t mc_per_particle,
                               const Stream& stream, const PushOptions& opt = {});

/// Combines particles whose points agree within `tol` in every coordinate.
ParticleMeasure merge(const ParticleMeasure& in, double tol = 1e-12);

/// Systematic resampling to `budget` equal-weight particles; total mass is kept.
ParticleMeasure resample(const ParticleMeasure& in, std::size_t budget, const Stream& stream);

struct SeriesTruncation {
    std::size_t k_max = 0;
    /// Bound on the total mass of the omitted terms (for functionals supported
    /// on {|x| > eta}, multiply by eta^(-alpha) ||f||_inf).
    double tail_bound = 0;
    double kappa_used = 0;
    double level_constant = 1;
    double gamma1_mass = 0;
    bool kappa_exact = false;

    /// Bound after keeping k terms.
    double bound_at(std::size_t k) const;
};

struct SeriesOptions {
    std::optional<std::size_t> k_max;
    /// Used when k_max is absent: smallest k with bound < tol.
    double tol = 1e-10;
    std::size_t gamma1_mc = 10000;
    std::size_t push_mc = 4;
    std::size_t budget = 100000;
    std::size_t max_terms = 10000;
    unsigned workers = 1;
};

struct SeriesResult {
    /// Spherical part of the sum of Gamma_1..Gamma_k_max.
    ParticleMeasure lambda1;
    SeriesTruncation truncation;
    /// Total mass of each Gamma_k.
    std::vector<double> term_masses;
    contraction::KappaFit kappa;
};

/// Refuses (HypothesisError) when kappa(alpha) >= 1 or when Phi(x, 0) = x fails on the orbit.
SeriesResult sum_series(const RecursionModel& model, const Stream& stream, const SeriesOptions& opt = {});

/// Largest relative |Phi(x, 0) - x| over the particle points (unit radius).
double orbit_identity_error(const RecursionModel& model, const ParticleMeasure& m);

/// Rank of the span of sampled Phi(0, w), w from the input direction law.
struct SpanReport {
    int rank = 0;
    int dim = 0;
    std::vector<double> singular_values;
    bool exact = false;
};
SpanReport span_rank(const RecursionModel& model, std::size_t samples, const Stream& stream);

struct Ball {
    double r = 1;
};
/// 1{<u, x> > r}, r > 0.
struct Halfspace {
    Vector u;
    double r = 1;
};
/// |x|^q 1{lo < |x| <= hi} g(x/|x|) with g = 1 or g(w) = <u, w>.
struct RadialPower {
    double q = 0;
    double lo = 0;
    double hi = 1;
    std::optional<Vector> u;
};
using Functional = std::variant<Ball, Halfspace, RadialPower>;

/// Parses "ball(r)", "halfspace(u1,...,ud;r)", "radial(q,lo,hi)" or "radial(q,lo,hi;u1,...,ud)".
/// "inf" is accepted for hi.
Functional parse_functional(const std::string& text, int dim);
std::string to_string(const Functional& f);

double tail_functional(const ParticleMeasure& m, const Functional& f);

nlohmann::json to_json(const Provenance& p);
nlohmann::json to_json(const SeriesTruncation& t);
void write_particles_csv(const ParticleMeasure& m, const std::string& path);

}  // namespace srl::measure
