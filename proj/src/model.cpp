#include "srl/model.hpp"

#include "srl/error.hpp"
#include "srl/json_util.hpp"

#include <cmath>

namespace srl {

using nlohmann::json;

std::string to_string(Kind k) {
    switch (k) {
        case Kind::Affine: return "affine";
        case Kind::Extremal: return "extremal";
        case Kind::MaxShift: return "max_shift";
        case Kind::AffinePerturbed: return "affine_perturbed";
        case Kind::Custom: return "custom";
    }
    return "affine";
}

Kind kind_from_string(const std::string& s) {
    if (s == "affine") return Kind::Affine;
    if (s == "extremal") return Kind::Extremal;
    if (s == "max_shift") return Kind::MaxShift;
    if (s == "affine_perturbed") return Kind::AffinePerturbed;
    if (s == "custom") throw ConfigError("kind 'custom' is only available through the C++ API");
    throw ConfigError("unknown model kind '" + s + "'");
}

std::string to_string(Coupling c) { return c == Coupling::Joint ? "joint" : "independent"; }

Coupling coupling_from_string(const std::string& s) {
    if (s == "independent") return Coupling::Independent;
    if (s == "joint") return Coupling::Joint;
    throw ConfigError("unknown coupling '" + s + "'");
}

RecursionModel make_model(Kind kind, int dim, Norm norm, MatrixLaw matrix_law, HeavyTailLaw input_law,
                          ModelOptions options) {
    if (dim < 1) throw ConfigError("model: dim must be >= 1");
    if (matrix_law.dim() != dim)
        throw ConfigError("model: matrix law dimension " + std::to_string(matrix_law.dim()) + " != dim " +
                          std::to_string(dim));
    if (input_law.spherical().dim() != dim) throw ConfigError("model: input law dimension mismatch");

    if (kind == Kind::AffinePerturbed) {
        if (!options.perturbation) throw ConfigError("model: affine_perturbed needs a perturbation law");
        const auto& p = *options.perturbation;
        if (!(p.delta0 >= 0 && p.delta0 < 1)) throw ConfigError("model: delta0 must lie in [0, 1)");
        if (!(p.clip > 0)) throw ConfigError("model: perturbation clip must be positive");
        if (p.b3.min_value() < 0) throw ConfigError("model: B^3 must be non-negative");
        if (p.fixed_direction && p.fixed_direction->size() != dim)
            throw ConfigError("model: perturbation direction has wrong dimension");
        if (p.bounded_for_limit && !std::isfinite(p.bound(norm)))
            throw ConfigError("model: bounded_for_limit requires a finite clip (delta0 > 0) and bounded B^3");
    } else if (options.perturbation) {
        throw ConfigError("model: a perturbation law is only valid for kind affine_perturbed");
    }

    if (kind == Kind::MaxShift) {
        if (!options.shift) throw ConfigError("model: max_shift needs a shift law");
    } else if (options.shift) {
        throw ConfigError("model: a shift law is only valid for kind max_shift");
    }

    if (kind == Kind::Custom) {
        if (!options.custom || !options.custom->phi) throw ConfigError("model: custom kind needs a map");
    } else if (options.custom) {
        throw ConfigError("model: a custom map is only valid for kind custom");
    }

    if (!matrix_law.moment_beta()) {
        matrix_law.set_moment_beta(input_law.alpha() + 1.0);
    } else if (!(*matrix_law.moment_beta() > input_law.alpha())) {
        throw ConfigError("model: moment_beta must exceed the tail index alpha");
    }

    RecursionModel m;
    m.kind_ = kind;
    m.dim_ = dim;
    m.norm_ = norm;
    m.coupling_ = options.coupling;
    m.matrix_law_ = std::move(matrix_law);
    m.input_law_ = std::move(input_law);
    m.perturbation_ = std::move(options.perturbation);
    m.shift_ = std::move(options.shift);
    m.custom_ = std::move(options.custom);

    if (m.coupling_ == Coupling::Joint) {
        const auto* set = std::get_if<DiscreteSet>(&m.matrix_law_.variant());
        if (!set) throw ConfigError("model: joint coupling requires a discrete_set matrix law");
        for (const auto& a : set->atoms) {
            if (!a.b1_direction) throw ConfigError("model: joint coupling needs b1_direction on every atom");
            const double r = srl::norm(*a.b1_direction, norm);
            if (!(r > 0)) throw ConfigError("model: zero b1_direction");
            m.joint_directions_.push_back(*a.b1_direction / r);
        }
    }
    return m;
}

Vector RecursionModel::phi(const Vector& x, const Vector& y, const Vector* shift) const {
    switch (kind_) {
        case Kind::Affine:
        case Kind::AffinePerturbed: return x + y;
        case Kind::Extremal: return x.cwiseMax(y);
        case Kind::MaxShift: {
            Vector r = x.cwiseMax(y);
            if (shift) r += *shift;
            return r;
        }
        case Kind::Custom: return custom_->phi(x, y);
    }
    return x + y;
}

Vector RecursionModel::phi_bar(const Vector& x) const { return phi(x, Vector::Zero(dim_)); }

bool RecursionModel::affine_type() const {
    return kind_ == Kind::Affine || kind_ == Kind::AffinePerturbed ||
           (kind_ == Kind::Custom && custom_->additive);
}

Vector RecursionModel::perturbation_at(const Vector& x, double b3) const {
    Vector out = Vector::Zero(dim_);
    if (!perturbation_ || b3 == 0) return out;
    const auto& p = *perturbation_;
    const double r = srl::norm(x, norm_);
    const double radial = p.delta0 == 0 ? 1.0 : std::pow(std::min(r, p.clip), p.delta0);
    if (p.fixed_direction) {
        out = b3 * radial * *p.fixed_direction;
    } else if (r > 0) {
        out = (b3 * radial / r) * x;
    }
    return out;
}

void RecursionModel::draw(const SeedTag& tag, StepSample& out) const {
    Engine eng = tag.stream.at(tag.counter);
    out.tag = tag;
    const int atom = matrix_law_.sample(eng, out.a);
    const double r = input_law_.sample_radius(eng);
    if (coupling_ == Coupling::Joint) {
        out.b1 = r * joint_directions_[static_cast<std::size_t>(atom)];
    } else {
        input_law_.spherical().sample(eng, out.b1);
        out.b1 *= r;
    }
    out.b3 = perturbation_ ? perturbation_->b3.sample(eng) : 0.0;
    if (shift_) {
        out.shift.resize(dim_);
        for (int i = 0; i < dim_; ++i) out.shift(i) = shift_->sample(eng);
    } else {
        out.shift.resize(0);
    }
}

void RecursionModel::apply(const StepSample& s, const Vector& x, Vector& out) const {
    switch (kind_) {
        case Kind::Affine:
            out.noalias() = s.a * x;
            out += s.b1;
            return;
        case Kind::AffinePerturbed:
            out.noalias() = s.a * x;
            out += s.b1;
            out += perturbation_at(x, s.b3);
            return;
        case Kind::Extremal:
            out.noalias() = s.a * x;
            out = out.cwiseMax(s.b1);
            return;
        case Kind::MaxShift:
            out.noalias() = s.a * x;
            out = out.cwiseMax(s.b1);
            out += s.shift;
            return;
        case Kind::Custom: out = custom_->phi(s.a * x, s.b1); return;
    }
}

SphericalLaw RecursionModel::input_direction_law() const {
    if (coupling_ == Coupling::Independent) return input_law_.spherical();
    const auto& set = std::get<DiscreteSet>(matrix_law_.variant());
    DiscreteSphere d;
    for (std::size_t i = 0; i < set.atoms.size(); ++i) {
        d.points.push_back(joint_directions_[i]);
        d.probabilities.push_back(set.atoms[i].probability);
    }
    return SphericalLaw(std::move(d), dim_, norm_);
}

json RecursionModel::to_json() const {
    json j = {{"kind", kind_ == Kind::Custom ? std::string("custom") : to_string(kind_)},
              {"dim", dim_},
              {"norm", to_string(norm_)},
              {"coupling", to_string(coupling_)},
              {"matrix_law", matrix_law_.to_json()},
              {"input_law", input_law_.to_json()}};
    if (perturbation_) j["perturbation"] = perturbation_->to_json();
    if (shift_) j["shift"] = shift_->to_json();
    if (custom_) j["custom"] = custom_->name;
    return j;
}

std::uint64_t RecursionModel::hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RecursionModel model_from_json(const json& j) {
    using json_util::get;
    const std::string where = "model";
    json_util::check_keys(j, {"kind", "dim", "norm", "coupling", "matrix_law", "input_law", "perturbation", "shift"},
                          where);
    const Kind kind = kind_from_string(get<std::string>(j, "kind", where));
    const int dim = get<int>(j, "dim", where);
    if (dim < 1) throw ConfigError("model: dim must be >= 1");
    const Norm nrm = norm_from_string(json_util::get_or<std::string>(j, "norm", "euclidean", where));
    ModelOptions opt;
    opt.coupling = coupling_from_string(json_util::get_or<std::string>(j, "coupling", "independent", where));
    if (j.contains("perturbation")) opt.perturbation = PerturbationLaw::from_json(j.at("perturbation"), dim);
    if (j.contains("shift")) opt.shift = ScalarLaw::from_json(j.at("shift"));
    MatrixLaw ml = MatrixLaw::from_json(json_util::require(j, "matrix_law", where), dim);
    HeavyTailLaw il = HeavyTailLaw::from_json(json_util::require(j, "input_law", where), dim, nrm);
    return make_model(kind, dim, nrm, std::move(ml), std::move(il), std::move(opt));
}

Vector step(const RecursionModel& model, const Vector& x, const Stream& stream, std::uint64_t counter) {
    if (x.size() != model.dim()) throw ConfigError("step: state has wrong dimension");
    if (!x.allFinite()) throw NumericError("step: non-finite input state");
    const StepSample s = model.draw(SeedTag{stream, counter});
    Vector out = model.apply(s, x);
    if (!out.allFinite()) throw OverflowError(counter, stream.id());
    return out;
}

HomogeneityReport check_homogeneity(const RecursionModel& model, std::size_t n_samples,
                                    const std::vector<double>& t_grid, const Stream& stream) {
    for (double t : t_grid)
        if (!(t > 0)) throw ConfigError("check_homogeneity: t grid must be positive");
    const int d = model.dim();
    HomogeneityReport rep;
    for (double t : t_grid) rep.per_t.push_back({t, 0, 0, Vector::Zero(d), Vector::Zero(d)});
    for (std::size_t i = 0; i < std::max<std::size_t>(n_samples, 1); ++i) {
        Vector x = Vector::Zero(d), y = Vector::Zero(d), c = Vector::Zero(d);
        if (i > 0) {
            Engine eng = stream.at(i);
            const double sx = std::pow(10.0, -3.0 + 6.0 * eng.uniform());
            const double sy = std::pow(10.0, -3.0 + 6.0 * eng.uniform());
            for (int k = 0; k < d; ++k) {
                x(k) = sx * eng.normal();
                y(k) = sy * eng.normal();
                c(k) = eng.normal();
            }
        }
        const Vector* shift = model.kind() == Kind::MaxShift ? &c : nullptr;
        const Vector base = model.phi(x, y, shift);
        const double scale = 1.0 + norm(base, model.norm());
        for (std::size_t k = 0; k < t_grid.size(); ++k) {
            const double t = t_grid[k];
            const Vector tc = t * c;
            const Vector scaled = model.phi(t * x, t * y, shift ? &tc : nullptr);
            const double viol = norm(Vector(scaled - t * base), model.norm());
            const double rel = viol / (t * scale);
            auto& pt = rep.per_t[k];
            if (viol > pt.max_abs_violation) pt.max_abs_violation = viol;
            if (rel > pt.max_relative_error) {
                pt.max_relative_error = rel;
                pt.worst_x = x;
                pt.worst_y = y;
            }
            rep.max_abs_violation = std::max(rep.max_abs_violation, viol);
            if (rel > rep.max_relative_error || rep.worst_x.size() == 0) {
                rep.max_relative_error = rel;
                rep.worst_t = t;
                rep.worst_x = x;
                rep.worst_y = y;
            }
        }
    }
    return rep;
}

}  // namespace srl
