#include "srl/laws.hpp"

#include "srl/error.hpp"
#include "srl/json_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace srl {

using json_util::check_keys;
using json_util::get;
using json_util::get_or;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_probabilities(const std::vector<double>& p, const std::string& where) {
    if (p.empty()) throw ConfigError(where + ": empty support");
    double total = 0;
    for (double q : p) {
        if (!(q >= 0) || !std::isfinite(q)) throw ConfigError(where + ": probabilities must be non-negative");
        total += q;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError(where + ": probabilities sum to " + std::to_string(total) + ", not 1");
}

std::size_t pick(const std::vector<double>& p, double u) {
    double acc = 0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return i;
    }
    return p.size() - 1;
}

double pow_abs(double x, double p) {
    if (p == 0) return 1.0;
    return std::pow(std::abs(x), p);
}

}  // namespace

std::string to_string(Norm n) {
    switch (n) {
        case Norm::Sup: return "sup";
        case Norm::L1: return "l1";
        case Norm::Euclidean: break;
    }
    return "euclidean";
}

Norm norm_from_string(const std::string& s) {
    if (s == "euclidean") return Norm::Euclidean;
    if (s == "sup") return Norm::Sup;
    if (s == "l1") return Norm::L1;
    throw ConfigError("unknown norm '" + s + "'");
}

std::vector<Vector> circle_grid(int count, Norm n) {
    std::vector<Vector> out;
    for (int k = 0; k < count; ++k) {
        const double th = 2.0 * std::numbers::pi * k / count;
        Vector v(2);
        v << std::cos(th), std::sin(th);
        out.push_back(direction(v, n));
    }
    return out;
}

std::vector<Vector> direction_grid(int dim, int count, Norm n) {
    if (dim == 1) {
        std::vector<Vector> out;
        for (int k = 0; k < count; ++k) out.push_back(Vector::Constant(1, k % 2 == 0 ? 1.0 : -1.0));
        return out;
    }
    if (dim == 2) return circle_grid(count, n);
    std::vector<Vector> out;
    Engine eng(0x5eedULL + static_cast<std::uint64_t>(dim));
    while (static_cast<int>(out.size()) < count) {
        Vector g(dim);
        for (int i = 0; i < dim; ++i) g(i) = eng.normal();
        out.push_back(direction(g, n));
    }
    return out;
}

// ---------------------------------------------------------------------------

ScalarLaw::ScalarLaw(Variant v) : law_(std::move(v)) {
    if (const auto* d = std::get_if<Discrete>(&law_)) {
        if (d->values.size() != d->probabilities.size())
            throw ConfigError("discrete law: values and probabilities differ in length");
        check_probabilities(d->probabilities, "discrete law");
    } else if (const auto* u = std::get_if<Uniform>(&law_)) {
        if (!(u->low <= u->high)) throw ConfigError("uniform law: low must not exceed high");
    } else if (const auto* l = std::get_if<LogNormal>(&law_)) {
        if (!(l->sigma >= 0)) throw ConfigError("lognormal law: sigma must be non-negative");
    }
}

double ScalarLaw::sample(Engine& eng) const {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return l.value;
            } else if constexpr (std::is_same_v<T, Discrete>) {
                return l.values[pick(l.probabilities, eng.uniform())];
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return l.low + (l.high - l.low) * eng.uniform();
            } else {
                return std::exp(l.mu + l.sigma * eng.normal());
            }
        },
        law_);
}

double ScalarLaw::abs_moment(double p) const {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return pow_abs(l.value, p);
            } else if constexpr (std::is_same_v<T, Discrete>) {
                double s = 0;
                for (std::size_t i = 0; i < l.values.size(); ++i) s += l.probabilities[i] * pow_abs(l.values[i], p);
                return s;
            } else if constexpr (std::is_same_v<T, Uniform>) {
                if (l.high == l.low) return pow_abs(l.low, p);
                auto anti = [p](double x) { return std::copysign(std::pow(std::abs(x), p + 1) / (p + 1), x); };
                return (anti(l.high) - anti(l.low)) / (l.high - l.low);
            } else {
                return std::exp(p * l.mu + 0.5 * p * p * l.sigma * l.sigma);
            }
        },
        law_);
}

double ScalarLaw::abs_sup() const {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return std::abs(l.value);
            } else if constexpr (std::is_same_v<T, Discrete>) {
                double m = 0;
                for (std::size_t i = 0; i < l.values.size(); ++i)
                    if (l.probabilities[i] > 0) m = std::max(m, std::abs(l.values[i]));
                return m;
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return std::max(std::abs(l.low), std::abs(l.high));
            } else {
                return l.sigma == 0 ? std::exp(l.mu) : kInf;
            }
        },
        law_);
}

double ScalarLaw::min_value() const {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return l.value;
            } else if constexpr (std::is_same_v<T, Discrete>) {
                double m = kInf;
                for (std::size_t i = 0; i < l.values.size(); ++i)
                    if (l.probabilities[i] > 0) m = std::min(m, l.values[i]);
                return m;
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return l.low;
            } else {
                return 0.0;
            }
        },
        law_);
}

std::optional<std::vector<std::pair<double, double>>> ScalarLaw::atoms() const {
    if (const auto* c = std::get_if<Constant>(&law_)) return std::vector<std::pair<double, double>>{{c->value, 1.0}};
    if (const auto* d = std::get_if<Discrete>(&law_)) {
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i < d->values.size(); ++i) out.emplace_back(d->values[i], d->probabilities[i]);
        return out;
    }
    if (const auto* u = std::get_if<Uniform>(&law_); u && u->low == u->high)
        return std::vector<std::pair<double, double>>{{u->low, 1.0}};
    return std::nullopt;
}

json ScalarLaw::to_json() const {
    return std::visit(
        [](const auto& l) -> json {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Constant>) {
                return {{"type", "constant"}, {"value", l.value}};
            } else if constexpr (std::is_same_v<T, Discrete>) {
                return {{"type", "discrete"}, {"values", l.values}, {"probabilities", l.probabilities}};
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return {{"type", "uniform"}, {"low", l.low}, {"high", l.high}};
            } else {
                return {{"type", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}};
            }
        },
        law_);
}

ScalarLaw ScalarLaw::from_json(const json& j) {
    const std::string where = "scalar law";
    if (j.is_number()) return constant(j.get<double>());
    const auto type = get<std::string>(j, "type", where);
    if (type == "constant") {
        check_keys(j, {"type", "value"}, where);
        return constant(get<double>(j, "value", where));
    }
    if (type == "discrete") {
        check_keys(j, {"type", "values", "probabilities"}, where);
        return discrete(get<std::vector<double>>(j, "values", where),
                        get<std::vector<double>>(j, "probabilities", where));
    }
    if (type == "uniform") {
        check_keys(j, {"type", "low", "high"}, where);
        return uniform(get<double>(j, "low", where), get<double>(j, "high", where));
    }
    if (type == "lognormal") {
        check_keys(j, {"type", "mu", "sigma"}, where);
        return lognormal(get<double>(j, "mu", where), get<double>(j, "sigma", where));
    }
    throw ConfigError(where + ": unknown type '" + type + "'");
}

// ---------------------------------------------------------------------------

MatrixLaw::MatrixLaw(Variant v, int dim, std::optional<double> moment_beta)
    : law_(std::move(v)), dim_(dim), moment_beta_(moment_beta) {
    if (dim < 1) throw ConfigError("matrix law: dimension must be >= 1");
    auto check_shape = [dim](const Matrix& m, const char* what) {
        if (m.rows() != dim || m.cols() != dim)
            throw ConfigError(std::string("matrix law: ") + what + " is " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + ", expected " + std::to_string(dim) + "x" +
                              std::to_string(dim));
        if (!m.allFinite()) throw ConfigError(std::string("matrix law: ") + what + " has non-finite entries");
    };
    if (auto* d = std::get_if<DeterministicMatrix>(&law_)) {
        check_shape(d->m, "matrix");
    } else if (auto* s = std::get_if<DiscreteSet>(&law_)) {
        std::vector<double> p;
        for (auto& a : s->atoms) {
            check_shape(a.m, "atom");
            if (a.b1_direction && a.b1_direction->size() != dim)
                throw ConfigError("matrix law: atom b1_direction has wrong dimension");
            p.push_back(a.probability);
        }
        check_probabilities(p, "matrix law DiscreteSet");
    } else if (auto* g = std::get_if<DiagonalIID>(&law_)) {
        if (static_cast<int>(g->entries.size()) != dim)
            throw ConfigError("matrix law: DiagonalIID needs one entry law per coordinate");
    }
    if (moment_beta_ && !(*moment_beta_ > 0)) throw ConfigError("matrix law: moment_beta must be positive");
}

int MatrixLaw::sample(Engine& eng, Matrix& out) const {
    if (out.rows() != dim_ || out.cols() != dim_) out.resize(dim_, dim_);
    return std::visit(
        [&](const auto& l) -> int {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, DeterministicScalar>) {
                out.setIdentity();
                out *= l.a;
                return -1;
            } else if constexpr (std::is_same_v<T, DeterministicMatrix>) {
                out = l.m;
                return -1;
            } else if constexpr (std::is_same_v<T, DiscreteSet>) {
                const double u = eng.uniform();
                double acc = 0;
                std::size_t k = l.atoms.size() - 1;
                for (std::size_t i = 0; i + 1 < l.atoms.size(); ++i) {
                    acc += l.atoms[i].probability;
                    if (u < acc) {
                        k = i;
                        break;
                    }
                }
                out = l.atoms[k].m;
                return static_cast<int>(k);
            } else if constexpr (std::is_same_v<T, DiagonalIID>) {
                out.setZero();
                for (int i = 0; i < dim_; ++i) out(i, i) = l.entries[static_cast<std::size_t>(i)].sample(eng);
                return -1;
            } else {
                out.setIdentity();
                out *= l.law.sample(eng);
                return -1;
            }
        },
        law_);
}

std::optional<std::vector<MatrixAtom>> MatrixLaw::atoms() const {
    const Matrix eye = Matrix::Identity(dim_, dim_);
    return std::visit(
        [&](const auto& l) -> std::optional<std::vector<MatrixAtom>> {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, DeterministicScalar>) {
                return std::vector<MatrixAtom>{{l.a * eye, 1.0, std::nullopt}};
            } else if constexpr (std::is_same_v<T, DeterministicMatrix>) {
                return std::vector<MatrixAtom>{{l.m, 1.0, std::nullopt}};
            } else if constexpr (std::is_same_v<T, DiscreteSet>) {
                return l.atoms;
            } else if constexpr (std::is_same_v<T, DiagonalIID>) {
                std::vector<MatrixAtom> out{{Matrix::Zero(dim_, dim_), 1.0, std::nullopt}};
                for (int i = 0; i < dim_; ++i) {
                    const auto a = l.entries[static_cast<std::size_t>(i)].atoms();
                    if (!a || out.size() * a->size() > 1000000) return std::nullopt;
                    std::vector<MatrixAtom> next;
                    for (const auto& base : out)
                        for (const auto& [value, p] : *a) {
                            MatrixAtom m = base;
                            m.m(i, i) = value;
                            m.probability *= p;
                            next.push_back(std::move(m));
                        }
                    out = std::move(next);
                }
                return out;
            } else {
                const auto a = l.law.atoms();
                if (!a) return std::nullopt;
                std::vector<MatrixAtom> out;
                for (const auto& [value, p] : *a) out.push_back({value * eye, p, std::nullopt});
                return out;
            }
        },
        law_);
}

bool MatrixLaw::deterministic() const {
    return std::holds_alternative<DeterministicScalar>(law_) || std::holds_alternative<DeterministicMatrix>(law_);
}

MatrixLaw::Moment MatrixLaw::norm_moment(double beta, Norm n) const {
    if (const auto* s = std::get_if<ScalarMultiple>(&law_)) return {s->law.abs_moment(beta), true};
    if (const auto* g = std::get_if<DiagonalIID>(&law_); g && !atoms()) {
        double bound = 0;
        for (const auto& e : g->entries) bound += e.abs_moment(beta);
        return {bound, false};
    }
    double total = 0;
    const auto all = atoms();
    for (const auto& a : *all) total += a.probability * std::pow(operator_norm(a.m, n), beta);
    return {total, true};
}

json MatrixLaw::to_json() const {
    json j = std::visit(
        [](const auto& l) -> json {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, DeterministicScalar>) {
                return {{"type", "deterministic_scalar"}, {"value", l.a}};
            } else if constexpr (std::is_same_v<T, DeterministicMatrix>) {
                return {{"type", "deterministic_matrix"}, {"matrix", json_util::from_matrix(l.m)}};
            } else if constexpr (std::is_same_v<T, DiscreteSet>) {
                json atoms = json::array();
                for (const auto& a : l.atoms) {
                    json e = {{"matrix", json_util::from_matrix(a.m)}, {"probability", a.probability}};
                    if (a.b1_direction) e["b1_direction"] = json_util::from_vector(*a.b1_direction);
                    atoms.push_back(e);
                }
                return {{"type", "discrete_set"}, {"atoms", atoms}};
            } else if constexpr (std::is_same_v<T, DiagonalIID>) {
                json e = json::array();
                for (const auto& s : l.entries) e.push_back(s.to_json());
                return {{"type", "diagonal_iid"}, {"entries", e}};
            } else {
                return {{"type", "scalar"}, {"law", l.law.to_json()}};
            }
        },
        law_);
    if (moment_beta_) j["moment_beta"] = *moment_beta_;
    return j;
}

MatrixLaw MatrixLaw::from_json(const json& j, int dim) {
    const std::string where = "matrix_law";
    const auto type = get<std::string>(j, "type", where);
    std::optional<double> beta;
    if (j.contains("moment_beta") && !j.at("moment_beta").is_null()) beta = get<double>(j, "moment_beta", where);
    if (type == "deterministic_scalar") {
        check_keys(j, {"type", "value", "moment_beta"}, where);
        return MatrixLaw(DeterministicScalar{get<double>(j, "value", where)}, dim, beta);
    }
    if (type == "deterministic_matrix") {
        check_keys(j, {"type", "matrix", "moment_beta"}, where);
        return MatrixLaw(DeterministicMatrix{json_util::to_matrix(j.at("matrix"), where + ".matrix")}, dim, beta);
    }
    if (type == "discrete_set") {
        check_keys(j, {"type", "atoms", "moment_beta"}, where);
        DiscreteSet set;
        for (const auto& a : json_util::require(j, "atoms", where)) {
            check_keys(a, {"matrix", "probability", "b1_direction"}, where + ".atoms");
            MatrixAtom atom;
            atom.m = json_util::to_matrix(json_util::require(a, "matrix", where), where + ".atoms.matrix");
            atom.probability = get<double>(a, "probability", where + ".atoms");
            if (a.contains("b1_direction"))
                atom.b1_direction = json_util::to_vector(a.at("b1_direction"), where + ".atoms.b1_direction");
            set.atoms.push_back(std::move(atom));
        }
        return MatrixLaw(std::move(set), dim, beta);
    }
    if (type == "diagonal_iid") {
        check_keys(j, {"type", "entries", "moment_beta"}, where);
        DiagonalIID g;
        for (const auto& e : json_util::require(j, "entries", where)) g.entries.push_back(ScalarLaw::from_json(e));
        return MatrixLaw(std::move(g), dim, beta);
    }
    if (type == "scalar") {
        check_keys(j, {"type", "law", "moment_beta"}, where);
        return MatrixLaw(ScalarMultiple{ScalarLaw::from_json(json_util::require(j, "law", where))}, dim, beta);
    }
    throw ConfigError(where + ": unknown type '" + type + "'");
}

// ---------------------------------------------------------------------------

SphericalLaw::SphericalLaw(Variant v, int dim, Norm n) : law_(std::move(v)), dim_(dim), norm_(n) {
    auto unit = [&](Vector& p) {
        if (p.size() != dim) throw ConfigError("spherical law: point has wrong dimension");
        const double r = norm(p, n);
        if (!(r > 0) || !std::isfinite(r)) throw ConfigError("spherical law: zero or non-finite direction");
        p /= r;
    };
    if (auto* p = std::get_if<PointMass>(&law_)) {
        unit(p->direction);
    } else if (auto* d = std::get_if<DiscreteSphere>(&law_)) {
        if (d->points.size() != d->probabilities.size())
            throw ConfigError("spherical law: points and probabilities differ in length");
        check_probabilities(d->probabilities, "spherical law");
        for (auto& p : d->points) unit(p);
    }
}

Vector SphericalLaw::sample(Engine& eng) const {
    Vector out(dim_);
    sample(eng, out);
    return out;
}

void SphericalLaw::sample(Engine& eng, Vector& out) const {
    if (const auto* p = std::get_if<PointMass>(&law_)) {
        out = p->direction;
        return;
    }
    if (const auto* d = std::get_if<DiscreteSphere>(&law_)) {
        out = d->points[pick(d->probabilities, eng.uniform())];
        return;
    }
    out.resize(dim_);
    double r = 0;
    do {
        for (int i = 0; i < dim_; ++i) out(i) = eng.normal();
        r = norm(out, norm_);
    } while (r == 0);
    out /= r;
}

std::optional<std::vector<std::pair<Vector, double>>> SphericalLaw::support() const {
    if (const auto* p = std::get_if<PointMass>(&law_))
        return std::vector<std::pair<Vector, double>>{{p->direction, 1.0}};
    if (const auto* d = std::get_if<DiscreteSphere>(&law_)) {
        std::vector<std::pair<Vector, double>> out;
        for (std::size_t i = 0; i < d->points.size(); ++i) out.emplace_back(d->points[i], d->probabilities[i]);
        return out;
    }
    return std::nullopt;
}

json SphericalLaw::to_json() const {
    if (const auto* p = std::get_if<PointMass>(&law_))
        return {{"type", "point"}, {"direction", json_util::from_vector(p->direction)}};
    if (const auto* d = std::get_if<DiscreteSphere>(&law_)) {
        json pts = json::array();
        for (const auto& p : d->points) pts.push_back(json_util::from_vector(p));
        return {{"type", "discrete"}, {"points", pts}, {"probabilities", d->probabilities}};
    }
    return {{"type", "uniform"}};
}

SphericalLaw SphericalLaw::from_json(const json& j, int dim, Norm n) {
    const std::string where = "spherical law";
    const auto type = get<std::string>(j, "type", where);
    if (type == "point") {
        check_keys(j, {"type", "direction"}, where);
        return SphericalLaw(PointMass{json_util::to_vector(json_util::require(j, "direction", where), where)}, dim, n);
    }
    if (type == "discrete") {
        check_keys(j, {"type", "points", "probabilities"}, where);
        DiscreteSphere d;
        for (const auto& p : json_util::require(j, "points", where)) d.points.push_back(json_util::to_vector(p, where));
        d.probabilities = get<std::vector<double>>(j, "probabilities", where);
        return SphericalLaw(std::move(d), dim, n);
    }
    if (type == "uniform") {
        check_keys(j, {"type"}, where);
        return SphericalLaw(UniformSphere{}, dim, n);
    }
    throw ConfigError(where + ": unknown type '" + type + "'");
}

// ---------------------------------------------------------------------------

HeavyTailLaw::HeavyTailLaw(double alpha, double c_b, SphericalLaw spherical, Radial radial)
    : alpha_(alpha), c_b_(c_b), spherical_(std::move(spherical)), radial_(std::move(radial)) {
    if (!(alpha_ > 0) || !std::isfinite(alpha_)) throw ConfigError("input law: alpha must be positive");
    if (const auto* d = std::get_if<Degenerate>(&radial_)) {
        if (!(d->radius >= 0)) throw ConfigError("input law: degenerate radius must be non-negative");
        c_b_ = 0;
        return;
    }
    if (!(c_b_ > 0) || !std::isfinite(c_b_)) throw ConfigError("input law: c_b must be positive");
    if (const auto* t = std::get_if<ParetoAboveThreshold>(&radial_)) {
        if (!(t->threshold > 0)) throw ConfigError("input law: threshold must be positive");
        if (c_b_ * std::pow(t->threshold, -alpha_) > 1.0)
            throw ConfigError("input law: c_b * threshold^-alpha exceeds 1");
    }
}

HeavyTailLaw HeavyTailLaw::constant(const Vector& b, double alpha, Norm n) {
    const double r = norm(b, n);
    Vector dir = b;
    if (r == 0) {
        dir = Vector::Zero(b.size());
        dir(0) = 1;
    }
    return HeavyTailLaw(alpha, 0.0, SphericalLaw(PointMass{dir}, static_cast<int>(b.size()), n), Degenerate{r});
}

double HeavyTailLaw::pareto_scale() const { return std::pow(c_b_, 1.0 / alpha_); }

double HeavyTailLaw::sample_radius(Engine& eng) const {
    if (std::holds_alternative<ExactPareto>(radial_)) return std::pow(c_b_ / eng.uniform(), 1.0 / alpha_);
    if (const auto* d = std::get_if<Degenerate>(&radial_)) return d->radius;
    const auto& t = std::get<ParetoAboveThreshold>(radial_);
    const double q = c_b_ * std::pow(t.threshold, -alpha_);
    if (eng.uniform() < q) return t.threshold * std::pow(eng.uniform(), -1.0 / alpha_);
    for (int tries = 0; tries < 100000; ++tries) {
        const double r = std::abs(t.body.sample(eng));
        if (r > 0 && r <= t.threshold) return r;
    }
    throw ConfigError("input law: body law puts no mass on (0, threshold]");
}

double HeavyTailLaw::radial_survival(double t) const {
    if (std::holds_alternative<ExactPareto>(radial_)) {
        const double s = pareto_scale();
        return t < s ? 1.0 : std::pow(s / t, alpha_);
    }
    if (const auto* d = std::get_if<Degenerate>(&radial_)) return t < d->radius ? 1.0 : 0.0;
    const auto& th = std::get<ParetoAboveThreshold>(radial_);
    if (t >= th.threshold) return c_b_ * std::pow(t, -alpha_);
    return std::numeric_limits<double>::quiet_NaN();
}

double HeavyTailLaw::radial_moment_bound(double p) const {
    if (const auto* d = std::get_if<Degenerate>(&radial_)) return std::pow(d->radius, p);
    if (p >= alpha_) return kInf;
    if (std::holds_alternative<ExactPareto>(radial_)) return alpha_ * std::pow(pareto_scale(), p) / (alpha_ - p);
    const auto& th = std::get<ParetoAboveThreshold>(radial_);
    const double q = c_b_ * std::pow(th.threshold, -alpha_);
    return (1 - q) * std::pow(th.threshold, p) + q * alpha_ * std::pow(th.threshold, p) / (alpha_ - p);
}

json HeavyTailLaw::to_json() const {
    json radial = std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ExactPareto>) {
                return {{"type", "exact_pareto"}};
            } else if constexpr (std::is_same_v<T, ParetoAboveThreshold>) {
                return {{"type", "pareto_above_threshold"}, {"threshold", r.threshold}, {"body", r.body.to_json()}};
            } else {
                return {{"type", "degenerate"}, {"radius", r.radius}};
            }
        },
        radial_);
    return {{"alpha", alpha_}, {"c_b", c_b_}, {"spherical", spherical_.to_json()}, {"radial", radial}};
}

HeavyTailLaw HeavyTailLaw::from_json(const json& j, int dim, Norm n) {
    const std::string where = "input_law";
    check_keys(j, {"alpha", "c_b", "spherical", "radial", "constant"}, where);
    const double alpha = get<double>(j, "alpha", where);
    if (j.contains("constant")) {
        const Vector b = json_util::to_vector(j.at("constant"), where + ".constant");
        if (b.size() != dim) throw ConfigError(where + ".constant: wrong dimension");
        return constant(b, alpha, n);
    }
    const double c_b = get<double>(j, "c_b", where);
    SphericalLaw sph = SphericalLaw::from_json(json_util::require(j, "spherical", where), dim, n);
    Radial radial = ExactPareto{};
    if (j.contains("radial")) {
        const auto& r = j.at("radial");
        const auto type = get<std::string>(r, "type", where + ".radial");
        if (type == "exact_pareto") {
            check_keys(r, {"type"}, where + ".radial");
        } else if (type == "pareto_above_threshold") {
            check_keys(r, {"type", "threshold", "body"}, where + ".radial");
            ParetoAboveThreshold t;
            t.threshold = get<double>(r, "threshold", where + ".radial");
            if (r.contains("body")) t.body = ScalarLaw::from_json(r.at("body"));
            else t.body = ScalarLaw::uniform(0, t.threshold);
            radial = t;
        } else {
            throw ConfigError(where + ".radial: unknown type '" + type + "'");
        }
    }
    return HeavyTailLaw(alpha, c_b, std::move(sph), std::move(radial));
}

// ---------------------------------------------------------------------------

double PerturbationLaw::bound(Norm n) const {
    const double u = fixed_direction ? norm(*fixed_direction, n) : 1.0;
    const double r = delta0 == 0 ? 1.0 : std::pow(clip, delta0);
    return b3.abs_sup() * r * u;
}

json PerturbationLaw::to_json() const {
    json j = {{"b3", b3.to_json()}, {"delta0", delta0}, {"bounded_for_limit", bounded_for_limit}};
    if (std::isfinite(clip)) j["clip"] = clip;
    j["direction"] = fixed_direction ? json_util::from_vector(*fixed_direction) : json("radial");
    return j;
}

PerturbationLaw PerturbationLaw::from_json(const json& j, int dim) {
    const std::string where = "perturbation";
    check_keys(j, {"b3", "delta0", "clip", "direction", "bounded_for_limit"}, where);
    PerturbationLaw p;
    p.b3 = ScalarLaw::from_json(json_util::require(j, "b3", where));
    p.delta0 = get<double>(j, "delta0", where);
    p.clip = get_or<double>(j, "clip", kInf, where);
    p.bounded_for_limit = get_or<bool>(j, "bounded_for_limit", false, where);
    if (j.contains("direction") && !(j.at("direction").is_string() && j.at("direction") == "radial")) {
        p.fixed_direction = json_util::to_vector(j.at("direction"), where + ".direction");
        if (p.fixed_direction->size() != dim) throw ConfigError(where + ".direction: wrong dimension");
    }
    return p;
}

}  // namespace srl
