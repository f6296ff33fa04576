#include "srl/tail_measure.hpp"

#include "srl/error.hpp"
#include "srl/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace srl::measure {

double ParticleMeasure::total_mass() const {
    std::span<const double> w(weights.data(), static_cast<std::size_t>(weights.size()));
    return pairwise_sum(w);
}

Vector ParticleMeasure::first_moment() const {
    Vector out = Vector::Zero(dim());
    for (Eigen::Index i = 0; i < points.rows(); ++i) out += weights(i) * points.row(i).transpose();
    return out;
}

ParticleMeasure make_sphere_measure(const std::vector<Vector>& points, const std::vector<double>& weights, double alpha,
                                    Norm nrm) {
    if (points.size() != weights.size()) throw ConfigError("make_sphere_measure: size mismatch");
    if (points.empty()) throw ConfigError("make_sphere_measure: no particles");
    const auto d = points.front().size();
    ParticleMeasure m;
    m.alpha = alpha;
    m.norm = nrm;
    m.points.resize(static_cast<Eigen::Index>(points.size()), d);
    m.weights.resize(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != d) throw ConfigError("make_sphere_measure: ragged points");
        if (std::abs(norm(points[i], nrm) - 1.0) > 1e-12) throw ConfigError("make_sphere_measure: point off the sphere");
        if (!(weights[i] >= 0)) throw ConfigError("make_sphere_measure: negative weight");
        m.points.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
        m.weights(static_cast<Eigen::Index>(i)) = weights[i];
    }
    m.provenance.construction = "explicit";
    return m;
}

namespace {

std::string format_vector(const Vector& v) {
    std::ostringstream os;
    os << std::setprecision(6) << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << ")";
    return os.str();
}

ParticleMeasure from_lists(const std::vector<Vector>& pts, const std::vector<double>& ws, int d, const ParticleMeasure& like) {
    ParticleMeasure out;
    out.support = like.support;
    out.alpha = like.alpha;
    out.norm = like.norm;
    out.provenance = like.provenance;
    out.points.resize(static_cast<Eigen::Index>(pts.size()), d);
    out.weights.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
        out.weights(static_cast<Eigen::Index>(i)) = ws[i];
    }
    return out;
}

ParticleMeasure concat(const ParticleMeasure& a, const ParticleMeasure& b) {
    ParticleMeasure out = a;
    out.points.resize(a.points.rows() + b.points.rows(), a.dim());
    out.points << a.points, b.points;
    out.weights.resize(a.weights.size() + b.weights.size());
    out.weights << a.weights, b.weights;
    return out;
}

void check_orbit(const RecursionModel& model, const ParticleMeasure& m) {
    const double err = orbit_identity_error(model, m);
    if (err > 1e-12)
        throw HypothesisError("Phi(x,0)=x on the orbit",
                              "relative violation " + std::to_string(err) +
                                  "; the series representation of the tail measure requires Phi(x,0)=x there");
}

}  // namespace

ParticleMeasure gamma1_particles(const RecursionModel& model, std::size_t m, const Stream& stream) {
    const auto& input = model.input_law();
    if (!input.regularly_varying())
        throw HypothesisError("B^1 regularly varying", "the input law is degenerate (constant radius)");
    const int d = model.dim();
    const Norm nrm = model.norm();
    const double alpha = model.alpha();
    const double cb = input.c_b();
    const Vector zero = Vector::Zero(d);
    const SphericalLaw dirs = model.input_direction_law();

    std::vector<Vector> points;
    std::vector<double> weights;
    auto emit = [&](const Vector& w, double mass) {
        const Vector y = model.phi(zero, w);
        const double r = norm(y, nrm);
        if (r == 0) throw HypothesisError("Phi(0,w) != 0", "Phi(0,w) vanishes at input direction w=" + format_vector(w));
        points.push_back(y / r);
        weights.push_back(mass * std::pow(r, alpha));
    };

    ParticleMeasure out;
    if (auto sup = dirs.support()) {
        for (const auto& [w, p] : *sup)
            if (p > 0) emit(w, cb * p);
        out.provenance.exact = true;
        out.provenance.mc_sizes = {0};
    } else {
        if (m == 0) throw ConfigError("gamma1_particles: m must be positive for a continuous direction law");
        for (std::size_t i = 0; i < m; ++i) {
            Engine eng = stream.child(i).at(0);
            emit(dirs.sample(eng), cb / static_cast<double>(m));
        }
        out.provenance.exact = false;
        out.provenance.mc_sizes = {m};
    }
    out.alpha = alpha;
    out.norm = nrm;
    out.points.resize(static_cast<Eigen::Index>(points.size()), d);
    out.weights.resize(static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.points.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
        out.weights(static_cast<Eigen::Index>(i)) = weights[i];
    }
    out.provenance.construction = "gamma1";
    out.provenance.series_terms = 1;
    return out;
}

ParticleMeasure push_spherical(const ParticleMeasure& in, const MatrixLaw& law, std::size_t mc_per_particle,
                               const Stream& stream, const PushOptions& opt) {
    if (in.support != Support::Sphere) throw ConfigError("push_spherical: input must live on the sphere");
    if (law.dim() != in.dim()) throw ConfigError("push_spherical: dimension mismatch");
    const int d = in.dim();
    const std::size_t n = in.size();
    const auto atoms = law.atoms();
    const bool enumerate = atoms && n * atoms->size() <= opt.max_branches;
    if (!enumerate && mc_per_particle == 0) throw ConfigError("push_spherical: mc_per_particle must be positive");
    const std::size_t branches = enumerate ? atoms->size() : mc_per_particle;

    Matrix pts(static_cast<Eigen::Index>(n * branches), d);
    Eigen::VectorXd ws(static_cast<Eigen::Index>(n * branches));
    parallel_for(n, opt.workers, [&](std::size_t i) {
        const Vector w = in.points.row(static_cast<Eigen::Index>(i)).transpose();
        const double mass = in.weights(static_cast<Eigen::Index>(i));
        Matrix a(d, d);
        Vector aw(d);
        for (std::size_t j = 0; j < branches; ++j) {
            double p;
            if (enumerate) {
                aw.noalias() = (*atoms)[j].m * w;
                p = (*atoms)[j].probability;
            } else {
                Engine eng = stream.child(i).at(j);
                law.sample(eng, a);
                aw.noalias() = a * w;
                p = 1.0 / static_cast<double>(mc_per_particle);
            }
            const double r = norm(aw, in.norm);
            const auto row = static_cast<Eigen::Index>(i * branches + j);
            if (r > 0 && std::isfinite(r)) {
                pts.row(row) = (aw / r).transpose();
                ws(row) = mass * p * std::pow(r, in.alpha);
            } else {
                if (!std::isfinite(r)) throw NumericError("push_spherical: non-finite |A w|");
                pts.row(row) = w.transpose();
                ws(row) = 0;
            }
        }
    });

    ParticleMeasure out;
    out.alpha = in.alpha;
    out.norm = in.norm;
    out.provenance = in.provenance;
    out.provenance.construction = "push";
    out.provenance.series_terms = in.provenance.series_terms + 1;
    out.provenance.exact = in.provenance.exact && enumerate;
    out.provenance.mc_sizes.push_back(enumerate ? 0 : mc_per_particle);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < ws.size(); ++r)
        if (ws(r) > 0) keep.push_back(r);
    out.points.resize(static_cast<Eigen::Index>(keep.size()), d);
    out.weights.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.points.row(static_cast<Eigen::Index>(k)) = pts.row(keep[k]);
        out.weights(static_cast<Eigen::Index>(k)) = ws(keep[k]);
    }
    return out;
}

ParticleMeasure merge(const ParticleMeasure& in, double tol) {
    const int d = in.dim();
    std::vector<Eigen::Index> idx(in.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (int j = 0; j < d; ++j)
            if (in.points(a, j) != in.points(b, j)) return in.points(a, j) < in.points(b, j);
        return false;
    });
    std::vector<Vector> pts;
    std::vector<double> ws;
    for (Eigen::Index i : idx) {
        const Vector p = in.points.row(i).transpose();
        if (!pts.empty() && (pts.back() - p).cwiseAbs().maxCoeff() <= tol) {
            ws.back() += in.weights(i);
        } else {
            pts.push_back(p);
            ws.push_back(in.weights(i));
        }
    }
    return from_lists(pts, ws, d, in);
}

ParticleMeasure resample(const ParticleMeasure& in, std::size_t budget, const Stream& stream) {
    if (budget == 0) throw ConfigError("resample: budget must be positive");
    if (in.size() <= budget) return in;
    const double total = in.total_mass();
    if (!(total > 0)) throw NumericError("resample: measure has no mass");
    const int d = in.dim();
    Engine eng = stream.at(0);
    const double u = eng.uniform();
    const double step = total / static_cast<double>(budget);
    std::vector<Vector> pts;
    std::vector<double> ws;
    double cum = in.weights(0);
    Eigen::Index i = 0;
    for (std::size_t j = 0; j < budget; ++j) {
        const double target = (u + static_cast<double>(j)) * step;
        while (cum < target && i + 1 < in.weights.size()) cum += in.weights(++i);
        const Vector p = in.points.row(i).transpose();
        if (!pts.empty() && pts.back() == p) {
            ws.back() += step;
        } else {
            pts.push_back(p);
            ws.push_back(step);
        }
    }
    ParticleMeasure out = from_lists(pts, ws, d, in);
    out.provenance.exact = false;
    return out;
}

double SeriesTruncation::bound_at(std::size_t k) const {
    if (kappa_used >= 1) return INFINITY;
    return gamma1_mass * level_constant * std::pow(kappa_used, static_cast<double>(k)) / (1.0 - kappa_used);
}

double orbit_identity_error(const RecursionModel& model, const ParticleMeasure& m) {
    const Vector zero = Vector::Zero(m.dim());
    double worst = 0;
    for (Eigen::Index i = 0; i < m.points.rows(); ++i) {
        const Vector x = m.points.row(i).transpose();
        const Vector y = model.phi(x, zero);
        worst = std::max(worst, norm(Vector(y - x), model.norm()) / std::max(1e-300, norm(x, model.norm())));
    }
    return worst;
}

SeriesResult sum_series(const RecursionModel& model, const Stream& stream, const SeriesOptions& opt) {
    const double alpha = model.alpha();
    SeriesResult res;
    res.kappa = contraction::kappa_auto(model.matrix_law(), alpha, model.norm(), stream.child(1), opt.workers);
    if (!(res.kappa.kappa_hat < 1.0 - 1e-9))
        throw HypothesisError("kappa(alpha) < 1", "kappa(" + std::to_string(alpha) +
                                                      ") estimated as " + std::to_string(res.kappa.kappa_hat) +
                                                      "; the series may diverge");

    ParticleMeasure term = merge(gamma1_particles(model, opt.gamma1_mc, stream.child(2)));
    check_orbit(model, term);

    auto& tr = res.truncation;
    tr.kappa_used = res.kappa.kappa_hat;
    tr.kappa_exact = res.kappa.exact;
    tr.level_constant = res.kappa.level_constant;
    tr.gamma1_mass = term.total_mass();
    if (opt.k_max) {
        if (*opt.k_max == 0) throw ConfigError("sum_series: k_max must be at least 1");
        tr.k_max = *opt.k_max;
    } else {
        if (!(opt.tol > 0)) throw ConfigError("sum_series: tol must be positive");
        tr.k_max = 1;
        while (tr.bound_at(tr.k_max) >= opt.tol) {
            if (++tr.k_max > opt.max_terms)
                throw NumericError("sum_series: more than " + std::to_string(opt.max_terms) + " terms for tol");
        }
    }
    tr.tail_bound = tr.bound_at(tr.k_max);

    const PushOptions popt{1000000, opt.workers};
    res.term_masses.push_back(term.total_mass());
    ParticleMeasure acc = term;
    for (std::size_t k = 2; k <= tr.k_max; ++k) {
        term = merge(push_spherical(term, model.matrix_law(), opt.push_mc, stream.child(100 + k), popt));
        if (term.size() == 0) break;
        if (term.size() > opt.budget) term = resample(term, opt.budget, stream.child(1000000 + k));
        check_orbit(model, term);
        res.term_masses.push_back(term.total_mass());
        const bool exact = acc.provenance.exact && term.provenance.exact;
        acc = merge(concat(acc, term));
        acc.provenance.exact = exact;
        if (acc.size() > opt.budget) acc = resample(acc, opt.budget, stream.child(2000000 + k));
    }
    acc.provenance.construction = "series";
    acc.provenance.series_terms = tr.k_max;
    acc.provenance.mc_sizes = term.provenance.mc_sizes;
    acc.provenance.truncation_bound = tr.tail_bound;
    res.lambda1 = std::move(acc);
    return res;
}

SpanReport span_rank(const RecursionModel& model, std::size_t samples, const Stream& stream) {
    const int d = model.dim();
    const Vector zero = Vector::Zero(d);
    const SphericalLaw dirs = model.input_direction_law();
    std::vector<Vector> ys;
    SpanReport rep;
    rep.dim = d;
    if (auto sup = dirs.support()) {
        for (const auto& [w, p] : *sup)
            if (p > 0) ys.push_back(model.phi(zero, w));
        rep.exact = true;
    } else {
        for (std::size_t i = 0; i < samples; ++i) {
            Engine eng = stream.child(i).at(0);
            ys.push_back(model.phi(zero, dirs.sample(eng)));
        }
    }
    Matrix m(static_cast<Eigen::Index>(ys.size()), d);
    for (std::size_t i = 0; i < ys.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = ys[i].transpose();
    if (m.rows() == 0) return rep;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        rep.singular_values.push_back(sv(i));
        if (sv(i) > 1e-10 * sv(0)) ++rep.rank;
    }
    return rep;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell == "inf") {
            out.push_back(INFINITY);
            continue;
        }
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw ConfigError("functional: cannot parse number '" + cell + "'");
        }
        if (used != cell.size()) throw ConfigError("functional: cannot parse number '" + cell + "'");
        out.push_back(v);
    }
    return out;
}

Vector to_vec(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

Functional parse_functional(const std::string& text, int dim) {
    const std::string t = trim(text);
    const auto open = t.find('(');
    if (open == std::string::npos || t.back() != ')') throw ConfigError("unsupported functional '" + text + "'");
    const std::string name = trim(t.substr(0, open));
    const std::string body = t.substr(open + 1, t.size() - open - 2);
    const auto semi = body.find(';');
    const auto head = parse_list(body.substr(0, semi));
    const auto tail = semi == std::string::npos ? std::vector<double>{} : parse_list(body.substr(semi + 1));
    if (name == "ball") {
        if (head.size() != 1 || semi != std::string::npos) throw ConfigError("ball takes one radius");
        if (!(head[0] > 0)) throw ConfigError("ball radius must be positive");
        return Ball{head[0]};
    }
    if (name == "halfspace") {
        if (static_cast<int>(head.size()) != dim || tail.size() != 1)
            throw ConfigError("halfspace takes d direction coordinates and ';' then r");
        if (!(tail[0] > 0)) throw ConfigError("halfspace level r must be positive");
        return Halfspace{to_vec(head), tail[0]};
    }
    if (name == "radial") {
        if (head.size() != 3) throw ConfigError("radial takes q,lo,hi");
        RadialPower f{head[0], head[1], head[2], std::nullopt};
        if (!(f.lo >= 0) || !(f.hi > f.lo)) throw ConfigError("radial needs 0 <= lo < hi");
        if (semi != std::string::npos) {
            if (static_cast<int>(tail.size()) != dim) throw ConfigError("radial direction must have d coordinates");
            f.u = to_vec(tail);
        }
        return f;
    }
    throw ConfigError("unsupported functional '" + text + "'");
}

std::string to_string(const Functional& f) {
    std::ostringstream os;
    os << std::setprecision(17);
    auto list = [&](const Vector& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
    };
    if (auto b = std::get_if<Ball>(&f)) {
        os << "ball(" << b->r << ")";
    } else if (auto h = std::get_if<Halfspace>(&f)) {
        os << "halfspace(";
        list(h->u);
        os << ";" << h->r << ")";
    } else {
        const auto& r = std::get<RadialPower>(f);
        os << "radial(" << r.q << "," << r.lo << ",";
        if (std::isinf(r.hi)) os << "inf";
        else os << r.hi;
        if (r.u) {
            os << ";";
            list(*r.u);
        }
        os << ")";
    }
    return os.str();
}

double tail_functional(const ParticleMeasure& m, const Functional& f) {
    const double a = m.alpha;
    if (m.support == Support::PuncturedSpace) {
        double s = 0;
        for (Eigen::Index i = 0; i < m.points.rows(); ++i) {
            const Vector x = m.points.row(i).transpose();
            const double r = norm(x, m.norm);
            double v = 0;
            if (auto b = std::get_if<Ball>(&f)) {
                v = r > b->r ? 1.0 : 0.0;
            } else if (auto h = std::get_if<Halfspace>(&f)) {
                v = h->u.dot(x) > h->r ? 1.0 : 0.0;
            } else {
                const auto& rp = std::get<RadialPower>(f);
                if (r > rp.lo && r <= rp.hi) v = std::pow(r, rp.q) * (rp.u ? rp.u->dot(x / r) : 1.0);
            }
            s += m.weights(i) * v;
        }
        return s;
    }
    if (auto b = std::get_if<Ball>(&f)) {
        if (!(b->r > 0)) throw ConfigError("ball radius must be positive");
        return m.total_mass() * std::pow(b->r, -a);
    }
    if (auto h = std::get_if<Halfspace>(&f)) {
        if (h->u.size() != m.dim()) throw ConfigError("halfspace direction has wrong dimension");
        if (!(h->r > 0)) throw ConfigError("halfspace level must be positive (infinite mass otherwise)");
        double s = 0;
        for (Eigen::Index i = 0; i < m.points.rows(); ++i) {
            const double p = h->u.dot(m.points.row(i).transpose());
            if (p > 0) s += m.weights(i) * std::pow(p / h->r, a);
        }
        return s;
    }
    const auto& rp = std::get<RadialPower>(f);
    const double e = rp.q - a;
    double radial;
    if (e == 0) {
        if (rp.lo == 0 || std::isinf(rp.hi)) throw ConfigError("radial integral diverges for q = alpha");
        radial = a * std::log(rp.hi / rp.lo);
    } else {
        if (std::isinf(rp.hi) && e > 0) throw ConfigError("radial integral diverges at infinity (need q < alpha)");
        if (rp.lo == 0 && e < 0) throw ConfigError("radial integral diverges at 0 (need q > alpha)");
        const double hi = std::isinf(rp.hi) ? 0.0 : std::pow(rp.hi, e);
        const double lo = rp.lo == 0 ? 0.0 : std::pow(rp.lo, e);
        radial = a * (hi - lo) / e;
    }
    double s = 0;
    if (rp.u) {
        if (rp.u->size() != m.dim()) throw ConfigError("radial direction has wrong dimension");
        for (Eigen::Index i = 0; i < m.points.rows(); ++i) s += m.weights(i) * rp.u->dot(m.points.row(i).transpose());
    } else {
        s = m.total_mass();
    }
    return s * radial;
}

nlohmann::json to_json(const Provenance& p) {
    return {{"construction", p.construction},
            {"series_terms", p.series_terms},
            {"mc_sizes", p.mc_sizes},
            {"truncation_bound", p.truncation_bound},
            {"exact", p.exact}};
}

nlohmann::json to_json(const SeriesTruncation& t) {
    return {{"k_max", t.k_max},
            {"tail_bound", t.tail_bound},
            {"kappa_used", t.kappa_used},
            {"kappa_exact", t.kappa_exact},
            {"level_constant", t.level_constant},
            {"gamma1_mass", t.gamma1_mass}};
}

void write_particles_csv(const ParticleMeasure& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "# support=" << (m.support == Support::Sphere ? "sphere" : "punctured") << " alpha=" << std::setprecision(17)
        << m.alpha << " norm=" << to_string(m.norm) << "\n";
    for (int j = 0; j < m.dim(); ++j) out << "x" << j << ",";
    out << "weight\n";
    for (Eigen::Index i = 0; i < m.points.rows(); ++i) {
        for (int j = 0; j < m.dim(); ++j) out << m.points(i, j) << ",";
        out << m.weights(i) << "\n";
    }
    if (!out) throw Error("write failed for " + path);
}

}  // namespace srl::measure
