#include "srl/stable_limit.hpp"

#include "srl/contraction.hpp"
#include "srl/error.hpp"
#include "srl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <iomanip>
#include <numbers>

namespace srl::stable {

Regime regime_of(double alpha) {
    if (!(alpha > 0 && alpha < 2)) throw ConfigError("stable limit needs alpha in (0, 2)");
    if (alpha < 1) return Regime::Below1;
    if (alpha == 1) return Regime::One;
    return Regime::Above1;
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Below1: return "alpha<1";
        case Regime::One: return "alpha=1";
        case Regime::Above1: return "alpha>1";
    }
    return "?";
}

WSampler make_w_sampler(const RecursionModel& model, const Stream& stream, const WOptions& opt, unsigned workers) {
    WSampler s;
    s.model = &model;
    const auto& law = model.matrix_law();
    const Norm nrm = model.norm();
    std::function<double(std::size_t)> bound;

    double sup = INFINITY;
    if (auto atoms = law.atoms()) {
        sup = 0;
        for (const auto& a : *atoms)
            if (a.probability > 0) sup = std::max(sup, operator_norm(a.m, nrm));
    }
    if (sup < 1) {
        s.bound_basis = "sup_norm";
        bound = [sup](std::size_t n) { return std::pow(sup, static_cast<double>(n + 1)) / (1 - sup); };
    } else {
        const double p = std::min(1.0, model.alpha());
        const auto k = contraction::kappa_auto(law, p, nrm, stream, workers);
        if (k.kappa_hat < 1) {
            s.bound_basis = "kappa";
            bound = [k, p](std::size_t n) {
                return std::pow(k.level_constant * std::pow(k.kappa_hat, static_cast<double>(n + 1)) / (1 - k.kappa_hat),
                                1.0 / p);
            };
        } else {
            const auto ly = contraction::estimate_lyapunov(law, 1000, 200, stream.child(7), nrm, workers);
            if (!(ly.lambda_hat + 3 * ly.std_error < 0))
                throw HypothesisError("contractivity for W (kappa < 1 or Lyapunov < 0)",
                                      "kappa=" + std::to_string(k.kappa_hat) + ", lambda=" + std::to_string(ly.lambda_hat));
            s.bound_basis = "lyapunov";
            const double lam = ly.lambda_hat;
            bound = [lam](std::size_t n) { return std::exp(lam * static_cast<double>(n + 1)) / (1 - std::exp(lam)); };
        }
    }
    if (opt.n_terms) {
        s.n_terms = *opt.n_terms;
    } else {
        s.n_terms = 1;
        while (s.n_terms < opt.cap && !(bound(s.n_terms) < opt.tol)) ++s.n_terms;
    }
    s.tail_bound = bound(s.n_terms);
    return s;
}

Vector sample_W(const WSampler& s, const Vector& x, const Stream& stream) {
    const auto& model = *s.model;
    const int d = model.dim();
    Vector sum = Vector::Zero(d);
    if ((x.array() == 0).all()) return sum;
    const double x0 = norm(x, model.norm());
    const Vector zero = Vector::Zero(d);
    Vector w = x;
    Matrix a(d, d);
    const bool affine = model.affine_type() && model.kind() != Kind::Custom;
    for (std::size_t k = 1; k <= s.n_terms; ++k) {
        Engine eng = stream.at(k);
        model.matrix_law().sample(eng, a);
        if (affine) w = a * w;
        else w = model.phi(Vector(a * w), zero);
        sum += w;
        if (!sum.allFinite() || norm(w, model.norm()) > 1e12 * x0)
            throw NumericError("sample_W: partial norms diverge at term " + std::to_string(k));
    }
    return sum;
}

Complex estimate_h_v(const WSampler& s, const Vector& v, const Vector& x, std::size_t mc, const Stream& stream) {
    if ((x.array() == 0).all()) return {1.0, 0.0};
    if (mc == 0) throw ConfigError("estimate_h_v: mc must be positive");
    std::vector<double> re(mc), im(mc);
    for (std::size_t j = 0; j < mc; ++j) {
        const double ph = v.dot(sample_W(s, x, stream.child(j)));
        re[j] = std::cos(ph);
        im[j] = std::sin(ph);
    }
    return {pairwise_mean(std::span<const double>(re)), pairwise_mean(std::span<const double>(im))};
}

Complex levy_kernel(double alpha, double u) {
    if (u == 0) return {0.0, 0.0};
    const double au = std::abs(u);
    if (alpha == 1) {
        return {-std::numbers::pi / 2 * au, (1 - std::numbers::egamma) * u - u * std::log(au)};
    }
    const double mag = alpha * std::tgamma(-alpha) * std::pow(au, alpha);
    const double ph = -std::numbers::pi * alpha / 2 * (u > 0 ? 1.0 : -1.0);
    return {mag * std::cos(ph), mag * std::sin(ph)};
}

double cos_integral_constant(double alpha) {
    if (!(alpha > 0 && alpha < 2)) throw ConfigError("cos_integral_constant: alpha in (0, 2)");
    if (alpha == 1) return -std::numbers::pi / 2;
    return std::tgamma(-alpha) * std::cos(std::numbers::pi * alpha / 2);
}

StableLimitSpec make_spec(const RecursionModel& model, const measure::ParticleMeasure& lambda1, const Stream& stream,
                          const SpecOptions& opt, std::optional<Vector> mean) {
    StableLimitSpec spec;
    spec.alpha = model.alpha();
    spec.regime = regime_of(spec.alpha);
    if (lambda1.support != measure::Support::Sphere) throw ConfigError("make_spec: lambda1 must be spherical");
    if (std::abs(lambda1.alpha - spec.alpha) > 1e-15) throw ConfigError("make_spec: lambda1 degree differs from alpha");
    spec.lambda1 = lambda1;
    spec.c = lambda1.total_mass();
    if (!(spec.c > 0)) throw NumericError("make_spec: lambda1 has no mass");
    spec.m_sigma = spec.alpha * lambda1.first_moment();
    if (spec.regime == Regime::Above1) {
        if (!mean) throw ConfigError("make_spec: alpha > 1 needs the stationary mean m");
        spec.m = *mean;
    }
    spec.sampler = make_w_sampler(model, stream.child(0), opt.w, opt.workers);
    const std::size_t np = lambda1.size();
    const std::size_t per = std::max<std::size_t>(1, std::min(opt.w_mc, opt.w_budget / std::max<std::size_t>(1, np)));
    // A deterministic matrix law makes W(w) deterministic: one draw suffices.
    const std::size_t draws = model.matrix_law().deterministic() && model.matrix_law().atoms() ? 1 : per;
    spec.w_cache.resize(np);
    const int d = model.dim();
    const Stream ws = stream.child(1);
    parallel_for(np, opt.workers, [&](std::size_t i) {
        Matrix m(static_cast<Eigen::Index>(draws), d);
        const Vector w = lambda1.points.row(static_cast<Eigen::Index>(i)).transpose();
        for (std::size_t j = 0; j < draws; ++j)
            m.row(static_cast<Eigen::Index>(j)) = sample_W(spec.sampler, w, ws.child(i).child(j)).transpose();
        spec.w_cache[i] = std::move(m);
    });
    return spec;
}

CAlpha compute_C_alpha_se(const StableLimitSpec& spec, double t, const Vector& v) {
    if (!(t > 0)) throw ConfigError("compute_C_alpha: t must be positive");
    if (v.size() != spec.lambda1.dim()) throw ConfigError("compute_C_alpha: v has wrong dimension");
    if ((spec.regime == Regime::Above1) != spec.m.has_value())
        throw ConfigError("compute_C_alpha: regime/spec mismatch (the mean is required iff alpha > 1)");
    if (spec.w_cache.size() != spec.lambda1.size()) throw ConfigError("compute_C_alpha: W cache is missing");
    const double a = spec.alpha;
    Complex acc{0, 0};
    double var = 0;
    for (std::size_t i = 0; i < spec.lambda1.size(); ++i) {
        const double w = spec.lambda1.weights(static_cast<Eigen::Index>(i));
        const double p = v.dot(spec.lambda1.points.row(static_cast<Eigen::Index>(i)).transpose());
        const Matrix& cache = spec.w_cache[i];
        const auto M = static_cast<std::size_t>(cache.rows());
        std::vector<double> re(M), im(M);
        for (std::size_t j = 0; j < M; ++j) {
            const double s = v.dot(cache.row(static_cast<Eigen::Index>(j)).transpose());
            const Complex k = levy_kernel(a, p + s) - levy_kernel(a, s);
            re[j] = k.real();
            im[j] = k.imag();
        }
        const double mr = pairwise_mean(std::span<const double>(re));
        const double mi = pairwise_mean(std::span<const double>(im));
        acc += w * Complex(mr, mi);
        if (M > 1) {
            double sr = 0;
            for (std::size_t j = 0; j < M; ++j) sr += (re[j] - mr) * (re[j] - mr) + (im[j] - mi) * (im[j] - mi);
            var += w * w * sr / static_cast<double>((M - 1) * M);
        }
    }
    const Complex base = acc / spec.c;
    CAlpha out;
    if (spec.regime == Regime::One) {
        out.value = t * base - Complex(0, 1) * (t * std::log(t) * v.dot(spec.m_sigma) / spec.c);
        out.std_error = t * std::sqrt(var) / spec.c;
    } else {
        const double ta = std::pow(t, a);
        out.value = ta * base;
        out.std_error = ta * std::sqrt(var) / spec.c;
    }
    return out;
}

Complex compute_C_alpha(const StableLimitSpec& spec, double t, const Vector& v) {
    return compute_C_alpha_se(spec, t, v).value;
}

Vector xi_hat(const SampleEnsemble& e, double t, Norm nrm) {
    const int d = e.dim();
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(d), std::vector<double>(e.size()));
    for (std::size_t i = 0; i < e.size(); ++i) {
        const Vector tx = t * e.points.row(static_cast<Eigen::Index>(i)).transpose();
        const double r = norm(tx, nrm);
        for (int j = 0; j < d; ++j) cols[static_cast<std::size_t>(j)][i] = tx(j) / (1 + r * r);
    }
    Vector out(d);
    for (int j = 0; j < d; ++j) out(j) = pairwise_mean(std::span<const double>(cols[static_cast<std::size_t>(j)]));
    return out;
}

Centering centering(double alpha, const SampleEnsemble& e, double a_n, std::size_t n, Norm nrm) {
    const Regime r = regime_of(alpha);
    const int d = e.dim();
    Centering c;
    c.d = Vector::Zero(d);
    c.std_error = Vector::Zero(d);
    if (r == Regime::Below1) return c;
    if (!(a_n > 0)) throw ConfigError("centering: a_n must be positive");
    if (e.size() == 0) throw ConfigError("centering: empty ensemble");
    const double nn = static_cast<double>(n);
    if (r == Regime::One) {
        c.d = nn * xi_hat(e, 1.0 / a_n, nrm);
        return c;
    }
    const double m = static_cast<double>(e.size());
    for (int j = 0; j < d; ++j) {
        std::vector<double> col(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) col[i] = e.points(static_cast<Eigen::Index>(i), j);
        const double mean = pairwise_mean(std::span<const double>(col));
        double ss = 0;
        for (double x : col) ss += (x - mean) * (x - mean);
        c.d(j) = nn / a_n * mean;
        c.std_error(j) = nn / a_n * std::sqrt(ss / std::max(1.0, m - 1) / m);
    }
    if (e.size() > 100) {
        const auto norms = e.norms(nrm);
        std::vector<double> v(norms.data(), norms.data() + norms.size());
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        if (*lo > 0 && *hi > *lo) {
            const double ah = tail::hill_estimator(std::span<const double>(v), tail::default_hill_k(v.size()));
            if (ah < 1.05) {
                c.warning = true;
                c.note = "Hill estimate " + std::to_string(ah) + " is close to 1; the mean may not exist";
            }
        }
    }
    return c;
}

XiReport xi_bound_check(const SampleEnsemble& e, double delta, const std::vector<double>& t_grid, Norm nrm) {
    if (!(delta > 0 && delta < 1)) throw ConfigError("xi_bound_check: delta must lie in (0, 1)");
    XiReport rep;
    rep.delta = delta;
    rep.t_grid = t_grid;
    for (double t : t_grid) {
        if (!(t > 0)) throw ConfigError("xi_bound_check: t must be positive");
        const double xn = norm(xi_hat(e, t, nrm), nrm);
        rep.xi_norms.push_back(xn);
        const double ratio = xn / std::pow(t, delta);
        if (!std::isfinite(ratio)) rep.finite = false;
        if (ratio > rep.C_fit) {
            rep.C_fit = ratio;
            rep.worst_t = t;
        }
    }
    rep.xi_at_1 = norm(xi_hat(e, 1.0, nrm), nrm);
    return rep;
}

double CFGrid::max_abs_diff() const {
    double m = 0;
    for (const auto& p : points) m = std::max(m, p.abs_diff);
    return m;
}

Complex empirical_cf_value(const Matrix& sums, double scale, const Vector& shift, double t, const Vector& v) {
    const auto n = static_cast<std::size_t>(sums.rows());
    std::vector<double> re(n), im(n);
    const double sh = t * v.dot(shift);
    for (std::size_t i = 0; i < n; ++i) {
        const double ph = t * v.dot(sums.row(static_cast<Eigen::Index>(i)).transpose()) / scale - sh;
        re[i] = std::cos(ph);
        im[i] = std::sin(ph);
    }
    return {pairwise_mean(std::span<const double>(re)), pairwise_mean(std::span<const double>(im))};
}

CFGrid empirical_cf(const RecursionModel& model, const StableLimitSpec& spec, std::size_t n, std::size_t trials,
                    const std::vector<GridPoint>& grid, const Stream& stream, unsigned workers) {
    if (trials < 1000) throw ConfigError("empirical_cf: need at least 1000 trials");
    CFGrid out;
    out.n = n;
    out.trials = trials;
    out.a_n = spec.a_n.at(n);
    out.d_n = Vector::Zero(model.dim());
    for (std::size_t i = 0; i < spec.a_n.n.size(); ++i)
        if (spec.a_n.n[i] == n && i < spec.d_n.size()) out.d_n = spec.d_n[i];
    const auto batch = partial_sums(model, Vector::Zero(model.dim()), n, trials, stream, workers);
    for (const auto& g : grid) {
        CFPoint p;
        p.t = g.t;
        p.v = g.v;
        p.empirical = empirical_cf_value(batch.sums, out.a_n, out.d_n, g.t, g.v);
        p.theoretical = std::exp(compute_C_alpha(spec, g.t, g.v));
        p.abs_diff = std::abs(p.empirical - p.theoretical);
        p.empirical_std_error = std::sqrt(std::max(0.0, 1 - std::norm(p.empirical)) / static_cast<double>(trials));
        out.points.push_back(p);
    }
    return out;
}

NondegeneracyReport nondegeneracy(const RecursionModel& model, const measure::ParticleMeasure& gamma1, double c,
                                  const std::vector<Vector>& v_grid, std::size_t mc, const Stream& stream,
                                  const StableLimitSpec* spec, std::size_t n_terms) {
    NondegeneracyReport rep;
    const double a = model.alpha();
    if (!model.affine_type()) {
        rep.status = "unsupported";
        rep.detail = "Phi(x,0) is not affine; nondegeneracy is unverified for this model";
        return rep;
    }
    if (!(c > 0)) throw ConfigError("nondegeneracy: c must be positive");
    if (mc == 0) throw ConfigError("nondegeneracy: mc must be positive");
    rep.C_alpha_constant = cos_integral_constant(a);
    const int d = model.dim();
    const auto& law = model.matrix_law();
    const bool det = law.deterministic();
    const std::size_t draws = det ? 1 : mc;
    bool all_negative = true;
    rep.min_spherical_integral = INFINITY;
    for (std::size_t iv = 0; iv < v_grid.size(); ++iv) {
        const Vector& v = v_grid[iv];
        std::vector<Vector> wv(draws);
        for (std::size_t j = 0; j < draws; ++j) {
            const Stream rs = stream.child(j);
            Matrix q = Matrix::Identity(d, d), am(d, d);
            Vector sum = v;
            for (std::size_t k = 1; k <= n_terms; ++k) {
                Engine eng = rs.at(k);
                law.sample(eng, am);
                q = q * am.transpose();
                sum += q * v;
            }
            if (!sum.allFinite()) throw NumericError("nondegeneracy: W_v series diverged");
            wv[j] = sum;
        }
        double integral = 0;
        for (Eigen::Index i = 0; i < gamma1.points.rows(); ++i) {
            std::vector<double> vals(draws);
            for (std::size_t j = 0; j < draws; ++j)
                vals[j] = std::pow(std::abs(wv[j].dot(gamma1.points.row(i).transpose())), a);
            integral += gamma1.weights(i) * pairwise_mean(std::span<const double>(vals));
        }
        NondegeneracyEntry e;
        e.v = v;
        e.spherical_integral = integral;
        e.re_C = a / c * rep.C_alpha_constant * integral;
        if (spec) e.re_C_direct = compute_C_alpha(*spec, 1.0, v).real();
        if (!(e.re_C < 0)) all_negative = false;
        rep.min_spherical_integral = std::min(rep.min_spherical_integral, integral);
        rep.max_spherical_integral = std::max(rep.max_spherical_integral, integral);
        rep.entries.push_back(e);
    }
    const bool degenerate = rep.min_spherical_integral <= 1e-12 * std::max(1e-300, rep.max_spherical_integral);
    if (all_negative && !degenerate) {
        rep.status = "pass";
        rep.detail = "Re C(v) < 0 on all grid directions";
    } else {
        rep.status = "fail";
        rep.detail = "min spherical integral " + std::to_string(rep.min_spherical_integral) +
                     ": the pushed input directions lie in a hyperplane orthogonal to some grid direction";
    }
    return rep;
}

nlohmann::json to_json(const NondegeneracyReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        nlohmann::json j = {{"v", std::vector<double>(e.v.data(), e.v.data() + e.v.size())},
                            {"spherical_integral", e.spherical_integral},
                            {"re_C", e.re_C}};
        if (e.re_C_direct) j["re_C_direct"] = *e.re_C_direct;
        entries.push_back(j);
    }
    return {{"status", r.status},
            {"detail", r.detail},
            {"C_alpha_constant", r.C_alpha_constant},
            {"min_spherical_integral", r.min_spherical_integral},
            {"max_spherical_integral", r.max_spherical_integral},
            {"entries", entries}};
}

nlohmann::json to_json(const XiReport& r) {
    return {{"delta", r.delta}, {"t_grid", r.t_grid}, {"xi_norms", r.xi_norms}, {"C_fit", r.C_fit},
            {"worst_t", r.worst_t}, {"xi_at_1", r.xi_at_1}, {"finite", r.finite}};
}

void write_cfgrid_csv(const CFGrid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    const auto d = g.points.empty() ? 0 : g.points.front().v.size();
    out << "t";
    for (Eigen::Index j = 0; j < d; ++j) out << ",v" << j;
    out << ",re_theoretical,im_theoretical,re_empirical,im_empirical,abs_diff,empirical_std_error\n" << std::setprecision(17);
    for (const auto& p : g.points) {
        out << p.t;
        for (Eigen::Index j = 0; j < d; ++j) out << "," << p.v(j);
        out << "," << p.theoretical.real() << "," << p.theoretical.imag() << "," << p.empirical.real() << ","
            << p.empirical.imag() << "," << p.abs_diff << "," << p.empirical_std_error << "\n";
    }
    if (!out) throw Error("write failed for " + path);
}

}  // namespace srl::stable
