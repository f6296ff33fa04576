#include "srl/hypotheses.hpp"

#include "srl/error.hpp"
#include "srl/tail_measure.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace srl {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}

}  // namespace

const Verdict* HypothesisReport::find(const std::string& name) const {
    for (const auto& v : verdicts)
        if (v.name == name) return &v;
    return nullptr;
}

bool HypothesisReport::all_pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

HypothesisReport verify_hypotheses(const RecursionModel& model, const Stream& stream, const HypothesisOptions& opt) {
    HypothesisReport rep;
    const double alpha = model.alpha();
    const Norm nrm = model.norm();
    const auto& law = model.matrix_law();
    const int d = model.dim();

    // Lyapunov exponent (informational, but a negative value is needed for stability).
    try {
        rep.lyapunov = contraction::estimate_lyapunov(law, opt.lyapunov_n, opt.lyapunov_replicas, stream.child(1), nrm,
                                                      opt.workers);
        rep.verdicts.push_back({"Lyapunov exponent < 0", "stationary_tail", rep.lyapunov.lambda_hat < 0, "sampled",
                                "lambda_hat=" + num(rep.lyapunov.lambda_hat) + " +- " + num(rep.lyapunov.std_error)});
    } catch (const Error& e) {
        rep.verdicts.push_back({"Lyapunov exponent < 0", "stationary_tail", false, "sampled", e.what()});
    }

    // gamma-geometricity for some gamma > alpha.
    {
        const std::vector<double> gammas = opt.gammas ? *opt.gammas : std::vector<double>{1.1 * alpha, 1.5 * alpha, 2 * alpha};
        bool any_above = false, ok = false;
        std::ostringstream detail;
        for (std::size_t i = 0; i < gammas.size(); ++i) {
            const double g = gammas[i];
            try {
                const auto fit = contraction::estimate_gamma_geometric(model, g, opt.n_max, opt.pairs,
                                                                       stream.child(10 + i), {1.0, opt.workers});
                rep.geometricity.push_back(fit);
                detail << "gamma=" << num(g) << ": rho_hat=" << num(fit.rho_hat) << "; ";
                if (g > alpha) {
                    any_above = true;
                    if (fit.rho_hat < 1) ok = true;
                }
            } catch (const Error& e) {
                detail << "gamma=" << num(g) << ": " << e.what() << "; ";
                if (g > alpha) any_above = true;
            }
        }
        std::string text = detail.str();
        if (!any_above) text = "gamma>alpha unattained (no tested gamma exceeds alpha=" + num(alpha) + "); " + text;
        rep.verdicts.push_back({"gamma-geometric for some gamma > alpha", "stationary_tail", any_above && ok,
                                "heuristic", text});
    }

    // E||A||^beta < inf for beta > alpha.
    {
        const double beta = law.moment_beta().value_or(alpha + 1);
        const auto mom = law.norm_moment(beta, nrm);
        const bool finite = std::isfinite(mom.value) && beta > alpha;
        rep.verdicts.push_back({"E||A||^beta < inf for some beta > alpha", "stationary_tail", finite, "analytic",
                                "beta=" + num(beta) + ", E||A||^beta " + (mom.exact ? "= " : "<= ") + num(mom.value)});
    }

    // B^3 moment.
    {
        const auto& p = model.perturbation();
        if (!p || p->b3.abs_sup() == 0) {
            rep.verdicts.push_back({"E(B^3)^(alpha/delta0 + eps0) < inf", "stationary_tail", true, "analytic",
                                    "no perturbation term"});
        } else if (p->delta0 == 0) {
            const double s = p->b3.abs_sup();
            rep.verdicts.push_back({"E(B^3)^(alpha/delta0 + eps0) < inf", "stationary_tail", std::isfinite(s), "analytic",
                                    "delta0=0 needs bounded B^3; sup|B^3|=" + num(s)});
        } else {
            const double q = alpha / p->delta0 + 0.1;
            const double m = p->b3.abs_moment(q);
            rep.verdicts.push_back({"E(B^3)^(alpha/delta0 + eps0) < inf", "stationary_tail", std::isfinite(m), "analytic",
                                    "order " + num(q) + " moment " + num(m)});
        }
    }

    // P[Phi(0, B^1) != 0] > 0.
    {
        const Vector zero = Vector::Zero(d);
        std::size_t nonzero = 0;
        StepSample s;
        for (std::size_t i = 0; i < opt.samples; ++i) {
            model.draw(SeedTag{stream.child(2), i + 1}, s);
            if (norm(model.phi(zero, s.b1), nrm) > 0) ++nonzero;
        }
        rep.verdicts.push_back({"P[Phi(0,B^1) != 0] > 0", "stationary_tail", nonzero > 0, "sampled",
                                num(static_cast<double>(nonzero) / static_cast<double>(opt.samples)) +
                                    " of sampled inputs"});
    }

    // kappa(alpha) < 1.
    try {
        rep.kappa = contraction::kappa_auto(law, alpha, nrm, stream.child(3), opt.workers);
        rep.verdicts.push_back({"kappa(alpha) < 1", "tail_series", rep.kappa->kappa_hat < 1 - 1e-9,
                                rep.kappa->exact ? "analytic" : "sampled",
                                "kappa_hat=" + num(rep.kappa->kappa_hat) + (rep.kappa->exact ? " (enumerated)" : "")});
    } catch (const Error& e) {
        rep.verdicts.push_back({"kappa(alpha) < 1", "tail_series", false, "sampled", e.what()});
    }

    // Phi(x, 0) = x on the sampled orbit.
    try {
        auto m = measure::merge(measure::gamma1_particles(model, opt.samples, stream.child(4)));
        double worst = measure::orbit_identity_error(model, m);
        for (int k = 0; k < 6 && m.size() > 0; ++k) {
            m = measure::merge(measure::push_spherical(m, law, 2, stream.child(40 + k)));
            if (m.size() > opt.samples) m = measure::resample(m, opt.samples, stream.child(50 + k));
            worst = std::max(worst, measure::orbit_identity_error(model, m));
        }
        rep.verdicts.push_back({"Phi(x,0)=x on the orbit", "tail_series", worst <= 1e-12, "sampled",
                                "max relative violation " + num(worst)});
    } catch (const Error& e) {
        rep.verdicts.push_back({"Phi(x,0)=x on the orbit", "tail_series", false, "sampled", e.what()});
    }

    // Spanning condition.
    {
        const auto sr = measure::span_rank(model, opt.samples, stream.child(5));
        rep.span_rank = sr.rank;
        rep.verdicts.push_back({"Phi({0} x supp sigma_b) spans R^d", "stable_limit", sr.rank == d,
                                sr.exact ? "analytic" : "sampled",
                                "rank " + std::to_string(sr.rank) + " of " + std::to_string(d)});
    }

    // Lipschitz Phi.
    if (model.kind() != Kind::Custom) {
        rep.verdicts.push_back({"Phi Lipschitz", "stable_limit", true, "analytic",
                                "built-in map (sum or coordinatewise max) is 1-Lipschitz in (x, y)"});
    } else {
        Engine eng = stream.child(6).at(0);
        double worst = 0;
        for (std::size_t i = 0; i < opt.samples; ++i) {
            Vector x(d), y(d), dx(d), dy(d);
            for (int j = 0; j < d; ++j) {
                x(j) = eng.normal() * 10;
                y(j) = eng.normal() * 10;
                dx(j) = eng.normal() * 1e-3;
                dy(j) = eng.normal() * 1e-3;
            }
            const double num_ = norm(Vector(model.phi(x + dx, y + dy) - model.phi(x, y)), nrm);
            worst = std::max(worst, num_ / (norm(dx, nrm) + norm(dy, nrm)));
        }
        rep.verdicts.push_back({"Phi Lipschitz", "stable_limit", std::isfinite(worst) && worst < 1e6, "heuristic",
                                "largest sampled difference quotient " + num(worst)});
    }

    // |B^2| <= C.
    {
        const auto& p = model.perturbation();
        const double c = p ? p->bound(nrm) : 0.0;
        rep.verdicts.push_back({"|B^2| <= C a.e.", "stable_limit", std::isfinite(c), "analytic",
                                p ? "C=" + num(c) : std::string("no perturbation term")});
    }
    return rep;
}

nlohmann::json to_json(const HypothesisReport& r) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : r.verdicts)
        v.push_back({{"name", x.name}, {"group", x.group}, {"verdict", x.pass ? "PASS" : "FAIL"}, {"basis", x.basis},
                     {"detail", x.detail}});
    nlohmann::json geo = nlohmann::json::array();
    for (const auto& g : r.geometricity) geo.push_back(contraction::to_json(g));
    nlohmann::json j = {{"verdicts", v},
                        {"lyapunov", contraction::to_json(r.lyapunov)},
                        {"geometricity", geo},
                        {"span_rank", r.span_rank},
                        {"all_pass", r.all_pass()}};
    if (r.kappa) j["kappa"] = contraction::to_json(*r.kappa);
    return j;
}

std::string format_table(const HypothesisReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(44) << "hypothesis" << std::setw(8) << "verdict" << std::setw(11) << "basis"
       << "detail\n";
    for (const auto& v : r.verdicts)
        os << std::setw(44) << v.name << std::setw(8) << (v.pass ? "PASS" : "FAIL") << std::setw(11) << v.basis
           << v.detail << "\n";
    return os.str();
}

}  // namespace srl
