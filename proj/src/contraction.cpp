#include "srl/contraction.hpp"

#include "srl/error.hpp"
#include "srl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srl::contraction {

namespace {

struct LineFit {
    double intercept = 0;
    double slope = 0;
    double r2 = 1;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

Vector point_in_ball(Engine& eng, int d, double radius, Norm n) {
    Vector g(d);
    double r = 0;
    do {
        for (int i = 0; i < d; ++i) g(i) = eng.normal();
        r = norm(g, n);
    } while (r == 0);
    return g * (radius * std::pow(eng.uniform(), 1.0 / d) / r);
}

/// log of mean(exp(v)) in a fixed order.
double log_mean_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    std::vector<double> e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e[i] = std::exp(v[i] - mx);
    return mx + std::log(pairwise_sum(std::span<const double>(e)) / static_cast<double>(v.size()));
}

void finish_kappa(KappaFit& k) {
    const std::size_t n = k.log_moments.size();
    k.per_n.resize(n);
    for (std::size_t m = 0; m < n; ++m) k.per_n[m] = std::exp(k.log_moments[m] / static_cast<double>(m + 1));
    k.plain = k.per_n.back();
    if (n >= 4) {
        std::vector<double> xs, ys;
        for (std::size_t m = n / 2; m <= n; ++m) {
            xs.push_back(static_cast<double>(m));
            ys.push_back(k.log_moments[m - 1]);
        }
        k.kappa_hat = std::exp(least_squares(xs, ys).slope);
    } else {
        k.kappa_hat = k.plain;
    }
    k.level_constant = 1.0;
    for (std::size_t m = 0; m < n; ++m)
        k.level_constant =
            std::max(k.level_constant, std::exp(k.log_moments[m] - static_cast<double>(m + 1) * std::log(k.kappa_hat)));
}

}  // namespace

GeometricityFit estimate_gamma_geometric(const RecursionModel& model, double gamma, std::size_t n_max,
                                         std::size_t pairs, const Stream& stream, const GeometricityOptions& opt) {
    if (!(gamma > 0)) throw ConfigError("estimate_gamma_geometric: gamma must be positive");
    if (n_max < 4) throw ConfigError("estimate_gamma_geometric: need n_max >= 4 distinct n values");
    if (pairs == 0) throw ConfigError("estimate_gamma_geometric: need at least one pair");
    const int d = model.dim();
    const Norm nrm = model.norm();
    std::vector<double> ratios(pairs * n_max);

    parallel_for(pairs, opt.workers, [&](std::size_t p) {
        const Stream rs = stream.child(p);
        Engine eng = rs.at(0);
        Vector x = point_in_ball(eng, d, opt.ball_radius, nrm);
        Vector y = point_in_ball(eng, d, opt.ball_radius, nrm);
        const double d0 = std::pow(norm(Vector(x - y), nrm), gamma);
        Vector xn(d), yn(d);
        StepSample s;
        for (std::size_t k = 1; k <= n_max; ++k) {
            model.draw(SeedTag{rs, k}, s);
            model.apply(s, x, xn);
            model.apply(s, y, yn);
            std::swap(x, xn);
            std::swap(y, yn);
            if (!x.allFinite() || !y.allFinite()) throw OverflowError(k, p);
            ratios[p * n_max + (k - 1)] = std::pow(norm(Vector(x - y), nrm), gamma) / d0;
        }
    });

    GeometricityFit fit;
    fit.gamma = gamma;
    fit.n_max = n_max;
    fit.pairs = pairs;
    std::vector<double> xs, col(pairs);
    for (std::size_t k = 0; k < n_max; ++k) {
        for (std::size_t p = 0; p < pairs; ++p) col[p] = ratios[p * n_max + k];
        const double mean = pairwise_mean(std::span<const double>(col));
        if (!std::isfinite(mean)) throw NumericError("estimate_gamma_geometric: non-finite moment");
        if (mean == 0) {
            fit.degenerate = true;
            break;
        }
        fit.log_means.push_back(std::log(mean));
        xs.push_back(static_cast<double>(k + 1));
    }
    if (fit.degenerate) {
        fit.rho_hat = 0;
        fit.C_hat = 0;
        fit.r2 = 0;
        return fit;
    }
    const LineFit lf = least_squares(xs, fit.log_means);
    fit.rho_hat = std::exp(lf.slope);
    fit.C_hat = std::exp(lf.intercept);
    fit.r2 = lf.r2;
    return fit;
}

LyapunovFit estimate_lyapunov(const MatrixLaw& law, std::size_t n, std::size_t replicas, const Stream& stream,
                              Norm nrm, unsigned workers) {
    if (n == 0 || replicas == 0) throw ConfigError("estimate_lyapunov: n and replicas must be positive");
    const int d = law.dim();
    std::vector<double> spec(replicas * static_cast<std::size_t>(d));
    std::vector<double> rate(replicas);

    parallel_for(replicas, workers, [&](std::size_t r) {
        const Stream rs = stream.child(r);
        Matrix frame = Matrix::Identity(d, d);
        Matrix prod = Matrix::Identity(d, d);
        Matrix a(d, d), tmp(d, d);
        Eigen::ArrayXd logs = Eigen::ArrayXd::Zero(d);
        double log_scale = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            Engine eng = rs.at(k);
            law.sample(eng, a);
            tmp.noalias() = a * frame;
            frame.swap(tmp);
            tmp.noalias() = a * prod;
            prod.swap(tmp);
            if (k % 32 == 0 || k == n) {
                Eigen::HouseholderQR<Matrix> qr(frame);
                const Matrix& packed = qr.matrixQR();
                for (int i = 0; i < d; ++i) {
                    const double rii = std::abs(packed(i, i));
                    if (rii == 0 || !std::isfinite(rii)) throw NumericError("estimate_lyapunov: singular product");
                    logs(i) += std::log(rii);
                }
                frame = qr.householderQ();
                const double s = operator_norm(prod, nrm);
                if (s == 0 || !std::isfinite(s)) throw NumericError("estimate_lyapunov: singular product");
                log_scale += std::log(s);
                prod /= s;
            }
        }
        for (int i = 0; i < d; ++i) spec[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = logs(i) / n;
        rate[r] = log_scale / static_cast<double>(n);
    });

    auto mean_se = [](const std::vector<double>& v) {
        const double m = pairwise_mean(std::span<const double>(v));
        std::vector<double> sq(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
        const double var = v.size() > 1 ? pairwise_sum(std::span<const double>(sq)) / (v.size() - 1) : 0.0;
        const double floor = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(m));
        return std::pair{m, std::max(std::sqrt(var / v.size()), floor)};
    };

    LyapunovFit fit;
    fit.n = n;
    fit.replicas = replicas;
    fit.spectrum.resize(d);
    std::vector<double> col(replicas);
    for (int i = 0; i < d; ++i) {
        for (std::size_t r = 0; r < replicas; ++r) col[r] = spec[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
        const auto [m, se] = mean_se(col);
        fit.spectrum(i) = m;
        if (i == 0) {
            fit.lambda_hat = m;
            fit.std_error = se;
        }
    }
    const auto [nm, nse] = mean_se(rate);
    fit.norm_rate = nm;
    fit.norm_rate_std_error = nse;
    return fit;
}

KappaFit estimate_kappa(const MatrixLaw& law, double alpha, std::size_t n, std::size_t replicas, const Stream& stream,
                        Norm nrm, unsigned workers) {
    if (!(alpha > 0)) throw ConfigError("estimate_kappa: alpha must be positive");
    if (n == 0 || replicas == 0) throw ConfigError("estimate_kappa: n and replicas must be positive");
    const int d = law.dim();
    std::vector<double> logn(replicas * n);

    parallel_for(replicas, workers, [&](std::size_t r) {
        const Stream rs = stream.child(r);
        Matrix prod = Matrix::Identity(d, d), a(d, d), tmp(d, d);
        double log_scale = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            Engine eng = rs.at(k);
            law.sample(eng, a);
            tmp.noalias() = a * prod;
            prod.swap(tmp);
            const double s = operator_norm(prod, nrm);
            logn[r * n + (k - 1)] = s == 0 ? -std::numeric_limits<double>::infinity() : alpha * (log_scale + std::log(s));
            if (k % 32 == 0 && s > 0) {
                log_scale += std::log(s);
                prod /= s;
            }
        }
    });

    KappaFit k;
    k.alpha = alpha;
    k.log_moments.resize(n);
    std::vector<double> col(replicas);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t r = 0; r < replicas; ++r) col[r] = logn[r * n + m];
        k.log_moments[m] = log_mean_exp(col);
    }
    if (!std::isfinite(k.log_moments.back())) throw NumericError("estimate_kappa: all products vanished");
    // Concentration diagnostic on the final moment.
    std::sort(col.begin(), col.end(), std::greater<>());
    const std::size_t top = std::max<std::size_t>(1, (replicas + 999) / 1000);
    const double total = log_mean_exp(col) + std::log(static_cast<double>(replicas));
    std::vector<double> head(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(top));
    const double part = log_mean_exp(head) + std::log(static_cast<double>(top));
    k.top_share = replicas > top ? std::exp(part - total) : 1.0;
    k.heavy_tail_warning = replicas > top && k.top_share > 0.5;
    finish_kappa(k);
    return k;
}

std::optional<KappaFit> exact_kappa(const MatrixLaw& law, double alpha, std::size_t n, Norm nrm,
                                    std::size_t max_branches) {
    if (!(alpha > 0)) throw ConfigError("exact_kappa: alpha must be positive");
    const auto atoms = law.atoms();
    if (!atoms || n == 0) return std::nullopt;
    const int d = law.dim();
    // Distribution of A_m ... A_1 as a list of distinct products; coincident
    // products are merged so commuting laws stay polynomial in m.
    std::vector<std::pair<Matrix, double>> states{{Matrix::Identity(d, d), 1.0}};
    std::vector<double> log_moments;
    auto less = [d](const Matrix& a, const Matrix& b) {
        for (int i = 0; i < d * d; ++i)
            if (a.data()[i] != b.data()[i]) return a.data()[i] < b.data()[i];
        return false;
    };
    for (std::size_t m = 1; m <= n; ++m) {
        if (states.size() * atoms->size() > max_branches) break;
        std::vector<std::pair<Matrix, double>> next;
        next.reserve(states.size() * atoms->size());
        for (const auto& [prod, w] : states)
            for (const auto& a : *atoms)
                if (a.probability > 0) next.emplace_back(a.m * prod, w * a.probability);
        std::sort(next.begin(), next.end(), [&](const auto& x, const auto& y) { return less(x.first, y.first); });
        states.clear();
        for (auto& e : next) {
            if (!states.empty()) {
                const double scale = std::max(1e-300, states.back().first.cwiseAbs().maxCoeff());
                if ((states.back().first - e.first).cwiseAbs().maxCoeff() <= 1e-13 * scale) {
                    states.back().second += e.second;
                    continue;
                }
            }
            states.push_back(std::move(e));
        }
        std::vector<double> terms(states.size());
        for (std::size_t i = 0; i < states.size(); ++i)
            terms[i] = states[i].second * std::pow(operator_norm(states[i].first, nrm), alpha);
        log_moments.push_back(std::log(pairwise_sum(std::span<const double>(terms))));
    }
    KappaFit k;
    k.alpha = alpha;
    k.exact = true;
    k.log_moments = std::move(log_moments);
    if (k.log_moments.empty() || !std::isfinite(k.log_moments.back()))
        throw NumericError("exact_kappa: all products vanished");
    finish_kappa(k);
    return k;
}

KappaFit kappa_auto(const MatrixLaw& law, double alpha, Norm norm, const Stream& stream, unsigned workers) {
    if (auto e = exact_kappa(law, alpha, 200, norm); e && e->log_moments.size() >= 16) return *e;
    return estimate_kappa(law, alpha, 24, 10000, stream, norm, workers);
}

nlohmann::json to_json(const GeometricityFit& f) {
    return {{"gamma", f.gamma},     {"C_hat", f.C_hat}, {"rho_hat", f.rho_hat},     {"r2", f.r2},
            {"n_min", f.n_min},     {"n_max", f.n_max}, {"pairs", f.pairs},         {"log_means", f.log_means},
            {"degenerate", f.degenerate}};
}

nlohmann::json to_json(const LyapunovFit& f) {
    std::vector<double> s(f.spectrum.data(), f.spectrum.data() + f.spectrum.size());
    return {{"lambda_hat", f.lambda_hat}, {"std_error", f.std_error},     {"spectrum", s},
            {"norm_rate", f.norm_rate},   {"norm_rate_std_error", f.norm_rate_std_error},
            {"n", f.n},                   {"replicas", f.replicas}};
}

nlohmann::json to_json(const KappaFit& f) {
    return {{"alpha", f.alpha},
            {"kappa_hat", f.kappa_hat},
            {"plain", f.plain},
            {"per_n", f.per_n},
            {"level_constant", f.level_constant},
            {"exact", f.exact},
            {"top_share", f.top_share},
            {"heavy_tail_warning", f.heavy_tail_warning}};
}

}  // namespace srl::contraction
