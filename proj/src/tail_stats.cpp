#include "srl/tail_stats.hpp"

#include "srl/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>

namespace srl::tail {

namespace {

std::vector<double> sorted_desc(std::span<const double> xs) {
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

/// Count of entries strictly greater than t in a descending sequence.
std::size_t count_above(const std::vector<double>& desc, double t) {
    return static_cast<std::size_t>(std::lower_bound(desc.begin(), desc.end(), t, std::greater<>()) - desc.begin());
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double hill_sorted(const std::vector<double>& desc, std::size_t k) {
    if (k < 2 || k >= desc.size()) throw InsufficientData("hill_estimator: need 2 <= k < count");
    if (!(desc.back() > 0)) throw ConfigError("hill_estimator: norms must be positive");
    const double ref = std::log(desc[k]);
    double s = 0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(desc[i]) - ref;
    if (!(s > 0)) throw NumericError("hill_estimator: tied order statistics give a zero denominator");
    return static_cast<double>(k) / s;
}

}  // namespace

double hill_estimator(std::span<const double> norms, std::size_t k) { return hill_sorted(sorted_desc(norms), k); }

std::size_t default_hill_k(std::size_t m) {
    return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(m), 0.6)));
}

TailFit tail_constant(std::span<const double> norms, double alpha, const TailOptions& opt) {
    if (!(alpha > 0)) throw ConfigError("tail_constant: alpha must be positive");
    const auto desc = sorted_desc(norms);
    const std::size_t m = desc.size();
    TailFit fit;
    fit.m = m;
    fit.alpha_used = alpha;
    fit.k_used = opt.hill_k ? *opt.hill_k : default_hill_k(m);
    if (fit.k_used >= 2 && fit.k_used < m) {
        fit.alpha_hat = hill_sorted(desc, fit.k_used);
        fit.alpha_std_error = fit.alpha_hat / std::sqrt(static_cast<double>(fit.k_used));
    }

    if (opt.t_grid) {
        fit.t_grid = *opt.t_grid;
        if (fit.t_grid.empty()) throw ConfigError("tail_constant: empty t grid");
        for (double t : fit.t_grid)
            if (!(t > 0)) throw ConfigError("tail_constant: t grid must be positive");
    } else {
        const std::size_t lo_count = m / 100;
        if (opt.grid_points < 2 || lo_count <= opt.min_exceedances)
            throw InsufficientData("tail_constant: sample too small for the default grid (need m/100 > " +
                                   std::to_string(opt.min_exceedances) + ")");
        const double lo = desc[lo_count];
        const double hi = desc[opt.min_exceedances];
        if (!(hi > lo)) throw InsufficientData("tail_constant: degenerate upper tail");
        for (std::size_t i = 0; i < opt.grid_points; ++i)
            fit.t_grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (opt.grid_points - 1)));
    }

    double wsum = 0, acc = 0;
    double vmin = INFINITY, vmax = 0;
    for (double t : fit.t_grid) {
        const std::size_t above = count_above(desc, t);
        if (above < opt.min_exceedances)
            throw InsufficientData("tail_constant: only " + std::to_string(above) + " exceedances at t=" +
                                   std::to_string(t));
        const double p = static_cast<double>(above) / static_cast<double>(m);
        const double scale = std::pow(t, alpha);
        const double v = scale * p;
        const double se = scale * std::sqrt(p * (1 - p) / static_cast<double>(m));
        fit.per_t.push_back(v);
        fit.per_t_std_error.push_back(se);
        const double w = std::pow(t, -alpha);
        wsum += w;
        acc += w * v;
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    fit.c_hat = acc / wsum;
    // Inverse-variance combination if the grid values were independent; a lower bound.
    double inv = 0;
    for (double se : fit.per_t_std_error) inv += se > 0 ? 1.0 / (se * se) : 0.0;
    fit.c_std_error = inv > 0 ? 1.0 / std::sqrt(inv) : 0.0;
    // The smallest-t value is the least noisy; report its error when it is larger.
    const std::size_t i_min = static_cast<std::size_t>(
        std::min_element(fit.t_grid.begin(), fit.t_grid.end()) - fit.t_grid.begin());
    fit.c_std_error = std::max(fit.c_std_error, fit.per_t_std_error[i_min]);
    fit.flatness = vmax / vmin;
    return fit;
}

TailFit tail_constant(const SampleEnsemble& ensemble, double alpha, Norm norm, const TailOptions& opt) {
    const auto n = to_std(ensemble.norms(norm));
    return tail_constant(std::span<const double>(n), alpha, opt);
}

SphericalEmpirical spherical_empirical(const SampleEnsemble& ensemble, double threshold, Norm nrm,
                                       std::size_t min_exceedances) {
    const int d = ensemble.dim();
    std::vector<Vector> dirs;
    for (Eigen::Index i = 0; i < ensemble.points.rows(); ++i) {
        const Vector x = ensemble.points.row(i).transpose();
        const double r = norm(x, nrm);
        if (r > threshold) dirs.push_back(x / r);
    }
    if (dirs.size() < min_exceedances)
        throw InsufficientData("spherical_empirical: " + std::to_string(dirs.size()) +
                               " exceedances above threshold, need " + std::to_string(min_exceedances));
    std::sort(dirs.begin(), dirs.end(), [d](const Vector& a, const Vector& b) {
        for (int j = 0; j < d; ++j)
            if (a(j) != b(j)) return a(j) < b(j);
        return false;
    });
    std::vector<Vector> pts;
    std::vector<double> counts;
    for (const auto& u : dirs) {
        if (!pts.empty() && (pts.back() - u).cwiseAbs().maxCoeff() <= 1e-12) {
            counts.back() += 1;
        } else {
            pts.push_back(u);
            counts.push_back(1);
        }
    }
    SphericalEmpirical s;
    s.threshold = threshold;
    s.count = dirs.size();
    s.points.resize(static_cast<Eigen::Index>(pts.size()), d);
    s.weights.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        s.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
        s.weights(static_cast<Eigen::Index>(i)) = counts[i] / static_cast<double>(dirs.size());
    }
    return s;
}

double NormalizationSeq::at(std::size_t value) const {
    for (std::size_t i = 0; i < n.size(); ++i)
        if (n[i] == value) return a[i];
    throw ConfigError("a_n table has no entry for n=" + std::to_string(value));
}

NormalizationSeq compute_a_n(std::span<const double> norms, const std::vector<std::size_t>& n_grid) {
    std::vector<double> asc(norms.begin(), norms.end());
    std::sort(asc.begin(), asc.end());
    const std::size_t m = asc.size();
    NormalizationSeq seq;
    std::vector<std::size_t> grid = n_grid;
    std::sort(grid.begin(), grid.end());
    for (std::size_t n : grid) {
        if (n == 0) throw ConfigError("compute_a_n: n must be positive");
        if (n * 10 > m)
            throw InsufficientData("compute_a_n: n=" + std::to_string(n) + " exceeds ensemble size / 10 (m=" +
                                   std::to_string(m) + ")");
        const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(double(m) / double(n))));
        seq.n.push_back(n);
        seq.a.push_back(asc[m - k - 1]);
    }
    return seq;
}

NormalizationSeq compute_a_n(const SampleEnsemble& ensemble, const std::vector<std::size_t>& n_grid, Norm norm) {
    const auto n = to_std(ensemble.norms(norm));
    return compute_a_n(std::span<const double>(n), n_grid);
}

std::vector<double> exceedance_ratios(std::span<const double> norms, const NormalizationSeq& seq) {
    std::vector<double> out;
    for (std::size_t i = 0; i < seq.n.size(); ++i) {
        const auto above = std::count_if(norms.begin(), norms.end(), [&](double x) { return x > seq.a[i]; });
        out.push_back(static_cast<double>(seq.n[i]) * static_cast<double>(above) / static_cast<double>(norms.size()));
    }
    return out;
}

nlohmann::json to_json(const TailFit& f) {
    return {{"alpha_hat", f.alpha_hat},
            {"k_used", f.k_used},
            {"alpha_std_error", f.alpha_std_error},
            {"alpha_used", f.alpha_used},
            {"c_hat", f.c_hat},
            {"c_std_error", f.c_std_error},
            {"t_grid", f.t_grid},
            {"per_t", f.per_t},
            {"per_t_std_error", f.per_t_std_error},
            {"flatness", f.flatness},
            {"m", f.m}};
}

nlohmann::json to_json(const NormalizationSeq& s) {
    return {{"n", s.n}, {"a_n", s.a}, {"method", s.method}};
}

void write_spherical_csv(const SphericalEmpirical& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    const auto d = s.points.cols();
    for (Eigen::Index j = 0; j < d; ++j) out << "w" << j << ",";
    out << "weight\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) out << s.points(i, j) << ",";
        out << s.weights(i) << "\n";
    }
    if (!out) throw Error("write failed for " + path);
}

}  // namespace srl::tail
