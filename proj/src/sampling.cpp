#include "srl/sampling.hpp"

#include "srl/contraction.hpp"
#include "srl/error.hpp"
#include "srl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace srl {

std::string to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

Eigen::VectorXd SampleEnsemble::norms(Norm n) const {
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = norm(points.row(i).transpose(), n);
    return out;
}

namespace {

void check_start(const RecursionModel& model, const Vector& x0) {
    if (x0.size() != model.dim()) throw ConfigError("start point has wrong dimension");
    if (!x0.allFinite()) throw ConfigError("start point is not finite");
}

}  // namespace

Trajectory forward_path(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream) {
    check_start(model, x0);
    Trajectory t;
    t.seed = stream;
    t.direction = Direction::Forward;
    t.states.reserve(n + 1);
    t.states.push_back(x0);
    StepSample s;
    Vector next(model.dim());
    for (std::size_t k = 1; k <= n; ++k) {
        model.draw(SeedTag{stream, k}, s);
        model.apply(s, t.states.back(), next);
        if (!next.allFinite()) throw OverflowError(k, stream.id());
        t.states.push_back(next);
    }
    return t;
}

Trajectory backward_path(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream) {
    check_start(model, x0);
    std::vector<StepSample> steps(n);
    for (std::size_t k = 1; k <= n; ++k) model.draw(SeedTag{stream, k}, steps[k - 1]);
    Trajectory t;
    t.seed = stream;
    t.direction = Direction::Backward;
    t.states.reserve(n + 1);
    t.states.push_back(x0);
    Vector x(model.dim()), next(model.dim());
    for (std::size_t k = 1; k <= n; ++k) {
        x = x0;
        for (std::size_t j = k; j >= 1; --j) {
            model.apply(steps[j - 1], x, next);
            if (!next.allFinite()) throw OverflowError(j, stream.id());
            std::swap(x, next);
        }
        t.states.push_back(x);
    }
    return t;
}

Vector forward_endpoint(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream) {
    Vector x = x0, next(model.dim());
    StepSample s;
    for (std::size_t k = 1; k <= n; ++k) {
        model.draw(SeedTag{stream, k}, s);
        model.apply(s, x, next);
        if (!next.allFinite()) throw OverflowError(k, stream.id());
        std::swap(x, next);
    }
    return x;
}

Vector backward_endpoint(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream) {
    thread_local std::vector<StepSample> steps;
    if (steps.size() < n) steps.resize(n);
    for (std::size_t k = 1; k <= n; ++k) model.draw(SeedTag{stream, k}, steps[k - 1]);
    Vector x = x0, next(model.dim());
    for (std::size_t j = n; j >= 1; --j) {
        model.apply(steps[j - 1], x, next);
        if (!next.allFinite()) throw OverflowError(j, stream.id());
        std::swap(x, next);
    }
    return x;
}

ChainLength choose_chain_length(const RecursionModel& model, double bias_budget, const Stream& stream,
                                unsigned workers) {
    if (!(bias_budget > 0)) throw ConfigError("bias budget must be positive");
    ChainLength out;
    out.eps = std::min(1.0, model.alpha() / 2.0);
    const auto fit = contraction::estimate_gamma_geometric(model, out.eps, 16, 1000, stream.child(0),
                                                           {1.0, workers});
    if (!fit.degenerate && !(fit.rho_hat < 1))
        throw HypothesisError("contractivity (rho_hat < 1)",
                              "geometricity fit at gamma=" + std::to_string(out.eps) +
                                  " gives rho_hat=" + std::to_string(fit.rho_hat));
    // Coupled chains from a small ball can merge early for max-type maps, so the fit
    // is combined with the pathwise bound |Phi(Ax,B) - Phi(Ay,B)| <= |A(x-y)|.
    out.C_hat = fit.degenerate ? 0.0 : fit.C_hat;
    out.rho_hat = fit.degenerate ? 0.0 : fit.rho_hat;
    if (model.kind() != Kind::Custom) {
        std::optional<contraction::KappaFit> k;
        try {
            k = contraction::kappa_auto(model.matrix_law(), out.eps, model.norm(), stream.child(2), workers);
        } catch (const NumericError&) {
            // Products vanish: the chain forgets its start after finitely many steps.
        }
        if (k) {
            if (!(k->kappa_hat < 1))
                throw HypothesisError("contractivity (kappa(eps) < 1)",
                                      "E||A_1...A_n||^eps decays at rate " + std::to_string(k->kappa_hat));
            out.C_hat = std::max(out.C_hat, k->level_constant);
            out.rho_hat = std::max(out.rho_hat, k->kappa_hat);
        }
    }
    if (out.rho_hat == 0) {
        out.n = 1;
        return out;
    }
    // E|Y_n - Y_{n+1}|^eps <= C rho^n E|X_1|^eps, summed over the remaining steps.
    StepSample s;
    const Vector zero = Vector::Zero(model.dim());
    double moment = 0;
    const int draws = 2000;
    for (int i = 0; i < draws; ++i) {
        model.draw(SeedTag{stream.child(1), static_cast<std::uint64_t>(i + 1)}, s);
        moment += std::pow(norm(model.apply(s, zero), model.norm()), out.eps);
    }
    out.start_moment = moment / draws;
    const double C = std::max(1.0, out.C_hat) * std::max(out.start_moment, 1e-300) / (1.0 - out.rho_hat);
    std::size_t n = 1;
    while (C * std::pow(out.rho_hat, static_cast<double>(n)) >= bias_budget) {
        ++n;
        if (n > 100000) throw HypothesisError("contractivity (rho_hat < 1)", "chain length for bias budget exceeds 1e5");
    }
    out.n = n;
    out.bound = C * std::pow(out.rho_hat, static_cast<double>(n));
    return out;
}

SampleEnsemble stationary_ensemble(const RecursionModel& model, std::size_t m, const Stream& stream,
                                   const EnsembleOptions& opt) {
    if (m == 0) throw ConfigError("stationary_ensemble: m must be at least 1");
    const int d = model.dim();
    const Vector x0 = opt.start ? *opt.start : Vector(Vector::Zero(d));
    check_start(model, x0);

    SampleEnsemble e;
    e.meta.model_hash = model.hash();
    e.meta.seed = stream.seed();
    e.meta.stream_id = stream.id();
    e.meta.direction = opt.direction;
    e.meta.start = x0;

    // Tuning draws come from a stream disjoint from the replica streams.
    const Stream tune = stream.child(~std::uint64_t{0});
    if (opt.n) {
        e.meta.n = *opt.n;
        if (opt.precheck) {
            const auto fit = contraction::estimate_gamma_geometric(model, std::min(1.0, model.alpha() / 2.0), 16,
                                                                   1000, tune.child(0), {1.0, opt.workers});
            if (!fit.degenerate && !(fit.rho_hat < 1))
                throw HypothesisError("contractivity (rho_hat < 1)",
                                      "rho_hat=" + std::to_string(fit.rho_hat));
        }
    } else {
        const auto cl = choose_chain_length(model, opt.bias_budget, tune, opt.workers);
        e.meta.n = cl.n;
        e.meta.n_source = "bias_budget";
        e.meta.bias_bound = cl.bound;
    }
    if (opt.direction == Direction::Forward) e.meta.burn_in = e.meta.n;

    e.points.resize(static_cast<Eigen::Index>(m), d);
    const std::size_t n = e.meta.n;
    parallel_for(m, opt.workers, [&](std::size_t r) {
        const Stream rs = stream.child(r);
        const Vector y =
            opt.direction == Direction::Backward ? backward_endpoint(model, x0, n, rs) : forward_endpoint(model, x0, n, rs);
        e.points.row(static_cast<Eigen::Index>(r)) = y.transpose();
    });
    return e;
}

PartialSumBatch partial_sums(const RecursionModel& model, const Vector& x0, std::size_t n, std::size_t m,
                             const Stream& stream, unsigned workers) {
    if (n == 0) throw ConfigError("partial_sums: n must be at least 1");
    if (m == 0) throw ConfigError("partial_sums: m must be at least 1");
    check_start(model, x0);
    const int d = model.dim();
    PartialSumBatch b;
    b.n = n;
    b.start = x0;
    b.sums.resize(static_cast<Eigen::Index>(m), d);
    parallel_for(m, workers, [&](std::size_t r) {
        const Stream rs = stream.child(r);
        Vector x = x0, next(d), sum = Vector::Zero(d);
        StepSample s;
        for (std::size_t k = 1; k <= n; ++k) {
            model.draw(SeedTag{rs, k}, s);
            model.apply(s, x, next);
            if (!next.allFinite()) throw OverflowError(k, r);
            std::swap(x, next);
            sum += x;
        }
        if (!sum.allFinite()) throw OverflowError(n, r);
        b.sums.row(static_cast<Eigen::Index>(r)) = sum.transpose();
    });
    return b;
}

nlohmann::json to_json(const EnsembleMeta& meta) {
    std::vector<double> start(meta.start.data(), meta.start.data() + meta.start.size());
    return {{"model_hash", meta.model_hash},
            {"n", meta.n},
            {"burn_in", meta.burn_in},
            {"seed", meta.seed},
            {"stream_id", meta.stream_id},
            {"direction", to_string(meta.direction)},
            {"start", start},
            {"n_source", meta.n_source},
            {"bias_bound", meta.bias_bound}};
}

void write_ensemble_csv(const SampleEnsemble& e, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "# model_hash=" << e.meta.model_hash << " n=" << e.meta.n << " burn_in=" << e.meta.burn_in
        << " seed=" << e.meta.seed << " direction=" << to_string(e.meta.direction) << "\n";
    for (int j = 0; j < e.dim(); ++j) out << (j ? "," : "") << "x" << j;
    out << "\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < e.points.rows(); ++i) {
        for (int j = 0; j < e.dim(); ++j) out << (j ? "," : "") << e.points(i, j);
        out << "\n";
    }
    if (!out) throw Error("write failed for " + path);
}

SampleEnsemble read_ensemble_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header = false;
    EnsembleMeta meta;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') {
            std::stringstream ss(line.substr(1));
            std::string kv;
            while (ss >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
                if (k == "model_hash") meta.model_hash = std::stoull(v);
                else if (k == "n") meta.n = std::stoull(v);
                else if (k == "burn_in") meta.burn_in = std::stoull(v);
                else if (k == "seed") meta.seed = std::stoull(v);
                else if (k == "direction") meta.direction = v == "forward" ? Direction::Forward : Direction::Backward;
            }
            continue;
        }
        if (line.empty()) continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size()) throw Error("ragged ensemble csv " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("empty ensemble csv " + path);
    SampleEnsemble e;
    e.meta = meta;
    e.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            e.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return e;
}

}  // namespace srl
