#pragma once

#include "srl/laws.hpp"
#include "srl/model.hpp"
#include "srl/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <vector>

namespace srl::contraction {

/// Fit of E|X_n^x - X_n^y|^gamma / |x - y|^gamma ~ C rho^n.
struct GeometricityFit {
    double gamma = 0;
    double C_hat = 0;
    double rho_hat = 0;
    double r2 = 0;
    std::size_t n_min = 1;
    std::size_t n_max = 0;
    std::size_t pairs = 0;
    /// log of the normalized mean for n = 1..n_max.
    std::vector<double> log_means;
    /// All coupled differences vanished; rho_hat is reported as 0.
    bool degenerate = false;
};

struct GeometricityOptions {
    double ball_radius = 1.0;
    unsigned workers = 1;
};

/// Runs coupled chains (shared draws) from random pairs in a ball and regresses
/// the log-mean of the gamma-moment of their distance on n. Heuristic by nature.
GeometricityFit estimate_gamma_geometric(const RecursionModel& model, double gamma, std::size_t n_max,
                                         std::size_t pairs, const Stream& stream,
                                         const GeometricityOptions& opt = {});

struct LyapunovFit {
    /// Top exponent from the growth of the leading column of the re-orthonormalized frame.
    double lambda_hat = 0;
    double std_error = 0;
    /// Full spectrum estimate (diagonal of the accumulated R factors), lambda_hat first.
    Vector spectrum;
    /// Mean of (1/n) log ||A_1...A_n|| in the model norm (biased upward at finite n).
    double norm_rate = 0;
    double norm_rate_std_error = 0;
    std::size_t n = 0;
    std::size_t replicas = 0;
};

/// Products are re-orthonormalized (QR) every 32 steps to stay in floating range.
LyapunovFit estimate_lyapunov(const MatrixLaw& law, std::size_t n, std::size_t replicas, const Stream& stream,
                              Norm norm = Norm::Euclidean, unsigned workers = 1);

struct KappaFit {
    double alpha = 0;
    /// exp(slope) of log E||A_1...A_m||^alpha over m in [n/2, n].
    double kappa_hat = 0;
    /// (E||A_1...A_n||^alpha)^(1/n).
    double plain = 0;
    /// (E||A_1...A_m||^alpha)^(1/m) for m = 1..n.
    std::vector<double> per_n;
    /// log E||A_1...A_m||^alpha for m = 1..n.
    std::vector<double> log_moments;
    /// max_m E||A_1...A_m||^alpha / kappa_hat^m over the curve (>= 1).
    double level_constant = 1;
    bool exact = false;
    /// Share of the final moment carried by the top 0.1% of replicas.
    double top_share = 0;
    bool heavy_tail_warning = false;
};

KappaFit estimate_kappa(const MatrixLaw& law, double alpha, std::size_t n, std::size_t replicas,
                        const Stream& stream, Norm norm = Norm::Euclidean, unsigned workers = 1);

/// Exact expectation over all products of a finite-support law, tracking the distinct
/// products level by level. Stops early once a level would exceed `max_branches`
/// products; nullopt when the law has no finite support.
std::optional<KappaFit> exact_kappa(const MatrixLaw& law, double alpha, std::size_t n, Norm norm = Norm::Euclidean,
                                    std::size_t max_branches = 1000000);

/// Exact (depth up to 200) when at least 16 levels are enumerable, otherwise Monte
/// Carlo with n = 24 and 10^4 replicas.
KappaFit kappa_auto(const MatrixLaw& law, double alpha, Norm norm, const Stream& stream, unsigned workers = 1);

nlohmann::json to_json(const GeometricityFit& f);
nlohmann::json to_json(const LyapunovFit& f);
nlohmann::json to_json(const KappaFit& f);

}  // namespace srl::contraction
