#pragma once

#include "srl/linalg.hpp"
#include "srl/sampling.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace srl::tail {

/// k / sum_{i<=k} log(X_(i) / X_(k+1)) over descending order statistics.
double hill_estimator(std::span<const double> norms, std::size_t k);

/// floor(m^0.6).
std::size_t default_hill_k(std::size_t m);

struct TailFit {
    double alpha_hat = 0;
    std::size_t k_used = 0;
    double alpha_std_error = 0;
    /// alpha used for the t^alpha scaling of the exceedance curve.
    double alpha_used = 0;
    double c_hat = 0;
    double c_std_error = 0;
    std::vector<double> t_grid;
    std::vector<double> per_t;
    std::vector<double> per_t_std_error;
    /// max/min of per_t over the grid.
    double flatness = 0;
    std::size_t m = 0;
};

struct TailOptions {
    std::optional<std::vector<double>> t_grid;
    std::optional<std::size_t> hill_k;
    std::size_t grid_points = 12;
    std::size_t min_exceedances = 50;
};

/// Default grid: geometric from the 99th percentile of |X| to the level with
/// `min_exceedances` points above it.
TailFit tail_constant(const SampleEnsemble& ensemble, double alpha, Norm norm, const TailOptions& opt = {});
TailFit tail_constant(std::span<const double> norms, double alpha, const TailOptions& opt = {});

struct SphericalEmpirical {
    /// One unit vector per row.
    Matrix points;
    Eigen::VectorXd weights;
    double threshold = 0;
    std::size_t count = 0;
};

/// Law of X/|X| given |X| > threshold; coincident directions are merged.
SphericalEmpirical spherical_empirical(const SampleEnsemble& ensemble, double threshold, Norm norm,
                                       std::size_t min_exceedances = 100);

struct NormalizationSeq {
    std::vector<std::size_t> n;
    std::vector<double> a;
    std::string method = "empirical_quantile";

    /// a_n for a grid value; throws if n is not on the grid.
    double at(std::size_t n) const;
};

/// a_n is the empirical (1 - 1/n)-quantile of |X|: round(m/n) points lie strictly above it.
NormalizationSeq compute_a_n(const SampleEnsemble& ensemble, const std::vector<std::size_t>& n_grid, Norm norm);
NormalizationSeq compute_a_n(std::span<const double> norms, const std::vector<std::size_t>& n_grid);

/// n * (fraction of |X| > a_n) for each grid entry.
std::vector<double> exceedance_ratios(std::span<const double> norms, const NormalizationSeq& seq);

nlohmann::json to_json(const TailFit& f);
nlohmann::json to_json(const NormalizationSeq& s);
void write_spherical_csv(const SphericalEmpirical& s, const std::string& path);

}  // namespace srl::tail
