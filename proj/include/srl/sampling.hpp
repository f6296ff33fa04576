#pragma once

#include "srl/linalg.hpp"
#include "srl/model.hpp"
#include "srl/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace srl {

enum class Direction { Forward, Backward };

std::string to_string(Direction d);

struct Trajectory {
    std::vector<Vector> states;
    Stream seed;
    Direction direction = Direction::Forward;

    std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
};

struct EnsembleMeta {
    std::uint64_t model_hash = 0;
    std::size_t n = 0;
    std::size_t burn_in = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    Direction direction = Direction::Backward;
    Vector start;
    /// How n was chosen: "declared" or "bias_budget".
    std::string n_source = "declared";
    double bias_bound = 0;
};

struct SampleEnsemble {
    /// m x d, one point per row.
    Matrix points;
    EnsembleMeta meta;

    std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
    Eigen::VectorXd norms(Norm n) const;
};

struct PartialSumBatch {
    Matrix sums;
    std::size_t n = 0;
    Vector start;
};

/// Step k of a trajectory uses the draw at counter k of `stream`.
Trajectory forward_path(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream);

/// Y_k = Phi_1 o ... o Phi_k (x0) with the same draws as forward_path. O(n^2).
Trajectory backward_path(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream);

Vector forward_endpoint(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream);
Vector backward_endpoint(const RecursionModel& model, const Vector& x0, std::size_t n, const Stream& stream);

/// Chain length meeting the bias budget, from a geometricity fit of order eps.
struct ChainLength {
    std::size_t n = 0;
    double C_hat = 0;
    double rho_hat = 0;
    double eps = 0;
    double start_moment = 0;
    double bound = 0;
};

ChainLength choose_chain_length(const RecursionModel& model, double bias_budget, const Stream& stream,
                                unsigned workers = 1);

struct EnsembleOptions {
    std::optional<std::size_t> n;
    double bias_budget = 1e-3;
    std::optional<Vector> start;
    Direction direction = Direction::Backward;
    bool precheck = true;
    unsigned workers = 1;
};

/// Replica r is generated from stream.child(r).
SampleEnsemble stationary_ensemble(const RecursionModel& model, std::size_t m, const Stream& stream,
                                   const EnsembleOptions& opt = {});

PartialSumBatch partial_sums(const RecursionModel& model, const Vector& x0, std::size_t n, std::size_t m,
                             const Stream& stream, unsigned workers = 1);

nlohmann::json to_json(const EnsembleMeta& meta);
void write_ensemble_csv(const SampleEnsemble& e, const std::string& path);
SampleEnsemble read_ensemble_csv(const std::string& path);

}  // namespace srl
