#pragma once

#include "srl/contraction.hpp"
#include "srl/model.hpp"
#include "srl/rng.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace srl {

struct Verdict {
    std::string name;
    /// stationary_tail, tail_series or stable_limit.
    std::string group;
    bool pass = false;
    /// analytic, sampled or heuristic.
    std::string basis;
    std::string detail;
};

struct HypothesisOptions {
    /// Exponents for the geometricity fit; default {1.1, 1.5, 2} * alpha.
    std::optional<std::vector<double>> gammas;
    std::size_t pairs = 1000;
    std::size_t n_max = 16;
    std::size_t lyapunov_n = 1000;
    std::size_t lyapunov_replicas = 1000;
    std::size_t samples = 1000;
    unsigned workers = 1;
};

struct HypothesisReport {
    std::vector<Verdict> verdicts;
    contraction::LyapunovFit lyapunov;
    std::vector<contraction::GeometricityFit> geometricity;
    std::optional<contraction::KappaFit> kappa;
    int span_rank = 0;

    const Verdict* find(const std::string& name) const;
    bool all_pass() const;
};

/// Never throws on a failed hypothesis; failures become FAIL verdicts.
HypothesisReport verify_hypotheses(const RecursionModel& model, const Stream& stream, const HypothesisOptions& opt = {});

nlohmann::json to_json(const HypothesisReport& r);
std::string format_table(const HypothesisReport& r);

}  // namespace srl
