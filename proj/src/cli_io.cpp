#include "srl/cli_io.hpp"

#include "srl/contraction.hpp"
#include "srl/error.hpp"
#include "srl/hypotheses.hpp"
#include "srl/json_util.hpp"
#include "srl/parallel.hpp"
#include "srl/sampling.hpp"
#include "srl/stable_limit.hpp"
#include "srl/tail_measure.hpp"
#include "srl/tail_stats.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace srl::io {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& actions() {
    static const std::vector<std::string> a{"simulate",     "tail-fit",    "tail-series",
                                            "stable-limit", "contraction", "verify-hypotheses"};
    return a;
}

namespace {

enum class PType { Int, Number, String, Bool, Numbers, Ints, Vectors, Strings };

struct ParamSpec {
    const char* name;
    PType type;
    json fallback;  // null: optional without default
};

const std::vector<ParamSpec>& param_specs(const std::string& action) {
    static const std::vector<ParamSpec> simulate{{"m", PType::Int, 10000},
                                                 {"chain_n", PType::Int, nullptr},
                                                 {"bias_budget", PType::Number, 1e-3},
                                                 {"direction", PType::String, "backward"},
                                                 {"start", PType::Numbers, nullptr},
                                                 {"precheck", PType::Bool, true}};
    static const std::vector<ParamSpec> tail_fit{{"m", PType::Int, 100000},
                                                 {"chain_n", PType::Int, nullptr},
                                                 {"bias_budget", PType::Number, 1e-3},
                                                 {"alpha", PType::Number, nullptr},
                                                 {"hill_k", PType::Int, nullptr},
                                                 {"t_grid", PType::Numbers, nullptr},
                                                 {"spherical_threshold", PType::Number, nullptr},
                                                 {"a_n_grid", PType::Ints, nullptr}};
    static const std::vector<ParamSpec> tail_series{{"k_max", PType::Int, nullptr},
                                                    {"tol", PType::Number, 1e-10},
                                                    {"gamma1_mc", PType::Int, 10000},
                                                    {"push_mc", PType::Int, 4},
                                                    {"budget", PType::Int, 100000},
                                                    {"functionals", PType::Strings, json::array({"ball(1)"})}};
    static const std::vector<ParamSpec> stable{{"m", PType::Int, 1000000},
                                               {"n", PType::Int, 10000},
                                               {"trials", PType::Int, 10000},
                                               {"chain_n", PType::Int, nullptr},
                                               {"mean", PType::Numbers, nullptr},
                                               {"bias_budget", PType::Number, 1e-3},
                                               {"t_grid", PType::Numbers, json::array({0.25, 0.5, 1.0, 2.0})},
                                               {"v_grid", PType::Vectors, nullptr},
                                               {"w_mc", PType::Int, 1000},
                                               {"tol", PType::Number, 1e-10},
                                               {"gamma1_mc", PType::Int, 10000},
                                               {"push_mc", PType::Int, 4},
                                               {"budget", PType::Int, 100000},
                                               {"nondegeneracy_mc", PType::Int, 2000}};
    static const std::vector<ParamSpec> contraction{{"gammas", PType::Numbers, nullptr},
                                                    {"n_max", PType::Int, 16},
                                                    {"pairs", PType::Int, 1000},
                                                    {"lyapunov_n", PType::Int, 1000},
                                                    {"lyapunov_replicas", PType::Int, 10000},
                                                    {"kappa_alpha", PType::Number, nullptr},
                                                    {"kappa_n", PType::Int, 24},
                                                    {"kappa_replicas", PType::Int, 10000}};
    static const std::vector<ParamSpec> hyp{{"gammas", PType::Numbers, nullptr},   {"pairs", PType::Int, 1000},
                                            {"n_max", PType::Int, 16},             {"lyapunov_n", PType::Int, 1000},
                                            {"lyapunov_replicas", PType::Int, 1000}, {"samples", PType::Int, 1000}};
    if (action == "simulate") return simulate;
    if (action == "tail-fit") return tail_fit;
    if (action == "tail-series") return tail_series;
    if (action == "stable-limit") return stable;
    if (action == "contraction") return contraction;
    if (action == "verify-hypotheses") return hyp;
    throw ConfigError("unknown action '" + action + "'");
}

bool type_ok(const json& v, PType t) {
    auto all = [&](auto pred) {
        if (!v.is_array()) return false;
        for (const auto& x : v)
            if (!pred(x)) return false;
        return true;
    };
    switch (t) {
        case PType::Int: return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
        case PType::Number: return v.is_number();
        case PType::String: return v.is_string();
        case PType::Bool: return v.is_boolean();
        case PType::Numbers: return all([](const json& x) { return x.is_number(); });
        case PType::Ints:
            return all([](const json& x) {
                return x.is_number_unsigned() || (x.is_number_integer() && x.get<long long>() >= 0);
            });
        case PType::Strings: return all([](const json& x) { return x.is_string(); });
        case PType::Vectors:
            return all([](const json& x) {
                if (!x.is_array()) return false;
                for (const auto& y : x)
                    if (!y.is_number()) return false;
                return true;
            });
    }
    return false;
}

json fill_params(const std::string& action, const json& given) {
    if (!given.is_object()) throw ConfigError("params: expected an object");
    const auto& specs = param_specs(action);
    for (const auto& [key, value] : given.items()) {
        bool known = false;
        for (const auto& s : specs) known = known || key == s.name;
        if (!known) throw ConfigError("params: unknown key '" + key + "' for action " + action);
    }
    json out = json::object();
    for (const auto& s : specs) {
        if (given.contains(s.name) && !given.at(s.name).is_null()) {
            if (!type_ok(given.at(s.name), s.type)) throw ConfigError(std::string("params.") + s.name + ": wrong type");
            out[s.name] = given.at(s.name);
        } else {
            out[s.name] = s.fallback;
        }
    }
    return out;
}

template <typename T>
std::optional<T> opt(const json& p, const char* key) {
    if (!p.contains(key) || p.at(key).is_null()) return std::nullopt;
    return p.at(key).get<T>();
}

std::size_t count(const json& p, const char* key, std::size_t min = 1) {
    const auto v = p.at(key).get<std::size_t>();
    if (v < min) throw ConfigError(std::string("params.") + key + " must be at least " + std::to_string(min));
    return v;
}

std::vector<double> numbers(const json& p, const char* key) { return p.at(key).get<std::vector<double>>(); }

class Timer {
public:
    explicit Timer(RunManifest& m) : m_(m), t0_(std::chrono::steady_clock::now()) {}
    void lap(const std::string& name) {
        const auto t = std::chrono::steady_clock::now();
        m_.stages.push_back({name, std::chrono::duration<double>(t - t0_).count()});
        t0_ = t;
    }

private:
    RunManifest& m_;
    std::chrono::steady_clock::time_point t0_;
};

std::string out_path(const ExperimentConfig& cfg, RunManifest& man, const std::string& file) {
    man.outputs.push_back(file);
    return (fs::path(cfg.out_dir) / file).string();
}

SampleEnsemble make_ensemble(const ExperimentConfig& cfg, std::size_t m) {
    const auto& p = cfg.params;
    EnsembleOptions eo;
    eo.n = opt<std::size_t>(p, "chain_n");
    eo.bias_budget = p.at("bias_budget").get<double>();
    eo.workers = cfg.workers;
    if (p.contains("direction")) {
        const auto d = p.at("direction").get<std::string>();
        if (d == "forward") eo.direction = Direction::Forward;
        else if (d != "backward") throw ConfigError("params.direction must be forward or backward");
    }
    if (p.contains("start") && !p.at("start").is_null()) eo.start = json_util::to_vector(p.at("start"), "params.start");
    if (p.contains("precheck")) eo.precheck = p.at("precheck").get<bool>();
    return stationary_ensemble(cfg.model, m, Stream(cfg.seed).child(1), eo);
}

measure::SeriesOptions series_options(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    measure::SeriesOptions so;
    so.k_max = opt<std::size_t>(p, "k_max");
    so.tol = p.at("tol").get<double>();
    so.gamma1_mc = count(p, "gamma1_mc");
    so.push_mc = count(p, "push_mc");
    so.budget = count(p, "budget");
    so.workers = cfg.workers;
    return so;
}

void run_simulate(const ExperimentConfig& cfg, RunManifest& man, Timer& timer) {
    const auto e = make_ensemble(cfg, count(cfg.params, "m"));
    timer.lap("ensemble");
    write_ensemble_csv(e, out_path(cfg, man, "ensemble.csv"));
    json side = {{"meta", to_json(e.meta)}, {"config_hash", hex(man.config_hash)}, {"m", e.size()}, {"dim", e.dim()}};
    write_atomic(out_path(cfg, man, "ensemble.json"), side.dump(2) + "\n");
    timer.lap("write");
    man.results = {{"m", e.size()}, {"n", e.meta.n}, {"n_source", e.meta.n_source}, {"bias_bound", e.meta.bias_bound}};
}

void run_tail_fit(const ExperimentConfig& cfg, RunManifest& man, Timer& timer) {
    const auto& p = cfg.params;
    const Norm nrm = cfg.model.norm();
    const auto e = make_ensemble(cfg, count(p, "m"));
    timer.lap("ensemble");
    const double alpha = opt<double>(p, "alpha").value_or(cfg.model.alpha());
    tail::TailOptions to;
    to.hill_k = opt<std::size_t>(p, "hill_k");
    if (!p.at("t_grid").is_null()) to.t_grid = numbers(p, "t_grid");
    const auto fit = tail::tail_constant(e, alpha, nrm, to);
    const auto norms_v = e.norms(nrm);
    std::vector<double> norms(norms_v.data(), norms_v.data() + norms_v.size());
    std::vector<std::size_t> grid;
    if (!p.at("a_n_grid").is_null()) {
        grid = p.at("a_n_grid").get<std::vector<std::size_t>>();
    } else {
        for (std::size_t n = 10; n * 10 <= e.size(); n *= 10) grid.push_back(n);
    }
    json an = nullptr;
    if (!grid.empty()) {
        const auto seq = tail::compute_a_n(std::span<const double>(norms), grid);
        an = tail::to_json(seq);
        an["exceedance_ratios"] = tail::exceedance_ratios(std::span<const double>(norms), seq);
    }
    double threshold;
    if (auto th = opt<double>(p, "spherical_threshold")) {
        threshold = *th;
    } else {
        std::vector<double> s = norms;
        const std::size_t k = s.size() / 100;
        std::nth_element(s.begin(), s.end() - static_cast<std::ptrdiff_t>(k) - 1, s.end());
        threshold = *(s.end() - static_cast<std::ptrdiff_t>(k) - 1);
    }
    const auto sph = tail::spherical_empirical(e, threshold, nrm);
    timer.lap("estimate");
    json out = {{"tail", tail::to_json(fit)}, {"a_n", an}, {"spherical_threshold", threshold},
                {"spherical_count", sph.count}, {"ensemble", to_json(e.meta)}, {"config_hash", hex(man.config_hash)}};
    write_atomic(out_path(cfg, man, "tailfit.json"), out.dump(2) + "\n");
    tail::write_spherical_csv(sph, out_path(cfg, man, "spherical.csv"));
    timer.lap("write");
    man.results = {{"alpha_hat", fit.alpha_hat}, {"c_hat", fit.c_hat}, {"c_std_error", fit.c_std_error},
                   {"flatness", fit.flatness}};
}

void run_tail_series(const ExperimentConfig& cfg, RunManifest& man, Timer& timer) {
    const auto res = measure::sum_series(cfg.model, Stream(cfg.seed).child(2), series_options(cfg));
    timer.lap("series");
    json fns = json::object();
    for (const auto& text : cfg.params.at("functionals").get<std::vector<std::string>>()) {
        const auto f = measure::parse_functional(text, cfg.model.dim());
        fns[measure::to_string(f)] = measure::tail_functional(res.lambda1, f);
    }
    measure::write_particles_csv(res.lambda1, out_path(cfg, man, "lambda1.csv"));
    timer.lap("write");
    man.results = {{"total_mass", res.lambda1.total_mass()},
                   {"particles", res.lambda1.size()},
                   {"truncation", measure::to_json(res.truncation)},
                   {"provenance", measure::to_json(res.lambda1.provenance)},
                   {"kappa", contraction::to_json(res.kappa)},
                   {"term_masses_head", std::vector<double>(res.term_masses.begin(),
                                                            res.term_masses.begin() +
                                                                static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                                                    10, res.term_masses.size())))},
                   {"functionals", fns}};
}

void run_stable_limit(const ExperimentConfig& cfg, RunManifest& man, Timer& timer) {
    const auto& p = cfg.params;
    const auto& model = cfg.model;
    const Norm nrm = model.norm();
    const int d = model.dim();
    const double alpha = model.alpha();
    stable::regime_of(alpha);
    const std::size_t n = count(p, "n");
    const auto e = make_ensemble(cfg, count(p, "m"));
    timer.lap("ensemble");
    const auto series = measure::sum_series(model, Stream(cfg.seed).child(2), series_options(cfg));
    timer.lap("series");
    std::optional<Vector> mean;
    if (alpha > 1) {
        if (!p.at("mean").is_null()) {
            mean = json_util::to_vector(p.at("mean"), "params.mean");
            if (mean->size() != d) throw ConfigError("params.mean: wrong dimension");
        } else {
            mean = Vector(e.points.colwise().mean().transpose());
        }
    }
    stable::SpecOptions so;
    so.w_mc = count(p, "w_mc");
    so.workers = cfg.workers;
    auto spec = stable::make_spec(model, series.lambda1, Stream(cfg.seed).child(3), so, mean);
    spec.a_n = tail::compute_a_n(e, {n}, nrm);
    auto cen = stable::centering(alpha, e, spec.a_n.a[0], n, nrm);
    if (alpha > 1 && !p.at("mean").is_null()) {
        cen.d = static_cast<double>(n) / spec.a_n.a[0] * *mean;
        cen.std_error.setZero();
        cen.warning = false;
    }
    spec.d_n = {cen.d};
    timer.lap("spec");

    std::vector<Vector> vs;
    if (!p.at("v_grid").is_null()) {
        for (const auto& v : p.at("v_grid")) {
            Vector x = json_util::to_vector(v, "params.v_grid");
            if (x.size() != d) throw ConfigError("params.v_grid: wrong dimension");
            const double r = x.norm();
            if (r == 0) throw ConfigError("params.v_grid: zero direction");
            vs.push_back(x / r);
        }
    } else {
        for (int i = 0; i < d; ++i) {
            vs.push_back(Vector::Unit(d, i));
            vs.push_back(-Vector::Unit(d, i));
        }
    }
    std::vector<stable::GridPoint> grid;
    for (double t : numbers(p, "t_grid"))
        for (const auto& v : vs) grid.push_back({t, v});
    const auto cf = stable::empirical_cf(model, spec, n, count(p, "trials"), grid, Stream(cfg.seed).child(4), cfg.workers);
    timer.lap("empirical_cf");
    stable::write_cfgrid_csv(cf, out_path(cfg, man, "cfgrid.csv"));
    measure::write_particles_csv(series.lambda1, out_path(cfg, man, "lambda1.csv"));

    json nd = nullptr;
    if (model.affine_type()) {
        const auto g1 = measure::merge(measure::gamma1_particles(model, count(p, "gamma1_mc"), Stream(cfg.seed).child(5)));
        nd = stable::to_json(stable::nondegeneracy(model, g1, spec.c, vs, count(p, "nondegeneracy_mc"),
                                                   Stream(cfg.seed).child(6), &spec, spec.sampler.n_terms));
    } else {
        nd = {{"status", "unsupported"}, {"detail", "Phi(x,0) is not affine; nondegeneracy is unverified"}};
    }
    timer.lap("nondegeneracy");
    man.results = {{"regime", stable::to_string(spec.regime)},
                   {"c", spec.c},
                   {"m_sigma", json_util::from_vector(spec.m_sigma)},
                   {"a_n", spec.a_n.a[0]},
                   {"d_n", json_util::from_vector(cen.d)},
                   {"centering_warning", cen.warning ? json(cen.note) : json(nullptr)},
                   {"w_terms", spec.sampler.n_terms},
                   {"w_tail_bound", spec.sampler.tail_bound},
                   {"max_abs_diff", cf.max_abs_diff()},
                   {"nondegeneracy", nd}};
}

void run_contraction(const ExperimentConfig& cfg, RunManifest& man, Timer& timer) {
    const auto& p = cfg.params;
    const auto& model = cfg.model;
    const double alpha = model.alpha();
    const Stream root = Stream(cfg.seed).child(5);
    std::vector<double> gammas;
    if (!p.at("gammas").is_null()) gammas = numbers(p, "gammas");
    else gammas = {0.5 * alpha, alpha, 2 * alpha};
    json geo = json::array();
    for (std::size_t i = 0; i < gammas.size(); ++i)
        geo.push_back(contraction::to_json(contraction::estimate_gamma_geometric(
            model, gammas[i], count(p, "n_max", 4), count(p, "pairs"), root.child(i), {1.0, cfg.workers})));
    timer.lap("geometricity");
    const auto ly = contraction::estimate_lyapunov(model.matrix_law(), count(p, "lyapunov_n"),
                                                   count(p, "lyapunov_replicas"), root.child(100), model.norm(),
                                                   cfg.workers);
    timer.lap("lyapunov");
    const double ka = opt<double>(p, "kappa_alpha").value_or(alpha);
    const auto kmc = contraction::estimate_kappa(model.matrix_law(), ka, count(p, "kappa_n"), count(p, "kappa_replicas"),
                                                 root.child(101), model.norm(), cfg.workers);
    const auto kex = contraction::exact_kappa(model.matrix_law(), ka, 200, model.norm());
    timer.lap("kappa");
    man.results = {{"geometricity", geo},
                   {"lyapunov", contraction::to_json(ly)},
                   {"kappa", contraction::to_json(kmc)},
                   {"kappa_exact", kex ? contraction::to_json(*kex) : json(nullptr)}};
    (void)man;
}

void run_verify(const ExperimentConfig& cfg, RunManifest& man, Timer& timer) {
    const auto& p = cfg.params;
    HypothesisOptions ho;
    if (!p.at("gammas").is_null()) ho.gammas = numbers(p, "gammas");
    ho.pairs = count(p, "pairs");
    ho.n_max = count(p, "n_max", 4);
    ho.lyapunov_n = count(p, "lyapunov_n");
    ho.lyapunov_replicas = count(p, "lyapunov_replicas");
    ho.samples = count(p, "samples");
    ho.workers = cfg.workers;
    const auto rep = verify_hypotheses(cfg.model, Stream(cfg.seed).child(6), ho);
    timer.lap("verify");
    std::cout << format_table(rep);
    man.results = to_json(rep);
}

}  // namespace

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(const json& doc, const std::string& action, std::optional<std::uint64_t> seed,
                              unsigned workers, const std::string& out_dir) {
    json_util::check_keys(doc, {"model", "params", "seed", "action"}, "config");
    bool known = false;
    for (const auto& a : actions()) known = known || a == action;
    if (!known) throw ConfigError("unknown action '" + action + "'");
    if (doc.contains("action") && doc.at("action") != action)
        throw ConfigError("config action '" + doc.at("action").dump() + "' does not match command " + action);
    auto model = model_from_json(json_util::require(doc, "model", "config"));
    auto model_json = model.to_json();
    ExperimentConfig cfg{action, std::move(model_json), std::move(model),
                         fill_params(action, doc.contains("params") ? doc.at("params") : json::object()), 0, 1, out_dir};
    if (seed) cfg.seed = *seed;
    else if (doc.contains("seed")) {
        const auto& sd = doc.at("seed");
        if (!sd.is_number_unsigned() && !(sd.is_number_integer() && sd.get<long long>() >= 0))
            throw ConfigError("config.seed must be an unsigned integer");
        cfg.seed = doc.at("seed").get<std::uint64_t>();
    } else {
        throw ConfigError("no seed given (use --seed or config.seed)");
    }
    cfg.workers = resolve_workers(workers);
    cfg.out_dir = out_dir;
    return cfg;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const json canon = {{"model", cfg.model_json}, {"action", cfg.action}, {"params", cfg.params}, {"seed", cfg.seed}};
    const std::string s = canon.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json RunManifest::to_json() const {
    json stages_j = json::array();
    for (const auto& s : stages) stages_j.push_back({{"name", s.name}, {"seconds", s.seconds}});
    json j = {{"schema_version", kSchemaVersion},
              {"tool", "srl"},
              {"tool_version", kToolVersion},
              {"action", action},
              {"config_hash", hex(config_hash)},
              {"seed", seed},
              {"workers", workers},
              {"status", status},
              {"exit_code", exit_code},
              {"wall_seconds", wall_seconds},
              {"stages", stages_j},
              {"outputs", outputs},
              {"results", results}};
    if (!error.empty()) j["error"] = error;
    if (!failed_hypothesis.empty()) j["failed_hypothesis"] = failed_hypothesis;
    return j;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

RunManifest run(const ExperimentConfig& cfg) {
    RunManifest man;
    man.action = cfg.action;
    man.config_hash = config_hash(cfg);
    man.seed = cfg.seed;
    man.workers = cfg.workers;
    fs::create_directories(cfg.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    Timer timer(man);
    if (cfg.action == "simulate") run_simulate(cfg, man, timer);
    else if (cfg.action == "tail-fit") run_tail_fit(cfg, man, timer);
    else if (cfg.action == "tail-series") run_tail_series(cfg, man, timer);
    else if (cfg.action == "stable-limit") run_stable_limit(cfg, man, timer);
    else if (cfg.action == "contraction") run_contraction(cfg, man, timer);
    else run_verify(cfg, man, timer);
    man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return man;
}

int run_cli(const std::string& action, const std::string& config_path, std::optional<std::uint64_t> seed,
            unsigned workers, const std::string& out_dir) {
    RunManifest man;
    man.action = action;
    man.workers = resolve_workers(workers);
    const auto t0 = std::chrono::steady_clock::now();
    auto fail = [&](int code, const std::string& msg) {
        man.status = "failed";
        man.exit_code = code;
        man.error = msg;
        std::cerr << "error: " << msg << "\n";
        return code;
    };
    int code = 0;
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config " + config_path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        const auto cfg = parse_config(doc, action, seed, workers, out_dir);
        man.config_hash = config_hash(cfg);
        man.seed = cfg.seed;
        man = run(cfg);
    } catch (const ConfigError& e) {
        code = fail(2, e.what());
    } catch (const HypothesisError& e) {
        man.failed_hypothesis = e.hypothesis();
        code = fail(3, std::string("hypothesis refused: ") + e.what());
    } catch (const NumericError& e) {
        code = fail(4, e.what());
    } catch (const std::exception& e) {
        code = fail(1, e.what());
    }
    if (man.status == "failed") {
        man.results = json::object();
        man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    try {
        fs::create_directories(out_dir);
        write_atomic((fs::path(out_dir) / "manifest.json").string(), man.to_json().dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "error: cannot write manifest: " << e.what() << "\n";
        if (code == 0) code = 1;
    }
    return code;
}

}  // namespace srl::io
