#pragma once

#include "srl/linalg.hpp"
#include "srl/model.hpp"
#include "srl/rng.hpp"
#include "srl/sampling.hpp"
#include "srl/tail_measure.hpp"
#include "srl/tail_stats.hpp"

#include <nlohmann/json.hpp>

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace srl::stable {

using Complex = std::complex<double>;

enum class Regime { Below1, One, Above1 };
Regime regime_of(double alpha);
std::string to_string(Regime r);

/// Draws the truncated series W(x) = sum_{k=1..n_terms} W_k, W_k = Phi(A_k W_{k-1}, 0).
struct WSampler {
    const RecursionModel* model = nullptr;
    std::size_t n_terms = 0;
    /// Estimated size of the omitted tail at |x| = 1 (L^p quasi-norm, p = min(alpha, 1)).
    double tail_bound = 0;
    std::string bound_basis;
};

struct WOptions {
    std::optional<std::size_t> n_terms;
    double tol = 1e-6;
    std::size_t cap = 128;
};

WSampler make_w_sampler(const RecursionModel& model, const Stream& stream, const WOptions& opt = {},
                        unsigned workers = 1);

/// Term k uses the draw at counter k of `stream`.
Vector sample_W(const WSampler& s, const Vector& x, const Stream& stream);

/// Mean of exp(i <v, W(x)>); draw j uses stream.child(j).
Complex estimate_h_v(const WSampler& s, const Vector& v, const Vector& x, std::size_t mc, const Stream& stream);

struct StableLimitSpec {
    double alpha = 0;
    Regime regime = Regime::Below1;
    /// Lambda^1{|x| > 1}.
    double c = 0;
    /// int x nu(dx); present iff alpha > 1.
    std::optional<Vector> m;
    /// int w sigma(dw) for the spherical measure of Lambda^1.
    Vector m_sigma;
    measure::ParticleMeasure lambda1;
    WSampler sampler;
    /// W(w_i) draws for each particle of lambda1 (one row per draw).
    std::vector<Matrix> w_cache;
    tail::NormalizationSeq a_n;
    /// Centering aligned with a_n.n.
    std::vector<Vector> d_n;
};

struct SpecOptions {
    WOptions w;
    std::size_t w_mc = 1000;
    /// Cap on particles * draws for the W cache.
    std::size_t w_budget = 200000;
    unsigned workers = 1;
};

StableLimitSpec make_spec(const RecursionModel& model, const measure::ParticleMeasure& lambda1, const Stream& stream,
                          const SpecOptions& opt = {}, std::optional<Vector> mean = std::nullopt);

struct CAlpha {
    Complex value;
    /// Monte Carlo standard error from the W cache (real and imaginary parts).
    double std_error = 0;
};

/// Radial integrals are done in closed form with the stable kernel, so the t-scaling
/// (and the log term at alpha = 1) is exact.
CAlpha compute_C_alpha_se(const StableLimitSpec& spec, double t, const Vector& v);
Complex compute_C_alpha(const StableLimitSpec& spec, double t, const Vector& v);

/// int_0^inf (e^{iur} - 1 - iur 1{alpha >= 1, r < 1}) alpha r^{-1-alpha} dr.
Complex levy_kernel(double alpha, double u);

/// int_0^inf (cos u - 1) u^{-1-alpha} du.
double cos_integral_constant(double alpha);

struct Centering {
    Vector d;
    Vector std_error;
    bool warning = false;
    std::string note;
};

/// alpha < 1: 0; alpha = 1: n xi(1/a_n); alpha > 1: (n / a_n) mean.
Centering centering(double alpha, const SampleEnsemble& ensemble, double a_n, std::size_t n, Norm norm);

/// Plug-in xi(t) = mean of t x / (1 + |t x|^2).
Vector xi_hat(const SampleEnsemble& ensemble, double t, Norm norm);

struct XiReport {
    double delta = 0;
    std::vector<double> t_grid;
    std::vector<double> xi_norms;
    /// max |xi(t)| / t^delta over the grid.
    double C_fit = 0;
    double worst_t = 0;
    double xi_at_1 = 0;
    bool finite = true;
};
XiReport xi_bound_check(const SampleEnsemble& ensemble, double delta, const std::vector<double>& t_grid, Norm norm);

struct CFPoint {
    double t = 0;
    Vector v;
    Complex theoretical;
    Complex empirical;
    double abs_diff = 0;
    double empirical_std_error = 0;
};

struct CFGrid {
    std::size_t n = 0;
    std::size_t trials = 0;
    double a_n = 0;
    Vector d_n;
    std::vector<CFPoint> points;
    double max_abs_diff() const;
};

struct GridPoint {
    double t = 0;
    Vector v;
};

/// Uses spec.a_n / spec.d_n for n; S_n is started at 0; trial r uses stream.child(r).
CFGrid empirical_cf(const RecursionModel& model, const StableLimitSpec& spec, std::size_t n, std::size_t trials,
                    const std::vector<GridPoint>& grid, const Stream& stream, unsigned workers = 1);

/// Empirical CF of projections with the same normalization, from given sums.
Complex empirical_cf_value(const Matrix& sums, double scale, const Vector& shift, double t, const Vector& v);

struct NondegeneracyEntry {
    Vector v;
    /// sum of gamma1 weights times E|<W_v, w>|^alpha.
    double spherical_integral = 0;
    double re_C = 0;
    /// Re C from compute_C_alpha at the same v (when a spec is given).
    std::optional<double> re_C_direct;
};

struct NondegeneracyReport {
    std::string status;  // "pass", "fail", "unsupported"
    std::string detail;
    double C_alpha_constant = 0;
    double min_spherical_integral = 0;
    double max_spherical_integral = 0;
    std::vector<NondegeneracyEntry> entries;
};

/// Re C(v) = (alpha / c) C(alpha) sum_i w_i E|<W_v, w_i>|^alpha with W_v = sum_k A_1^T...A_k^T v.
NondegeneracyReport nondegeneracy(const RecursionModel& model, const measure::ParticleMeasure& gamma1, double c,
                                  const std::vector<Vector>& v_grid, std::size_t mc, const Stream& stream,
                                  const StableLimitSpec* spec = nullptr, std::size_t n_terms = 128);

nlohmann::json to_json(const NondegeneracyReport& r);
nlohmann::json to_json(const XiReport& r);
void write_cfgrid_csv(const CFGrid& g, const std::string& path);

}  // namespace srl::stable
