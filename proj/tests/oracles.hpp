#pragma once

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace oracles {

/// Log-CF of the limit of S_n/a_n (centered for alpha > 1) for the scalar model
/// X_n = a X_{n-1} + B_n with deterministic a in [0,1), B positive Pareto(alpha, c_b):
/// (1/c) * int_0^inf (e^{iux} - 1 - 1{alpha>1} iux) alpha x^{-alpha-1} dx, u = tv/(1-a),
/// c = c_b/(1-a^alpha). Evaluated by quadrature only.
inline std::complex<double> scalar_deterministic_logcf(double a, double alpha, double c_b, double t, double v) {
    const double u = t * v / (1.0 - a);
    const double c = c_b / (1.0 - std::pow(a, alpha));
    if (u == 0) return {0, 0};
    // Substitute x -> x/|u| so the oscillation frequency is 1; the sign of u flips the imaginary part.
    const double s = u > 0 ? 1.0 : -1.0;
    const double scale = std::pow(std::abs(u), alpha);
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [alpha](double x) { return alpha * std::pow(x, -alpha - 1); };

    // Near 0 the integrands are replaced by their leading Taylor terms to avoid 0 * inf.
    const double re_head = ts.integrate(
        [&](double x) { return x < 1e-4 ? -0.5 * alpha * std::pow(x, 1 - alpha) : (std::cos(x) - 1) * g(x); }, 0.0, 1.0);
    const double im_head =
        alpha > 1 ? ts.integrate([&](double x) {
                        return x < 1e-4 ? -alpha / 6 * std::pow(x, 2 - alpha) : (std::sin(x) - x) * g(x);
                    }, 0.0, 1.0)
                  : ts.integrate([&](double x) { return x < 1e-4 ? alpha * std::pow(x, -alpha) : std::sin(x) * g(x); },
                                 0.0, 1.0);

    // Tail on [1, inf) via x = 1 + y with the smooth envelope f(y) = g(1 + y).
    boost::math::quadrature::ooura_fourier_cos<double> oc;
    boost::math::quadrature::ooura_fourier_sin<double> os;
    auto f = [&](double y) { return g(1 + y); };
    const double cc = oc.integrate(f, 1.0).first;
    const double ss = os.integrate(f, 1.0).first;
    const double tail_cos = std::cos(1.0) * cc - std::sin(1.0) * ss;
    const double tail_sin = std::sin(1.0) * cc + std::cos(1.0) * ss;
    double re = re_head + tail_cos - 1.0;  // int_1^inf g = 1
    double im = im_head + tail_sin;
    if (alpha > 1) im -= alpha / (alpha - 1);  // int_1^inf x g(x) dx
    return std::complex<double>(re, s * im) * scale / c;
}

/// C(alpha) = int_0^inf (cos x - 1) alpha x^{-alpha-1} dx / alpha, by quadrature.
inline double cos_constant_quadrature(double alpha) {
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::ooura_fourier_cos<double> oc;
    boost::math::quadrature::ooura_fourier_sin<double> os;
    auto g = [alpha](double x) { return std::pow(x, -alpha - 1); };
    const double head = ts.integrate(
        [&](double x) { return x < 1e-4 ? -0.5 * std::pow(x, 1 - alpha) : (std::cos(x) - 1) * g(x); }, 0.0, 1.0);
    auto f = [&](double y) { return g(1 + y); };
    const double cc = oc.integrate(f, 1.0).first;
    const double ss = os.integrate(f, 1.0).first;
    return head + std::cos(1.0) * cc - std::sin(1.0) * ss - 1.0 / alpha;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < x.size() && j < y.size()) {
        const double z = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= z) ++i;
        while (j < y.size() && y[j] <= z) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

/// Critical value c(level) * sqrt((n+m)/(n m)).
inline double ks_critical(double c_level, std::size_t n, std::size_t m) {
    const double a = static_cast<double>(n), b = static_cast<double>(m);
    return c_level * std::sqrt((a + b) / (a * b));
}

/// E exp(i v W(x)) for scalar W(x) = sum_{k=1}^{K} A_k...A_1 x with A uniform on `atoms`,
/// by enumerating all |atoms|^K branches.
inline std::complex<double> h_v_enumerated(const std::vector<double>& atoms, double v, double x, std::size_t terms) {
    std::complex<double> total = 0;
    const double p = 1.0 / static_cast<double>(atoms.size());
    auto rec = [&](auto&& self, std::size_t depth, double w, double sum, double weight) -> void {
        if (depth == terms) {
            total += weight * std::exp(std::complex<double>(0, v * sum));
            return;
        }
        for (double a : atoms) self(self, depth + 1, a * w, sum + a * w, weight * p);
    };
    rec(rec, 0, x, 0.0, 1.0);
    return total;
}

}  // namespace oracles
