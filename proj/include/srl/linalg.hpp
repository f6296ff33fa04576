#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace srl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Norm { Euclidean, Sup, L1 };

std::string to_string(Norm n);
Norm norm_from_string(const std::string& s);

template <typename Derived>
typename Derived::Scalar norm(const Eigen::MatrixBase<Derived>& x, Norm n) {
    switch (n) {
        case Norm::Sup: return x.template lpNorm<Eigen::Infinity>();
        case Norm::L1: return x.template lpNorm<1>();
        case Norm::Euclidean: break;
    }
    return x.norm();
}

namespace detail {

// Largest eigenvalue of a symmetric positive semidefinite 3x3 matrix.
template <typename Scalar>
Scalar largest_eigenvalue_sym3(const Eigen::Matrix<Scalar, 3, 3>& s) {
    using std::acos;
    using std::cos;
    using std::sqrt;
    const Scalar p1 = s(0, 1) * s(0, 1) + s(0, 2) * s(0, 2) + s(1, 2) * s(1, 2);
    const Scalar q = s.trace() / Scalar(3);
    if (p1 == Scalar(0)) return std::max({s(0, 0), s(1, 1), s(2, 2)});
    const Scalar p2 = (s(0, 0) - q) * (s(0, 0) - q) + (s(1, 1) - q) * (s(1, 1) - q) +
                      (s(2, 2) - q) * (s(2, 2) - q) + Scalar(2) * p1;
    const Scalar p = sqrt(p2 / Scalar(6));
    const Eigen::Matrix<Scalar, 3, 3> b = (s - q * Eigen::Matrix<Scalar, 3, 3>::Identity()) / p;
    Scalar r = b.determinant() / Scalar(2);
    r = std::clamp(r, Scalar(-1), Scalar(1));
    const Scalar phi = acos(r) / Scalar(3);
    return q + Scalar(2) * p * cos(phi);
}

}  // namespace detail

/// Operator norm induced by `n`. Sup and L1 use row/column sums; Euclidean is the
/// largest singular value, in closed form for d <= 3 and by power iteration otherwise.
template <typename Derived>
typename Derived::Scalar operator_norm(const Eigen::MatrixBase<Derived>& a, Norm n) {
    using Scalar = typename Derived::Scalar;
    using std::sqrt;
    if (a.size() == 0) return Scalar(0);
    switch (n) {
        case Norm::Sup: return a.cwiseAbs().rowwise().sum().maxCoeff();
        case Norm::L1: return a.cwiseAbs().colwise().sum().maxCoeff();
        case Norm::Euclidean: break;
    }
    const auto d = a.rows();
    if (d != a.cols()) {
        return Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(a).singularValues()(0);
    }
    if (d == 1) return std::abs(a(0, 0));
    if (d == 2) {
        const Eigen::Matrix<Scalar, 2, 2> s = a.transpose() * a;
        const Scalar tr = s(0, 0) + s(1, 1);
        const Scalar det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
        const Scalar disc = std::max(Scalar(0), tr * tr / Scalar(4) - det);
        return sqrt(std::max(Scalar(0), tr / Scalar(2) + sqrt(disc)));
    }
    if (d == 3) {
        const Eigen::Matrix<Scalar, 3, 3> s = a.transpose() * a;
        return sqrt(std::max(Scalar(0), detail::largest_eigenvalue_sym3(s)));
    }
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> s = a.transpose() * a;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(d) / sqrt(Scalar(d));
    Scalar lambda = 0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = s * v;
        const Scalar wn = w.norm();
        if (wn == Scalar(0)) return Scalar(0);
        w /= wn;
        const Scalar next = w.dot(s * w);
        const bool done = std::abs(next - lambda) <= Scalar(1e-10) * std::max(Scalar(1), next);
        lambda = next;
        v = w;
        if (done) break;
    }
    return sqrt(std::max(Scalar(0), lambda));
}

/// x / |x|; the zero vector maps to itself.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> direction(const Eigen::MatrixBase<Derived>& x, Norm n) {
    const auto r = norm(x, n);
    if (r == 0) return x;
    return x / r;
}

/// Coordinatewise maximum.
template <typename DerivedA, typename DerivedB>
auto cwise_max(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y) {
    return x.cwiseMax(y);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
    return x.allFinite();
}

/// Unit vectors (in norm `n`) at angles 2*pi*k/count in the plane; d must be 2.
std::vector<Vector> circle_grid(int count, Norm n);

/// Deterministic quasi-uniform directions in R^d (d == 1 gives {+1, -1}; d == 2 a circle).
std::vector<Vector> direction_grid(int dim, int count, Norm n);

}  // namespace srl
