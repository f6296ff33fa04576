#pragma once

#include "srl/model.hpp"

#include <vector>

namespace testmodels {

using srl::Matrix;
using srl::Vector;

inline Vector vec(std::initializer_list<double> xs) {
    std::vector<double> v(xs);
    return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline srl::SphericalLaw point_mass(std::initializer_list<double> w, srl::Norm n = srl::Norm::Euclidean) {
    const Vector v = vec(w);
    return srl::SphericalLaw(srl::PointMass{v}, static_cast<int>(v.size()), n);
}

inline srl::SphericalLaw plus_minus() {
    return srl::SphericalLaw(srl::DiscreteSphere{{vec({1}), vec({-1})}, {0.5, 0.5}}, 1, srl::Norm::Euclidean);
}

inline srl::MatrixLaw scalar_a(double a) { return srl::MatrixLaw(srl::DeterministicScalar{a}, 1); }

inline srl::MatrixLaw scalar_two_point(double a, double b) {
    Matrix ma(1, 1), mb(1, 1);
    ma << a;
    mb << b;
    return srl::MatrixLaw(srl::DiscreteSet{{{ma, 0.5, std::nullopt}, {mb, 0.5, std::nullopt}}}, 1);
}

/// diag(2, 1/3) and diag(1/3, 2), equiprobable.
inline srl::MatrixLaw diag_pair(int = 0) {
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a.diagonal() << 2.0, 1.0 / 3.0;
    b.diagonal() << 1.0 / 3.0, 2.0;
    return srl::MatrixLaw(srl::DiscreteSet{{{a, 0.5, std::nullopt}, {b, 0.5, std::nullopt}}}, 2);
}

inline srl::RecursionModel scalar_affine(double a, double alpha, double cb = 1.0,
                                         srl::Kind kind = srl::Kind::Affine) {
    return srl::make_model(kind, 1, srl::Norm::Euclidean, scalar_a(a),
                           srl::HeavyTailLaw::pareto(alpha, cb, point_mass({1})));
}

/// Deterministic A = a and B^1 = b.
inline srl::RecursionModel deterministic(double a, double b, srl::Kind kind = srl::Kind::Affine) {
    return srl::make_model(kind, 1, srl::Norm::Euclidean, scalar_a(a),
                           srl::HeavyTailLaw::constant(vec({b}), 1.0, srl::Norm::Euclidean));
}

/// The two-dimensional diagonal model with input atoms at e1, e2.
inline srl::RecursionModel diag_model(double alpha, double cb = 2.0, srl::Norm n = srl::Norm::Euclidean) {
    srl::SphericalLaw s(srl::DiscreteSphere{{vec({1, 0}), vec({0, 1})}, {0.5, 0.5}}, 2, n);
    return srl::make_model(srl::Kind::Affine, 2, n, diag_pair(), srl::HeavyTailLaw::pareto(alpha, cb, s));
}

}  // namespace testmodels
