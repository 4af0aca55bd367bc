// Copyright (c) 2026, the ivisnav-sim authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//         http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

// Unpivoted LDU factorization and inversion, templated on the scalar so the
// hardware path runs it in binary32 while tests can run it in double.

#ifndef IVISNAV_LDU_HPP
#define IVISNAV_LDU_HPP

#include "ivisnav/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ivisnav {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct LduFactors
{
    DenseMatrix<Scalar> L;                    ///< unit lower triangular
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d;  ///< diagonal of D
    DenseMatrix<Scalar> U;                    ///< unit upper triangular

    DenseMatrix<Scalar> D() const
    {
        return d.asDiagonal();
    }
};

struct LduOptions
{
    /// Absolute pivot floor.
    double pivot_epsilon = 1e-12;
    /// Pivot floor relative to max |A(i,j)|; catches rank-deficient inputs
    /// whose exact-zero pivot is polluted by rounding.
    double relative_pivot = 32.0 * std::numeric_limits<float>::epsilon();
    /// ldu_invert(A) rejects results with ||A X - I||_inf at or above this
    /// (evaluated in double). Without row exchanges a vanishing leading minor
    /// can leave every pivot above the floors and the inverse meaningless; for
    /// singular A the residual is at least 1/sqrt(n). Zero disables the check.
    double residual_tolerance = 1e-2;
};

/// Doolittle elimination without row exchanges, row by row: row i of the
/// unit-diagonal-free upper factor, then column i of L.
template <typename Derived>
LduFactors<typename Derived::Scalar> ldu_decompose(const Eigen::MatrixBase<Derived>& a,
                                                   const LduOptions& options = {})
{
    using Scalar = typename Derived::Scalar;
    if (a.rows() != a.cols())
        throw std::invalid_argument("ldu_decompose: matrix must be square");

    const Eigen::Index n = a.rows();
    const double scale = n > 0 ? static_cast<double>(a.cwiseAbs().maxCoeff()) : 0.0;
    const double floor = std::max(options.pivot_epsilon, options.relative_pivot * scale);

    DenseMatrix<Scalar> lower = DenseMatrix<Scalar>::Identity(n, n);
    DenseMatrix<Scalar> upper = DenseMatrix<Scalar>::Zero(n, n);

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            Scalar s = a(i, j);
            for (Eigen::Index k = 0; k < i; ++k)
                s -= lower(i, k) * upper(k, j);
            upper(i, j) = s;
        }
        const Scalar pivot = upper(i, i);
        if (!(std::abs(static_cast<double>(pivot)) >= floor))
            throw SingularMatrix(static_cast<std::size_t>(i), static_cast<double>(pivot));

        for (Eigen::Index r = i + 1; r < n; ++r) {
            Scalar s = a(r, i);
            for (Eigen::Index k = 0; k < i; ++k)
                s -= lower(r, k) * upper(k, i);
            lower(r, i) = s / pivot;
        }
    }

    LduFactors<Scalar> out;
    out.L = std::move(lower);
    out.d = upper.diagonal();
    out.U = DenseMatrix<Scalar>::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            out.U(i, j) = upper(i, j) / out.d(i);
    return out;
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
template <typename Scalar>
DenseMatrix<Scalar> invert_unit_lower(const DenseMatrix<Scalar>& l)
{
    const Eigen::Index n = l.rows();
    DenseMatrix<Scalar> x = DenseMatrix<Scalar>::Identity(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            Scalar s = 0;
            for (Eigen::Index k = j; k < i; ++k)
                s -= l(i, k) * x(k, j);
            x(i, j) = s;
        }
    }
    return x;
}

/// A^-1 = U^-1 D^-1 L^-1, every operation in Scalar arithmetic. Evaluated
/// right to left: L^-1 by forward substitution, a row division by D, then
/// back substitution through U on each column, which keeps A X - I small.
template <typename Scalar>
DenseMatrix<Scalar> ldu_invert(const LduFactors<Scalar>& f)
{
    const Eigen::Index n = f.L.rows();
    DenseMatrix<Scalar> x = invert_unit_lower(f.L);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            x(i, j) = x(i, j) / f.d(i);

    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = n - 2; i >= 0; --i) {
            Scalar s = x(i, j);
            for (Eigen::Index k = i + 1; k < n; ++k)
                s -= f.U(i, k) * x(k, j);
            x(i, j) = s;
        }
    }
    return x;
}

/// Applies LduOptions::residual_tolerance to an inverse computed from `factors`.
/// Throws SingularMatrix naming the smallest pivot.
template <typename Derived, typename Scalar>
void verify_inverse(const Eigen::MatrixBase<Derived>& a, const DenseMatrix<Scalar>& inv,
                    const LduFactors<Scalar>& factors, const LduOptions& options)
{
    if (!(options.residual_tolerance > 0.0))
        return;
    const Eigen::MatrixXd r = a.template cast<double>() * inv.template cast<double>()
                              - Eigen::MatrixXd::Identity(a.rows(), a.cols());
    const double residual = r.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(residual < options.residual_tolerance)) {
        Eigen::Index worst = 0;
        factors.d.cwiseAbs().minCoeff(&worst);
        throw SingularMatrix(static_cast<std::size_t>(worst), static_cast<double>(factors.d(worst)));
    }
}

template <typename Derived>
DenseMatrix<typename Derived::Scalar> ldu_invert(const Eigen::MatrixBase<Derived>& a,
                                                 const LduOptions& options = {})
{
    const auto factors = ldu_decompose(a, options);
    DenseMatrix<typename Derived::Scalar> inv = ldu_invert(factors);
    verify_inverse(a, inv, factors, options);
    return inv;
}

}  // namespace ivisnav

#endif  // IVISNAV_LDU_HPP
