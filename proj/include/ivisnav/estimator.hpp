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

// Double-precision reference for the rate-estimation problem: measurement
// model, stacked system and weighted least-squares solve.

#ifndef IVISNAV_ESTIMATOR_HPP
#define IVISNAV_ESTIMATOR_HPP

#include <Eigen/Dense>

#include <numbers>
#include <span>

namespace ivisnav {

using Vector6d = Eigen::Matrix<double, 6, 1>;

struct SensorConstants
{
    double f0 = 10.0e6;  ///< modulation frequency, Hz
    double c = 2.99e8;   ///< speed of light, m/s
    double dt = 1.0e-3;  ///< sampling interval, s

    double lambda() const
    {
        return c / f0;
    }
    /// lambda / (4 pi), metres per radian of round-trip phase.
    double phase_to_range() const
    {
        return lambda() / (4.0 * std::numbers::pi);
    }

    /// Throws std::invalid_argument unless f0, c, dt are positive and finite.
    void validate() const;
};

struct RateEstimate
{
    Eigen::Vector3d v_c = Eigen::Vector3d::Zero();    ///< m/s
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();  ///< rad/s

    Vector6d stacked() const
    {
        Vector6d x;
        x << v_c, omega;
        return x;
    }
    static RateEstimate from_stacked(const Eigen::Ref<const Eigen::VectorXd>& x)
    {
        return {x.head<3>(), x.segment<3>(3)};
    }
};

/// Stacked system H x = (lambda / 4 pi) y_tilde with weight W. `y_tilde` holds
/// phase differences per unit time, dphi_i / dt (rad/s).
struct EstimationProblem
{
    Eigen::MatrixXd H;      ///< n x 6, n >= 6
    Eigen::MatrixXd W;      ///< n x n, symmetric positive definite
    Eigen::VectorXd y_tilde;
    Eigen::MatrixXd Sigma;  ///< empty when W was not derived from a covariance

    static EstimationProblem with_identity_weight(Eigen::MatrixXd H, Eigen::VectorXd y_tilde);
    /// W = Sigma^-1, computed by Cholesky in double precision.
    static EstimationProblem with_covariance(Eigen::MatrixXd H, Eigen::MatrixXd Sigma,
                                             Eigen::VectorXd y_tilde);

    void validate() const;
};

/// skew(v) * u == v.cross(u)
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> skew(const Eigen::MatrixBase<Derived>& v)
{
    EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, 3, 3> m;
    m << Scalar(0), -v(2), v(1),
         v(2), Scalar(0), -v(0),
         -v(1), v(0), Scalar(0);
    return m;
}

/// Row i = [r_i^T, -r_i^T skew(rho_i)]. Directions must be unit within 1e-3.
Eigen::MatrixXd build_H(std::span<const Eigen::Vector3d> directions,
                        std::span<const Eigen::Vector3d> displacements);

/// (lambda / 4 pi) (H^T W H)^-1 H^T W y_tilde via SVD of the whitened
/// system. Throws SingularSystem when the condition estimate exceeds 1e12.
RateEstimate wls_solve(const EstimationProblem& problem, const SensorConstants& constants);

/// Condition number of the whitened design matrix L^T H (W = L L^T).
double whitened_condition(const EstimationProblem& problem);

/// Radial velocity (m/s) from the phase change over one sampling interval.
double range_rate(double dphi, const SensorConstants& constants);

}  // namespace ivisnav

#endif  // IVISNAV_ESTIMATOR_HPP
