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

#include "ivisnav/estimator.hpp"

#include "ivisnav/errors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ivisnav {

namespace {

constexpr double kUnitTolerance = 1e-3;
constexpr double kMaxCondition = 1e12;

Eigen::LLT<Eigen::MatrixXd> weight_cholesky(const Eigen::MatrixXd& w)
{
    Eigen::LLT<Eigen::MatrixXd> llt(w);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("weight matrix is not symmetric positive definite");
    return llt;
}

}  // namespace

void SensorConstants::validate() const
{
    const auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(f0))
        throw std::invalid_argument("modulation frequency f0 must be positive");
    if (!positive(c))
        throw std::invalid_argument("speed of light c must be positive");
    if (!positive(dt))
        throw std::invalid_argument("sampling interval dt must be positive");
}

EstimationProblem EstimationProblem::with_identity_weight(Eigen::MatrixXd H, Eigen::VectorXd y_tilde)
{
    EstimationProblem p;
    p.W = Eigen::MatrixXd::Identity(H.rows(), H.rows());
    p.H = std::move(H);
    p.y_tilde = std::move(y_tilde);
    return p;
}

EstimationProblem EstimationProblem::with_covariance(Eigen::MatrixXd H, Eigen::MatrixXd Sigma,
                                                     Eigen::VectorXd y_tilde)
{
    if (Sigma.rows() != H.rows() || Sigma.cols() != H.rows())
        throw std::invalid_argument("covariance must be n x n for n measurement rows");
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("covariance is not symmetric positive definite");

    EstimationProblem p;
    p.W = llt.solve(Eigen::MatrixXd::Identity(Sigma.rows(), Sigma.cols()));
    // symmetrize away the solve's rounding asymmetry
    p.W = (0.5 * (p.W + p.W.transpose())).eval();
    p.H = std::move(H);
    p.Sigma = std::move(Sigma);
    p.y_tilde = std::move(y_tilde);
    return p;
}

void EstimationProblem::validate() const
{
    if (H.cols() != 6)
        throw std::invalid_argument("H must have 6 columns");
    if (H.rows() < 6)
        throw std::invalid_argument("at least six measurement rows are required");
    if (W.rows() != H.rows() || W.cols() != H.rows())
        throw std::invalid_argument("W must be n x n for n measurement rows");
    if (y_tilde.size() != H.rows())
        throw std::invalid_argument("y_tilde length must match the number of rows of H");
    if (!H.allFinite() || !W.allFinite() || !y_tilde.allFinite())
        throw std::invalid_argument("problem contains non-finite entries");
}

Eigen::MatrixXd build_H(std::span<const Eigen::Vector3d> directions,
                        std::span<const Eigen::Vector3d> displacements)
{
    if (directions.size() != displacements.size())
        throw std::invalid_argument("build_H: one displacement per direction required");

    Eigen::MatrixXd h(static_cast<Eigen::Index>(directions.size()), 6);
    for (std::size_t i = 0; i < directions.size(); ++i) {
        const Eigen::Vector3d& r = directions[i];
        if (std::abs(r.norm() - 1.0) > kUnitTolerance)
            throw std::invalid_argument("build_H: direction " + std::to_string(i + 1) + " is not a unit vector");
        const auto row = static_cast<Eigen::Index>(i);
        h.block<1, 3>(row, 0) = r.transpose();
        h.block<1, 3>(row, 3) = -r.transpose() * skew(displacements[i]);
    }
    return h;
}

double whitened_condition(const EstimationProblem& problem)
{
    const auto llt = weight_cholesky(problem.W);
    const Eigen::MatrixXd a = llt.matrixU() * problem.H;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) == 0.0)
        return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

RateEstimate wls_solve(const EstimationProblem& problem, const SensorConstants& constants)
{
    problem.validate();
    constants.validate();

    // W = L L^T, so H^T W H = (L^T H)^T (L^T H); solving the whitened
    // least-squares system avoids squaring the condition number.
    const auto llt = weight_cholesky(problem.W);
    const Eigen::MatrixXd a = llt.matrixU() * problem.H;
    const Eigen::VectorXd b = llt.matrixU() * problem.y_tilde;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(condition <= kMaxCondition))
        throw SingularSystem(condition);

    const Eigen::VectorXd x = constants.phase_to_range() * svd.solve(b);
    return RateEstimate::from_stacked(x);
}

double range_rate(double dphi, const SensorConstants& constants)
{
    return constants.c / (4.0 * std::numbers::pi * constants.f0) * (dphi / constants.dt);
}

}  // namespace ivisnav
