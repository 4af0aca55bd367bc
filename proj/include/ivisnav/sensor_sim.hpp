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

#ifndef IVISNAV_SENSOR_SIM_HPP
#define IVISNAV_SENSOR_SIM_HPP

#include "ivisnav/estimator.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace ivisnav {

inline constexpr std::size_t kBeaconCount = 6;

using BeaconArray = std::array<Eigen::Vector3d, kBeaconCount>;

/// Beam directions r_i (body frame) and the body-frame mounting point b_i of
/// each emitter. Beam i is the ray b_i + k r_i, k > 0.
struct BeaconGeometry
{
    BeaconArray directions;
    BeaconArray offsets;

    /// Throws std::invalid_argument if any |r_i| deviates from 1 by more than
    /// 5% (calibration tables are not exactly normalized).
    void validate() const;

    /// directions scaled to unit length; every geometric use goes through this.
    BeaconArray unit_directions() const;
};

/// Bench calibration directions with the default mounting ring.
BeaconGeometry default_geometry();
/// Bench calibration directions, all beams leaving the body origin.
BeaconGeometry table_geometry();

/// Reads 6 lines of "rx ry rz [bx by bz]"; '#' starts a comment.
BeaconGeometry read_geometry(std::istream& is);
BeaconGeometry load_geometry(const std::string& path);

struct TrueState
{
    Eigen::Vector3d r_c = Eigen::Vector3d(0.0, 0.0, 1.0);  ///< base origin, body frame, m
    Eigen::Vector3d v_c = Eigen::Vector3d::Zero();
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();
    double t = 0.0;
};

/// Plane through the base origin r_c with the given body-frame normal.
struct BasePlane
{
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

struct Intersection
{
    std::array<double, kBeaconCount> k{};
    BeaconArray rho;
};

/// Ray/plane intersection b_i + k_i r_i = r_c + rho_i. Throws BeamParallel
/// when |r_i . n| <= 1e-6 and std::domain_error when the plane is behind a beam.
Intersection intersect_plane(const TrueState& state, const BeaconGeometry& geometry, const BasePlane& plane = {});

struct NoiseModel
{
    double sigma_phi = 0.0;  ///< rad
    std::uint64_t seed = 1;
};

struct MeasurementFrame
{
    double t = 0.0;
    std::array<double, kBeaconCount> dphi{};
    std::array<double, kBeaconCount> k{};
    BeaconArray rho;
    double dt = 0.0;
};

/// phi = 4 pi r f0 / c
double phase_from_range(double range, const SensorConstants& constants);

/// Deterministic unit normal deviates from (seed, stream); Box-Muller over
/// mt19937_64 so the sequence is fixed by the standard, not the library.
class GaussianSource
{
public:
    GaussianSource(std::uint64_t seed, std::uint64_t stream);
    double next();

private:
    double uniform();

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// v_i = v_c + omega x rho_i; dphi_i = (4 pi f0 / c)(v_i . r_i) dt + N(0, sigma^2).
/// `frame_index` selects the noise stream so frames are independent and reproducible.
MeasurementFrame synthesize_frame(const TrueState& state, const BeaconGeometry& geometry,
                                  const SensorConstants& constants, const NoiseModel& noise,
                                  std::uint64_t frame_index = 0, const BasePlane& plane = {});

/// Constant-rate axial trajectory; state k sits at the end of interval k,
/// t = (k + 1) dt, with r_c = r0 + v t.
std::vector<TrueState> axial_maneuver(double duration, double dt, double v_z, double omega_z,
                                      const Eigen::Vector3d& r0 = Eigen::Vector3d(0.0, 0.0, 1.0));

/// y_tilde_i = dphi_i / dt and H from the frame's projection displacements.
EstimationProblem make_problem(const MeasurementFrame& frame, const BeaconGeometry& geometry);

/// One frame per line: t, dphi_1..6, k_1..6, rho_1..6 (18 numbers), dt.
void write_frames(std::ostream& os, const std::vector<MeasurementFrame>& frames);
std::vector<MeasurementFrame> read_frames(std::istream& is);
std::vector<MeasurementFrame> load_frames(const std::string& path);

}  // namespace ivisnav

#endif  // IVISNAV_SENSOR_SIM_HPP
