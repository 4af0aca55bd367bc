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

#include "ivisnav/sensor_sim.hpp"

#include "ivisnav/errors.hpp"
#include "ivisnav/text.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ivisnav {

namespace {

// Bench calibrations are tabulated to 4-5 digits and are up to a few percent
// off unit length; they are normalized before use.
constexpr double kCalibrationTolerance = 0.05;
constexpr double kParallelTolerance = 1e-6;
constexpr std::size_t kFrameFields = 1 + 6 + 6 + 18 + 1;

// Bench calibration of the six beam directions.
const BeaconArray kTableDirections = {
    Eigen::Vector3d(0.87264, 0.4977, 0.1367),
    Eigen::Vector3d(0.8927, -0.5082, 0.1304),
    Eigen::Vector3d(-0.0007, -0.9915, 0.1372),
    Eigen::Vector3d(-0.8586, -0.4957, 0.1391),
    Eigen::Vector3d(-0.8168, 0.4957, 0.1412),
    Eigen::Vector3d(0.0001, 0.9999, 0.1249),
};

// Emitters on a 0.2 m ring, each displaced a quarter turn from its beam
// azimuth (alternating sense) and +/-0.1 m along the boresight. Common-origin
// beams make H rank 3; this layout gives cond(H) ~ 20 at 1 m.
const BeaconArray kRingOffsets = {
    Eigen::Vector3d(-0.099, 0.174, 0.1),
    Eigen::Vector3d(-0.099, -0.174, -0.1),
    Eigen::Vector3d(0.2, 0.0, 0.1),
    Eigen::Vector3d(-0.1, 0.173, -0.1),
    Eigen::Vector3d(-0.104, -0.171, 0.1),
    Eigen::Vector3d(0.2, 0.0, -0.1),
};

}  // namespace

void BeaconGeometry::validate() const
{
    for (std::size_t i = 0; i < kBeaconCount; ++i) {
        if (!directions[i].allFinite() || !offsets[i].allFinite())
            throw std::invalid_argument("beacon " + std::to_string(i + 1) + " has non-finite geometry");
        if (std::abs(directions[i].norm() - 1.0) > kCalibrationTolerance)
            throw std::invalid_argument("beacon " + std::to_string(i + 1) + " direction is not close to unit length");
    }
}

BeaconArray BeaconGeometry::unit_directions() const
{
    BeaconArray out;
    for (std::size_t i = 0; i < kBeaconCount; ++i)
        out[i] = directions[i].normalized();
    return out;
}

BeaconGeometry default_geometry()
{
    return {kTableDirections, kRingOffsets};
}

BeaconGeometry table_geometry()
{
    BeaconGeometry g;
    g.directions = kTableDirections;
    g.offsets.fill(Eigen::Vector3d::Zero());
    return g;
}

BeaconGeometry read_geometry(std::istream& is)
{
    BeaconGeometry g = table_geometry();
    std::size_t count = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto toks = text::tokens(line);
        if (toks.empty())
            continue;
        if (toks.size() != 3 && toks.size() != 6)
            throw std::runtime_error("geometry line " + std::to_string(line_no) + ": expected 3 or 6 numbers");
        if (count == kBeaconCount)
            throw std::runtime_error("geometry line " + std::to_string(line_no) + ": more than six beacons");
        double v[6] = {0, 0, 0, 0, 0, 0};
        for (std::size_t j = 0; j < toks.size(); ++j) {
            const auto x = text::parse_double(toks[j]);
            if (!x)
                throw std::runtime_error("geometry line " + std::to_string(line_no) + ": bad number '"
                                         + std::string(toks[j]) + "'");
            v[j] = *x;
        }
        g.directions[count] = Eigen::Vector3d(v[0], v[1], v[2]);
        g.offsets[count] = Eigen::Vector3d(v[3], v[4], v[5]);
        ++count;
    }
    if (count != kBeaconCount)
        throw std::runtime_error("geometry: expected six beacons, found " + std::to_string(count));
    g.validate();
    return g;
}

BeaconGeometry load_geometry(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open geometry file '" + path + "'");
    return read_geometry(in);
}

Intersection intersect_plane(const TrueState& state, const BeaconGeometry& geometry, const BasePlane& plane)
{
    const Eigen::Vector3d n = plane.normal.normalized();
    const BeaconArray dirs = geometry.unit_directions();
    Intersection out;
    for (std::size_t i = 0; i < kBeaconCount; ++i) {
        const Eigen::Vector3d& r = dirs[i];
        const double incidence = r.dot(n);
        if (std::abs(incidence) <= kParallelTolerance)
            throw BeamParallel(i);
        const double k = n.dot(state.r_c - geometry.offsets[i]) / incidence;
        if (!(k > 0.0))
            throw std::domain_error("beacon " + std::to_string(i + 1) + " points away from the base plane");
        out.k[i] = k;
        out.rho[i] = geometry.offsets[i] + k * r - state.r_c;
    }
    return out;
}

double phase_from_range(double range, const SensorConstants& constants)
{
    return 4.0 * std::numbers::pi * range * constants.f0 / constants.c;
}

GaussianSource::GaussianSource(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

double GaussianSource::uniform()
{
    // 53 random bits, shifted off zero
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianSource::next()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

MeasurementFrame synthesize_frame(const TrueState& state, const BeaconGeometry& geometry,
                                  const SensorConstants& constants, const NoiseModel& noise,
                                  std::uint64_t frame_index, const BasePlane& plane)
{
    constants.validate();
    if (!(noise.sigma_phi >= 0.0))
        throw std::invalid_argument("noise sigma_phi must be non-negative");

    const Intersection hit = intersect_plane(state, geometry, plane);
    const double phase_per_metre = 4.0 * std::numbers::pi * constants.f0 / constants.c;

    MeasurementFrame frame;
    frame.t = state.t;
    frame.dt = constants.dt;
    frame.k = hit.k;
    frame.rho = hit.rho;

    const BeaconArray dirs = geometry.unit_directions();
    GaussianSource gauss(noise.seed, frame_index);
    for (std::size_t i = 0; i < kBeaconCount; ++i) {
        const Eigen::Vector3d v_i = state.v_c + state.omega.cross(hit.rho[i]);
        double dphi = phase_per_metre * v_i.dot(dirs[i]) * constants.dt;
        if (noise.sigma_phi > 0.0)
            dphi += noise.sigma_phi * gauss.next();
        frame.dphi[i] = dphi;
    }
    return frame;
}

std::vector<TrueState> axial_maneuver(double duration, double dt, double v_z, double omega_z,
                                      const Eigen::Vector3d& r0)
{
    if (!(duration > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("axial_maneuver: duration and dt must be positive");
    const auto count = static_cast<std::size_t>(std::llround(duration / dt));

    std::vector<TrueState> states;
    states.reserve(count);
    const Eigen::Vector3d v(0.0, 0.0, v_z);
    const Eigen::Vector3d omega(0.0, 0.0, omega_z);
    for (std::size_t k = 0; k < count; ++k) {
        TrueState s;
        s.t = static_cast<double>(k + 1) * dt;
        s.v_c = v;
        s.omega = omega;
        s.r_c = r0 + v * s.t;
        states.push_back(s);
    }
    return states;
}

EstimationProblem make_problem(const MeasurementFrame& frame, const BeaconGeometry& geometry)
{
    if (!(frame.dt > 0.0))
        throw std::invalid_argument("frame dt must be positive");
    Eigen::VectorXd y(static_cast<Eigen::Index>(kBeaconCount));
    for (std::size_t i = 0; i < kBeaconCount; ++i)
        y(static_cast<Eigen::Index>(i)) = frame.dphi[i] / frame.dt;
    return EstimationProblem::with_identity_weight(build_H(geometry.unit_directions(), frame.rho), std::move(y));
}

void write_frames(std::ostream& os, const std::vector<MeasurementFrame>& frames)
{
    os << "# t dphi1..6 k1..6 rho1x rho1y rho1z .. rho6z dt\n";
    for (const auto& f : frames) {
        os << text::format_double(f.t);
        for (double x : f.dphi)
            os << ' ' << text::format_double(x);
        for (double x : f.k)
            os << ' ' << text::format_double(x);
        for (const auto& r : f.rho)
            os << ' ' << text::format_double(r.x()) << ' ' << text::format_double(r.y()) << ' '
               << text::format_double(r.z());
        os << ' ' << text::format_double(f.dt) << '\n';
    }
}

std::vector<MeasurementFrame> read_frames(std::istream& is)
{
    std::vector<MeasurementFrame> frames;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto toks = text::tokens(line);
        if (toks.empty())
            continue;
        if (toks.size() != kFrameFields)
            throw std::runtime_error("frame line " + std::to_string(line_no) + ": expected "
                                     + std::to_string(kFrameFields) + " numbers, found "
                                     + std::to_string(toks.size()));
        double v[kFrameFields];
        for (std::size_t j = 0; j < kFrameFields; ++j) {
            const auto x = text::parse_double(toks[j]);
            if (!x)
                throw std::runtime_error("frame line " + std::to_string(line_no) + ": bad number '"
                                         + std::string(toks[j]) + "'");
            v[j] = *x;
        }
        MeasurementFrame f;
        f.t = v[0];
        for (std::size_t i = 0; i < kBeaconCount; ++i) {
            f.dphi[i] = v[1 + i];
            f.k[i] = v[7 + i];
            f.rho[i] = Eigen::Vector3d(v[13 + 3 * i], v[14 + 3 * i], v[15 + 3 * i]);
        }
        f.dt = v[31];
        if (!(f.dt > 0.0))
            throw std::runtime_error("frame line " + std::to_string(line_no) + ": dt must be positive");
        frames.push_back(f);
    }
    return frames;
}

std::vector<MeasurementFrame> load_frames(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open frame file '" + path + "'");
    return read_frames(in);
}

}  // namespace ivisnav
