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

// Scenario runner: drives each trajectory frame through the double-precision
// reference and through the emulated core, and reports the differences.

#ifndef IVISNAV_HARNESS_HPP
#define IVISNAV_HARNESS_HPP

#include "ivisnav/bus.hpp"
#include "ivisnav/estimator.hpp"
#include "ivisnav/hw_datapath.hpp"
#include "ivisnav/sensor_sim.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivisnav {

inline constexpr double kDenominatorEpsilon = 1e-12;

inline constexpr std::array<const char*, 6> kChannelNames = {"vx", "vy", "vz", "wx", "wy", "wz"};

class DenominatorTooSmall : public std::domain_error
{
public:
    explicit DenominatorTooSmall(double sw)
        : std::domain_error("DenominatorTooSmall: |reference| = " + std::to_string(sw))
    {}
};

/// |hw - sw| / |sw| * 100. Throws DenominatorTooSmall when |sw| <= epsilon.
double percent_error(double hw, double sw, double epsilon = kDenominatorEpsilon);
/// Same, with nullopt in place of the exception.
std::optional<double> try_percent_error(double hw, double sw, double epsilon = kDenominatorEpsilon);

struct ManeuverParams
{
    double v_z = 0.1;            ///< m/s
    double omega_z = 0.05;       ///< rad/s
    double duration = 1.0;       ///< s
    double base_distance = 1.0;  ///< initial r_c z, m
};

struct Scenario
{
    std::string name = "axial_default";
    SensorConstants constants{};
    std::string geometry = "default";  ///< "default", "table" or a geometry file path
    ManeuverParams maneuver{};
    NoiseModel noise{1e-6, 1};
    QFormat qformat{};
    ScalingScheme scaling{};
    double clock_hz = kDefaultClockHz;
};

Scenario default_scenario();

/// Flat "key = value" text; see docs/scenario-format.md. Throws ConfigError.
Scenario parse_scenario(std::istream& is);
Scenario load_scenario(const std::string& path);
std::string serialize_scenario(const Scenario& s);

BeaconGeometry resolve_geometry(const Scenario& s);

struct FrameRecord
{
    double t = 0.0;
    Vector6d truth = Vector6d::Zero();
    std::optional<Vector6d> sw;
    std::optional<Vector6d> hw;
    std::array<std::optional<double>, 6> abs_err{};  ///< |hw - sw|
    std::array<std::optional<double>, 6> pct_err{};  ///< percent_error where defined
    std::uint64_t overflow_count = 0;
    std::uint64_t cycles = 0;
    std::string status = "ok";
};

struct ChannelSummary
{
    std::optional<double> max_pct;
    std::optional<double> mean_pct;
    std::size_t defined = 0;
    std::optional<double> max_abs;
};

struct ComparisonReport
{
    std::string scenario;
    std::string qformat;
    double clock_hz = kDefaultClockHz;
    std::uint64_t cycles_per_pass = 0;
    std::vector<FrameRecord> frames;
    std::array<ChannelSummary, 6> summary{};
    std::size_t failed_frames = 0;

    double latency_us() const;
    /// Human-readable statement of how latency_us was obtained.
    std::string latency_model() const;

    /// Recomputes summary and failed_frames from frames.
    void summarize();
};

/// Frames are independent; a failing frame is recorded and the run continues.
ComparisonReport run_comparison(const Scenario& scenario);

enum class ReportFormat
{
    csv,
    json,
};

/// Column order: t, true(6), sw(6), hw(6), abs_err(6), pct_err(6), overflow_count, cycles, status.
void write_report_csv(std::ostream& os, const ComparisonReport& report);
void write_report_json(std::ostream& os, const ComparisonReport& report);
ComparisonReport read_report_json(std::istream& is);

/// Throws std::runtime_error naming the path on I/O failure.
void emit_report(const ComparisonReport& report, ReportFormat format, const std::string& path);

std::vector<std::string> csv_header();

}  // namespace ivisnav

#endif  // IVISNAV_HARNESS_HPP
