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


// Command-line front end. Exit status: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include "ivisnav/bus.hpp"
#include "ivisnav/errors.hpp"
#include "ivisnav/harness.hpp"
#include "ivisnav/sensor_sim.hpp"
#include "ivisnav/text.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace ivisnav;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct FrameInputs
{
    std::string frame_file;
    std::string scenario_file;
    std::size_t index = 0;
};

Scenario scenario_or_default(const std::string& path)
{
    return path.empty() ? default_scenario() : load_scenario(path);
}

void add_frame_inputs(CLI::App* cmd, FrameInputs& in)
{
    cmd->add_option("frame-file", in.frame_file, "Frame records, one per line")->required()->check(CLI::ExistingFile);
    cmd->add_option("--scenario", in.scenario_file,
                    "Scenario supplying constants, geometry, Q-format and scaling (default scenario if omitted)")
        ->check(CLI::ExistingFile);
}

std::string vec_text(const Vector6d& x)
{
    std::string s;
    for (int i = 0; i < 6; ++i) {
        if (i)
            s += ' ';
        s += text::format_double(x(i));
    }
    return s;
}

int cmd_run(const std::string& scenario_file, const std::string& out, const std::string& format_name)
{
    const Scenario s = load_scenario(scenario_file);
    const ComparisonReport report = run_comparison(s);

    if (!out.empty()) {
        ReportFormat format = ReportFormat::csv;
        if (format_name == "json" || (format_name.empty() && out.size() >= 5 && out.ends_with(".json")))
            format = ReportFormat::json;
        emit_report(report, format, out);
    }

    std::cout << "scenario " << report.scenario << ": " << report.frames.size() << " frames, "
              << report.failed_frames << " failed, qformat " << report.qformat << '\n';
    for (std::size_t c = 0; c < kChannelNames.size(); ++c) {
        const ChannelSummary& sum = report.summary[c];
        std::cout << "  " << kChannelNames[c] << "  max_pct "
                  << (sum.max_pct ? text::format_double(*sum.max_pct) : "NA") << "  max_abs "
                  << (sum.max_abs ? text::format_double(*sum.max_abs) : "NA") << '\n';
    }
    std::cout << "latency: " << report.latency_model() << '\n';
    if (!out.empty())
        std::cout << "report written to " << out << '\n';
    return 0;
}

int cmd_solve(const FrameInputs& in)
{
    const Scenario s = scenario_or_default(in.scenario_file);
    const BeaconGeometry geometry = resolve_geometry(s);
    const auto frames = load_frames(in.frame_file);

    std::cout << "# frame t path vx vy vz wx wy wz\n";
    BusState bus(s.qformat);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        SensorConstants constants = s.constants;
        constants.dt = frames[i].dt;
        const EstimationProblem problem = make_problem(frames[i], geometry);
        const std::string prefix = std::to_string(i) + ' ' + text::format_double(frames[i].t);

        try {
            std::cout << prefix << " sw " << vec_text(wls_solve(problem, constants).stacked()) << '\n';
        } catch (const SingularSystem& e) {
            std::cout << prefix << " sw error " << e.what() << '\n';
        }
        const TransactionResult hw = run_transaction(bus, encode_problem(problem, constants, s.scaling, s.qformat));
        if (hw.error == ErrorCode::none)
            std::cout << prefix << " hw " << vec_text(hw.estimate.stacked()) << '\n';
        else
            std::cout << prefix << " hw error " << to_string(hw.error) << '\n';
    }
    return 0;
}

int cmd_inspect(const FrameInputs& in, const std::string& out, const std::string& bus_trace)
{
    const Scenario s = scenario_or_default(in.scenario_file);
    const BeaconGeometry geometry = resolve_geometry(s);
    const auto frames = load_frames(in.frame_file);
    if (in.index >= frames.size())
        throw std::runtime_error("frame index " + std::to_string(in.index) + " out of range; file has "
                                 + std::to_string(frames.size()) + " frames");

    const MeasurementFrame& frame = frames[in.index];
    SensorConstants constants = s.constants;
    constants.dt = frame.dt;
    const EncodedProblem encoded = encode_problem(make_problem(frame, geometry), constants, s.scaling, s.qformat);

    PipelineTrace trace;
    CoreOptions options;
    options.trace = &trace;
    std::optional<HwResult> result;
    std::string failure;
    try {
        result = hw_wls_pipeline(encoded, options);
    } catch (const SingularMatrix& e) {
        failure = e.what();
    }

    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file)
            throw std::runtime_error("cannot open '" + out + "' for writing");
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os << "# frame " << in.index << " t " << text::format_double(frame.t) << " qformat " << s.qformat.str() << '\n';
    trace.write(os);
    if (result) {
        os << "# cycles";
        for (const auto& b : result->cycles.per_block)
            os << ' ' << b.name << '=' << b.cycles;
        os << " total=" << result->cycles.total() << '\n';
        os << "# overflow " << result->flags.count() << '\n';
        os << "# estimate " << vec_text(result->estimate.stacked()) << '\n';
    } else {
        os << "# error " << failure << '\n';
    }
    if (!os)
        throw std::runtime_error("failed writing '" + (out.empty() ? std::string("stdout") : out) + "'");

    if (!bus_trace.empty()) {
        BusState bus(s.qformat);
        bus.enable_trace(true);
        run_transaction(bus, encoded);
        std::ofstream tf(bus_trace);
        if (!tf)
            throw std::runtime_error("cannot open '" + bus_trace + "' for writing");
        bus.write_trace(tf);
        if (!tf)
            throw std::runtime_error("failed writing '" + bus_trace + "'");
    }
    return failure.empty() ? 0 : kExitRuntime;
}

int cmd_gen_scenario(const std::string& out)
{
    const std::string body = serialize_scenario(default_scenario());
    if (out == "-") {
        std::cout << body;
        return 0;
    }
    std::ofstream f(out);
    if (!f)
        throw std::runtime_error("cannot open '" + out + "' for writing");
    f << body;
    if (!f)
        throw std::runtime_error("failed writing '" + out + "'");
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_gen_frames(const std::string& scenario_file, const std::string& out)
{
    const Scenario s = scenario_or_default(scenario_file);
    const BeaconGeometry geometry = resolve_geometry(s);
    const auto states = axial_maneuver(s.maneuver.duration, s.constants.dt, s.maneuver.v_z, s.maneuver.omega_z,
                                       Eigen::Vector3d(0.0, 0.0, s.maneuver.base_distance));
    std::vector<MeasurementFrame> frames;
    frames.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        frames.push_back(synthesize_frame(states[i], geometry, s.constants, s.noise, i));

    std::ofstream f(out);
    if (!f)
        throw std::runtime_error("cannot open '" + out + "' for writing");
    write_frames(f, frames);
    if (!f)
        throw std::runtime_error("failed writing '" + out + "'");
    std::cout << "wrote " << frames.size() << " frames to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rate-estimation core emulator: reference solver, fixed-point datapath and register-bus model"};
    app.require_subcommand(1);

    std::string scenario_file;
    std::string out;
    std::string format_name;
    auto* run = app.add_subcommand("run", "Run a scenario through both estimation paths and report the differences");
    run->add_option("scenario-file", scenario_file, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Report path; .json selects JSON unless --format is given");
    run->add_option("--format", format_name, "Report format")->check(CLI::IsMember({"csv", "json"}));

    FrameInputs solve_in;
    auto* solve = app.add_subcommand("solve", "Solve every frame of a frame file on both paths");
    add_frame_inputs(solve, solve_in);

    FrameInputs inspect_in;
    std::string inspect_out;
    std::string bus_trace;
    auto* inspect = app.add_subcommand("inspect-pipeline", "Dump each datapath stage of one frame as hex words");
    add_frame_inputs(inspect, inspect_in);
    inspect->add_option("--frame", inspect_in.index, "Zero-based frame index")->check(CLI::NonNegativeNumber);
    inspect->add_option("--out", inspect_out, "Dump path (stdout if omitted)");
    inspect->add_option("--bus-trace", bus_trace, "Also write the register-bus transaction trace here");

    std::string gen_out = "default.scenario";
    auto* gen = app.add_subcommand("gen-scenario", "Write the default axial-maneuver scenario");
    gen->add_option("--out", gen_out, "Output path, '-' for stdout")->capture_default_str();

    std::string frames_scenario;
    std::string frames_out;
    auto* gen_frames = app.add_subcommand("gen-frames", "Synthesize a scenario's frames into a frame file");
    gen_frames->add_option("--scenario", frames_scenario, "Scenario file (default scenario if omitted)")
        ->check(CLI::ExistingFile);
    gen_frames->add_option("--out", frames_out, "Frame file path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*run)
            return cmd_run(scenario_file, out, format_name);
        if (*solve)
            return cmd_solve(solve_in);
        if (*inspect)
            return cmd_inspect(inspect_in, inspect_out, bus_trace);
        if (*gen)
            return cmd_gen_scenario(gen_out);
        if (*gen_frames)
            return cmd_gen_frames(frames_scenario, frames_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
