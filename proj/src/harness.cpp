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

#include "ivisnav/harness.hpp"

#include "ivisnav/errors.hpp"
#include "ivisnav/text.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace ivisnav {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// percent error

double percent_error(double hw, double sw, double epsilon)
{
    if (!(std::abs(sw) > epsilon))
        throw DenominatorTooSmall(sw);
    return std::abs(hw - sw) / std::abs(sw) * 100.0;
}

std::optional<double> try_percent_error(double hw, double sw, double epsilon)
{
    if (!(std::abs(sw) > epsilon))
        return std::nullopt;
    return std::abs(hw - sw) / std::abs(sw) * 100.0;
}

// ---------------------------------------------------------------------------
// scenario text format

namespace {

const char* columns_name(ScalingScheme::Columns c)
{
    return c == ScalingScheme::Columns::unit ? "unit" : "none";
}

const char* weight_name(ScalingScheme::Weight w)
{
    return w == ScalingScheme::Weight::max_abs ? "max_abs" : "none";
}

double number(const std::string& key, const std::string& value)
{
    const auto x = text::parse_double(value);
    if (!x || !std::isfinite(*x))
        throw ConfigError(key, "expected a finite number, got '" + value + "'");
    return *x;
}

double positive(const std::string& key, const std::string& value)
{
    const double x = number(key, value);
    if (!(x > 0.0))
        throw ConfigError(key, "must be positive, got '" + value + "'");
    return x;
}

template <typename Int>
Int integer(const std::string& key, const std::string& value)
{
    Int x{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), x);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        throw ConfigError(key, "expected an integer, got '" + value + "'");
    return x;
}

}  // namespace

Scenario default_scenario()
{
    return Scenario{};
}

Scenario parse_scenario(std::istream& is)
{
    Scenario s;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"name",
         [&](const std::string& k, const std::string& v) {
             if (v.empty() || v.find_first_of(" \t,\"") != std::string::npos)
                 throw ConfigError(k, "must be a non-empty token without spaces, commas or quotes");
             s.name = v;
         }},
        {"sensor.f0", [&](const std::string& k, const std::string& v) { s.constants.f0 = positive(k, v); }},
        {"sensor.c", [&](const std::string& k, const std::string& v) { s.constants.c = positive(k, v); }},
        {"sensor.dt", [&](const std::string& k, const std::string& v) { s.constants.dt = positive(k, v); }},
        {"geometry",
         [&](const std::string& k, const std::string& v) {
             if (v.empty())
                 throw ConfigError(k, "must be 'default', 'table' or a file path");
             s.geometry = v;
         }},
        {"maneuver.v_z", [&](const std::string& k, const std::string& v) { s.maneuver.v_z = number(k, v); }},
        {"maneuver.omega_z", [&](const std::string& k, const std::string& v) { s.maneuver.omega_z = number(k, v); }},
        {"maneuver.duration",
         [&](const std::string& k, const std::string& v) { s.maneuver.duration = positive(k, v); }},
        {"maneuver.base_distance",
         [&](const std::string& k, const std::string& v) { s.maneuver.base_distance = positive(k, v); }},
        {"noise.sigma_phi",
         [&](const std::string& k, const std::string& v) {
             const double x = number(k, v);
             if (x < 0.0)
                 throw ConfigError(k, "must be non-negative");
             s.noise.sigma_phi = x;
         }},
        {"noise.seed", [&](const std::string& k, const std::string& v) { s.noise.seed = integer<std::uint64_t>(k, v); }},
        {"qformat",
         [&](const std::string& k, const std::string& v) {
             try {
                 s.qformat = QFormat::parse(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(k, e.what());
             }
         }},
        {"scaling.y_shift",
         [&](const std::string& k, const std::string& v) {
             const int x = integer<int>(k, v);
             if (x < -30 || x > 30)
                 throw ConfigError(k, "must lie in [-30, 30]");
             s.scaling.y_shift = x;
         }},
        {"scaling.h_columns",
         [&](const std::string& k, const std::string& v) {
             if (v == "unit")
                 s.scaling.h_columns = ScalingScheme::Columns::unit;
             else if (v == "none")
                 s.scaling.h_columns = ScalingScheme::Columns::none;
             else
                 throw ConfigError(k, "expected 'unit' or 'none', got '" + v + "'");
         }},
        {"scaling.weight",
         [&](const std::string& k, const std::string& v) {
             if (v == "max_abs")
                 s.scaling.weight = ScalingScheme::Weight::max_abs;
             else if (v == "none")
                 s.scaling.weight = ScalingScheme::Weight::none;
             else
                 throw ConfigError(k, "expected 'max_abs' or 'none', got '" + v + "'");
         }},
        {"timing.clock_hz", [&](const std::string& k, const std::string& v) { s.clock_hz = positive(k, v); }},
    };

    std::map<std::string, int> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos)
            body = body.substr(0, hash);
        body = text::trim(body);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key(text::trim(body.substr(0, eq)));
        const std::string value(text::trim(body.substr(eq + 1)));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError(key, "unknown key");
        if (seen[key]++ > 0)
            throw ConfigError(key, "given more than once");
        it->second(key, value);
    }
    return s;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open scenario file '" + path + "'");
    return parse_scenario(in);
}

std::string serialize_scenario(const Scenario& s)
{
    using text::format_double;
    std::ostringstream os;
    os << "# ivisnav scenario\n"
       << "name = " << s.name << '\n'
       << "\n# sensor constants (Hz, m/s, s)\n"
       << "sensor.f0 = " << format_double(s.constants.f0) << '\n'
       << "sensor.c = " << format_double(s.constants.c) << '\n'
       << "sensor.dt = " << format_double(s.constants.dt) << '\n'
       << "\n# 'default' (bench directions, mounting ring), 'table' (common origin) or a file path\n"
       << "geometry = " << s.geometry << '\n'
       << "\n# constant-rate axial maneuver\n"
       << "maneuver.v_z = " << format_double(s.maneuver.v_z) << '\n'
       << "maneuver.omega_z = " << format_double(s.maneuver.omega_z) << '\n'
       << "maneuver.duration = " << format_double(s.maneuver.duration) << '\n'
       << "maneuver.base_distance = " << format_double(s.maneuver.base_distance) << '\n'
       << "\nnoise.sigma_phi = " << format_double(s.noise.sigma_phi) << '\n'
       << "noise.seed = " << s.noise.seed << '\n'
       << "\nqformat = " << s.qformat.str() << '\n'
       << "scaling.y_shift = " << s.scaling.y_shift << '\n'
       << "scaling.h_columns = " << columns_name(s.scaling.h_columns) << '\n'
       << "scaling.weight = " << weight_name(s.scaling.weight) << '\n'
       << "\n# assumed programmable-logic clock for the latency model\n"
       << "timing.clock_hz = " << format_double(s.clock_hz) << '\n';
    return os.str();
}

BeaconGeometry resolve_geometry(const Scenario& s)
{
    if (s.geometry == "default")
        return default_geometry();
    if (s.geometry == "table")
        return table_geometry();
    try {
        return load_geometry(s.geometry);
    } catch (const std::exception& e) {
        throw ConfigError("geometry", e.what());
    }
}

// ---------------------------------------------------------------------------
// comparison

double ComparisonReport::latency_us() const
{
    return static_cast<double>(cycles_per_pass) / clock_hz * 1.0e6;
}

std::string ComparisonReport::latency_model() const
{
    return "latency_us = cycles_per_pass / clock_hz * 1e6, assuming a " + text::format_double(clock_hz / 1.0e6)
           + " MHz programmable-logic clock (model output, not a measurement)";
}

void ComparisonReport::summarize()
{
    summary = {};
    failed_frames = 0;
    std::array<double, 6> pct_sum{};
    for (const auto& f : frames) {
        if (f.status != "ok")
            ++failed_frames;
        for (std::size_t c = 0; c < 6; ++c) {
            auto& s = summary[c];
            if (f.pct_err[c]) {
                ++s.defined;
                pct_sum[c] += *f.pct_err[c];
                s.max_pct = s.max_pct ? std::max(*s.max_pct, *f.pct_err[c]) : *f.pct_err[c];
            }
            if (f.abs_err[c])
                s.max_abs = s.max_abs ? std::max(*s.max_abs, *f.abs_err[c]) : *f.abs_err[c];
        }
    }
    for (std::size_t c = 0; c < 6; ++c)
        if (summary[c].defined > 0)
            summary[c].mean_pct = pct_sum[c] / static_cast<double>(summary[c].defined);
}

ComparisonReport run_comparison(const Scenario& scenario)
{
    scenario.constants.validate();
    const BeaconGeometry geometry = resolve_geometry(scenario);
    const auto states = axial_maneuver(scenario.maneuver.duration, scenario.constants.dt, scenario.maneuver.v_z,
                                       scenario.maneuver.omega_z,
                                       Eigen::Vector3d(0.0, 0.0, scenario.maneuver.base_distance));

    ComparisonReport report;
    report.scenario = scenario.name;
    report.qformat = scenario.qformat.str();
    report.clock_hz = scenario.clock_hz;
    report.cycles_per_pass = cycle_model::pipeline(6, 6);
    report.frames.reserve(states.size());

    BusState bus(scenario.qformat);
    for (std::size_t k = 0; k < states.size(); ++k) {
        const TrueState& state = states[k];
        FrameRecord rec;
        rec.t = state.t;
        rec.truth << state.v_c, state.omega;

        try {
            const MeasurementFrame frame = synthesize_frame(state, geometry, scenario.constants, scenario.noise, k);
            const EstimationProblem problem = make_problem(frame, geometry);

            try {
                rec.sw = wls_solve(problem, scenario.constants).stacked();
            } catch (const SingularSystem&) {
                rec.status = "SingularSystem";
            }

            const EncodedProblem encoded = encode_problem(problem, scenario.constants, scenario.scaling,
                                                          scenario.qformat);
            const TransactionResult tr = run_transaction(bus, encoded);
            rec.overflow_count = encoded.encode_flags.count() + tr.overflow_count;
            rec.cycles = tr.cycle_word;
            if (tr.error == ErrorCode::none)
                rec.hw = tr.estimate.stacked();
            else if (rec.status == "ok")
                rec.status = to_string(tr.error);
        } catch (const BeamParallel&) {
            rec.status = "BeamParallel";
        } catch (const std::exception&) {
            rec.status = "error";
            if (bus.state() != ControlState::idle)
                bus.reset();
        }

        if (rec.sw && rec.hw) {
            for (std::size_t c = 0; c < 6; ++c) {
                const auto i = static_cast<Eigen::Index>(c);
                rec.abs_err[c] = std::abs((*rec.hw)(i) - (*rec.sw)(i));
                rec.pct_err[c] = try_percent_error((*rec.hw)(i), (*rec.sw)(i));
            }
        }
        report.frames.push_back(std::move(rec));
    }
    report.summarize();
    return report;
}

// ---------------------------------------------------------------------------
// reports

namespace {

std::string cell(const std::optional<double>& x)
{
    return x ? text::format_double(*x) : "NA";
}

ordered_json opt_json(const std::optional<double>& x)
{
    return x ? ordered_json(*x) : ordered_json(nullptr);
}

std::optional<double> json_opt(const ordered_json& j)
{
    if (j.is_null())
        return std::nullopt;
    return j.get<double>();
}

ordered_json vec_json(const std::optional<Vector6d>& v)
{
    if (!v)
        return nullptr;
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < 6; ++i)
        a.push_back((*v)(i));
    return a;
}

std::optional<Vector6d> json_vec(const ordered_json& j)
{
    if (j.is_null())
        return std::nullopt;
    Vector6d v;
    for (Eigen::Index i = 0; i < 6; ++i)
        v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

}  // namespace

std::vector<std::string> csv_header()
{
    std::vector<std::string> h{"t"};
    for (const char* prefix : {"true_", "sw_", "hw_", "abs_err_", "pct_err_"})
        for (const char* ch : kChannelNames)
            h.push_back(std::string(prefix) + ch);
    h.insert(h.end(), {"overflow_count", "cycles", "status"});
    return h;
}

void write_report_csv(std::ostream& os, const ComparisonReport& report)
{
    const auto header = csv_header();
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << '\n';

    for (const auto& f : report.frames) {
        os << text::format_double(f.t);
        for (Eigen::Index i = 0; i < 6; ++i)
            os << ',' << text::format_double(f.truth(i));
        for (const auto* est : {&f.sw, &f.hw})
            for (Eigen::Index i = 0; i < 6; ++i)
                os << ',' << (*est ? text::format_double((**est)(i)) : std::string("NA"));
        for (const auto& e : f.abs_err)
            os << ',' << cell(e);
        for (const auto& e : f.pct_err)
            os << ',' << cell(e);
        os << ',' << f.overflow_count << ',' << f.cycles << ',' << f.status << '\n';
    }
}

void write_report_json(std::ostream& os, const ComparisonReport& report)
{
    ordered_json j;
    j["scenario"] = report.scenario;
    j["qformat"] = report.qformat;
    j["latency"] = {
        {"cycles_per_pass", report.cycles_per_pass},
        {"clock_hz", report.clock_hz},
        {"microseconds", report.latency_us()},
        {"model", report.latency_model()},
    };

    ordered_json channels = ordered_json::array();
    for (std::size_t c = 0; c < 6; ++c) {
        const auto& s = report.summary[c];
        channels.push_back({
            {"channel", kChannelNames[c]},
            {"max_pct_error", opt_json(s.max_pct)},
            {"mean_pct_error", opt_json(s.mean_pct)},
            {"defined_frames", s.defined},
            {"max_abs_error", opt_json(s.max_abs)},
        });
    }
    j["summary"] = {
        {"frames", report.frames.size()},
        {"failed_frames", report.failed_frames},
        {"channels", channels},
    };

    ordered_json frames = ordered_json::array();
    for (const auto& f : report.frames) {
        ordered_json abs_err = ordered_json::array();
        ordered_json pct_err = ordered_json::array();
        for (std::size_t c = 0; c < 6; ++c) {
            abs_err.push_back(opt_json(f.abs_err[c]));
            pct_err.push_back(opt_json(f.pct_err[c]));
        }
        frames.push_back({
            {"t", f.t},
            {"truth", vec_json(f.truth)},
            {"sw", vec_json(f.sw)},
            {"hw", vec_json(f.hw)},
            {"abs_err", abs_err},
            {"pct_err", pct_err},
            {"overflow_count", f.overflow_count},
            {"cycles", f.cycles},
            {"status", f.status},
        });
    }
    j["frames"] = std::move(frames);
    os << j.dump(2) << '\n';
}

ComparisonReport read_report_json(std::istream& is)
{
    const ordered_json j = ordered_json::parse(is);
    ComparisonReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.qformat = j.at("qformat").get<std::string>();
    r.cycles_per_pass = j.at("latency").at("cycles_per_pass").get<std::uint64_t>();
    r.clock_hz = j.at("latency").at("clock_hz").get<double>();

    for (const auto& jf : j.at("frames")) {
        FrameRecord f;
        f.t = jf.at("t").get<double>();
        f.truth = *json_vec(jf.at("truth"));
        f.sw = json_vec(jf.at("sw"));
        f.hw = json_vec(jf.at("hw"));
        for (std::size_t c = 0; c < 6; ++c) {
            f.abs_err[c] = json_opt(jf.at("abs_err").at(c));
            f.pct_err[c] = json_opt(jf.at("pct_err").at(c));
        }
        f.overflow_count = jf.at("overflow_count").get<std::uint64_t>();
        f.cycles = jf.at("cycles").get<std::uint64_t>();
        f.status = jf.at("status").get<std::string>();
        r.frames.push_back(std::move(f));
    }

    const auto& summary = j.at("summary");
    r.failed_frames = summary.at("failed_frames").get<std::size_t>();
    for (std::size_t c = 0; c < 6; ++c) {
        const auto& jc = summary.at("channels").at(c);
        auto& s = r.summary[c];
        s.max_pct = json_opt(jc.at("max_pct_error"));
        s.mean_pct = json_opt(jc.at("mean_pct_error"));
        s.defined = jc.at("defined_frames").get<std::size_t>();
        s.max_abs = json_opt(jc.at("max_abs_error"));
    }
    return r;
}

void emit_report(const ComparisonReport& report, ReportFormat format, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open report file '" + path + "' for writing");
    if (format == ReportFormat::csv)
        write_report_csv(out, report);
    else
        write_report_json(out, report);
    out.flush();
    if (!out)
        throw std::runtime_error("failed writing report file '" + path + "'");
}

}  // namespace ivisnav
