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

// Behavioral models of the programmable-logic compute blocks and the
// least-squares pipeline built from them.
//
// Everything between the ports of the inverse block is binary32; everything
// else is fixed point. Cycle counts come from a structural model (see
// cycle_model below) that depends only on matrix dimensions.

#ifndef IVISNAV_HW_DATAPATH_HPP
#define IVISNAV_HW_DATAPATH_HPP

#include "ivisnav/estimator.hpp"
#include "ivisnav/fixed_point.hpp"
#include "ivisnav/ldu.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ivisnav {

inline constexpr double kDefaultClockHz = 100.0e6;

struct CycleReport
{
    struct Block
    {
        std::string name;
        std::uint64_t cycles = 0;
    };

    std::vector<Block> per_block;  ///< in pipeline order
    double clock_hz = kDefaultClockHz;

    void add(std::string name, std::uint64_t cycles);
    void append(const CycleReport& other);

    std::uint64_t total() const;
    std::uint64_t cycles_of(const std::string& name) const;
    double microseconds() const;
};

/// Latency model of each block. Constants are per-operator pipeline depths
/// typical of 100 MHz fabric implementations.
namespace cycle_model {

inline constexpr std::uint64_t kMacPipelineDepth = 3;
inline constexpr std::uint64_t kConvertLatency = 4;
inline constexpr std::uint64_t kFloatMacLatency = 7;
inline constexpr std::uint64_t kFloatDivLatency = 16;

/// One element per cycle through the reorder buffer.
std::uint64_t transpose(Eigen::Index rows, Eigen::Index cols);
/// Wavefront latency of an m x n output-stationary array with inner
/// dimension k, plus the MAC pipeline depth.
std::uint64_t systolic(Eigen::Index m, Eigen::Index k, Eigen::Index n);
std::uint64_t matvec(Eigen::Index rows, Eigen::Index cols);
/// Streaming fixed<->float converter at the inverse ports.
std::uint64_t convert(Eigen::Index rows, Eigen::Index cols);
std::uint64_t ldu_decompose(Eigen::Index n);
std::uint64_t triangular_inverse(Eigen::Index n);
/// Back substitution through U, one column of D^-1 L^-1 per issue slot group.
std::uint64_t back_substitution(Eigen::Index n);

/// Whole least-squares pass for an n-row, m-column H; equals the total of
/// the CycleReport that hw_wls_core produces for those dimensions.
std::uint64_t pipeline(Eigen::Index n, Eigen::Index m);

}  // namespace cycle_model

/// Intermediate matrices of one pipeline pass, for cross-checking against RTL.
struct PipelineTrace
{
    struct Stage
    {
        std::string name;
        std::string encoding;  ///< "fixed" (raw words, with qformat) or "float32" (IEEE bits)
        std::string qformat;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        std::vector<std::uint32_t> words;  ///< row-major
    };

    std::vector<Stage> stages;

    void record(std::string name, const FixedMatrix& m);
    void record(std::string name, const Eigen::MatrixXf& m);

    /// Text dump: a header line per stage followed by one line of hex words per row.
    void write(std::ostream& os) const;
};

FixedMatrix fx_transpose(const FixedMatrix& m, CycleReport& cycles);
FixedMatrix fx_transpose(const FixedMatrix& m);

/// Cycle-stepped output-stationary systolic array. Each PE owns a MacUnit and
/// sees A(i,k), B(k,j) in ascending k as the skewed wavefronts pass.
FixedMatrix fx_matmul_systolic(const FixedMatrix& a, const FixedMatrix& b, OverflowFlags& flags,
                               CycleReport& cycles);
FixedMatrix fx_matmul_systolic(const FixedMatrix& a, const FixedMatrix& b);

/// One MAC per output row fed by the time-aligned matrix and vector streams.
FixedVector fx_matvec(const FixedMatrix& m, const FixedVector& y, OverflowFlags& flags, CycleReport& cycles);
FixedVector fx_matvec(const FixedMatrix& m, const FixedVector& y);

/// Fixed -> binary32 at the inverse input port (exact up to float rounding).
Eigen::MatrixXf to_float32(const FixedMatrix& m);
/// binary32 -> fixed at the inverse output port.
FixedMatrix from_float32(const Eigen::MatrixXf& m, QFormat fmt, OverflowFlags& flags);

/// Pre-scaling applied on the processing-system side before words are sent
/// to the core, and undone analytically on the estimate.
struct ScalingScheme
{
    enum class Columns
    {
        unit,  ///< divide each column of H by its Euclidean norm
        none,
    };
    enum class Weight
    {
        max_abs,  ///< divide W by max |W(i,j)|; the estimate is invariant to it
        none,
    };

    Columns h_columns = Columns::unit;
    int y_shift = 10;  ///< y_tilde multiplied by 2^y_shift
    Weight weight = Weight::max_abs;

    friend bool operator==(const ScalingScheme&, const ScalingScheme&) = default;
};

/// Problem in wire format plus the constants needed to descale the result.
struct EncodedProblem
{
    FixedMatrix H;
    FixedMatrix W;
    FixedVector y;
    Eigen::VectorXd column_scale;  ///< H_wire = H * diag(column_scale)
    double y_scale = 1.0;
    double output_gain = 1.0;  ///< lambda / (4 pi)
    OverflowFlags encode_flags;
};

EncodedProblem encode_problem(const EstimationProblem& problem, const SensorConstants& constants,
                              const ScalingScheme& scaling, QFormat fmt);

/// x = output_gain * column_scale .* x_wire / y_scale, in double precision.
RateEstimate decode_estimate(const FixedVector& x_wire, const EncodedProblem& encoded);

struct CoreOptions
{
    LduOptions ldu{};
    PipelineTrace* trace = nullptr;
};

/// The programmable-logic part: (H^T W H)^-1 H^T W y on wire-format words.
/// Throws SingularMatrix when the inverse block's decomposition fails.
FixedVector hw_wls_core(const FixedMatrix& h, const FixedMatrix& w, const FixedVector& y, OverflowFlags& flags,
                        CycleReport& cycles, const CoreOptions& options = {});

struct HwResult
{
    RateEstimate estimate;
    FixedVector x_wire;
    CycleReport cycles;
    OverflowFlags flags;  ///< encode plus core saturation events
};

HwResult hw_wls_pipeline(const EncodedProblem& encoded, const CoreOptions& options = {});
HwResult hw_wls_pipeline(const EstimationProblem& problem, const SensorConstants& constants,
                         const ScalingScheme& scaling = {}, QFormat fmt = {}, const CoreOptions& options = {});

}  // namespace ivisnav

#endif  // IVISNAV_HW_DATAPATH_HPP
