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

#include "ivisnav/hw_datapath.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace ivisnav {

namespace {

std::uint64_t dim(Eigen::Index n)
{
    return static_cast<std::uint64_t>(n);
}

void require_same_format(const FixedMatrix& a, const FixedMatrix& b, const char* what)
{
    if (a.fmt() != b.fmt())
        throw std::invalid_argument(std::string(what) + ": operands use different Q-formats");
}

}  // namespace

// ---------------------------------------------------------------------------
// CycleReport

void CycleReport::add(std::string name, std::uint64_t cycles)
{
    per_block.push_back({std::move(name), cycles});
}

void CycleReport::append(const CycleReport& other)
{
    per_block.insert(per_block.end(), other.per_block.begin(), other.per_block.end());
}

std::uint64_t CycleReport::total() const
{
    return std::accumulate(per_block.begin(), per_block.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const Block& b) { return acc + b.cycles; });
}

std::uint64_t CycleReport::cycles_of(const std::string& name) const
{
    std::uint64_t sum = 0;
    for (const auto& b : per_block)
        if (b.name == name)
            sum += b.cycles;
    return sum;
}

double CycleReport::microseconds() const
{
    return static_cast<double>(total()) / clock_hz * 1.0e6;
}

// ---------------------------------------------------------------------------
// cycle model

namespace cycle_model {

std::uint64_t transpose(Eigen::Index rows, Eigen::Index cols)
{
    return dim(rows) * dim(cols);
}

std::uint64_t systolic(Eigen::Index m, Eigen::Index k, Eigen::Index n)
{
    const std::uint64_t span = dim(m) + dim(k) + dim(n);
    return (span >= 2 ? span - 2 : 0) + kMacPipelineDepth;
}

std::uint64_t matvec(Eigen::Index rows, Eigen::Index cols)
{
    // rows run in parallel; the stream length is the inner dimension
    (void)rows;
    return dim(cols) + kMacPipelineDepth;
}

std::uint64_t convert(Eigen::Index rows, Eigen::Index cols)
{
    return dim(rows) * dim(cols) + kConvertLatency;
}

std::uint64_t ldu_decompose(Eigen::Index n)
{
    // pivot i: an i-term dot product, one divide, then 2(n-i)-1 issue slots
    std::uint64_t cycles = 0;
    for (std::uint64_t i = 0; i < dim(n); ++i)
        cycles += i * kFloatMacLatency + kFloatDivLatency + (2 * (dim(n) - i) - 1);
    return cycles;
}

std::uint64_t triangular_inverse(Eigen::Index n)
{
    // forward substitution for L^-1 overlapped with the row divisions by D
    const std::uint64_t tri = dim(n) * (dim(n) > 0 ? dim(n) - 1 : 0) / 2
                              + (dim(n) > 0 ? dim(n) - 1 : 0) * kFloatMacLatency;
    const std::uint64_t diag = dim(n) + kFloatDivLatency;
    return std::max(tri, diag);
}

std::uint64_t back_substitution(Eigen::Index n)
{
    return dim(n) * dim(n) + dim(n) * kFloatMacLatency;
}

std::uint64_t pipeline(Eigen::Index n, Eigen::Index m)
{
    return transpose(n, m) + systolic(m, n, n) + systolic(m, n, m) + convert(m, m) + ldu_decompose(m)
           + triangular_inverse(m) + back_substitution(m) + convert(m, m) + systolic(m, m, n) + matvec(m, n);
}

}  // namespace cycle_model

// ---------------------------------------------------------------------------
// PipelineTrace

void PipelineTrace::record(std::string name, const FixedMatrix& m)
{
    Stage s{std::move(name), "fixed", m.fmt().str(), m.rows(), m.cols(), {}};
    s.words.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            s.words.push_back(static_cast<std::uint32_t>(m.raw()(r, c)));
    stages.push_back(std::move(s));
}

void PipelineTrace::record(std::string name, const Eigen::MatrixXf& m)
{
    Stage s{std::move(name), "float32", "-", m.rows(), m.cols(), {}};
    s.words.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            s.words.push_back(std::bit_cast<std::uint32_t>(m(r, c)));
    stages.push_back(std::move(s));
}

void PipelineTrace::write(std::ostream& os) const
{
    os << "# ivisnav pipeline trace: stage <name> <encoding> <qformat> <rows> <cols>, then rows of hex words\n";
    char buf[16];
    for (const auto& s : stages) {
        os << "stage " << s.name << ' ' << s.encoding << ' ' << s.qformat << ' ' << s.rows << ' ' << s.cols << '\n';
        for (Eigen::Index r = 0; r < s.rows; ++r) {
            for (Eigen::Index c = 0; c < s.cols; ++c) {
                std::snprintf(buf, sizeof buf, "%s0x%08X", c == 0 ? "" : " ",
                              static_cast<unsigned>(s.words[static_cast<std::size_t>(r * s.cols + c)]));
                os << buf;
            }
            os << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// blocks

FixedMatrix fx_transpose(const FixedMatrix& m, CycleReport& cycles)
{
    // The stream arrives row-major and leaves column-major.
    FixedMatrix out(m.cols(), m.rows(), m.fmt());
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            out.raw()(c, r) = m.raw()(r, c);
    cycles.add("transpose", cycle_model::transpose(m.rows(), m.cols()));
    return out;
}

FixedMatrix fx_transpose(const FixedMatrix& m)
{
    CycleReport ignored;
    return fx_transpose(m, ignored);
}

FixedMatrix fx_matmul_systolic(const FixedMatrix& a, const FixedMatrix& b, OverflowFlags& flags,
                               CycleReport& cycles)
{
    require_same_format(a, b, "fx_matmul_systolic");
    if (a.cols() != b.rows())
        throw std::invalid_argument("fx_matmul_systolic: inner dimensions differ");

    const Eigen::Index m = a.rows();
    const Eigen::Index k = a.cols();
    const Eigen::Index n = b.cols();
    const QFormat fmt = a.fmt();

    struct Operand
    {
        std::int32_t value = 0;
        bool valid = false;
    };

    const auto at = [n](Eigen::Index i, Eigen::Index j) { return static_cast<std::size_t>(i * n + j); };
    std::vector<Operand> a_reg(static_cast<std::size_t>(m * n));
    std::vector<Operand> b_reg(static_cast<std::size_t>(m * n));
    std::vector<MacUnit> pe(static_cast<std::size_t>(m * n), MacUnit(fmt));

    // Row i of A enters from the left delayed by i cycles, column j of B
    // from the top delayed by j; A(i,kk) and B(kk,j) meet in PE(i,j) at
    // cycle kk + i + j.
    std::uint64_t wavefront = 0;
    const Eigen::Index last = (m > 0 && n > 0 && k > 0) ? m + n + k - 3 : -1;
    for (Eigen::Index t = 0; t <= last; ++t, ++wavefront) {
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = n - 1; j > 0; --j)
                a_reg[at(i, j)] = a_reg[at(i, j - 1)];
            const Eigen::Index kk = t - i;
            a_reg[at(i, 0)] = (kk >= 0 && kk < k) ? Operand{a.raw()(i, kk), true} : Operand{};
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = m - 1; i > 0; --i)
                b_reg[at(i, j)] = b_reg[at(i - 1, j)];
            const Eigen::Index kk = t - j;
            b_reg[at(0, j)] = (kk >= 0 && kk < k) ? Operand{b.raw()(kk, j), true} : Operand{};
        }
        for (std::size_t p = 0; p < pe.size(); ++p) {
            if (a_reg[p].valid && b_reg[p].valid)
                pe[p].accumulate(a_reg[p].value, b_reg[p].value);
        }
    }

    FixedMatrix out(m, n, fmt);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out.raw()(i, j) = pe[at(i, j)].writeback(flags).raw;

    cycles.add("matmul", wavefront + cycle_model::kMacPipelineDepth);
    return out;
}

FixedMatrix fx_matmul_systolic(const FixedMatrix& a, const FixedMatrix& b)
{
    OverflowFlags flags;
    CycleReport cycles;
    return fx_matmul_systolic(a, b, flags, cycles);
}

FixedVector fx_matvec(const FixedMatrix& m, const FixedVector& y, OverflowFlags& flags, CycleReport& cycles)
{
    require_same_format(m, y, "fx_matvec");
    if (y.cols() != 1 || m.cols() != y.rows())
        throw std::invalid_argument("fx_matvec: vector length must equal matrix columns");

    std::vector<MacUnit> macs(static_cast<std::size_t>(m.rows()), MacUnit(m.fmt()));
    for (Eigen::Index t = 0; t < m.cols(); ++t)
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            macs[static_cast<std::size_t>(r)].accumulate(m.raw()(r, t), y.raw()(t, 0));

    FixedVector out(m.rows(), 1, m.fmt());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        out.raw()(r, 0) = macs[static_cast<std::size_t>(r)].writeback(flags).raw;
    cycles.add("matvec", cycle_model::matvec(m.rows(), m.cols()));
    return out;
}

FixedVector fx_matvec(const FixedMatrix& m, const FixedVector& y)
{
    OverflowFlags flags;
    CycleReport cycles;
    return fx_matvec(m, y, flags, cycles);
}

Eigen::MatrixXf to_float32(const FixedMatrix& m)
{
    Eigen::MatrixXf out(m.rows(), m.cols());
    const int shift = -m.fmt().frac_bits;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out(r, c) = std::ldexp(static_cast<float>(m.raw()(r, c)), shift);
    return out;
}

FixedMatrix from_float32(const Eigen::MatrixXf& m, QFormat fmt, OverflowFlags& flags)
{
    FixedMatrix out(m.rows(), m.cols(), fmt);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out.raw()(r, c) = to_fixed(static_cast<double>(m(r, c)), fmt, flags).raw;
    return out;
}

// ---------------------------------------------------------------------------
// conversion layer

EncodedProblem encode_problem(const EstimationProblem& problem, const SensorConstants& constants,
                              const ScalingScheme& scaling, QFormat fmt)
{
    problem.validate();
    constants.validate();
    if (scaling.y_shift < -30 || scaling.y_shift > 30)
        throw std::invalid_argument("scaling y_shift out of range [-30, 30]");

    EncodedProblem enc;
    enc.column_scale = Eigen::VectorXd::Ones(problem.H.cols());
    if (scaling.h_columns == ScalingScheme::Columns::unit) {
        for (Eigen::Index j = 0; j < problem.H.cols(); ++j) {
            const double norm = problem.H.col(j).norm();
            if (norm > 0.0)
                enc.column_scale(j) = 1.0 / norm;
        }
    }
    Eigen::MatrixXd w = problem.W;
    if (scaling.weight == ScalingScheme::Weight::max_abs) {
        const double wmax = w.cwiseAbs().maxCoeff();
        if (wmax > 0.0)
            w /= wmax;
    }
    enc.y_scale = std::ldexp(1.0, scaling.y_shift);
    enc.output_gain = constants.phase_to_range();

    const Eigen::MatrixXd h = problem.H * enc.column_scale.asDiagonal();
    enc.H = FixedMatrix::from_real(h, fmt, enc.encode_flags);
    enc.W = FixedMatrix::from_real(w, fmt, enc.encode_flags);
    enc.y = FixedMatrix::from_real(problem.y_tilde * enc.y_scale, fmt, enc.encode_flags);
    return enc;
}

RateEstimate decode_estimate(const FixedVector& x_wire, const EncodedProblem& encoded)
{
    if (x_wire.rows() != encoded.column_scale.size())
        throw std::invalid_argument("decode_estimate: estimate length does not match the encoding");
    const Eigen::VectorXd x = encoded.output_gain
                              * encoded.column_scale.cwiseProduct(x_wire.to_real().col(0)) / encoded.y_scale;
    return RateEstimate::from_stacked(x);
}

// ---------------------------------------------------------------------------
// pipeline

FixedVector hw_wls_core(const FixedMatrix& h, const FixedMatrix& w, const FixedVector& y, OverflowFlags& flags,
                        CycleReport& cycles, const CoreOptions& options)
{
    if (w.rows() != h.rows() || w.cols() != h.rows() || y.rows() != h.rows() || y.cols() != 1)
        throw std::invalid_argument("hw_wls_core: H, W and y dimensions disagree");

    PipelineTrace* trace = options.trace;
    const auto note = [trace](const char* name, const auto& m) {
        if (trace)
            trace->record(name, m);
    };
    note("H", h);
    note("W", w);
    note("y", y);

    const FixedMatrix ht = fx_transpose(h, cycles);
    note("Ht", ht);

    const FixedMatrix htw = fx_matmul_systolic(ht, w, flags, cycles);
    cycles.per_block.back().name = "matmul_HtW";
    note("HtW", htw);

    const FixedMatrix normal = fx_matmul_systolic(htw, h, flags, cycles);
    cycles.per_block.back().name = "matmul_HtWH";
    note("HtWH", normal);

    const Eigen::Index n = normal.rows();
    const Eigen::MatrixXf normal_f = to_float32(normal);
    cycles.add("to_float", cycle_model::convert(n, n));
    note("HtWH_f32", normal_f);

    const LduFactors<float> factors = ldu_decompose(normal_f, options.ldu);
    cycles.add("ldu_decompose", cycle_model::ldu_decompose(n));
    const Eigen::MatrixXf inverse_f = ldu_invert(factors);
    verify_inverse(normal_f, inverse_f, factors, options.ldu);
    cycles.add("ldu_triangular_inverse", cycle_model::triangular_inverse(n));
    cycles.add("ldu_back_substitution", cycle_model::back_substitution(n));
    note("inv_f32", inverse_f);

    const FixedMatrix inverse = from_float32(inverse_f, h.fmt(), flags);
    cycles.add("to_fixed", cycle_model::convert(n, n));
    note("inv", inverse);

    const FixedMatrix gain = fx_matmul_systolic(inverse, htw, flags, cycles);
    cycles.per_block.back().name = "matmul_invHtW";
    note("invHtW", gain);

    FixedVector x = fx_matvec(gain, y, flags, cycles);
    note("x", x);
    return x;
}

HwResult hw_wls_pipeline(const EncodedProblem& encoded, const CoreOptions& options)
{
    HwResult result;
    result.flags.merge(encoded.encode_flags);
    result.x_wire = hw_wls_core(encoded.H, encoded.W, encoded.y, result.flags, result.cycles, options);
    result.estimate = decode_estimate(result.x_wire, encoded);
    return result;
}

HwResult hw_wls_pipeline(const EstimationProblem& problem, const SensorConstants& constants,
                         const ScalingScheme& scaling, QFormat fmt, const CoreOptions& options)
{
    return hw_wls_pipeline(encode_problem(problem, constants, scaling, fmt), options);
}

}  // namespace ivisnav
