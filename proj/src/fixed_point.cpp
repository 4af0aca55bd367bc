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

#include "ivisnav/fixed_point.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace ivisnav {

namespace {

constexpr std::int64_t kRawMax = std::numeric_limits<std::int32_t>::max();
constexpr std::int64_t kRawMin = std::numeric_limits<std::int32_t>::min();

void require_same_format(QFormat a, QFormat b)
{
    if (a != b)
        throw std::invalid_argument("fixed-point format mismatch: " + a.str() + " vs " + b.str());
}

}  // namespace

QFormat::QFormat(int int_bits_, int frac_bits_)
    : int_bits(int_bits_)
    , frac_bits(frac_bits_)
{
    if (int_bits < 1 || frac_bits < 1 || int_bits + frac_bits != 31)
        throw std::invalid_argument("invalid Q-format: int_bits + frac_bits must be 31, both >= 1");
}

QFormat QFormat::parse(std::string_view text)
{
    const auto bad = [&] { return std::invalid_argument("malformed Q-format '" + std::string(text) + "'"); };
    if (text.size() < 4 || (text[0] != 'Q' && text[0] != 'q'))
        throw bad();
    const auto dot = text.find('.');
    if (dot == std::string_view::npos)
        throw bad();

    int i = 0;
    int f = 0;
    const char* const first = text.data() + 1;
    const char* const mid = text.data() + dot;
    const char* const last = text.data() + text.size();
    auto r1 = std::from_chars(first, mid, i);
    auto r2 = std::from_chars(mid + 1, last, f);
    if (r1.ec != std::errc{} || r1.ptr != mid || r2.ec != std::errc{} || r2.ptr != last)
        throw bad();
    return QFormat(i, f);
}

std::string QFormat::str() const
{
    return "Q" + std::to_string(int_bits) + "." + std::to_string(frac_bits);
}

double QFormat::lsb() const
{
    return std::ldexp(1.0, -frac_bits);
}

double QFormat::max_real() const
{
    return std::ldexp(static_cast<double>(kRawMax), -frac_bits);
}

double QFormat::min_real() const
{
    return std::ldexp(static_cast<double>(kRawMin), -frac_bits);
}

namespace detail {

std::int32_t saturate(std::int64_t value, OverflowFlags& flags)
{
    if (value > kRawMax) {
        flags.record();
        return static_cast<std::int32_t>(kRawMax);
    }
    if (value < kRawMin) {
        flags.record();
        return static_cast<std::int32_t>(kRawMin);
    }
    return static_cast<std::int32_t>(value);
}

std::int32_t saturate(double value, OverflowFlags& flags)
{
    if (std::isnan(value)) {
        flags.record();
        return 0;
    }
    if (value > static_cast<double>(kRawMax)) {
        flags.record();
        return static_cast<std::int32_t>(kRawMax);
    }
    if (value < static_cast<double>(kRawMin)) {
        flags.record();
        return static_cast<std::int32_t>(kRawMin);
    }
    return static_cast<std::int32_t>(value);
}

std::int64_t shift_round_even(std::int64_t value, int shift)
{
    if (shift <= 0)
        return value;
    // >> on signed values is arithmetic (floor) since C++20
    const std::int64_t floor_q = value >> shift;
    const std::uint64_t mask = (std::uint64_t{1} << shift) - 1;
    const std::uint64_t rem = static_cast<std::uint64_t>(value) & mask;
    const std::uint64_t half = std::uint64_t{1} << (shift - 1);
    if (rem > half || (rem == half && (floor_q & 1) != 0))
        return floor_q + 1;
    return floor_q;
}

}  // namespace detail

Fixed32 to_fixed(double x, QFormat fmt, OverflowFlags& flags)
{
    // Scaling by a power of two is exact; nearbyint rounds half-to-even
    // under the default FE_TONEAREST mode.
    const double scaled = std::nearbyint(std::ldexp(x, fmt.frac_bits));
    return {detail::saturate(scaled, flags), fmt};
}

Fixed32 to_fixed(double x, QFormat fmt)
{
    OverflowFlags ignored;
    return to_fixed(x, fmt, ignored);
}

double to_real(Fixed32 x)
{
    return std::ldexp(static_cast<double>(x.raw), -x.fmt.frac_bits);
}

Fixed32 fx_add(Fixed32 a, Fixed32 b, OverflowFlags& flags)
{
    require_same_format(a.fmt, b.fmt);
    const std::int64_t sum = std::int64_t{a.raw} + std::int64_t{b.raw};
    return {detail::saturate(sum, flags), a.fmt};
}

Fixed32 fx_add(Fixed32 a, Fixed32 b)
{
    OverflowFlags ignored;
    return fx_add(a, b, ignored);
}

Fixed32 fx_mul(Fixed32 a, Fixed32 b, OverflowFlags& flags)
{
    require_same_format(a.fmt, b.fmt);
    const std::int64_t product = std::int64_t{a.raw} * std::int64_t{b.raw};
    return {detail::saturate(detail::shift_round_even(product, a.fmt.frac_bits), flags), a.fmt};
}

Fixed32 fx_mul(Fixed32 a, Fixed32 b)
{
    OverflowFlags ignored;
    return fx_mul(a, b, ignored);
}

std::string to_hex(std::int32_t raw)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", static_cast<unsigned>(static_cast<std::uint32_t>(raw)));
    return buf;
}

void MacUnit::accumulate(std::int32_t a, std::int32_t b)
{
    const std::int64_t product = std::int64_t{a} * std::int64_t{b};
    std::int64_t next = 0;
    if (__builtin_add_overflow(acc_, product, &next)) {
        ++acc_overflows_;
        next = product > 0 ? std::numeric_limits<std::int64_t>::max() : std::numeric_limits<std::int64_t>::min();
    }
    acc_ = next;
}

Fixed32 MacUnit::writeback(OverflowFlags& flags) const
{
    flags.record(acc_overflows_);
    return {detail::saturate(detail::shift_round_even(acc_, fmt_.frac_bits), flags), fmt_};
}

FixedMatrix::FixedMatrix(Eigen::Index rows, Eigen::Index cols, QFormat fmt)
    : raw_(RawMatrix::Zero(rows, cols))
    , fmt_(fmt)
{}

FixedMatrix::FixedMatrix(RawMatrix raw, QFormat fmt)
    : raw_(std::move(raw))
    , fmt_(fmt)
{}

FixedMatrix FixedMatrix::from_real(const Eigen::Ref<const Eigen::MatrixXd>& values, QFormat fmt,
                                   OverflowFlags& flags)
{
    FixedMatrix out(values.rows(), values.cols(), fmt);
    for (Eigen::Index r = 0; r < values.rows(); ++r)
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            out.raw_(r, c) = to_fixed(values(r, c), fmt, flags).raw;
    return out;
}

FixedMatrix FixedMatrix::zero(Eigen::Index rows, Eigen::Index cols, QFormat fmt)
{
    return FixedMatrix(rows, cols, fmt);
}

FixedMatrix FixedMatrix::identity(Eigen::Index n, QFormat fmt)
{
    FixedMatrix out(n, n, fmt);
    const std::int32_t one = static_cast<std::int32_t>(std::int64_t{1} << fmt.frac_bits);
    for (Eigen::Index i = 0; i < n; ++i)
        out.raw_(i, i) = one;
    return out;
}

void FixedMatrix::set(Eigen::Index r, Eigen::Index c, Fixed32 value)
{
    require_same_format(fmt_, value.fmt);
    raw_(r, c) = value.raw;
}

Eigen::MatrixXd FixedMatrix::to_real() const
{
    return raw_.cast<double>() * std::ldexp(1.0, -fmt_.frac_bits);
}

}  // namespace ivisnav
