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

#ifndef IVISNAV_FIXED_POINT_HPP
#define IVISNAV_FIXED_POINT_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace ivisnav {

/// Bit split of a 32-bit two's-complement word: one sign bit, `int_bits`
/// integer bits and `frac_bits` fraction bits.
struct QFormat
{
    int int_bits = 15;
    int frac_bits = 16;

    constexpr QFormat() = default;
    QFormat(int int_bits_, int frac_bits_);

    /// Parses "Qi.f", e.g. "Q15.16". Throws std::invalid_argument.
    static QFormat parse(std::string_view text);

    std::string str() const;

    double lsb() const;
    double max_real() const;
    double min_real() const;

    friend bool operator==(const QFormat&, const QFormat&) = default;
};

/// Sticky saturation record. Owned by the caller and threaded through the
/// arithmetic; nothing here is global.
class OverflowFlags
{
public:
    void record(std::uint64_t events = 1)
    {
        count_ += events;
    }
    void merge(const OverflowFlags& other)
    {
        count_ += other.count_;
    }

    bool saturated() const
    {
        return count_ > 0;
    }
    std::uint64_t count() const
    {
        return count_;
    }

private:
    std::uint64_t count_ = 0;
};

struct Fixed32
{
    std::int32_t raw = 0;
    QFormat fmt{};

    friend bool operator==(const Fixed32&, const Fixed32&) = default;
};

/// Round-to-nearest-even of x * 2^frac_bits, saturated to 32 bits.
/// NaN maps to zero and counts as a saturation event.
Fixed32 to_fixed(double x, QFormat fmt, OverflowFlags& flags);
Fixed32 to_fixed(double x, QFormat fmt);

double to_real(Fixed32 x);

Fixed32 fx_add(Fixed32 a, Fixed32 b, OverflowFlags& flags);
Fixed32 fx_add(Fixed32 a, Fixed32 b);

Fixed32 fx_mul(Fixed32 a, Fixed32 b, OverflowFlags& flags);
Fixed32 fx_mul(Fixed32 a, Fixed32 b);

std::string to_hex(std::int32_t raw);
inline std::string to_hex(Fixed32 x)
{
    return to_hex(x.raw);
}

namespace detail {

std::int32_t saturate(std::int64_t value, OverflowFlags& flags);
std::int32_t saturate(double value, OverflowFlags& flags);

/// Arithmetic right shift with round-half-to-even.
std::int64_t shift_round_even(std::int64_t value, int shift);

}  // namespace detail

/// Multiply-accumulate unit: full-width products summed in a saturating
/// 64-bit accumulator, one rounding step at writeback.
class MacUnit
{
public:
    explicit MacUnit(QFormat fmt)
        : fmt_(fmt)
    {}

    void accumulate(std::int32_t a, std::int32_t b);
    Fixed32 writeback(OverflowFlags& flags) const;

    /// Accumulator saturation events so far (already folded into writeback).
    std::uint64_t accumulator_overflows() const
    {
        return acc_overflows_;
    }

private:
    QFormat fmt_;
    std::int64_t acc_ = 0;
    std::uint64_t acc_overflows_ = 0;
};

using RawMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major matrix of fixed-point words sharing one QFormat.
/// Vectors are single-column matrices.
class FixedMatrix
{
public:
    FixedMatrix() = default;
    FixedMatrix(Eigen::Index rows, Eigen::Index cols, QFormat fmt);
    FixedMatrix(RawMatrix raw, QFormat fmt);

    static FixedMatrix from_real(const Eigen::Ref<const Eigen::MatrixXd>& values, QFormat fmt,
                                 OverflowFlags& flags);
    static FixedMatrix zero(Eigen::Index rows, Eigen::Index cols, QFormat fmt);
    static FixedMatrix identity(Eigen::Index n, QFormat fmt);

    Eigen::Index rows() const
    {
        return raw_.rows();
    }
    Eigen::Index cols() const
    {
        return raw_.cols();
    }
    Eigen::Index size() const
    {
        return raw_.size();
    }
    QFormat fmt() const
    {
        return fmt_;
    }

    const RawMatrix& raw() const
    {
        return raw_;
    }
    RawMatrix& raw()
    {
        return raw_;
    }

    Fixed32 at(Eigen::Index r, Eigen::Index c) const
    {
        return {raw_(r, c), fmt_};
    }
    void set(Eigen::Index r, Eigen::Index c, Fixed32 value);

    Eigen::MatrixXd to_real() const;

    friend bool operator==(const FixedMatrix& a, const FixedMatrix& b)
    {
        return a.fmt_ == b.fmt_ && a.raw_.rows() == b.raw_.rows() && a.raw_.cols() == b.raw_.cols()
               && a.raw_ == b.raw_;
    }

private:
    RawMatrix raw_;
    QFormat fmt_{};
};

using FixedVector = FixedMatrix;

}  // namespace ivisnav

#endif  // IVISNAV_FIXED_POINT_HPP
