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
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace ivisnav;

namespace {
const QFormat q1516{};
constexpr std::int32_t kMax = std::numeric_limits<std::int32_t>::max();
constexpr std::int32_t kMin = std::numeric_limits<std::int32_t>::min();
}  // namespace

TEST_CASE("qformat parse and print")
{
    CHECK(QFormat::parse("Q15.16") == q1516);
    CHECK(QFormat::parse("Q7.24") == QFormat(7, 24));
    CHECK(QFormat(7, 24).str() == "Q7.24");
    CHECK(q1516.lsb() == std::ldexp(1.0, -16));
    CHECK(q1516.max_real() == 32768.0 - std::ldexp(1.0, -16));
    CHECK(q1516.min_real() == -32768.0);
    CHECK_THROWS_AS(QFormat::parse("Q15"), std::invalid_argument);
    CHECK_THROWS_AS(QFormat::parse("Q16.16"), std::invalid_argument);
    CHECK_THROWS_AS(QFormat::parse("15.16"), std::invalid_argument);
    CHECK_THROWS_AS(QFormat::parse("Q0.31"), std::invalid_argument);
}

TEST_CASE("to_fixed examples")
{
    OverflowFlags f;
    CHECK(to_fixed(0.5, q1516, f).raw == 32768);
    CHECK(to_fixed(0.0, q1516, f).raw == 0);
    CHECK(to_fixed(0.0, QFormat(3, 28), f).raw == 0);
    CHECK_FALSE(f.saturated());

    CHECK(to_fixed(40000.0, q1516, f).raw == kMax);
    CHECK(f.saturated());
    OverflowFlags g;
    CHECK(to_fixed(-40000.0, q1516, g).raw == kMin);
    CHECK(g.count() == 1);
    OverflowFlags h;
    CHECK(to_fixed(std::nan(""), q1516, h).raw == 0);
    CHECK(h.saturated());
}

TEST_CASE("to_fixed rounds half to even")
{
    const double lsb = q1516.lsb();
    CHECK(to_fixed(0.5 * lsb, q1516).raw == 0);
    CHECK(to_fixed(1.5 * lsb, q1516).raw == 2);
    CHECK(to_fixed(2.5 * lsb, q1516).raw == 2);
    CHECK(to_fixed(-2.5 * lsb, q1516).raw == -2);
    CHECK(to_fixed(0.51 * lsb, q1516).raw == 1);
}

TEST_CASE("to_real examples")
{
    CHECK(to_real({32768, q1516}) == 0.5);
    CHECK(to_real({-65536, q1516}) == -1.0);
    CHECK(to_real({1, q1516}) == 1.52587890625e-5);
}

TEST_CASE("fx_add examples")
{
    OverflowFlags f;
    CHECK(fx_add(to_fixed(0.5, q1516), to_fixed(0.25, q1516), f).raw == 49152);
    CHECK_FALSE(f.saturated());
    CHECK(fx_add({kMax, q1516}, {1, q1516}, f).raw == kMax);
    CHECK(f.saturated());
    OverflowFlags g;
    CHECK(fx_add({kMin, q1516}, {-1, q1516}, g).raw == kMin);
    CHECK(g.saturated());
    CHECK_THROWS_AS(fx_add({1, q1516}, {1, QFormat(7, 24)}), std::invalid_argument);
}

TEST_CASE("fx_mul examples")
{
    OverflowFlags f;
    CHECK(fx_mul(to_fixed(0.5, q1516), to_fixed(0.5, q1516), f).raw == to_fixed(0.25, q1516).raw);
    CHECK(fx_mul({1, q1516}, {1, q1516}, f).raw == 0);
    CHECK(fx_mul(to_fixed(-3.0, q1516), to_fixed(2.5, q1516), f).raw == to_fixed(-7.5, q1516).raw);
    CHECK_FALSE(f.saturated());
    CHECK(fx_mul(to_fixed(300.0, q1516), to_fixed(300.0, q1516), f).raw == kMax);
    CHECK(f.saturated());
    OverflowFlags g;
    CHECK(fx_mul(to_fixed(-300.0, q1516), to_fixed(300.0, q1516), g).raw == kMin);
    CHECK(g.count() == 1);
}

TEST_CASE("fx_mul agrees with the exact rounded product")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int32_t> d(kMin, kMax);
    for (int i = 0; i < 20000; ++i) {
        const std::int32_t a = d(rng) >> (i % 20);
        const std::int32_t b = d(rng) >> (i % 17);
        const std::int32_t expect
            = oracle::clamp32(oracle::div_pow2_rne(oracle::i128(std::int64_t(a) * std::int64_t(b)), 16));
        REQUIRE(fx_mul({a, q1516}, {b, q1516}).raw == expect);
    }
}

TEST_CASE("property: identities, commutativity, associativity")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::int32_t> wide(kMin, kMax);
    std::uniform_int_distribution<std::int32_t> narrow(-(1 << 28), 1 << 28);
    const Fixed32 zero{0, q1516};
    const Fixed32 one = to_fixed(1.0, q1516);
    for (int i = 0; i < 10000; ++i) {
        const Fixed32 a{wide(rng), q1516};
        const Fixed32 b{wide(rng), q1516};
        CHECK(fx_add(a, zero) == a);
        CHECK(fx_mul(a, one) == a);
        CHECK(fx_add(a, b) == fx_add(b, a));
        CHECK(fx_mul(a, b) == fx_mul(b, a));

        const Fixed32 x{narrow(rng), q1516};
        const Fixed32 y{narrow(rng), q1516};
        const Fixed32 z{narrow(rng), q1516};
        OverflowFlags f;
        const Fixed32 left = fx_add(fx_add(x, y, f), z, f);
        const Fixed32 right = fx_add(x, fx_add(y, z, f), f);
        REQUIRE_FALSE(f.saturated());
        CHECK(left == right);
    }
}

TEST_CASE("property: round trip and quantization bound")
{
    std::mt19937_64 rng(3);
    for (const QFormat fmt : {q1516, QFormat(7, 24), QFormat(20, 11), QFormat(1, 30)}) {
        std::uniform_int_distribution<std::int32_t> raw(kMin, kMax);
        std::uniform_real_distribution<double> real(fmt.min_real(), fmt.max_real());
        for (int i = 0; i < 5000; ++i) {
            const Fixed32 exact{raw(rng), fmt};
            CHECK(to_fixed(to_real(exact), fmt) == exact);

            const double x = real(rng);
            OverflowFlags f;
            const double back = to_real(to_fixed(x, fmt, f));
            CHECK_FALSE(f.saturated());
            CHECK(std::abs(back - x) <= std::ldexp(1.0, -fmt.frac_bits - 1));
        }
    }
}

TEST_CASE("property: saturation lands on the nearest bound")
{
    for (const QFormat fmt : {q1516, QFormat(7, 24)}) {
        for (const double big : {1e6, 1e12, 1e300, std::numeric_limits<double>::infinity()}) {
            OverflowFlags f;
            CHECK(to_fixed(big, fmt, f).raw == kMax);
            CHECK(to_fixed(-big, fmt, f).raw == kMin);
            CHECK(f.count() == 2);
        }
    }
}

TEST_CASE("mac unit accumulates at full width and rounds once")
{
    MacUnit mac(q1516);
    // LSB^2 products round to zero one at a time but not in sum
    for (int i = 0; i < 1 << 15; ++i)
        mac.accumulate(1, 1);
    OverflowFlags f;
    CHECK(mac.writeback(f).raw == 0);  // 2^15 / 2^16 = 0.5 -> even 0
    mac.accumulate(1, 1);
    CHECK(mac.writeback(f).raw == 1);
    CHECK_FALSE(f.saturated());

    MacUnit big(q1516);
    for (int i = 0; i < 4; ++i)
        big.accumulate(kMax, kMax);
    CHECK(big.writeback(f).raw == kMax);
    CHECK(big.accumulator_overflows() == 2);  // (2^31-1)^2 < 2^62: the third and fourth adds clip
    CHECK(f.saturated());
}

TEST_CASE("hex rendering")
{
    CHECK(to_hex(std::int32_t(0)) == "0x00000000");
    CHECK(to_hex(std::int32_t(-1)) == "0xFFFFFFFF");
    CHECK(to_hex(to_fixed(0.5, q1516)) == "0x00008000");
}

TEST_CASE("fixed matrix construction")
{
    OverflowFlags f;
    Eigen::MatrixXd m(2, 2);
    m << 0.5, -1.0, 40000.0, 0.25;
    const FixedMatrix fm = FixedMatrix::from_real(m, q1516, f);
    CHECK(fm.raw()(0, 0) == 32768);
    CHECK(fm.raw()(1, 0) == kMax);
    CHECK(f.count() == 1);
    CHECK(fm.to_real()(0, 1) == -1.0);
    CHECK(FixedMatrix::identity(3, q1516).to_real() == Eigen::MatrixXd::Identity(3, 3));
    CHECK(FixedMatrix::zero(2, 3, q1516).raw().isZero());
}
