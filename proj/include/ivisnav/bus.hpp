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

// Processing-system <-> programmable-logic contract: a word-addressed
// register file and the IDLE / SEND_DATA / COMPUTE / DONE control machine.
//
// Register map (word index, 32-bit words):
//
//   0        control   bit0 start, bit1 ready, bit2 restart      any state
//   1        status    bit0 send complete, bit1 compute done,    read only
//                      bit2 error, bits 8..15 error code
//   2..37    H         6x6 row-major, fixed-point raw            IDLE, SEND_DATA
//   38..73   W         6x6 row-major, fixed-point raw            IDLE, SEND_DATA
//   74..79   y         6 entries, fixed-point raw                IDLE, SEND_DATA
//   80..85   estimate  6 entries, fixed-point raw (wire scale)   read in DONE
//   86       overflow  saturation events of the pass             read in DONE
//   87       cycles    modelled cycles of the pass               read in DONE

#ifndef IVISNAV_BUS_HPP
#define IVISNAV_BUS_HPP

#include "ivisnav/hw_datapath.hpp"

#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ivisnav {

enum class ControlState
{
    idle,
    send_data,
    compute,
    done,
};

const char* to_string(ControlState s);

namespace reg {

inline constexpr std::uint32_t kControl = 0;
inline constexpr std::uint32_t kStatus = 1;
inline constexpr std::uint32_t kHBase = 2;
inline constexpr std::uint32_t kWBase = 38;
inline constexpr std::uint32_t kYBase = 74;
inline constexpr std::uint32_t kEstimateBase = 80;
inline constexpr std::uint32_t kOverflow = 86;
inline constexpr std::uint32_t kCycles = 87;
inline constexpr std::uint32_t kCount = 88;

inline constexpr std::uint32_t kDataWords = kEstimateBase - kHBase;

inline constexpr std::uint32_t kStart = 1u << 0;
inline constexpr std::uint32_t kReady = 1u << 1;
inline constexpr std::uint32_t kRestart = 1u << 2;

inline constexpr std::uint32_t kSendComplete = 1u << 0;
inline constexpr std::uint32_t kComputeDone = 1u << 1;
inline constexpr std::uint32_t kError = 1u << 2;
inline constexpr int kErrorCodeShift = 8;
inline constexpr std::uint32_t kErrorCodeMask = 0xFFu << kErrorCodeShift;

}  // namespace reg

enum class ErrorCode : std::uint32_t
{
    none = 0,
    singular_matrix = 1,
    internal = 2,
};

const char* to_string(ErrorCode e);

class BusError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class WriteNotPermitted : public BusError
{
public:
    WriteNotPermitted(ControlState state, std::uint32_t addr);
    ControlState state;
    std::uint32_t addr;
};

class ReadNotPermitted : public BusError
{
public:
    ReadNotPermitted(ControlState state, std::uint32_t addr);
    ControlState state;
    std::uint32_t addr;
};

class UnknownRegister : public BusError
{
public:
    explicit UnknownRegister(std::uint32_t addr);
    std::uint32_t addr;
};

struct BusTraceEvent
{
    enum class Kind
    {
        write,
        read,
        step,
    };
    std::uint64_t tick = 0;
    ControlState state = ControlState::idle;  ///< state when the event happened
    Kind kind = Kind::step;
    std::uint32_t addr = 0;
    std::uint32_t value = 0;  ///< word for reads/writes, next state for steps
};

/// One emulated core. Single-owner by contract; distinct instances are independent.
class BusState
{
public:
    explicit BusState(QFormat fmt = {}, LduOptions ldu = {});

    /// IDLE, every register zero, trace kept.
    void reset();

    /// Throws UnknownRegister or WriteNotPermitted; a rejected write changes nothing.
    void write_reg(std::uint32_t addr, std::uint32_t word);
    /// Result window reads outside DONE throw ReadNotPermitted.
    std::uint32_t read_reg(std::uint32_t addr);

    /// One state-machine tick. COMPUTE runs the whole datapath in one tick.
    void step();

    ControlState state() const
    {
        return state_;
    }
    std::uint64_t tick() const
    {
        return tick_;
    }
    QFormat fmt() const
    {
        return fmt_;
    }
    std::size_t words_received() const
    {
        return received_.count();
    }
    bool send_complete() const
    {
        return received_.all();
    }
    /// Per-block breakdown of the last COMPUTE tick.
    const CycleReport& last_cycles() const
    {
        return last_cycles_;
    }

    void enable_trace(bool on)
    {
        tracing_ = on;
    }
    const std::vector<BusTraceEvent>& trace() const
    {
        return trace_;
    }
    /// "tick state op addr value" per line.
    void write_trace(std::ostream& os) const;

private:
    static bool is_data(std::uint32_t addr)
    {
        return addr >= reg::kHBase && addr < reg::kEstimateBase;
    }
    static bool is_result(std::uint32_t addr)
    {
        return addr >= reg::kEstimateBase && addr < reg::kCount;
    }

    void run_compute();
    void clear_cycle();
    void log(BusTraceEvent::Kind kind, std::uint32_t addr, std::uint32_t value);

    QFormat fmt_;
    LduOptions ldu_;
    ControlState state_ = ControlState::idle;
    std::vector<std::uint32_t> regs_;
    std::bitset<reg::kDataWords> received_;
    CycleReport last_cycles_;
    std::uint64_t tick_ = 0;
    bool tracing_ = false;
    std::vector<BusTraceEvent> trace_;
};

struct TransactionResult
{
    ErrorCode error = ErrorCode::none;
    RateEstimate estimate;  ///< valid when error == none
    FixedVector x_wire;
    CycleReport cycles;
    std::uint32_t overflow_count = 0;
    std::uint32_t cycle_word = 0;
    std::uint32_t status_word = 0;  ///< as read in DONE
};

/// Full write -> compute -> read -> restart sequence for a 6x6 problem.
/// Requires IDLE; leaves the bus in IDLE.
TransactionResult run_transaction(BusState& bus, const EncodedProblem& problem);

}  // namespace ivisnav

#endif  // IVISNAV_BUS_HPP
