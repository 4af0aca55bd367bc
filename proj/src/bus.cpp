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

#include "ivisnav/bus.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

namespace ivisnav {

namespace {

constexpr Eigen::Index kDim = 6;

std::string addr_text(std::uint32_t addr)
{
    return std::to_string(addr);
}

}  // namespace

const char* to_string(ControlState s)
{
    switch (s) {
    case ControlState::idle:
        return "IDLE";
    case ControlState::send_data:
        return "SEND_DATA";
    case ControlState::compute:
        return "COMPUTE";
    case ControlState::done:
        return "DONE";
    }
    return "?";
}

const char* to_string(ErrorCode e)
{
    switch (e) {
    case ErrorCode::none:
        return "none";
    case ErrorCode::singular_matrix:
        return "SingularMatrix";
    case ErrorCode::internal:
        return "Internal";
    }
    return "?";
}

WriteNotPermitted::WriteNotPermitted(ControlState s, std::uint32_t a)
    : BusError("WriteNotPermitted: register " + addr_text(a) + " in state " + to_string(s))
    , state(s)
    , addr(a)
{}

ReadNotPermitted::ReadNotPermitted(ControlState s, std::uint32_t a)
    : BusError("ReadNotPermitted: register " + addr_text(a) + " in state " + to_string(s))
    , state(s)
    , addr(a)
{}

UnknownRegister::UnknownRegister(std::uint32_t a)
    : BusError("UnknownRegister: " + addr_text(a))
    , addr(a)
{}

BusState::BusState(QFormat fmt, LduOptions ldu)
    : fmt_(fmt)
    , ldu_(ldu)
    , regs_(reg::kCount, 0u)
{}

void BusState::reset()
{
    state_ = ControlState::idle;
    std::fill(regs_.begin(), regs_.end(), 0u);
    received_.reset();
    last_cycles_ = {};
}

void BusState::write_reg(std::uint32_t addr, std::uint32_t word)
{
    if (addr >= reg::kCount)
        throw UnknownRegister(addr);
    if (addr == reg::kStatus || is_result(addr))
        throw WriteNotPermitted(state_, addr);
    if (is_data(addr)) {
        if (state_ != ControlState::idle && state_ != ControlState::send_data)
            throw WriteNotPermitted(state_, addr);
        received_.set(addr - reg::kHBase);
    }
    regs_[addr] = word;
    log(BusTraceEvent::Kind::write, addr, word);
}

std::uint32_t BusState::read_reg(std::uint32_t addr)
{
    if (addr >= reg::kCount)
        throw UnknownRegister(addr);
    if (is_result(addr) && state_ != ControlState::done)
        throw ReadNotPermitted(state_, addr);
    const std::uint32_t word = regs_[addr];
    log(BusTraceEvent::Kind::read, addr, word);
    return word;
}

void BusState::step()
{
    const ControlState before = state_;
    const std::uint32_t control = regs_[reg::kControl];

    switch (state_) {
    case ControlState::idle:
        if ((control & reg::kReady) && (control & reg::kStart))
            state_ = ControlState::send_data;
        break;
    case ControlState::send_data:
        if (send_complete()) {
            regs_[reg::kStatus] |= reg::kSendComplete;
            state_ = ControlState::compute;
        }
        break;
    case ControlState::compute:
        run_compute();
        regs_[reg::kStatus] |= reg::kComputeDone;
        state_ = ControlState::done;
        break;
    case ControlState::done:
        if (control & reg::kRestart) {
            clear_cycle();
            state_ = ControlState::idle;
        }
        break;
    }

    if (tracing_)
        trace_.push_back({tick_, before, BusTraceEvent::Kind::step, 0, static_cast<std::uint32_t>(state_)});
    ++tick_;
}

void BusState::run_compute()
{
    const auto word = [this](std::uint32_t addr) { return static_cast<std::int32_t>(regs_[addr]); };

    FixedMatrix h(kDim, kDim, fmt_);
    FixedMatrix w(kDim, kDim, fmt_);
    FixedVector y(kDim, 1, fmt_);
    for (Eigen::Index r = 0; r < kDim; ++r) {
        for (Eigen::Index c = 0; c < kDim; ++c) {
            const auto offset = static_cast<std::uint32_t>(r * kDim + c);
            h.raw()(r, c) = word(reg::kHBase + offset);
            w.raw()(r, c) = word(reg::kWBase + offset);
        }
        y.raw()(r, 0) = word(reg::kYBase + static_cast<std::uint32_t>(r));
    }

    OverflowFlags flags;
    CycleReport cycles;
    std::fill(regs_.begin() + reg::kEstimateBase, regs_.end(), 0u);
    try {
        CoreOptions options;
        options.ldu = ldu_;
        const FixedVector x = hw_wls_core(h, w, y, flags, cycles, options);
        for (Eigen::Index r = 0; r < kDim; ++r)
            regs_[reg::kEstimateBase + static_cast<std::uint32_t>(r)] = static_cast<std::uint32_t>(x.raw()(r, 0));
    } catch (const SingularMatrix&) {
        regs_[reg::kStatus] |= reg::kError
                               | (static_cast<std::uint32_t>(ErrorCode::singular_matrix) << reg::kErrorCodeShift);
    } catch (const std::exception&) {
        regs_[reg::kStatus] |= reg::kError
                               | (static_cast<std::uint32_t>(ErrorCode::internal) << reg::kErrorCodeShift);
    }
    regs_[reg::kOverflow] = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(flags.count(), std::numeric_limits<std::uint32_t>::max()));
    regs_[reg::kCycles] = static_cast<std::uint32_t>(cycles.total());
    last_cycles_ = std::move(cycles);
}

void BusState::clear_cycle()
{
    regs_[reg::kControl] = 0;
    regs_[reg::kStatus] = 0;
    std::fill(regs_.begin() + reg::kEstimateBase, regs_.end(), 0u);
    received_.reset();
}

void BusState::log(BusTraceEvent::Kind kind, std::uint32_t addr, std::uint32_t value)
{
    if (tracing_)
        trace_.push_back({tick_, state_, kind, addr, value});
}

void BusState::write_trace(std::ostream& os) const
{
    os << "# tick state op addr value\n";
    for (const auto& e : trace_) {
        os << e.tick << ' ' << to_string(e.state) << ' ';
        switch (e.kind) {
        case BusTraceEvent::Kind::write:
            os << "write " << e.addr << ' ' << to_hex(static_cast<std::int32_t>(e.value));
            break;
        case BusTraceEvent::Kind::read:
            os << "read " << e.addr << ' ' << to_hex(static_cast<std::int32_t>(e.value));
            break;
        case BusTraceEvent::Kind::step:
            os << "step - " << to_string(static_cast<ControlState>(e.value));
            break;
        }
        os << '\n';
    }
}

TransactionResult run_transaction(BusState& bus, const EncodedProblem& problem)
{
    if (bus.state() != ControlState::idle)
        throw BusError(std::string("run_transaction: bus must be IDLE, is ") + to_string(bus.state()));
    if (problem.H.rows() != kDim || problem.H.cols() != kDim || problem.W.rows() != kDim
        || problem.W.cols() != kDim || problem.y.rows() != kDim || problem.y.cols() != 1)
        throw std::invalid_argument("run_transaction: the register map carries 6x6 problems only");
    if (problem.H.fmt() != bus.fmt() || problem.W.fmt() != bus.fmt() || problem.y.fmt() != bus.fmt())
        throw std::invalid_argument("run_transaction: problem Q-format differs from the core's");

    bus.write_reg(reg::kControl, reg::kReady | reg::kStart);
    bus.step();

    for (Eigen::Index r = 0; r < kDim; ++r) {
        for (Eigen::Index c = 0; c < kDim; ++c) {
            const auto offset = static_cast<std::uint32_t>(r * kDim + c);
            bus.write_reg(reg::kHBase + offset, static_cast<std::uint32_t>(problem.H.raw()(r, c)));
        }
    }
    for (Eigen::Index r = 0; r < kDim; ++r) {
        for (Eigen::Index c = 0; c < kDim; ++c) {
            const auto offset = static_cast<std::uint32_t>(r * kDim + c);
            bus.write_reg(reg::kWBase + offset, static_cast<std::uint32_t>(problem.W.raw()(r, c)));
        }
    }
    for (Eigen::Index r = 0; r < kDim; ++r)
        bus.write_reg(reg::kYBase + static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(problem.y.raw()(r, 0)));

    bus.step();  // SEND_DATA -> COMPUTE
    bus.step();  // COMPUTE -> DONE

    TransactionResult result;
    result.status_word = bus.read_reg(reg::kStatus);
    result.error = static_cast<ErrorCode>((result.status_word & reg::kErrorCodeMask) >> reg::kErrorCodeShift);
    result.x_wire = FixedVector(kDim, 1, bus.fmt());
    for (Eigen::Index r = 0; r < kDim; ++r)
        result.x_wire.raw()(r, 0) = static_cast<std::int32_t>(bus.read_reg(reg::kEstimateBase + static_cast<std::uint32_t>(r)));
    result.overflow_count = bus.read_reg(reg::kOverflow);
    result.cycle_word = bus.read_reg(reg::kCycles);
    result.cycles = bus.last_cycles();
    if (result.error == ErrorCode::none)
        result.estimate = decode_estimate(result.x_wire, problem);

    bus.write_reg(reg::kControl, reg::kRestart);
    bus.step();  // DONE -> IDLE
    return result;
}

}  // namespace ivisnav
