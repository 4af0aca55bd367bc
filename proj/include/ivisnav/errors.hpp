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

#ifndef IVISNAV_ERRORS_HPP
#define IVISNAV_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivisnav {

/// Pivot of the unpivoted LDU elimination fell below tolerance.
class SingularMatrix : public std::runtime_error
{
public:
    SingularMatrix(std::size_t pivot_index, double pivot)
        : std::runtime_error("SingularMatrix: pivot " + std::to_string(pivot_index) + " = "
                             + std::to_string(pivot) + " below tolerance")
        , pivot_index_(pivot_index)
        , pivot_(pivot)
    {}

    std::size_t pivot_index() const noexcept
    {
        return pivot_index_;
    }
    double pivot() const noexcept
    {
        return pivot_;
    }

private:
    std::size_t pivot_index_;
    double pivot_;
};

/// The weighted normal equations of the reference solver are rank deficient.
class SingularSystem : public std::runtime_error
{
public:
    explicit SingularSystem(double condition)
        : std::runtime_error("SingularSystem: condition estimate " + std::to_string(condition))
        , condition_(condition)
    {}

    double condition() const noexcept
    {
        return condition_;
    }

private:
    double condition_;
};

class BeamParallel : public std::runtime_error
{
public:
    explicit BeamParallel(std::size_t beacon)
        : std::runtime_error("BeamParallel: beacon " + std::to_string(beacon + 1)
                             + " is parallel to the base plane")
        , beacon_(beacon)
    {}

    /// Zero-based beacon index.
    std::size_t beacon() const noexcept
    {
        return beacon_;
    }

private:
    std::size_t beacon_;
};

/// Bad scenario/config input. `field()` names the offending key.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error("config field '" + field + "': " + what)
        , field_(std::move(field))
    {}

    const std::string& field() const noexcept
    {
        return field_;
    }

private:
    std::string field_;
};

}  // namespace ivisnav

#endif  // IVISNAV_ERRORS_HPP
