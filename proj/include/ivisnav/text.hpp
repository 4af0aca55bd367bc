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

#ifndef IVISNAV_TEXT_HPP
#define IVISNAV_TEXT_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivisnav::text {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

/// Whole-string parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits on whitespace after dropping a trailing '#' comment.
std::vector<std::string_view> tokens(std::string_view line);

}  // namespace ivisnav::text

#endif  // IVISNAV_TEXT_HPP
