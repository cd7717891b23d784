// Copyright 2026 The confkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serialization helpers shared by every on-disk format.

#ifndef CONFKIT_JSON_IO_HPP_
#define CONFKIT_JSON_IO_HPP_

#include <filesystem>
#include <string>

#include "json.hpp"

namespace confkit {

using json = nlohmann::json;

/// Compact JSON with every floating-point number printed with 17
/// significant digits, so 64-bit values survive a round trip bit-exactly.
/// Object keys come out sorted. Throws NumericError on NaN/Inf.
std::string dump_json(const json& j);

/// Same as dump_json but with two-space indentation.
std::string dump_json_pretty(const json& j);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a temporary sibling file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content);

json parse_json_file(const std::filesystem::path& path);

}  // namespace confkit

#endif  // CONFKIT_JSON_IO_HPP_
