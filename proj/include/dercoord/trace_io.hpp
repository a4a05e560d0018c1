/* Copyright 2026 The dercoord Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <filesystem>
#include <string>

#include "dercoord/sim.hpp"

// Trace CSV: a `# {json}` header line, a column line, then one row per
// iteration. Floats use the shortest representation that reads back exactly.
namespace dercoord::trace_io {

std::string format_trace(const sim::SimTrace& trace);
void export_trace(const sim::SimTrace& trace, const std::filesystem::path& path);

// Rebuilds header and rows (dispatch records are not part of the CSV).
sim::SimTrace parse_trace(const std::string& text);
sim::SimTrace import_trace(const std::filesystem::path& path);

std::string shortest(double v);

}  // namespace dercoord::trace_io
