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

#include <cstddef>

#include <omp.h>

namespace dercoord {

// Runs body(i) for i in [0, count). Iterations must write only to slots owned
// by i so results are identical to a serial loop for any thread count.
template <typename Body>
void parallel_for(std::ptrdiff_t count, Body&& body) {
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    body(i);
  }
}

template <typename Body>
void serial_for(std::ptrdiff_t count, Body&& body) {
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    body(i);
  }
}

inline int max_threads() { return omp_get_max_threads(); }

}  // namespace dercoord
