/*
 * Copyright 2026 The actmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ACTMAP_PARALLEL_HPP_
#define ACTMAP_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace actmap {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is split into
/// contiguous chunks; callers write results into per-index slots and reduce
/// them afterwards in index order, so the outcome does not depend on the
/// worker count. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Worker count to use when the configuration says 0 ("auto").
std::size_t default_workers();

}  // namespace actmap

#endif  // ACTMAP_PARALLEL_HPP_
