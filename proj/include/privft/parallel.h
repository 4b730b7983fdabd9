/*
 * Copyright 2026 The PrivFT Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PRIVFT_PARALLEL_H_
#define PRIVFT_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace privft {

// Calls body(i) for i in [0, count) on up to `threads` workers. Each index
// is handled by exactly one call, so results written per index do not depend
// on the thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace privft

#endif  // PRIVFT_PARALLEL_H_
