/*
 * Copyright (c) 2026, the crossmost authors.
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

#include <functional>

namespace crossmost {

/// Worker cap: CROSSMOST_THREADS env var, else hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n). Each index writes only its own output slot, so
/// results are identical for any worker count.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace crossmost
