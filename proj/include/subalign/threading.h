// include/subalign/threading.h

// Copyright 2026  subalign authors

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

#ifndef SUBALIGN_THREADING_H_
#define SUBALIGN_THREADING_H_

#include <cstddef>
#include <functional>

namespace subalign {

// Worker cap: SUBALIGN_THREADS if set, else hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Indices are
// handed out in fixed contiguous blocks so callers that write result[i]
// get identical output regardless of the thread count. Exceptions from
// workers are rethrown on the calling thread.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace subalign

#endif  // SUBALIGN_THREADING_H_
