// Copyright 2026 The focalstage Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FOCALSTAGE_PARALLEL_H_
#define FOCALSTAGE_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace focalstage {

// Runs task(i) for i in [0, count) on up to `jobs` threads. Tasks must write
// only to their own output slot; ordering of results is the caller's job.
// The first exception thrown by any task is rethrown after all threads join.
void ParallelFor(std::size_t count, int jobs,
                 const std::function<void(std::size_t)>& task);

}  // namespace focalstage

#endif  // FOCALSTAGE_PARALLEL_H_
