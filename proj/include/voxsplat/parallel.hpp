// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace voxsplat {

/// Worker cap used by every parallel loop. Defaults to VOXSPLAT_THREADS when
/// set, otherwise the hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs `fn(task)` for task in [0, n_tasks). Tasks are claimed dynamically, so
/// callers must write results to per-task slots and reduce them in task order.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& fn);

}  // namespace voxsplat
