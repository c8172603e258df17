// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <functional>

namespace splatguard {

/// Process-wide worker count used by the parallel kernels. Work is always split into a
/// fixed set of chunks whose partial results are reduced in chunk order, so the worker
/// count changes scheduling only and never the bits of any result.
void set_worker_count(int workers);
int worker_count();

/// Runs fn(chunk) for chunk in [0, chunks) on up to worker_count() threads.
/// Exceptions thrown by fn are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t chunks, const std::function<void(std::size_t)> &fn);

} // namespace splatguard
