// Copyright Contributors to the splatguard project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatguard/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace splatguard {

namespace {
std::atomic<int> g_workers{1};
thread_local bool t_inside = false; // nested calls run inline on the calling worker
}

void set_worker_count(int workers) { g_workers.store(std::max(1, workers)); }

int worker_count() { return g_workers.load(); }

void parallel_for(std::size_t chunks, const std::function<void(std::size_t)> &fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), chunks);
    if (workers <= 1 || t_inside) {
        for (std::size_t c = 0; c < chunks; ++c) fn(c);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        const bool saved = t_inside;
        t_inside         = true;
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) break;
            try {
                fn(c);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
        t_inside = saved;
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

} // namespace splatguard
