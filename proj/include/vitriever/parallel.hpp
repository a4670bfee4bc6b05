#ifndef VITRIEVER_PARALLEL_HPP
#define VITRIEVER_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace vitriever {

/**
 * Thread count used when none is requested explicitly: `VITRIEVER_THREADS`
 * if set to a positive integer, otherwise the hardware concurrency.
 */
inline std::size_t default_threads() {
    if (const char* env = std::getenv("VITRIEVER_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/**
 * Runs `fun(job)` for every job in `[0, njobs)` on up to `nthreads` threads.
 * Jobs are claimed dynamically. The first exception thrown by any job is
 * rethrown on the calling thread after all workers finish.
 */
template<class Function>
void parallelize(std::size_t njobs, std::size_t nthreads, Function fun) {
    nthreads = std::min(std::max<std::size_t>(nthreads, 1), njobs);
    if (nthreads <= 1) {
        for (std::size_t j = 0; j < njobs; ++j) {
            fun(j);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_lock;
    auto worker = [&]() {
        while (true) {
            auto j = next.fetch_add(1);
            if (j >= njobs) {
                return;
            }
            try {
                fun(j);
            } catch (...) {
                std::lock_guard<std::mutex> guard(error_lock);
                if (!error) {
                    error = std::current_exception();
                }
                next.store(njobs);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (std::size_t t = 1; t < nthreads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

}

#endif
