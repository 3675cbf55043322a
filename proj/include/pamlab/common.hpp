#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pamlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation of a kernel at a point where it is singular (use cell masses instead).
struct SingularEvaluation : Error {
    using Error::Error;
};

// Off-grid time query, rejected spec family, bad config, ...
struct ContractViolation : Error {
    using Error::Error;
};

// Improper integral failed to stabilize under truncation doubling.
struct DivergentIntegral : Error {
    using Error::Error;
};

// exp() argument above the guard threshold in a Monte Carlo replicate.
struct ExpOverflow : Error {
    std::uint64_t replicate = 0;
    double exponent = 0.0;
    ExpOverflow(std::uint64_t rep, double x, const std::string& what)
        : Error(what), replicate(rep), exponent(x) {}
};

// Runs fn(i) for i in [0,n). Each index writes only its own slots, so results
// are identical for any worker count; reductions happen afterwards in index
// order.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (threads <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        threads = hc == 0 ? 1 : static_cast<int>(hc);
        if (threads > 16) threads = 16;
    }
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t nthreads = std::min<std::size_t>(threads, n);
    std::vector<std::exception_ptr> errors(nthreads);
    for (std::size_t w = 0; w < nthreads; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < n; i += nthreads) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace pamlab
