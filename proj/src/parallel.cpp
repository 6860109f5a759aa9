#include "voxrecon/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace voxrecon {

std::size_t default_thread_count() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t parallel_chunks(std::size_t n, std::size_t threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
    if (workers == 1) {
        fn(0, 0, n);
        return 1;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                try {
                    fn(w, begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return workers;
}

} // namespace voxrecon
