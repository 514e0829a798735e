#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <thread>
#include <type_traits>
#include <vector>

namespace sphere_oep::detail {

/// Applies `fn` to every element of `items` on up to hardware_concurrency
/// worker threads, preserving order. Exceptions propagate from the first
/// failing chunk.
template <class T, class Fn>
auto parallel_map(const std::vector<T>& items, Fn fn) -> std::vector<std::invoke_result_t<Fn, const T&>> {
    using Result = std::invoke_result_t<Fn, const T&>;
    const std::size_t n = items.size();
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
    if (workers <= 1 || n <= 1) {
        std::vector<Result> out;
        out.reserve(n);
        for (const auto& item : items) out.push_back(fn(item));
        return out;
    }

    std::vector<std::future<std::vector<Result>>> chunks;
    const std::size_t per = (n + workers - 1) / workers;
    for (std::size_t begin = 0; begin < n; begin += per) {
        const std::size_t end = std::min(n, begin + per);
        chunks.push_back(std::async(std::launch::async, [&items, &fn, begin, end] {
            std::vector<Result> part;
            part.reserve(end - begin);
            for (std::size_t k = begin; k < end; ++k) part.push_back(fn(items[k]));
            return part;
        }));
    }
    std::vector<Result> out;
    out.reserve(n);
    for (auto& chunk : chunks) {
        auto part = chunk.get();
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace sphere_oep::detail
