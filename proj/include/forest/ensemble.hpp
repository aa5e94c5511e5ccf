#pragma once

// Ensemble fan-out: paths simulate in parallel with per-path noise streams,
// results are consumed sequentially in path-index order so assembly is
// deterministic regardless of completion order.

#include <cstdint>
#include <thread>
#include <vector>

#include "forest/sde.hpp"

namespace forest {

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// simulate(path_index) -> T runs in parallel (blocked); consume(path_index, T&&)
// runs on the calling thread in increasing path-index order.
template <class Simulate, class Consume>
void run_paths(std::size_t n_paths, Simulate&& simulate, Consume&& consume,
               unsigned workers = 0, std::size_t block = 256) {
    if (workers == 0) workers = default_workers();
    using T = decltype(simulate(std::size_t{0}));
    for (std::size_t base = 0; base < n_paths; base += block) {
        const std::size_t count = std::min(block, n_paths - base);
        std::vector<T> results(count);
        if (workers <= 1 || count == 1) {
            for (std::size_t k = 0; k < count; ++k) results[k] = simulate(base + k);
        } else {
            std::vector<std::thread> pool;
            const std::size_t n_threads = std::min<std::size_t>(workers, count);
            pool.reserve(n_threads);
            for (std::size_t w = 0; w < n_threads; ++w) {
                pool.emplace_back([&, w]() {
                    for (std::size_t k = w; k < count; k += n_threads)
                        results[k] = simulate(base + k);
                });
            }
            for (auto& th : pool) th.join();
        }
        for (std::size_t k = 0; k < count; ++k)
            consume(base + k, std::move(results[k]));
    }
}

// Convenience: simulate n_paths trajectories of the system.
template <class Consume>
void run_ensemble(const ModelParams& p, const State& init, const SolverConfig& cfg,
                  std::uint64_t master_seed, std::size_t n_paths, Consume&& consume,
                  unsigned workers = 0) {
    run_paths(
        n_paths,
        [&](std::size_t i) {
            NoiseStream stream(master_seed, i);
            return simulate_path(p, init, cfg, stream, {master_seed, i});
        },
        [&](std::size_t i, Trajectory&& traj) { consume(i, std::move(traj)); },
        workers);
}

}  // namespace forest
