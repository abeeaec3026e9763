// Serial vs OpenMP timings of episode collection and moment accumulation.
#include "popac/domains.hpp"
#include "popac/moments.hpp"

#include <omp.h>

#include <chrono>
#include <cstdlib>
#include <iostream>

using namespace popac;

template <class F>
double seconds(F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int main(int argc, char** argv) {
    const std::size_t episodes = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200000;
    DomainSpec spec;
    spec.states = 4;
    spec.observations = 4;
    spec.actions = 3;
    spec.horizon = 6;
    spec.seed = 7;
    const TabularPOMDP model = make_random(spec);
    const ExplorationPolicy uniform = ExplorationPolicy::uniform(model.num_actions);

    EpisodeBatch serial_batch, parallel_batch;
    const double t_collect_serial = seconds([&] { serial_batch = collect_exploration_serial(model, episodes, 1, uniform); });
    const double t_collect_parallel = seconds([&] { parallel_batch = collect_exploration(model, episodes, 1, uniform); });

    std::vector<ViewMoments> serial_moments, parallel_moments;
    const double t_moments_serial = seconds([&] { serial_moments = empirical_moments_serial(serial_batch); });
    const double t_moments_parallel = seconds([&] { parallel_moments = empirical_moments(parallel_batch); });

    double max_diff = 0.0;
    for (std::size_t a = 0; a < serial_moments.size(); ++a)
        max_diff = std::max(max_diff, (serial_moments[a].m12 - parallel_moments[a].m12).cwiseAbs().maxCoeff());

    std::cout << "threads " << omp_get_max_threads() << ", episodes " << episodes << '\n';
    std::cout << "collect  serial " << t_collect_serial << " s, parallel " << t_collect_parallel << " s, speedup "
              << t_collect_serial / t_collect_parallel << '\n';
    std::cout << "moments  serial " << t_moments_serial << " s, parallel " << t_moments_parallel << " s, speedup "
              << t_moments_serial / t_moments_parallel << '\n';
    std::cout << "identical batches " << (serial_batch.episodes == parallel_batch.episodes ? "yes" : "no")
              << ", max moment difference " << max_diff << '\n';
    return 0;
}
