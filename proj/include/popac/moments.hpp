#pragma once

#include "popac/linalg.hpp"
#include "popac/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

namespace popac {

struct EpisodeBatch {
    std::vector<Episode> episodes;
    ExplorationPolicy exploration;
    std::size_t num_actions = 0;
    std::size_t num_observations = 0;
    std::size_t horizon = 0;
    double reward_max = 1.0;

    std::size_t total_count() const { return episodes.size(); }
};

/// Concatenation; throws ConfigError when shapes or mixtures differ.
EpisodeBatch merge(const EpisodeBatch& first, const EpisodeBatch& second);

/// Runs the memoryless exploration policy for `episodes` episodes. Episode i
/// draws from substream first_index + i of `seed`, so shards with
/// consecutive first_index values merge into the single-run batch exactly.
EpisodeBatch collect_exploration(const TabularPOMDP& model, std::size_t episodes, std::uint64_t seed,
                                 const ExplorationPolicy& exploration, std::uint64_t first_index = 0);

/// Single-threaded reference for collect_exploration.
EpisodeBatch collect_exploration_serial(const TabularPOMDP& model, std::size_t episodes, std::uint64_t seed,
                                        const ExplorationPolicy& exploration, std::uint64_t first_index = 0);

inline constexpr std::uint64_t kPopulationCount = std::numeric_limits<std::uint64_t>::max();

/// Multi-view moments for one action.
///
/// A triple is emitted for every observation index m in {2, ..., H-1}
/// (1-based) whose following step takes `action`: views are the
/// observations at m-1, m and m+1, the hidden variable is the latent state
/// that emitted the middle observation, and the paired reward is the one
/// earned by `action` in that state.
struct ViewMoments {
    std::size_t action = 0;
    std::uint64_t count = 0;
    Vector m1;
    Matrix m12;
    Matrix m13;
    Matrix m23;
    Tensor3 m123;
    /// E[r * e_{middle observation}].
    Vector reward_cross;
    /// Distribution of the first observation among episodes whose first action is `action`.
    Vector first_obs;
    std::uint64_t first_count = 0;

    bool is_population() const { return count == kPopulationCount; }
    std::size_t num_observations() const { return static_cast<std::size_t>(m1.size()); }
};

/// Count-weighted average; both inputs must be empirical and share the action.
ViewMoments merge(const ViewMoments& first, const ViewMoments& second);

ViewMoments empirical_moments(const EpisodeBatch& batch, std::size_t action);

/// Moments of every action from one sharded pass (OpenMP).
std::vector<ViewMoments> empirical_moments(const EpisodeBatch& batch);

/// Single pass in episode order; reference for the sharded kernel.
std::vector<ViewMoments> empirical_moments_serial(const EpisodeBatch& batch);

/// Exact expectations under the model and exploration mixture.
std::vector<ViewMoments> population_moments(const TabularPOMDP& model, const ExplorationPolicy& exploration);

nlohmann::json moments_to_json(const ViewMoments& moments);

void write_batch(const EpisodeBatch& batch, std::ostream& out);
EpisodeBatch read_batch(std::istream& in);

}  // namespace popac
