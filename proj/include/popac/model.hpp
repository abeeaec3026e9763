#pragma once

#include "popac/linalg.hpp"
#include "popac/rng.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace popac {

/// Episodic tabular POMDP.
///
/// Conventions used throughout the library:
///  - transitions[a](s', s) = P(s' | s, a), columns stochastic;
///  - observation(z, s) = P(z | s), columns stochastic, independent of the action;
///  - at step t the agent in state s_t takes a_t, receives R_{a_t}(s_t),
///    moves to s_{t+1} ~ T_{a_t}(., s_t) and then observes z_t ~ O(., s_{t+1}).
///    The observation of a step is emitted by the post-transition state.
struct TabularPOMDP {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_observations = 0;
    std::size_t horizon = 0;
    std::vector<Matrix> transitions;
    Matrix observation;
    std::vector<Vector> rewards;
    double reward_max = 1.0;
    Vector initial_belief;
};

/// Throws StructuralError unless all TabularPOMDP invariants hold.
void check_structure(const TabularPOMDP& model, double tolerance = 1e-12);

/// Memoryless, step-independent action mixture.
struct ExplorationPolicy {
    Vector action_probs;

    static ExplorationPolicy uniform(std::size_t num_actions);
    Matrix mean_transition(const TabularPOMDP& model) const;
};

struct ValidationOptions {
    double floor = 1e-8;
};

struct ValidationReport {
    double sigma_min_O = 0.0;
    std::vector<double> per_action_sigma_min_T;
    double observation_separation_gap = 0.0;
    double min_state_occupancy = 0.0;
    bool passed = false;
    std::vector<std::string> failures;
};

ValidationReport validate(const TabularPOMDP& model, const ExplorationPolicy& exploration,
                          const ValidationOptions& options = {});

/// Minimum L1 distance between two distinct columns (2 when only one column).
double separation_gap(const Matrix& observation);

/// Distribution of the latent state at steps 1..H (entry t-1 is step t).
std::vector<Vector> occupancy_profile(const TabularPOMDP& model, const ExplorationPolicy& exploration);

using Belief = Vector;

/// Exact Bayes filter step: normalize(diag(O[z, :]) T_a b).
Belief belief_update(const TabularPOMDP& model, const Belief& b, std::size_t action, std::size_t observation);

struct Step {
    std::size_t action = 0;
    std::size_t observation = 0;
    double reward = 0.0;

    bool operator==(const Step&) const = default;
};

struct Episode {
    std::vector<Step> steps;
    std::uint64_t seed_tag = 0;

    bool operator==(const Episode&) const = default;
};

/// Chooses the action at `step` (0-based) from the history of earlier steps.
using ActionRule = std::function<std::size_t(std::size_t step, std::span<const Step> history, Rng& rng)>;

Episode simulate_episode(const TabularPOMDP& model, const ActionRule& policy, Rng& rng);
Episode simulate_episode(const TabularPOMDP& model, const ExplorationPolicy& exploration, Rng& rng);

/// The same model with latent state s renamed to perm[s].
TabularPOMDP relabel_states(const TabularPOMDP& model, std::span<const std::size_t> perm);

}  // namespace popac
