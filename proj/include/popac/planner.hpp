#pragma once

#include "popac/model.hpp"

#include <map>
#include <span>
#include <vector>

namespace popac {

/// A finite-horizon controller. The executor tracks a belief with some model
/// and passes it in along with the raw observation history; policies may use
/// either.
class Policy {
public:
    virtual ~Policy() = default;

    /// Action at 0-based `step`; `observations` holds the step's predecessors.
    virtual std::size_t act(std::size_t step, std::span<const std::size_t> observations,
                            const Belief& belief) const = 0;

    virtual std::size_t horizon() const = 0;
};

struct AlphaVector {
    Vector values;
    std::size_t action = 0;
};

/// Per-step sets of alpha vectors; V_t(b) = max_alpha alpha . b.
class AlphaVectorPolicy : public Policy {
public:
    std::vector<std::vector<AlphaVector>> steps;

    /// Maximizing vector; ties go to the lowest action index.
    const AlphaVector& best(std::size_t step, const Belief& belief) const;
    double value(std::size_t step, const Belief& belief) const;
    std::size_t vector_count() const;

    std::size_t act(std::size_t step, std::span<const std::size_t> observations, const Belief& belief) const override;
    std::size_t horizon() const override { return steps.size(); }
};

/// Value iteration over a regular simplex grid; beliefs are snapped to the
/// nearest grid point.
class GridPolicy : public Policy {
public:
    std::size_t resolution = 0;
    std::size_t num_states = 0;
    std::vector<std::vector<int>> points;               // compositions of `resolution`
    std::vector<std::vector<std::size_t>> actions;      // [step][point]
    std::vector<std::vector<double>> values;            // [step][point]

    std::size_t nearest(const Belief& belief) const;
    double approximate_value(std::size_t step, const Belief& belief) const;

    std::size_t act(std::size_t step, std::span<const std::size_t> observations, const Belief& belief) const override;
    std::size_t horizon() const override { return actions.size(); }

    /// Rebuilds the composition -> point lookup after `points` changes.
    void index_points();

private:
    std::map<std::vector<int>, std::size_t> index_;
};

/// Deterministic observation-indexed policy tree. Nodes are numbered level by
/// level; the node after observations (z_1..z_t) at level t has local index
/// z_1 Z^{t-1} + ... + z_t.
class PolicyTree : public Policy {
public:
    PolicyTree(std::size_t num_observations, std::size_t horizon);

    static std::size_t node_count(std::size_t num_observations, std::size_t horizon);
    std::size_t node_index(std::size_t step, std::span<const std::size_t> observations) const;

    std::vector<std::size_t> node_actions;

    std::size_t act(std::size_t step, std::span<const std::size_t> observations, const Belief& belief) const override;
    std::size_t horizon() const override { return horizon_; }
    std::size_t num_observations() const { return num_observations_; }

private:
    std::size_t num_observations_;
    std::size_t horizon_;
};

struct PlannerOptions {
    bool prune = true;
    /// Guardrail on the size of one cross-sum stage.
    std::size_t max_candidates = 10000;
};

/// Exact backward value iteration with incremental cross-sums and pointwise
/// dominance pruning. Throws SizeError when a cross-sum exceeds the guardrail.
AlphaVectorPolicy solve_finite_horizon(const TabularPOMDP& model, const PlannerOptions& options = {});

/// Exact point-based backups at every belief reachable from b1. The result
/// is optimal at b1 and at every belief its own tracking can reach.
AlphaVectorPolicy solve_reachable(const TabularPOMDP& model, std::size_t max_beliefs = 1000000);

/// solve_finite_horizon, falling back to solve_reachable past the guardrail.
AlphaVectorPolicy solve_exact(const TabularPOMDP& model, const PlannerOptions& options = {});

GridPolicy solve_belief_grid(const TabularPOMDP& model, std::size_t resolution, std::size_t max_points = 500000);

/// Belief used when the tracking model assigns zero probability to an
/// observation: O[z, :] weighted by b1, else by uniform, else uniform.
Belief fallback_belief(const TabularPOMDP& tracking, std::size_t observation);

struct ExecutionLog {
    std::size_t belief_resets = 0;
};

/// Acts in `environment` while tracking the belief with `tracking`.
Episode execute_policy(const TabularPOMDP& environment, const Policy& policy, const TabularPOMDP& tracking, Rng& rng,
                       ExecutionLog* log = nullptr);

struct PolicyValue {
    double value = 0.0;
    std::vector<double> per_step;
};

struct EvaluationOptions {
    std::size_t max_nodes = 4000000;
};

/// Exact expected return by forward enumeration of observation histories
/// jointly with the latent state.
PolicyValue evaluate_policy(const TabularPOMDP& model, const Policy& policy, const TabularPOMDP& tracking,
                            const EvaluationOptions& options = {});
PolicyValue evaluate_policy(const TabularPOMDP& model, const Policy& policy, const EvaluationOptions& options = {});

/// Exact return of a policy tree by direct recursion over the tree.
PolicyValue evaluate_tree(const TabularPOMDP& model, const PolicyTree& tree);

/// Enumerates every policy tree of depth H and returns the best exact value.
PolicyValue brute_force_optimal(const TabularPOMDP& model, std::size_t max_trees = 1000000,
                                PolicyTree* best_tree = nullptr);

}  // namespace popac
