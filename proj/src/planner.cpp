#include "popac/planner.hpp"

#include "popac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace popac {

namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kDominanceTolerance = 1e-13;

bool dominates(const Vector& a, const Vector& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a(i) < b(i) - kDominanceTolerance) return false;
    return true;
}

/// Drops every vector weakly dominated by another; among equal vectors the
/// earliest survives.
std::vector<AlphaVector> prune_dominated(std::vector<AlphaVector> in) {
    std::vector<AlphaVector> kept;
    kept.reserve(in.size());
    for (auto& v : in) {
        bool dominated = false;
        for (const auto& k : kept)
            if (dominates(k.values, v.values)) {
                dominated = true;
                break;
            }
        if (dominated) continue;
        std::erase_if(kept, [&](const AlphaVector& k) { return dominates(v.values, k.values); });
        kept.push_back(std::move(v));
    }
    return kept;
}

/// Projection of a successor vector through action a and observation z:
/// g(s) = sum_{s'} T_a(s', s) O(z, s') alpha(s').
Vector project(const TabularPOMDP& m, std::size_t a, std::size_t z, const Vector& alpha) {
    return m.transitions[a].transpose() *
           m.observation.row(static_cast<Eigen::Index>(z)).transpose().cwiseProduct(alpha);
}

std::vector<AlphaVector> immediate_rewards(const TabularPOMDP& m, bool prune) {
    std::vector<AlphaVector> out;
    for (std::size_t a = 0; a < m.num_actions; ++a) out.push_back({m.rewards[a], a});
    return prune ? prune_dominated(std::move(out)) : out;
}

std::vector<long long> belief_key(const Belief& b) {
    std::vector<long long> key(static_cast<std::size_t>(b.size()));
    for (Eigen::Index i = 0; i < b.size(); ++i) key[static_cast<std::size_t>(i)] = std::llround(b(i) * 1e12);
    return key;
}

void enumerate_compositions(std::size_t parts, int total, std::vector<int>& current,
                            std::vector<std::vector<int>>& out, std::size_t cap) {
    if (out.size() > cap) return;
    if (current.size() + 1 == parts) {
        current.push_back(total);
        out.push_back(current);
        current.pop_back();
        return;
    }
    for (int v = total; v >= 0; --v) {
        current.push_back(v);
        enumerate_compositions(parts, total - v, current, out, cap);
        current.pop_back();
    }
}

Belief track(const TabularPOMDP& tracking, const Belief& b, std::size_t a, std::size_t z, ExecutionLog* log) {
    try {
        return belief_update(tracking, b, a, z);
    } catch (const ImpossibleObservation&) {
        if (log) ++log->belief_resets;
        return fallback_belief(tracking, z);
    }
}

}  // namespace

const AlphaVector& AlphaVectorPolicy::best(std::size_t step, const Belief& belief) const {
    const auto& set = steps.at(step);
    if (set.empty()) throw ConfigError("empty alpha-vector set");
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& v : set) top = std::max(top, v.values.dot(belief));
    const AlphaVector* chosen = nullptr;
    for (const auto& v : set)
        if (v.values.dot(belief) >= top - kTieTolerance && (!chosen || v.action < chosen->action)) chosen = &v;
    return *chosen;
}

double AlphaVectorPolicy::value(std::size_t step, const Belief& belief) const {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& v : steps.at(step)) top = std::max(top, v.values.dot(belief));
    return top;
}

std::size_t AlphaVectorPolicy::vector_count() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.size();
    return n;
}

std::size_t AlphaVectorPolicy::act(std::size_t step, std::span<const std::size_t>, const Belief& belief) const {
    return best(step, belief).action;
}

void GridPolicy::index_points() {
    index_.clear();
    for (std::size_t i = 0; i < points.size(); ++i) index_.emplace(points[i], i);
}

std::size_t GridPolicy::nearest(const Belief& belief) const {
    // largest-remainder rounding of belief * resolution
    const auto n = static_cast<std::size_t>(belief.size());
    std::vector<int> comp(n);
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double scaled = std::max(0.0, belief(static_cast<Eigen::Index>(i))) * static_cast<double>(resolution);
        comp[i] = static_cast<int>(std::floor(scaled));
        assigned += comp[i];
        remainders.emplace_back(scaled - comp[i], i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    const int res = static_cast<int>(resolution);
    for (std::size_t r = 0; assigned < res; r = (r + 1) % n, ++assigned) ++comp[remainders[r].second];
    for (std::size_t r = n; assigned > res; --assigned) {
        // only reachable with an unnormalized belief
        r = (r + n - 1) % n;
        while (comp[remainders[r].second] == 0) r = (r + n - 1) % n;
        --comp[remainders[r].second];
    }
    return index_.at(comp);
}

double GridPolicy::approximate_value(std::size_t step, const Belief& belief) const {
    return values.at(step).at(nearest(belief));
}

std::size_t GridPolicy::act(std::size_t step, std::span<const std::size_t>, const Belief& belief) const {
    return actions.at(step).at(nearest(belief));
}

PolicyTree::PolicyTree(std::size_t num_observations, std::size_t horizon)
    : node_actions(node_count(num_observations, horizon), 0), num_observations_(num_observations), horizon_(horizon) {}

std::size_t PolicyTree::node_count(std::size_t z, std::size_t h) {
    std::size_t total = 0, level = 1;
    for (std::size_t t = 0; t < h; ++t) {
        total += level;
        level *= z;
    }
    return total;
}

std::size_t PolicyTree::node_index(std::size_t step, std::span<const std::size_t> observations) const {
    std::size_t offset = node_count(num_observations_, step);
    std::size_t local = 0;
    for (std::size_t i = 0; i < step; ++i) local = local * num_observations_ + observations[i];
    return offset + local;
}

std::size_t PolicyTree::act(std::size_t step, std::span<const std::size_t> observations, const Belief&) const {
    return node_actions.at(node_index(step, observations));
}

AlphaVectorPolicy solve_finite_horizon(const TabularPOMDP& m, const PlannerOptions& options) {
    check_structure(m);
    AlphaVectorPolicy policy;
    policy.steps.resize(m.horizon);
    policy.steps[m.horizon - 1] = immediate_rewards(m, options.prune);
    for (std::size_t t = m.horizon - 1; t-- > 0;) {
        const auto& next = policy.steps[t + 1];
        std::vector<AlphaVector> all;
        for (std::size_t a = 0; a < m.num_actions; ++a) {
            std::vector<AlphaVector> current{{m.rewards[a], a}};
            for (std::size_t z = 0; z < m.num_observations; ++z) {
                std::vector<Vector> projected;
                projected.reserve(next.size());
                for (const auto& v : next) projected.push_back(project(m, a, z, v.values));
                if (current.size() * projected.size() > options.max_candidates)
                    throw SizeError("cross-sum of " + std::to_string(current.size() * projected.size()) +
                                    " vectors exceeds the exact-planner guardrail");
                std::vector<AlphaVector> sums;
                sums.reserve(current.size() * projected.size());
                for (const auto& c : current)
                    for (const auto& g : projected) sums.push_back({c.values + g, a});
                current = options.prune ? prune_dominated(std::move(sums)) : std::move(sums);
            }
            all.insert(all.end(), std::make_move_iterator(current.begin()), std::make_move_iterator(current.end()));
        }
        policy.steps[t] = options.prune ? prune_dominated(std::move(all)) : std::move(all);
    }
    return policy;
}

AlphaVectorPolicy solve_reachable(const TabularPOMDP& m, std::size_t max_beliefs) {
    check_structure(m);
    std::vector<std::vector<Belief>> levels(m.horizon);
    levels[0].push_back(m.initial_belief);
    std::size_t total = 1;
    for (std::size_t t = 0; t + 1 < m.horizon; ++t) {
        std::map<std::vector<long long>, std::size_t> seen;
        for (const auto& b : levels[t])
            for (std::size_t a = 0; a < m.num_actions; ++a) {
                const Vector predicted = m.transitions[a] * b;
                for (std::size_t z = 0; z < m.num_observations; ++z) {
                    Vector post = m.observation.row(static_cast<Eigen::Index>(z)).transpose().cwiseProduct(predicted);
                    const double pz = post.sum();
                    if (!(pz > 0.0)) continue;
                    post /= pz;
                    if (seen.emplace(belief_key(post), levels[t + 1].size()).second) {
                        levels[t + 1].push_back(post);
                        if (++total > max_beliefs) throw SizeError("reachable belief set exceeds the guardrail");
                    }
                }
            }
    }

    AlphaVectorPolicy policy;
    policy.steps.resize(m.horizon);
    policy.steps[m.horizon - 1] = immediate_rewards(m, true);
    for (std::size_t t = m.horizon - 1; t-- > 0;) {
        const auto& next = policy.steps[t + 1];
        std::vector<AlphaVector> backed;
        for (const auto& b : levels[t]) {
            AlphaVector chosen;
            double chosen_value = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < m.num_actions; ++a) {
                const Vector predicted = m.transitions[a] * b;
                Vector alpha = m.rewards[a];
                for (std::size_t z = 0; z < m.num_observations; ++z) {
                    const Vector unnormalized =
                        m.observation.row(static_cast<Eigen::Index>(z)).transpose().cwiseProduct(predicted);
                    const AlphaVector* arg = &next.front();
                    double top = -std::numeric_limits<double>::infinity();
                    for (const auto& v : next) {
                        const double val = v.values.dot(unnormalized);
                        if (val > top) {
                            top = val;
                            arg = &v;
                        }
                    }
                    alpha += project(m, a, z, arg->values);
                }
                const double q = alpha.dot(b);
                if (q > chosen_value + kTieTolerance) {
                    chosen_value = q;
                    chosen = {alpha, a};
                }
            }
            backed.push_back(std::move(chosen));
        }
        policy.steps[t] = prune_dominated(std::move(backed));
    }
    return policy;
}

AlphaVectorPolicy solve_exact(const TabularPOMDP& model, const PlannerOptions& options) {
    try {
        return solve_finite_horizon(model, options);
    } catch (const SizeError&) {
        return solve_reachable(model);
    }
}

GridPolicy solve_belief_grid(const TabularPOMDP& m, std::size_t resolution, std::size_t max_points) {
    check_structure(m);
    if (resolution < 2) throw ConfigError("grid resolution must be at least 2");
    GridPolicy policy;
    policy.resolution = resolution;
    policy.num_states = m.num_states;
    std::vector<int> scratch;
    enumerate_compositions(m.num_states, static_cast<int>(resolution), scratch, policy.points, max_points);
    if (policy.points.size() > max_points) throw SizeError("belief grid exceeds the point guardrail");
    policy.index_points();

    const auto S = static_cast<Eigen::Index>(m.num_states);
    std::vector<Belief> beliefs;
    for (const auto& p : policy.points) {
        Belief b(S);
        for (Eigen::Index i = 0; i < S; ++i) b(i) = static_cast<double>(p[static_cast<std::size_t>(i)]) / static_cast<double>(resolution);
        beliefs.push_back(b);
    }
    policy.actions.assign(m.horizon, std::vector<std::size_t>(beliefs.size(), 0));
    policy.values.assign(m.horizon, std::vector<double>(beliefs.size(), 0.0));
    for (std::size_t t = m.horizon; t-- > 0;) {
        for (std::size_t p = 0; p < beliefs.size(); ++p) {
            const Belief& b = beliefs[p];
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_action = 0;
            for (std::size_t a = 0; a < m.num_actions; ++a) {
                double q = m.rewards[a].dot(b);
                if (t + 1 < m.horizon) {
                    const Vector predicted = m.transitions[a] * b;
                    for (std::size_t z = 0; z < m.num_observations; ++z) {
                        Vector post = m.observation.row(static_cast<Eigen::Index>(z)).transpose().cwiseProduct(predicted);
                        const double pz = post.sum();
                        if (!(pz > 0.0)) continue;
                        q += pz * policy.values[t + 1][policy.nearest(post / pz)];
                    }
                }
                if (q > best + kTieTolerance) {
                    best = q;
                    best_action = a;
                }
            }
            policy.values[t][p] = best;
            policy.actions[t][p] = best_action;
        }
    }
    return policy;
}

Belief fallback_belief(const TabularPOMDP& tracking, std::size_t z) {
    const Vector likelihood = tracking.observation.row(static_cast<Eigen::Index>(z)).transpose();
    Vector b = likelihood.cwiseProduct(tracking.initial_belief);
    if (b.sum() > 0.0) return b / b.sum();
    if (likelihood.sum() > 0.0) return likelihood / likelihood.sum();
    const auto n = static_cast<Eigen::Index>(tracking.num_states);
    return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

Episode execute_policy(const TabularPOMDP& env, const Policy& policy, const TabularPOMDP& tracking, Rng& rng,
                       ExecutionLog* log) {
    if (policy.horizon() != env.horizon) throw ConfigError("policy horizon differs from the environment's");
    Episode episode;
    episode.seed_tag = rng.seed();
    std::vector<std::size_t> observations;
    Belief belief = tracking.initial_belief;
    auto state = static_cast<Eigen::Index>(rng.categorical(env.initial_belief));
    for (std::size_t t = 0; t < env.horizon; ++t) {
        const std::size_t a = policy.act(t, observations, belief);
        const double reward = env.rewards[a](state);
        state = static_cast<Eigen::Index>(rng.categorical(env.transitions[a].col(state)));
        const std::size_t z = rng.categorical(env.observation.col(state));
        episode.steps.push_back({a, z, reward});
        observations.push_back(z);
        belief = track(tracking, belief, a, z, log);
    }
    return episode;
}

PolicyValue evaluate_policy(const TabularPOMDP& m, const Policy& policy, const TabularPOMDP& tracking,
                            const EvaluationOptions& options) {
    check_structure(m);
    if (policy.horizon() != m.horizon) throw ConfigError("policy horizon differs from the model's");
    struct Node {
        Vector joint;  // P(latent state, this history)
        Belief belief;
        std::vector<std::size_t> observations;
    };
    PolicyValue out;
    out.per_step.assign(m.horizon, 0.0);
    std::vector<Node> frontier{{m.initial_belief, tracking.initial_belief, {}}};
    std::size_t visited = 1;
    for (std::size_t t = 0; t < m.horizon; ++t) {
        std::vector<Node> next;
        for (const auto& node : frontier) {
            const std::size_t a = policy.act(t, node.observations, node.belief);
            out.per_step[t] += node.joint.dot(m.rewards[a]);
            if (t + 1 == m.horizon) continue;
            const Vector predicted = m.transitions[a] * node.joint;
            for (std::size_t z = 0; z < m.num_observations; ++z) {
                Vector joint = m.observation.row(static_cast<Eigen::Index>(z)).transpose().cwiseProduct(predicted);
                if (!(joint.sum() > 0.0)) continue;
                if (++visited > options.max_nodes) throw SizeError("policy evaluation exceeds the history-node cap");
                auto observations = node.observations;
                observations.push_back(z);
                next.push_back({std::move(joint), track(tracking, node.belief, a, z, nullptr), std::move(observations)});
            }
        }
        frontier = std::move(next);
    }
    for (double v : out.per_step) out.value += v;
    return out;
}

PolicyValue evaluate_policy(const TabularPOMDP& model, const Policy& policy, const EvaluationOptions& options) {
    return evaluate_policy(model, policy, model, options);
}

namespace {

void tree_recursion(const TabularPOMDP& m, const PolicyTree& tree, std::size_t step, std::size_t local,
                    const Vector& joint, std::vector<double>& per_step) {
    const std::size_t node = PolicyTree::node_count(m.num_observations, step) + local;
    const std::size_t a = tree.node_actions[node];
    per_step[step] += joint.dot(m.rewards[a]);
    if (step + 1 == m.horizon) return;
    const Vector predicted = m.transitions[a] * joint;
    for (std::size_t z = 0; z < m.num_observations; ++z) {
        const Vector next = m.observation.row(static_cast<Eigen::Index>(z)).transpose().cwiseProduct(predicted);
        tree_recursion(m, tree, step + 1, local * m.num_observations + z, next, per_step);
    }
}

}  // namespace

PolicyValue evaluate_tree(const TabularPOMDP& m, const PolicyTree& tree) {
    PolicyValue out;
    out.per_step.assign(m.horizon, 0.0);
    tree_recursion(m, tree, 0, 0, m.initial_belief, out.per_step);
    for (double v : out.per_step) out.value += v;
    return out;
}

PolicyValue brute_force_optimal(const TabularPOMDP& m, std::size_t max_trees, PolicyTree* best_tree) {
    check_structure(m);
    PolicyTree tree(m.num_observations, m.horizon);
    const std::size_t nodes = tree.node_actions.size();
    const double log_trees = static_cast<double>(nodes) * std::log(static_cast<double>(m.num_actions));
    if (log_trees > std::log(static_cast<double>(max_trees)) + 1e-9)
        throw SizeError("brute force would enumerate more than " + std::to_string(max_trees) + " policy trees");

    PolicyValue best;
    best.value = -std::numeric_limits<double>::infinity();
    while (true) {
        PolicyValue v = evaluate_tree(m, tree);
        if (v.value > best.value) {
            best = std::move(v);
            if (best_tree) *best_tree = tree;
        }
        // odometer over node actions
        std::size_t i = 0;
        while (i < nodes && ++tree.node_actions[i] == m.num_actions) tree.node_actions[i++] = 0;
        if (i == nodes) break;
    }
    return best;
}

}  // namespace popac
