#include "popac/model.hpp"

#include "popac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace popac {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw StructuralError(what);
}

}  // namespace

void check_structure(const TabularPOMDP& m, double tol) {
    const auto S = static_cast<Eigen::Index>(m.num_states);
    const auto Z = static_cast<Eigen::Index>(m.num_observations);
    require(m.num_states >= 1 && m.num_actions >= 1 && m.num_observations >= 1, "empty state, action or observation set");
    require(m.horizon >= 1, "horizon must be at least 1");
    require(m.reward_max > 0.0 && std::isfinite(m.reward_max), "reward_max must be positive and finite");
    require(m.transitions.size() == m.num_actions, "one transition matrix per action required");
    require(m.rewards.size() == m.num_actions, "one reward vector per action required");
    for (std::size_t a = 0; a < m.num_actions; ++a) {
        const auto& t = m.transitions[a];
        require(t.rows() == S && t.cols() == S, "transition matrix " + std::to_string(a) + " has wrong shape");
        require(is_column_stochastic(t, tol), "transition matrix " + std::to_string(a) + " is not column-stochastic");
        const auto& r = m.rewards[a];
        require(r.size() == S, "reward vector " + std::to_string(a) + " has wrong length");
        for (Eigen::Index s = 0; s < S; ++s)
            require(std::isfinite(r(s)) && r(s) >= 0.0 && r(s) <= m.reward_max,
                    "reward of action " + std::to_string(a) + " outside [0, reward_max]");
    }
    require(m.observation.rows() == Z && m.observation.cols() == S, "observation matrix has wrong shape");
    require(is_column_stochastic(m.observation, tol), "observation matrix is not column-stochastic");
    require(m.initial_belief.size() == S, "initial belief has wrong length");
    require(is_probability_vector(m.initial_belief, tol), "initial belief is not a probability vector");
}

ExplorationPolicy ExplorationPolicy::uniform(std::size_t num_actions) {
    return {Vector::Constant(static_cast<Eigen::Index>(num_actions), 1.0 / static_cast<double>(num_actions))};
}

Matrix ExplorationPolicy::mean_transition(const TabularPOMDP& model) const {
    Matrix mean = Matrix::Zero(static_cast<Eigen::Index>(model.num_states), static_cast<Eigen::Index>(model.num_states));
    for (std::size_t a = 0; a < model.num_actions; ++a) mean += action_probs(static_cast<Eigen::Index>(a)) * model.transitions[a];
    return mean;
}

double separation_gap(const Matrix& o) {
    if (o.cols() < 2) return 2.0;
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < o.cols(); ++i)
        for (Eigen::Index j = i + 1; j < o.cols(); ++j) gap = std::min(gap, (o.col(i) - o.col(j)).lpNorm<1>());
    return gap;
}

std::vector<Vector> occupancy_profile(const TabularPOMDP& model, const ExplorationPolicy& exploration) {
    const Matrix mean = exploration.mean_transition(model);
    std::vector<Vector> profile;
    profile.reserve(model.horizon);
    Vector current = model.initial_belief;
    for (std::size_t t = 0; t < model.horizon; ++t) {
        profile.push_back(current);
        current = mean * current;
    }
    return profile;
}

ValidationReport validate(const TabularPOMDP& model, const ExplorationPolicy& exploration,
                          const ValidationOptions& options) {
    check_structure(model);
    if (static_cast<std::size_t>(exploration.action_probs.size()) != model.num_actions ||
        !is_probability_vector(exploration.action_probs, 1e-9))
        throw StructuralError("exploration mixture must be a distribution over actions");

    ValidationReport report;
    report.sigma_min_O = min_singular_value(model.observation, model.num_states);
    for (const auto& t : model.transitions)
        report.per_action_sigma_min_T.push_back(min_singular_value(t, model.num_states));
    report.observation_separation_gap = separation_gap(model.observation);
    report.min_state_occupancy = std::numeric_limits<double>::infinity();
    for (const auto& step : occupancy_profile(model, exploration))
        report.min_state_occupancy = std::min(report.min_state_occupancy, std::max(0.0, step.minCoeff()));

    if (!(report.sigma_min_O > options.floor)) report.failures.push_back("observation_rank");
    for (std::size_t a = 0; a < model.num_actions; ++a)
        if (!(report.per_action_sigma_min_T[a] > options.floor))
            report.failures.push_back("transition_rank[" + std::to_string(a) + "]");
    if (!(report.observation_separation_gap > options.floor)) report.failures.push_back("observation_separation");
    if (!(report.min_state_occupancy > options.floor)) report.failures.push_back("state_occupancy");
    report.passed = report.failures.empty();
    return report;
}

Belief belief_update(const TabularPOMDP& model, const Belief& b, std::size_t action, std::size_t observation) {
    if (action >= model.num_actions || observation >= model.num_observations)
        throw StructuralError("action or observation index out of range");
    const Vector predicted = model.transitions[action] * b;
    Vector posterior = model.observation.row(static_cast<Eigen::Index>(observation)).transpose().cwiseProduct(predicted);
    const double norm = posterior.sum();
    if (!(norm > 0.0))
        throw ImpossibleObservation(std::vector<double>(b.data(), b.data() + b.size()), action, observation);
    return posterior / norm;
}

Episode simulate_episode(const TabularPOMDP& model, const ActionRule& policy, Rng& rng) {
    Episode episode;
    episode.seed_tag = rng.seed();
    episode.steps.reserve(model.horizon);
    auto state = static_cast<Eigen::Index>(rng.categorical(model.initial_belief));
    for (std::size_t t = 0; t < model.horizon; ++t) {
        const std::size_t a = policy(t, std::span<const Step>(episode.steps), rng);
        if (a >= model.num_actions) throw StructuralError("policy chose an out-of-range action");
        const double reward = model.rewards[a](state);
        state = static_cast<Eigen::Index>(rng.categorical(model.transitions[a].col(state)));
        const std::size_t z = rng.categorical(model.observation.col(state));
        episode.steps.push_back({a, z, reward});
    }
    return episode;
}

Episode simulate_episode(const TabularPOMDP& model, const ExplorationPolicy& exploration, Rng& rng) {
    return simulate_episode(
        model, [&](std::size_t, std::span<const Step>, Rng& r) { return r.categorical(exploration.action_probs); }, rng);
}

TabularPOMDP relabel_states(const TabularPOMDP& model, std::span<const std::size_t> perm) {
    const auto S = static_cast<Eigen::Index>(model.num_states);
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p(S);
    for (Eigen::Index s = 0; s < S; ++s) p.indices()(s) = static_cast<int>(perm[static_cast<std::size_t>(s)]);
    TabularPOMDP out = model;
    for (std::size_t a = 0; a < model.num_actions; ++a) {
        out.transitions[a] = p * model.transitions[a] * p.transpose();
        out.rewards[a] = p * model.rewards[a];
    }
    out.observation = model.observation * p.transpose();
    out.initial_belief = p * model.initial_belief;
    return out;
}

}  // namespace popac
