#pragma once

#include "popac/model.hpp"
#include "popac/rng.hpp"

#include <cmath>
#include <vector>

namespace fixtures {

using popac::Matrix;
using popac::Vector;

inline Vector random_distribution(popac::Rng& rng, Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = -std::log(1.0 - rng.uniform());
    return v / v.sum();
}

inline Matrix random_stochastic(popac::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) m.col(c) = random_distribution(rng, rows);
    return m;
}

/// Unvalidated random model with rewards uniform in [0, reward_max].
inline popac::TabularPOMDP random_model(popac::Rng& rng, std::size_t S, std::size_t A, std::size_t Z, std::size_t H,
                                        double reward_max = 1.0) {
    popac::TabularPOMDP m;
    m.num_states = S;
    m.num_actions = A;
    m.num_observations = Z;
    m.horizon = H;
    m.reward_max = reward_max;
    const auto s = static_cast<Eigen::Index>(S), z = static_cast<Eigen::Index>(Z);
    for (std::size_t a = 0; a < A; ++a) {
        m.transitions.push_back(random_stochastic(rng, s, s));
        Vector r(s);
        for (Eigen::Index i = 0; i < s; ++i) r(i) = reward_max * rng.uniform();
        m.rewards.push_back(r);
    }
    m.observation = random_stochastic(rng, z, s);
    m.initial_belief = random_distribution(rng, s);
    return m;
}

/// Exact optimum of a tiny model by recursion over beliefs (no alpha vectors).
inline double recursive_optimum(const popac::TabularPOMDP& m, const Vector& joint, std::size_t step) {
    double best = -1e300;
    for (std::size_t a = 0; a < m.num_actions; ++a) {
        double q = joint.dot(m.rewards[a]);
        if (step + 1 < m.horizon) {
            const Vector predicted = m.transitions[a] * joint;
            for (std::size_t z = 0; z < m.num_observations; ++z)
                q += recursive_optimum(m, m.observation.row(static_cast<Eigen::Index>(z)).transpose().cwiseProduct(predicted),
                                       step + 1);
        }
        best = std::max(best, q);
    }
    return best;
}

/// Finite-horizon MDP state values with `steps` steps to go, by value iteration.
inline Vector mdp_values(const popac::TabularPOMDP& m, std::size_t steps) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(m.num_states));
    for (std::size_t t = 0; t < steps; ++t) {
        Vector next = Vector::Constant(v.size(), -1e300);
        for (std::size_t a = 0; a < m.num_actions; ++a)
            next = next.cwiseMax(m.rewards[a] + m.transitions[a].transpose() * v);
        v = next;
    }
    return v;
}

/// Value of a model whose observations reveal the post-transition state: the
/// first action is chosen on b1 alone, every later one on the known state.
inline double revealed_state_value(const popac::TabularPOMDP& m) {
    const Vector rest = mdp_values(m, m.horizon - 1);
    double best = -1e300;
    for (std::size_t a = 0; a < m.num_actions; ++a)
        best = std::max(best, m.initial_belief.dot(m.rewards[a] + m.transitions[a].transpose() * rest));
    return best;
}

}  // namespace fixtures
