#include "fixtures.hpp"

#include "popac/domains.hpp"
#include "popac/errors.hpp"
#include "popac/planner.hpp"

#include <doctest.h>

using namespace popac;

namespace {

TabularPOMDP fully_observable(Rng& rng, std::size_t S, std::size_t A, std::size_t H) {
    TabularPOMDP m = fixtures::random_model(rng, S, A, S, H);
    m.observation = Matrix::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    return m;
}

struct MonteCarlo {
    double mean = 0.0;
    double standard_error = 0.0;
};

MonteCarlo simulate_value(const TabularPOMDP& env, const Policy& policy, const TabularPOMDP& tracking, int n,
                          std::uint64_t seed) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        const Episode e = execute_policy(env, policy, tracking, rng);
        double total = 0.0;
        for (const auto& s : e.steps) total += s.reward;
        sum += total;
        sq += total * total;
    }
    const double mean = sum / n;
    return {mean, std::sqrt(std::max(sq / n - mean * mean, 0.0) / n)};
}

PolicyTree random_tree(Rng& rng, const TabularPOMDP& m) {
    PolicyTree tree(m.num_observations, m.horizon);
    for (auto& a : tree.node_actions) a = rng.index(m.num_actions);
    return tree;
}

}  // namespace

TEST_CASE("horizon one: alpha sets are the reward vectors") {
    Rng rng(1);
    const TabularPOMDP m = fixtures::random_model(rng, 3, 3, 2, 1);
    const AlphaVectorPolicy p = solve_finite_horizon(m, {.prune = false});
    REQUIRE(p.steps.size() == 1);
    REQUIRE(p.steps[0].size() == 3);
    for (std::size_t a = 0; a < 3; ++a) CHECK(p.steps[0][a].values == m.rewards[a]);
    double best = 0.0;
    for (std::size_t a = 0; a < 3; ++a) best = std::max(best, m.rewards[a].dot(m.initial_belief));
    CHECK(solve_finite_horizon(m).value(0, m.initial_belief) == doctest::Approx(best).epsilon(1e-15));
    CHECK(brute_force_optimal(m).value == doctest::Approx(best).epsilon(1e-15));
    CHECK(evaluate_policy(m, p).value == doctest::Approx(best).epsilon(1e-15));
}

TEST_CASE("tiger H = 2: listen first, value matches brute force") {
    const TabularPOMDP t = make_tiger(0.85, 2);
    const AlphaVectorPolicy p = solve_finite_horizon(t);
    CHECK(p.best(0, t.initial_belief).action == tiger::listen);
    const double v = p.value(0, t.initial_belief);
    CHECK(std::abs(v - brute_force_optimal(t).value) <= 1e-9);
    CHECK(std::abs(v - fixtures::recursive_optimum(t, t.initial_belief, 0)) <= 1e-12);
}

TEST_CASE("fully observable models match MDP value iteration") {
    // Observations reveal the post-transition state, so only the first action
    // is taken under uncertainty; from a point-mass b1 the value is the MDP value.
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        TabularPOMDP m = fully_observable(rng, 3, 2, 4);
        CHECK(std::abs(solve_finite_horizon(m).value(0, m.initial_belief) - fixtures::revealed_state_value(m)) <=
              1e-12);
        m.initial_belief = Vector::Unit(3, trial % 3);
        const double mdp = fixtures::mdp_values(m, 4)(trial % 3);
        CHECK(std::abs(solve_finite_horizon(m).value(0, m.initial_belief) - mdp) <= 1e-12);
    }
}

TEST_CASE("grid planner") {
    SUBCASE("resolution 40 on tiger is close to exact") {
        const TabularPOMDP t = make_tiger(0.85, 3);
        const GridPolicy g = solve_belief_grid(t, 40);
        const double exact = solve_finite_horizon(t).value(0, t.initial_belief);
        CHECK(std::abs(g.approximate_value(0, t.initial_belief) - exact) <= 0.01 * 3 * t.reward_max);
        CHECK(std::abs(evaluate_policy(t, g).value - exact) <= 0.01 * 3 * t.reward_max);
    }
    SUBCASE("vertex beliefs of a fully observable model give MDP values") {
        Rng rng(6);
        for (int trial = 0; trial < 10; ++trial) {
            TabularPOMDP m = fully_observable(rng, 3, 2, 3);
            m.initial_belief = Vector::Unit(3, trial % 3);
            const GridPolicy g = solve_belief_grid(m, 2);
            CHECK(std::abs(g.approximate_value(0, m.initial_belief) - fixtures::mdp_values(m, 3)(trial % 3)) <= 1e-12);
        }
    }
    SUBCASE("coarse grids stay bounded") {
        Rng rng(9);
        for (int trial = 0; trial < 20; ++trial) {
            const TabularPOMDP m = fixtures::random_model(rng, 3, 2, 2, 3);
            const GridPolicy g = solve_belief_grid(m, 2);
            const double exact = solve_finite_horizon(m).value(0, m.initial_belief);
            const double realized = evaluate_policy(m, g).value;
            CHECK(realized <= exact + 1e-12);
            CHECK(g.approximate_value(0, m.initial_belief) <= 3.0 * m.reward_max + 1e-12);
            CHECK(g.approximate_value(0, m.initial_belief) >= 0.0);
        }
    }
    SUBCASE("nearest grid point") {
        GridPolicy g = solve_belief_grid(make_tiger(0.85, 2), 10);
        Belief b(2);
        b << 0.26, 0.74;
        const auto& p = g.points[g.nearest(b)];
        CHECK(p == std::vector<int>{3, 7});
        CHECK_THROWS_AS(solve_belief_grid(make_tiger(0.85, 2), 1), ConfigError);
    }
}

TEST_CASE("execute_policy") {
    SUBCASE("fully observable: mean return matches exact evaluation") {
        Rng rng(12);
        const TabularPOMDP m = fully_observable(rng, 3, 2, 3);
        const AlphaVectorPolicy p = solve_finite_horizon(m);
        const double exact = evaluate_policy(m, p).value;
        const MonteCarlo mc = simulate_value(m, p, m, 100000, 3);
        CHECK(std::abs(mc.mean - exact) <= 3.0 * mc.standard_error);
    }
    SUBCASE("deterministic model yields one trajectory") {
        TabularPOMDP m;
        m.num_states = m.num_observations = 2;
        m.num_actions = 2;
        m.horizon = 3;
        Matrix flip(2, 2);
        flip << 0, 1, 1, 0;
        m.transitions = {Matrix::Identity(2, 2), flip};
        m.observation = Matrix::Identity(2, 2);
        m.rewards = {Vector::Constant(2, 0.1), Vector(2)};
        m.rewards[1] << 1.0, 0.0;
        m.initial_belief = Vector::Unit(2, 0);
        const AlphaVectorPolicy p = solve_finite_horizon(m);
        Rng r1(1), r2(2);
        const Episode a = execute_policy(m, p, m, r1), b = execute_policy(m, p, m, r2);
        CHECK(a.steps == b.steps);
    }
    SUBCASE("the model's own optimal policy beats other policies") {
        Rng rng(14);
        const TabularPOMDP m = fixtures::random_model(rng, 2, 2, 2, 3);
        const AlphaVectorPolicy best = solve_finite_horizon(m);
        const MonteCarlo opt = simulate_value(m, best, m, 20000, 5);
        for (int i = 0; i < 5; ++i) {
            const PolicyTree other = random_tree(rng, m);
            const MonteCarlo alt = simulate_value(m, other, m, 20000, 6 + i);
            CHECK(opt.mean >= alt.mean - 3.0 * std::hypot(opt.standard_error, alt.standard_error));
        }
    }
    SUBCASE("impossible observations reset to the fallback belief") {
        TabularPOMDP env = make_tiger(0.85, 3);
        TabularPOMDP tracking = env;
        tracking.observation << 1.0, 1.0, 0.0, 0.0;  // tracking model never hears right
        const AlphaVectorPolicy p = solve_finite_horizon(tracking);
        ExecutionLog log;
        std::size_t total = 0;
        for (std::uint64_t s = 0; s < 50; ++s) {
            Rng rng(s);
            execute_policy(env, p, tracking, rng, &log);
            total = log.belief_resets;
        }
        CHECK(total > 0);
        CHECK(fallback_belief(tracking, 1).isApprox(Vector::Constant(2, 0.5)));
    }
}

TEST_CASE("fallback belief cases") {
    TabularPOMDP m = make_tiger(0.85, 2);
    m.initial_belief << 1.0, 0.0;
    CHECK(fallback_belief(m, 1)(0) == 1.0);
    m.observation << 0.0, 0.6, 1.0, 0.4;
    const Belief b = fallback_belief(m, 0);
    CHECK(b(1) == 1.0);
}

TEST_CASE("evaluate_policy matches Monte Carlo on a random tiny instance") {
    Rng rng(17);
    const TabularPOMDP m = fixtures::random_model(rng, 2, 2, 2, 3);
    const AlphaVectorPolicy p = solve_finite_horizon(m);
    const double exact = evaluate_policy(m, p).value;
    CHECK(std::abs(exact - p.value(0, m.initial_belief)) <= 1e-9);
    const MonteCarlo mc = simulate_value(m, p, m, 1000000, 8);
    CHECK(std::abs(mc.mean - exact) <= 3.0 * mc.standard_error);
}

TEST_CASE("brute force oracle") {
    Rng rng(20);
    SUBCASE("agreement on random tiny instances") {
        for (int trial = 0; trial < 30; ++trial) {
            const TabularPOMDP m = fixtures::random_model(rng, 3, 2, 2, 3);
            PolicyTree tree(2, 3);
            const double bf = brute_force_optimal(m, 1000000, &tree).value;
            CHECK(std::abs(bf - solve_finite_horizon(m).value(0, m.initial_belief)) <= 1e-9);
            CHECK(std::abs(bf - fixtures::recursive_optimum(m, m.initial_belief, 0)) <= 1e-12);
            CHECK(std::abs(evaluate_tree(m, tree).value - bf) <= 1e-15);
            CHECK(std::abs(evaluate_policy(m, tree).value - bf) <= 1e-12);
        }
    }
    SUBCASE("single action equals the open-loop return") {
        const TabularPOMDP m = fixtures::random_model(rng, 3, 1, 2, 4);
        double open_loop = 0.0;
        Vector b = m.initial_belief;
        for (std::size_t t = 0; t < 4; ++t) {
            open_loop += b.dot(m.rewards[0]);
            b = m.transitions[0] * b;
        }
        CHECK(brute_force_optimal(m).value == doctest::Approx(open_loop).epsilon(1e-13));
    }
    SUBCASE("cap") {
        const TabularPOMDP m = fixtures::random_model(rng, 2, 3, 3, 4);
        CHECK_THROWS_AS(brute_force_optimal(m), SizeError);
    }
}

TEST_CASE("policy tree indexing") {
    PolicyTree tree(3, 3);
    CHECK(PolicyTree::node_count(3, 3) == 13);
    CHECK(PolicyTree::node_count(1, 4) == 4);
    const std::vector<std::size_t> obs{2, 1};
    CHECK(tree.node_index(0, obs) == 0);
    CHECK(tree.node_index(1, obs) == 1 + 2);
    CHECK(tree.node_index(2, obs) == 4 + 2 * 3 + 1);
}

TEST_CASE("guardrails and the reachable fallback") {
    Rng rng(30);
    const TabularPOMDP m = fixtures::random_model(rng, 3, 3, 3, 3);
    CHECK_THROWS_AS(solve_finite_horizon(m, {.prune = true, .max_candidates = 20}), SizeError);
    const AlphaVectorPolicy exact = solve_finite_horizon(m);
    const AlphaVectorPolicy reach = solve_reachable(m);
    const double v = exact.value(0, m.initial_belief);
    CHECK(std::abs(reach.value(0, m.initial_belief) - v) <= 1e-12);
    CHECK(std::abs(evaluate_policy(m, reach).value - v) <= 1e-12);
    CHECK(std::abs(solve_exact(m, {.prune = true, .max_candidates = 20}).value(0, m.initial_belief) - v) <= 1e-12);
    CHECK_THROWS_AS(evaluate_policy(m, exact, EvaluationOptions{.max_nodes = 10}), SizeError);
}

TEST_CASE("alpha-vector invariants") {
    Rng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const TabularPOMDP m = fixtures::random_model(rng, 3, 3, 3, 3);
        const AlphaVectorPolicy p = solve_finite_horizon(m);
        for (std::size_t t = 0; t < 3; ++t) {
            const auto& set = p.steps[t];
            REQUIRE_FALSE(set.empty());
            const double cap = static_cast<double>(3 - t) * m.reward_max;
            for (std::size_t i = 0; i < set.size(); ++i) {
                CHECK(set[i].values.minCoeff() >= -1e-12);
                CHECK(set[i].values.maxCoeff() <= cap + 1e-12);
                for (std::size_t j = 0; j < set.size(); ++j)
                    if (i != j) CHECK_FALSE((set[j].values.array() >= set[i].values.array() - 1e-13).all());
            }
        }
    }
}
