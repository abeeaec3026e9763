#include "fixtures.hpp"

#include "popac/errors.hpp"
#include "popac/model.hpp"

#include <doctest.h>

using namespace popac;

namespace {

TabularPOMDP identity_model(std::size_t n, std::size_t H) {
    TabularPOMDP m;
    m.num_states = m.num_observations = n;
    m.num_actions = 2;
    m.horizon = H;
    const auto k = static_cast<Eigen::Index>(n);
    Matrix shift = Matrix::Zero(k, k);
    for (Eigen::Index s = 0; s < k; ++s) shift((s + 1) % k, s) = 1.0;
    m.transitions = {Matrix::Identity(k, k), shift};
    m.observation = Matrix::Identity(k, k);
    m.rewards = {Vector::Zero(k), Vector::Ones(k)};
    m.initial_belief = Vector::Constant(k, 1.0 / static_cast<double>(n));
    return m;
}

TabularPOMDP tiger_like(double acc) {
    TabularPOMDP m;
    m.num_states = m.num_observations = 2;
    m.num_actions = 1;
    m.horizon = 3;
    m.transitions = {Matrix::Identity(2, 2)};
    m.observation.resize(2, 2);
    m.observation << acc, 1 - acc, 1 - acc, acc;
    m.rewards = {Vector::Constant(2, 0.5)};
    m.initial_belief = Vector::Constant(2, 0.5);
    return m;
}

}  // namespace

TEST_CASE("check_structure rejects malformed models") {
    TabularPOMDP m = identity_model(3, 3);
    CHECK_NOTHROW(check_structure(m));
    TabularPOMDP bad = m;
    bad.transitions[1](0, 0) = 0.5;
    CHECK_THROWS_AS(check_structure(bad), StructuralError);
    bad = m;
    bad.rewards[0](1) = 2.0;
    CHECK_THROWS_AS(check_structure(bad), StructuralError);
    bad = m;
    bad.initial_belief(0) = -0.1;
    CHECK_THROWS_AS(check_structure(bad), StructuralError);
    bad = m;
    bad.observation.resize(3, 2);
    CHECK_THROWS_AS(check_structure(bad), StructuralError);
}

TEST_CASE("validate: identity observation model passes with unit singular value and gap 2") {
    const ValidationReport r = validate(identity_model(3, 3), ExplorationPolicy::uniform(2));
    CHECK(r.passed);
    CHECK(r.failures.empty());
    CHECK(r.sigma_min_O == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.observation_separation_gap == doctest::Approx(2.0).epsilon(1e-12));
    for (double s : r.per_action_sigma_min_T) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.min_state_occupancy == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("validate: duplicate observation columns fail separation") {
    TabularPOMDP m = identity_model(3, 3);
    m.observation.col(2) = m.observation.col(1);
    const ValidationReport r = validate(m, ExplorationPolicy::uniform(2));
    CHECK_FALSE(r.passed);
    CHECK(r.observation_separation_gap == 0.0);
    CHECK(std::find(r.failures.begin(), r.failures.end(), "observation_separation") != r.failures.end());
}

TEST_CASE("validate: tiger observation statistics match a hand computation") {
    // O = [[.85, .15], [.15, .85]] is symmetric with eigenvalues 1 and .85 - .15 = .7,
    // so its singular values are 1 and 0.7; the column L1 distance is 2 * 0.7.
    const ValidationReport r = validate(tiger_like(0.85), ExplorationPolicy::uniform(1));
    CHECK(r.sigma_min_O == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(r.observation_separation_gap == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(r.passed);
}

TEST_CASE("validate rejects structurally invalid input with an error, not a report") {
    TabularPOMDP m = identity_model(2, 3);
    m.observation(0, 0) = 0.3;
    CHECK_THROWS_AS(validate(m, ExplorationPolicy::uniform(2)), StructuralError);
}

TEST_CASE("belief_update examples") {
    SUBCASE("tiger listen from uniform") {
        const Belief b = belief_update(tiger_like(0.85), Vector::Constant(2, 0.5), 0, 0);
        CHECK(b(0) == doctest::Approx(0.85).epsilon(1e-15));
        CHECK(b(1) == doctest::Approx(0.15).epsilon(1e-15));
    }
    SUBCASE("identity observation reveals the state") {
        const TabularPOMDP m = identity_model(3, 3);
        Belief b(3);
        b << 0.2, 0.5, 0.3;
        const Belief post = belief_update(m, b, 1, 2);
        CHECK(post(2) == 1.0);
        CHECK(post(0) == 0.0);
        CHECK(post(1) == 0.0);
    }
    SUBCASE("impossible observation carries its inputs") {
        const TabularPOMDP m = identity_model(3, 3);
        const Belief b = Vector::Unit(3, 0);
        try {
            belief_update(m, b, 0, 2);
            FAIL("expected ImpossibleObservation");
        } catch (const ImpossibleObservation& e) {
            CHECK(e.action == 0);
            CHECK(e.observation == 2);
            CHECK(e.belief == std::vector<double>{1.0, 0.0, 0.0});
        }
    }
}

TEST_CASE("simulate_episode: deterministic model yields its unique trajectory") {
    TabularPOMDP m = identity_model(3, 4);
    m.initial_belief = Vector::Unit(3, 0);
    for (std::uint64_t seed : {1u, 99u, 12345u}) {
        Rng rng(seed);
        const Episode e = simulate_episode(m, [](std::size_t, std::span<const Step>, Rng&) { return std::size_t{1}; }, rng);
        REQUIRE(e.steps.size() == 4);
        for (std::size_t t = 0; t < 4; ++t) {
            CHECK(e.steps[t].action == 1);
            CHECK(e.steps[t].observation == (t + 1) % 3);
            CHECK(e.steps[t].reward == 1.0);
        }
    }
}

TEST_CASE("simulate_episode is deterministic given the seed") {
    Rng gen(5);
    const TabularPOMDP m = fixtures::random_model(gen, 3, 2, 3, 5);
    Rng a(77), b(77);
    CHECK(simulate_episode(m, ExplorationPolicy::uniform(2), a) == simulate_episode(m, ExplorationPolicy::uniform(2), b));
}

TEST_CASE("simulate_episode: first-observation frequencies match O T_a b1") {
    Rng gen(11);
    const TabularPOMDP m = fixtures::random_model(gen, 3, 2, 4, 3);
    const Vector expected = m.observation * m.transitions[1] * m.initial_belief;
    constexpr int n = 100000;
    Vector counts = Vector::Zero(4);
    Rng rng(3);
    for (int i = 0; i < n; ++i) {
        const Episode e =
            simulate_episode(m, [](std::size_t, std::span<const Step>, Rng&) { return std::size_t{1}; }, rng);
        counts(static_cast<Eigen::Index>(e.steps[0].observation)) += 1.0;
    }
    for (Eigen::Index z = 0; z < 4; ++z) {
        const double p = expected(z);
        CHECK(std::abs(counts(z) / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
    }
}

TEST_CASE("occupancy_profile examples") {
    Rng gen(21);
    const TabularPOMDP m = fixtures::random_model(gen, 4, 2, 4, 4);
    const ExplorationPolicy uniform = ExplorationPolicy::uniform(2);
    const auto profile = occupancy_profile(m, uniform);
    REQUIRE(profile.size() == 4);
    CHECK((profile[0] - m.initial_belief).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("deterministic cycle rotates a point mass") {
        TabularPOMDP cycle = identity_model(3, 4);
        cycle.transitions = {cycle.transitions[1]};
        cycle.rewards = {cycle.rewards[1]};
        cycle.num_actions = 1;
        cycle.initial_belief = Vector::Unit(3, 0);
        const auto p = occupancy_profile(cycle, ExplorationPolicy::uniform(1));
        for (std::size_t t = 0; t < 4; ++t) CHECK(p[t](static_cast<Eigen::Index>(t % 3)) == 1.0);
    }

    SUBCASE("matches Monte Carlo state frequencies") {
        constexpr int n = 1000000;
        std::vector<Vector> counts(4, Vector::Zero(4));
        Rng rng(8);
        for (int i = 0; i < n; ++i) {
            auto s = static_cast<Eigen::Index>(rng.categorical(m.initial_belief));
            for (std::size_t t = 0; t < 4; ++t) {
                counts[t](s) += 1.0;
                const std::size_t a = rng.index(2);
                s = static_cast<Eigen::Index>(rng.categorical(m.transitions[a].col(s)));
            }
        }
        for (std::size_t t = 0; t < 4; ++t)
            for (Eigen::Index s = 0; s < 4; ++s) {
                const double p = profile[t](s);
                CHECK(std::abs(counts[t](s) / n - p) <= 3.0 * std::sqrt(p * (1 - p) / n) + 1e-15);
            }
    }
}

TEST_CASE("relabel_states moves every field consistently") {
    Rng gen(4);
    const TabularPOMDP m = fixtures::random_model(gen, 3, 2, 3, 3);
    const std::vector<std::size_t> perm{2, 0, 1};
    const TabularPOMDP r = relabel_states(m, perm);
    for (Eigen::Index s = 0; s < 3; ++s) {
        const auto ps = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(s)]);
        CHECK(r.initial_belief(ps) == m.initial_belief(s));
        CHECK(r.observation.col(ps) == m.observation.col(s));
        for (std::size_t a = 0; a < 2; ++a) {
            CHECK(r.rewards[a](ps) == m.rewards[a](s));
            for (Eigen::Index t = 0; t < 3; ++t)
                CHECK(r.transitions[a](static_cast<Eigen::Index>(perm[static_cast<std::size_t>(t)]), ps) ==
                      m.transitions[a](t, s));
        }
    }
}
