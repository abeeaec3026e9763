#pragma once

#include "popac/model.hpp"

#include <cstdint>
#include <string>

namespace popac {

enum class DomainKind { tiger, slot_filling, random };

DomainKind parse_domain_kind(const std::string& name);
std::string to_string(DomainKind kind);

struct DomainSpec {
    DomainKind kind = DomainKind::random;
    std::size_t states = 3;
    std::size_t actions = 2;
    std::size_t observations = 3;
    std::size_t horizon = 4;
    /// Tiger listen accuracy; weight of the identity block in random observation matrices.
    double observation_accuracy = 0.85;
    /// Slot-filling observation noise.
    double noise = 0.1;
    /// Weight of the Dirichlet part of random transitions (the rest is a permutation).
    double transition_mixing = 0.5;
    std::uint64_t seed = 0;
    std::size_t retry_budget = 100;
};

/// Tiger: states {left, right}, actions {listen, open-left, open-right},
/// observations {hear-left, hear-right}. Rewards -1 / +10 / -100 mapped
/// affinely onto [0, 1].
TabularPOMDP make_tiger(double listen_accuracy, std::size_t horizon);

namespace tiger {
inline constexpr std::size_t listen = 0;
inline constexpr std::size_t open_left = 1;
inline constexpr std::size_t open_right = 2;
}  // namespace tiger

/// Slot filling: the latent state is the user's intent and never changes
/// within an episode. Action 0 queries; action 1 + i commits to intent i and
/// pays reward_max when the intent matches.
TabularPOMDP make_slot_filling(std::size_t slots, double noise, std::size_t horizon);

/// Random valid model; regenerated until validation under uniform
/// exploration passes or the retry budget is exhausted.
TabularPOMDP make_random(const DomainSpec& spec);

TabularPOMDP make_domain(const DomainSpec& spec);

}  // namespace popac
