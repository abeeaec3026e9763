#pragma once

#include "popac/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace popac {

struct PacConfig {
    double epsilon = 0.1;
    double delta = 0.05;
    double sigma_min_o = 1.0;
    double sigma_min_t = 1.0;
    double separation_gap = 1.0;
    double min_occupancy = 1.0;
    std::size_t num_states = 1;
    std::size_t num_actions = 1;
    std::size_t num_observations = 1;
    std::size_t horizon = 1;
    double reward_max = 1.0;
    /// Named multiplicative constants; only "leading" is recognized.
    std::map<std::string, double> constant_overrides;

    /// Sizes from the model, statistics from its validation report.
    static PacConfig from_model(const TabularPOMDP& model, const ValidationReport& report, double epsilon,
                                double delta);
};

/// One factor of the episode bound: base^exponent, in the numerator when the
/// exponent is positive.
struct FormulaTerm {
    const char* name;
    double exponent;
};

/// Exponents of the episode bound
///   N = C * |S|^a |A|^b |Z|^c H^d R_max^e * log(1/delta)
///       / (eps^2 * sigma_O^f * sigma_T^g * gap^h * occupancy^i).
/// These are placeholders: the absolute constant and the exact exponents are
/// edited here and nowhere else.
const std::vector<FormulaTerm>& episode_formula();

/// Unrounded value of the bound.
double episode_bound(const PacConfig& config);

/// Ceiling of episode_bound. Throws ConfigError on an invalid config.
std::uint64_t required_episodes(const PacConfig& config);

/// Value error bound for two models whose parameters differ by at most the
/// given amounts (max L1 column error of T and O, max |R| error, L1 b1 error):
///   B = H eps_R + R_max H eps_b + R_max H (H + 1) / 2 (eps_T + eps_O).
double simulation_gap_bound(double eps_t, double eps_o, double eps_r, double eps_b, std::size_t horizon,
                            double reward_max);

/// Phase boundaries and values of a completed explore-then-exploit run.
struct RunLog {
    std::uint64_t exploration_episodes = 0;
    std::uint64_t exploitation_episodes = 0;
    double exploitation_value = 0.0;
    double oracle_value = 0.0;
    double epsilon = 0.1;
    std::uint64_t required_episodes = 0;
};

struct PacAccounting {
    std::uint64_t flagged_exploration = 0;
    std::uint64_t flagged_exploitation = 0;
    std::uint64_t flagged_total = 0;
    double exploitation_gap = 0.0;
    /// exploitation_gap <= epsilon
    bool target_met = false;
    /// exploration used at least the required episode count
    bool meets_requirement = false;
};

/// Every exploration episode is flagged; exploitation episodes are flagged
/// when the exploitation policy is more than epsilon below the oracle.
PacAccounting pac_episode_accounting(const RunLog& log);

}  // namespace popac
