#include "popac/pac.hpp"

#include "popac/errors.hpp"

#include <cmath>
#include <limits>

namespace popac {

namespace {

double term_base(const PacConfig& c, const std::string& name) {
    if (name == "states") return static_cast<double>(c.num_states);
    if (name == "actions") return static_cast<double>(c.num_actions);
    if (name == "observations") return static_cast<double>(c.num_observations);
    if (name == "horizon") return static_cast<double>(c.horizon);
    if (name == "reward_max") return c.reward_max;
    if (name == "epsilon") return c.epsilon;
    if (name == "sigma_min_o") return c.sigma_min_o;
    if (name == "sigma_min_t") return c.sigma_min_t;
    if (name == "separation_gap") return c.separation_gap;
    if (name == "min_occupancy") return c.min_occupancy;
    throw ConfigError("unknown formula term " + name);
}

void check(const PacConfig& c) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive and finite");
    };
    positive(c.epsilon, "epsilon");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    positive(c.sigma_min_o, "sigma_min_o");
    positive(c.sigma_min_t, "sigma_min_t");
    positive(c.separation_gap, "separation_gap");
    positive(c.min_occupancy, "min_occupancy");
    positive(c.reward_max, "reward_max");
    if (c.num_states == 0 || c.num_actions == 0 || c.num_observations == 0 || c.horizon == 0)
        throw ConfigError("sizes must be positive");
    for (const auto& [name, value] : c.constant_overrides) {
        if (name != "leading") throw ConfigError("unknown constant override " + name);
        positive(value, "leading constant");
    }
}

}  // namespace

PacConfig PacConfig::from_model(const TabularPOMDP& m, const ValidationReport& r, double epsilon, double delta) {
    PacConfig c;
    c.epsilon = epsilon;
    c.delta = delta;
    c.sigma_min_o = r.sigma_min_O;
    c.sigma_min_t = std::numeric_limits<double>::infinity();
    for (double s : r.per_action_sigma_min_T) c.sigma_min_t = std::min(c.sigma_min_t, s);
    c.separation_gap = r.observation_separation_gap;
    c.min_occupancy = r.min_state_occupancy;
    c.num_states = m.num_states;
    c.num_actions = m.num_actions;
    c.num_observations = m.num_observations;
    c.horizon = m.horizon;
    c.reward_max = m.reward_max;
    return c;
}

const std::vector<FormulaTerm>& episode_formula() {
    static const std::vector<FormulaTerm> table{
        {"states", 2.0},       {"actions", 1.0},         {"observations", 1.0},   {"horizon", 4.0},
        {"reward_max", 2.0},   {"epsilon", -2.0},        {"sigma_min_o", -4.0},   {"sigma_min_t", -2.0},
        {"separation_gap", -2.0}, {"min_occupancy", -2.0},
    };
    return table;
}

double episode_bound(const PacConfig& config) {
    check(config);
    double leading = 1.0;
    if (auto it = config.constant_overrides.find("leading"); it != config.constant_overrides.end()) leading = it->second;
    double n = leading * std::log(1.0 / config.delta);
    for (const auto& t : episode_formula()) n *= std::pow(term_base(config, t.name), t.exponent);
    return n;
}

std::uint64_t required_episodes(const PacConfig& config) {
    const double n = std::ceil(episode_bound(config));
    if (!std::isfinite(n) || n >= 1.8e19) throw ConfigError("episode bound overflows a 64-bit count");
    return static_cast<std::uint64_t>(n);
}

double simulation_gap_bound(double eps_t, double eps_o, double eps_r, double eps_b, std::size_t horizon,
                            double reward_max) {
    const double h = static_cast<double>(horizon);
    return h * eps_r + reward_max * h * eps_b + reward_max * h * (h + 1.0) / 2.0 * (eps_t + eps_o);
}

PacAccounting pac_episode_accounting(const RunLog& log) {
    PacAccounting out;
    out.flagged_exploration = log.exploration_episodes;
    out.exploitation_gap = log.oracle_value - log.exploitation_value;
    out.target_met = out.exploitation_gap <= log.epsilon;
    out.flagged_exploitation = out.target_met ? 0 : log.exploitation_episodes;
    out.flagged_total = out.flagged_exploration + out.flagged_exploitation;
    out.meets_requirement = log.exploration_episodes >= log.required_episodes;
    return out;
}

}  // namespace popac
