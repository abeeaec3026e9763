#include "popac/domains.hpp"

#include "popac/errors.hpp"

#include <numeric>
#include <sstream>

namespace popac {

DomainKind parse_domain_kind(const std::string& name) {
    if (name == "tiger") return DomainKind::tiger;
    if (name == "slot_filling" || name == "slot-filling") return DomainKind::slot_filling;
    if (name == "random") return DomainKind::random;
    throw ConfigError("unknown domain kind '" + name + "'");
}

std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::tiger: return "tiger";
        case DomainKind::slot_filling: return "slot_filling";
        case DomainKind::random: return "random";
    }
    return "unknown";
}

TabularPOMDP make_tiger(double accuracy, std::size_t horizon) {
    if (!(accuracy > 0.5 && accuracy < 1.0)) throw ConfigError("tiger listen accuracy must lie in (0.5, 1)");
    // raw rewards: listen -1, correct door +10, tiger -100
    auto shift = [](double r) { return (r + 100.0) / 110.0; };

    TabularPOMDP m;
    m.num_states = 2;
    m.num_actions = 3;
    m.num_observations = 2;
    m.horizon = horizon;
    m.reward_max = 1.0;
    m.transitions = {Matrix::Identity(2, 2), Matrix::Constant(2, 2, 0.5), Matrix::Constant(2, 2, 0.5)};
    m.observation.resize(2, 2);
    m.observation << accuracy, 1.0 - accuracy, 1.0 - accuracy, accuracy;
    m.rewards = {Vector::Constant(2, shift(-1.0)), Vector(2), Vector(2)};
    m.rewards[tiger::open_left] << shift(-100.0), shift(10.0);
    m.rewards[tiger::open_right] << shift(10.0), shift(-100.0);
    m.initial_belief = Vector::Constant(2, 0.5);
    check_structure(m);
    return m;
}

TabularPOMDP make_slot_filling(std::size_t slots, double noise, std::size_t horizon) {
    if (slots < 2) throw ConfigError("slot filling needs at least two intents");
    if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("slot filling noise must be a probability");
    const auto n = static_cast<Eigen::Index>(slots);

    TabularPOMDP m;
    m.num_states = slots;
    m.num_actions = slots + 1;
    m.num_observations = slots;
    m.horizon = horizon;
    m.reward_max = 1.0;
    m.transitions.assign(slots + 1, Matrix::Identity(n, n));
    m.observation = Matrix::Constant(n, n, noise / static_cast<double>(slots - 1));
    m.observation.diagonal().setConstant(1.0 - noise);
    m.rewards.assign(slots + 1, Vector::Zero(n));
    for (Eigen::Index i = 0; i < n; ++i) m.rewards[static_cast<std::size_t>(i) + 1](i) = m.reward_max;
    m.initial_belief = Vector::Constant(n, 1.0 / static_cast<double>(slots));
    check_structure(m);
    return m;
}

namespace {

Vector dirichlet(Rng& rng, Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.gamma(1.0);
    const double s = v.sum();
    return s > 0.0 ? Vector(v / s) : Vector(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

Matrix random_permutation(Rng& rng, Eigen::Index n) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index c = 0; c < n; ++c) p(idx[static_cast<std::size_t>(c)], c) = 1.0;
    return p;
}

TabularPOMDP draw_random(const DomainSpec& spec, Rng& rng) {
    const auto S = static_cast<Eigen::Index>(spec.states);
    const auto Z = static_cast<Eigen::Index>(spec.observations);
    TabularPOMDP m;
    m.num_states = spec.states;
    m.num_actions = spec.actions;
    m.num_observations = spec.observations;
    m.horizon = spec.horizon;
    m.reward_max = 1.0;
    for (std::size_t a = 0; a < spec.actions; ++a) {
        Matrix t = (1.0 - spec.transition_mixing) * random_permutation(rng, S);
        for (Eigen::Index c = 0; c < S; ++c) t.col(c) += spec.transition_mixing * dirichlet(rng, S);
        m.transitions.push_back(t);
    }
    m.observation = Matrix::Zero(Z, S);
    for (Eigen::Index c = 0; c < S; ++c) {
        m.observation.col(c) = (1.0 - spec.observation_accuracy) * dirichlet(rng, Z);
        if (c < Z) m.observation(c, c) += spec.observation_accuracy;
        else m.observation.col(c) += spec.observation_accuracy * dirichlet(rng, Z);
    }
    for (std::size_t a = 0; a < spec.actions; ++a) {
        Vector r(S);
        for (Eigen::Index s = 0; s < S; ++s) r(s) = rng.uniform() * m.reward_max;
        m.rewards.push_back(r);
    }
    m.initial_belief = dirichlet(rng, S);
    return m;
}

}  // namespace

TabularPOMDP make_random(const DomainSpec& spec) {
    if (spec.states < 1 || spec.actions < 1 || spec.observations < 1 || spec.horizon < 1)
        throw ConfigError("random domain sizes must be at least 1");
    if (!(spec.observation_accuracy >= 0.0 && spec.observation_accuracy <= 1.0) ||
        !(spec.transition_mixing >= 0.0 && spec.transition_mixing <= 1.0))
        throw ConfigError("random domain mixing weights must lie in [0, 1]");

    Rng rng(derive_seed(spec.seed, 0x52414e44ULL));
    const auto exploration = ExplorationPolicy::uniform(spec.actions);
    ValidationReport last;
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(spec.retry_budget, 1); ++attempt) {
        TabularPOMDP m = draw_random(spec, rng);
        // renormalize away rounding so the 1e-12 structural tolerance holds
        for (auto& t : m.transitions)
            for (Eigen::Index c = 0; c < t.cols(); ++c) t.col(c) /= t.col(c).sum();
        for (Eigen::Index c = 0; c < m.observation.cols(); ++c) m.observation.col(c) /= m.observation.col(c).sum();
        m.initial_belief /= m.initial_belief.sum();
        last = validate(m, exploration);
        if (last.passed) return m;
    }
    std::ostringstream os;
    os << "random domain generation failed after " << spec.retry_budget << " attempts; last report: sigma_min_O="
       << last.sigma_min_O << " separation_gap=" << last.observation_separation_gap
       << " min_occupancy=" << last.min_state_occupancy << " failures=";
    for (const auto& f : last.failures) os << f << ' ';
    throw GenerationFailed(os.str());
}

TabularPOMDP make_domain(const DomainSpec& spec) {
    switch (spec.kind) {
        case DomainKind::tiger: return make_tiger(spec.observation_accuracy, spec.horizon);
        case DomainKind::slot_filling: return make_slot_filling(spec.states, spec.noise, spec.horizon);
        case DomainKind::random: return make_random(spec);
    }
    throw ConfigError("unknown domain kind");
}

}  // namespace popac
