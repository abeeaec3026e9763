#include "popac/moments.hpp"

#include "popac/errors.hpp"
#include "popac/model_io.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace popac {

namespace {

constexpr std::size_t kShardEpisodes = 2048;

void check_batch_shape(const EpisodeBatch& batch) {
    if (batch.episodes.empty()) throw InsufficientData(0);
    if (batch.horizon < 3) throw StructuralError("multi-view moments need horizon >= 3");
    for (const auto& e : batch.episodes) {
        if (e.steps.size() != batch.horizon) throw StructuralError("episode length differs from batch horizon");
        for (const auto& s : e.steps)
            if (s.action >= batch.num_actions || s.observation >= batch.num_observations)
                throw StructuralError("episode index out of range");
    }
}

/// Integer triple counts per action plus reward sums; merging is exact except
/// for the reward sums, which are folded in a fixed order.
struct Accumulator {
    std::size_t actions = 0;
    std::size_t obs = 0;
    std::vector<std::uint64_t> triples;       // [a][z1][z2][z3]
    std::vector<double> reward_sums;          // [a][z2]
    std::vector<std::uint64_t> first_counts;  // [a][z]

    Accumulator(std::size_t a, std::size_t z)
        : actions(a), obs(z), triples(a * z * z * z, 0), reward_sums(a * z, 0.0), first_counts(a * z, 0) {}

    void add(const Episode& e) {
        const auto& st = e.steps;
        ++first_counts[st[0].action * obs + st[0].observation];
        for (std::size_t m = 1; m + 1 < st.size(); ++m) {
            const std::size_t a = st[m + 1].action;
            const std::size_t z1 = st[m - 1].observation, z2 = st[m].observation, z3 = st[m + 1].observation;
            ++triples[((a * obs + z1) * obs + z2) * obs + z3];
            reward_sums[a * obs + z2] += st[m + 1].reward;
        }
    }

    void absorb(const Accumulator& other) {
        for (std::size_t i = 0; i < triples.size(); ++i) triples[i] += other.triples[i];
        for (std::size_t i = 0; i < reward_sums.size(); ++i) reward_sums[i] += other.reward_sums[i];
        for (std::size_t i = 0; i < first_counts.size(); ++i) first_counts[i] += other.first_counts[i];
    }

    ViewMoments finalize(std::size_t a) const {
        const auto Z = static_cast<Eigen::Index>(obs);
        ViewMoments vm;
        vm.action = a;
        vm.m123 = Tensor3(obs);
        std::uint64_t n = 0;
        for (std::size_t i = 0; i < obs * obs * obs; ++i) n += triples[a * obs * obs * obs + i];
        if (n == 0) throw InsufficientData(a);
        vm.count = n;
        const double inv = 1.0 / static_cast<double>(n);
        vm.m1 = Vector::Zero(Z);
        vm.m12 = Matrix::Zero(Z, Z);
        vm.m13 = Matrix::Zero(Z, Z);
        vm.m23 = Matrix::Zero(Z, Z);
        for (std::size_t z1 = 0; z1 < obs; ++z1)
            for (std::size_t z2 = 0; z2 < obs; ++z2)
                for (std::size_t z3 = 0; z3 < obs; ++z3) {
                    const auto c = triples[((a * obs + z1) * obs + z2) * obs + z3];
                    if (c == 0) continue;
                    const double p = static_cast<double>(c) * inv;
                    const auto i1 = static_cast<Eigen::Index>(z1), i2 = static_cast<Eigen::Index>(z2),
                               i3 = static_cast<Eigen::Index>(z3);
                    vm.m123(z1, z2, z3) = p;
                    vm.m12(i1, i2) += p;
                    vm.m13(i1, i3) += p;
                    vm.m23(i2, i3) += p;
                    vm.m1(i2) += p;
                }
        vm.reward_cross = Vector::Zero(Z);
        for (std::size_t z = 0; z < obs; ++z) vm.reward_cross(static_cast<Eigen::Index>(z)) = reward_sums[a * obs + z] * inv;
        vm.first_obs = Vector::Zero(Z);
        std::uint64_t nf = 0;
        for (std::size_t z = 0; z < obs; ++z) nf += first_counts[a * obs + z];
        vm.first_count = nf;
        if (nf > 0)
            for (std::size_t z = 0; z < obs; ++z)
                vm.first_obs(static_cast<Eigen::Index>(z)) =
                    static_cast<double>(first_counts[a * obs + z]) / static_cast<double>(nf);
        return vm;
    }
};

Accumulator accumulate_serial(const EpisodeBatch& batch) {
    Accumulator acc(batch.num_actions, batch.num_observations);
    for (const auto& e : batch.episodes) acc.add(e);
    return acc;
}

Accumulator accumulate_sharded(const EpisodeBatch& batch) {
    const std::size_t n = batch.episodes.size();
    const std::size_t shards = (n + kShardEpisodes - 1) / kShardEpisodes;
    std::vector<Accumulator> parts(shards, Accumulator(batch.num_actions, batch.num_observations));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(shards); ++s) {
        const std::size_t begin = static_cast<std::size_t>(s) * kShardEpisodes;
        const std::size_t end = std::min(n, begin + kShardEpisodes);
        for (std::size_t i = begin; i < end; ++i) parts[static_cast<std::size_t>(s)].add(batch.episodes[i]);
    }
    Accumulator total(batch.num_actions, batch.num_observations);
    for (const auto& p : parts) total.absorb(p);
    return total;
}

EpisodeBatch make_batch_header(const TabularPOMDP& model, const ExplorationPolicy& exploration) {
    check_structure(model);
    if (static_cast<std::size_t>(exploration.action_probs.size()) != model.num_actions ||
        !is_probability_vector(exploration.action_probs, 1e-9))
        throw ConfigError("exploration mixture must be a distribution over actions");
    EpisodeBatch batch;
    batch.exploration = exploration;
    batch.num_actions = model.num_actions;
    batch.num_observations = model.num_observations;
    batch.horizon = model.horizon;
    batch.reward_max = model.reward_max;
    return batch;
}

}  // namespace

EpisodeBatch merge(const EpisodeBatch& first, const EpisodeBatch& second) {
    if (first.num_actions != second.num_actions || first.num_observations != second.num_observations ||
        first.horizon != second.horizon || first.reward_max != second.reward_max ||
        first.exploration.action_probs != second.exploration.action_probs)
        throw ConfigError("cannot merge batches with different shapes or exploration mixtures");
    EpisodeBatch out = first;
    out.episodes.insert(out.episodes.end(), second.episodes.begin(), second.episodes.end());
    return out;
}

EpisodeBatch collect_exploration(const TabularPOMDP& model, std::size_t episodes, std::uint64_t seed,
                                 const ExplorationPolicy& exploration, std::uint64_t first_index) {
    if (episodes < 1) throw ConfigError("collect_exploration needs at least one episode");
    EpisodeBatch batch = make_batch_header(model, exploration);
    batch.episodes.resize(episodes);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(episodes); ++i) {
        Rng rng(derive_seed(seed, first_index + static_cast<std::uint64_t>(i)));
        batch.episodes[static_cast<std::size_t>(i)] = simulate_episode(model, exploration, rng);
    }
    return batch;
}

EpisodeBatch collect_exploration_serial(const TabularPOMDP& model, std::size_t episodes, std::uint64_t seed,
                                        const ExplorationPolicy& exploration, std::uint64_t first_index) {
    if (episodes < 1) throw ConfigError("collect_exploration needs at least one episode");
    EpisodeBatch batch = make_batch_header(model, exploration);
    batch.episodes.reserve(episodes);
    for (std::size_t i = 0; i < episodes; ++i) {
        Rng rng(derive_seed(seed, first_index + i));
        batch.episodes.push_back(simulate_episode(model, exploration, rng));
    }
    return batch;
}

ViewMoments merge(const ViewMoments& x, const ViewMoments& y) {
    if (x.action != y.action) throw ConfigError("cannot merge moments of different actions");
    if (x.is_population() || y.is_population()) throw ConfigError("population moments carry no sample count to merge");
    if (x.num_observations() != y.num_observations()) throw ConfigError("moment shapes differ");
    const double n = static_cast<double>(x.count) + static_cast<double>(y.count);
    const double wx = static_cast<double>(x.count) / n, wy = static_cast<double>(y.count) / n;
    ViewMoments out;
    out.action = x.action;
    out.count = x.count + y.count;
    out.m1 = wx * x.m1 + wy * y.m1;
    out.m12 = wx * x.m12 + wy * y.m12;
    out.m13 = wx * x.m13 + wy * y.m13;
    out.m23 = wx * x.m23 + wy * y.m23;
    out.m123 = Tensor3(x.num_observations());
    for (std::size_t i = 0; i < out.m123.data().size(); ++i)
        out.m123.data()[i] = wx * x.m123.data()[i] + wy * y.m123.data()[i];
    out.reward_cross = wx * x.reward_cross + wy * y.reward_cross;
    out.first_count = x.first_count + y.first_count;
    if (out.first_count > 0) {
        const double nf = static_cast<double>(out.first_count);
        out.first_obs = (static_cast<double>(x.first_count) / nf) * x.first_obs +
                        (static_cast<double>(y.first_count) / nf) * y.first_obs;
    } else {
        out.first_obs = x.first_obs;
    }
    return out;
}

ViewMoments empirical_moments(const EpisodeBatch& batch, std::size_t action) {
    check_batch_shape(batch);
    if (action >= batch.num_actions) throw ConfigError("action index out of range");
    return accumulate_sharded(batch).finalize(action);
}

std::vector<ViewMoments> empirical_moments(const EpisodeBatch& batch) {
    check_batch_shape(batch);
    const Accumulator acc = accumulate_sharded(batch);
    std::vector<ViewMoments> out;
    for (std::size_t a = 0; a < batch.num_actions; ++a) out.push_back(acc.finalize(a));
    return out;
}

std::vector<ViewMoments> empirical_moments_serial(const EpisodeBatch& batch) {
    check_batch_shape(batch);
    const Accumulator acc = accumulate_serial(batch);
    std::vector<ViewMoments> out;
    for (std::size_t a = 0; a < batch.num_actions; ++a) out.push_back(acc.finalize(a));
    return out;
}

std::vector<ViewMoments> population_moments(const TabularPOMDP& model, const ExplorationPolicy& exploration) {
    check_structure(model);
    if (model.horizon < 3) throw StructuralError("multi-view moments need horizon >= 3");
    const std::size_t Z = model.num_observations, S = model.num_states;
    const auto Zi = static_cast<Eigen::Index>(Z);
    const Matrix mean = exploration.mean_transition(model);
    const auto occupancy = occupancy_profile(model, exploration);
    const Matrix& O = model.observation;
    const double interior = static_cast<double>(model.horizon - 2);

    std::vector<ViewMoments> out;
    for (std::size_t a = 0; a < model.num_actions; ++a) {
        const Matrix& Ta = model.transitions[a];
        // latent joint over (previous, middle, next) states, pooled over middle steps
        std::vector<double> joint(S * S * S, 0.0);
        // the middle state is s_j for 0-based j in [2, H-1]; the previous is s_{j-1}
        for (std::size_t j = 2; j < model.horizon; ++j) {
            const Vector& prev = occupancy[j - 1];
            for (std::size_t p = 0; p < S; ++p)
                for (std::size_t h = 0; h < S; ++h)
                    for (std::size_t n = 0; n < S; ++n)
                        joint[(p * S + h) * S + n] += prev(static_cast<Eigen::Index>(p)) *
                                                      mean(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(p)) *
                                                      Ta(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h)) /
                                                      interior;
        }
        Tensor3 latent(S);
        latent.data() = joint;

        ViewMoments vm;
        vm.action = a;
        vm.count = kPopulationCount;
        vm.first_count = kPopulationCount;
        Matrix Ot = O.transpose();
        vm.m123 = latent.multilinear(Ot);
        vm.m1 = Vector::Zero(Zi);
        vm.m12 = Matrix::Zero(Zi, Zi);
        vm.m13 = Matrix::Zero(Zi, Zi);
        vm.m23 = Matrix::Zero(Zi, Zi);
        for (std::size_t z1 = 0; z1 < Z; ++z1)
            for (std::size_t z2 = 0; z2 < Z; ++z2)
                for (std::size_t z3 = 0; z3 < Z; ++z3) {
                    const double p = vm.m123(z1, z2, z3);
                    const auto i1 = static_cast<Eigen::Index>(z1), i2 = static_cast<Eigen::Index>(z2),
                               i3 = static_cast<Eigen::Index>(z3);
                    vm.m12(i1, i2) += p;
                    vm.m13(i1, i3) += p;
                    vm.m23(i2, i3) += p;
                    vm.m1(i2) += p;
                }
        Vector middle = Vector::Zero(static_cast<Eigen::Index>(S));
        for (std::size_t j = 2; j < model.horizon; ++j) middle += occupancy[j] / interior;
        vm.reward_cross = O * middle.cwiseProduct(model.rewards[a]);
        vm.first_obs = O * (Ta * model.initial_belief);
        out.push_back(std::move(vm));
    }
    return out;
}

nlohmann::json moments_to_json(const ViewMoments& vm) {
    nlohmann::json doc;
    doc["action"] = vm.action;
    doc["count"] = vm.is_population() ? nlohmann::json("population") : nlohmann::json(vm.count);
    doc["m1"] = vector_to_json(vm.m1);
    doc["m12"] = matrix_to_json(vm.m12);
    doc["m13"] = matrix_to_json(vm.m13);
    doc["m23"] = matrix_to_json(vm.m23);
    doc["m123"] = vm.m123.data();
    doc["reward_cross"] = vector_to_json(vm.reward_cross);
    doc["first_obs"] = vector_to_json(vm.first_obs);
    doc["first_count"] = vm.first_count == kPopulationCount ? nlohmann::json("population") : nlohmann::json(vm.first_count);
    return doc;
}

void write_batch(const EpisodeBatch& batch, std::ostream& out) {
    out << "popac-batch 1\n";
    out << "horizon " << batch.horizon << " actions " << batch.num_actions << " observations "
        << batch.num_observations << " reward_max " << std::setprecision(17) << batch.reward_max << " episodes "
        << batch.episodes.size() << '\n';
    out << "mixture";
    for (Eigen::Index a = 0; a < batch.exploration.action_probs.size(); ++a)
        out << ' ' << batch.exploration.action_probs(a);
    out << '\n';
    for (const auto& e : batch.episodes) {
        out << e.seed_tag;
        for (const auto& s : e.steps) out << ' ' << s.action << ' ' << s.observation << ' ' << s.reward;
        out << '\n';
    }
}

EpisodeBatch read_batch(std::istream& in) {
    auto fail = [](const std::string& what) { return StructuralError("episode log: " + what); };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "popac-batch" || version != 1) throw fail("bad header");
    EpisodeBatch batch;
    std::size_t count = 0;
    std::string k1, k2, k3, k4, k5;
    if (!(in >> k1 >> batch.horizon >> k2 >> batch.num_actions >> k3 >> batch.num_observations >> k4 >>
          batch.reward_max >> k5 >> count) ||
        k1 != "horizon" || k2 != "actions" || k3 != "observations" || k4 != "reward_max" || k5 != "episodes")
        throw fail("bad shape line");
    std::string mix;
    if (!(in >> mix) || mix != "mixture") throw fail("missing mixture");
    batch.exploration.action_probs.resize(static_cast<Eigen::Index>(batch.num_actions));
    for (Eigen::Index a = 0; a < batch.exploration.action_probs.size(); ++a)
        if (!(in >> batch.exploration.action_probs(a))) throw fail("short mixture");
    batch.episodes.resize(count);
    for (auto& e : batch.episodes) {
        if (!(in >> e.seed_tag)) throw fail("truncated episode list");
        e.steps.resize(batch.horizon);
        for (auto& s : e.steps)
            if (!(in >> s.action >> s.observation >> s.reward)) throw fail("truncated episode");
    }
    return batch;
}

}  // namespace popac
