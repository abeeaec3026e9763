// Command-line driver: generate, validate, simulate, estimate, plan, pac, experiment.
#include "popac/domains.hpp"
#include "popac/errors.hpp"
#include "popac/harness.hpp"
#include "popac/model_io.hpp"
#include "popac/moments.hpp"
#include "popac/pac.hpp"
#include "popac/planner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace popac;

namespace {

struct ModelSource {
    std::string model_path;
    std::string domain = "tiger";
    DomainSpec spec;

    void add(CLI::App* cmd) {
        cmd->add_option("--model", model_path, "Model file (JSON)");
        cmd->add_option("--domain", domain, "tiger | slot_filling | random")->capture_default_str();
        cmd->add_option("--states", spec.states, "Random domain: latent states; slot filling: slots")
            ->capture_default_str();
        cmd->add_option("--actions", spec.actions, "Random domain: actions")->capture_default_str();
        cmd->add_option("--observations", spec.observations, "Random domain: observations")->capture_default_str();
        cmd->add_option("--horizon", spec.horizon, "Episode length")->capture_default_str();
        cmd->add_option("--accuracy", spec.observation_accuracy, "Observation accuracy")->capture_default_str();
        cmd->add_option("--noise", spec.noise, "Slot-filling observation noise")->capture_default_str();
        cmd->add_option("--mixing", spec.transition_mixing, "Random transition mixing")->capture_default_str();
        cmd->add_option("--domain-seed", spec.seed, "Random domain seed")->capture_default_str();
    }

    TabularPOMDP load() {
        if (!model_path.empty()) return load_model(model_path);
        spec.kind = parse_domain_kind(domain);
        return make_domain(spec);
    }

    DomainSpec domain_spec() {
        spec.kind = parse_domain_kind(domain);
        return spec;
    }
};

void write_json(const nlohmann::json& doc, const std::string& out) {
    if (out.empty()) {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::ofstream f(out);
    f << doc.dump(2) << '\n';
    if (!f) throw ConfigError("cannot write " + out);
}

ExplorationPolicy uniform_for(const TabularPOMDP& m) { return ExplorationPolicy::uniform(m.num_actions); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral PAC learning for episodic POMDPs"};
    app.require_subcommand(1);

    ModelSource source;
    std::string out;
    std::uint64_t episodes = 10000;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds{0};
    std::vector<std::uint64_t> schedule{1000, 16000, 256000};
    double epsilon = 0.1, delta = 0.05;
    double eps_t = 0.0, eps_o = 0.0, eps_r = 0.0, eps_b = 0.0;
    bool population = false;
    std::string planner = "exact";
    std::size_t grid_resolution = 20;
    std::size_t workers = 1;
    std::string batch_path;

    auto* generate = app.add_subcommand("generate", "Write a domain model file");
    source.add(generate);
    generate->add_option("--out", out, "Output file (stdout when omitted)");

    auto* validate_cmd = app.add_subcommand("validate", "Check identifiability conditions of a model");
    source.add(validate_cmd);

    auto* simulate = app.add_subcommand("simulate", "Collect uniform-exploration episodes");
    source.add(simulate);
    simulate->add_option("--episodes", episodes, "Episode count")->capture_default_str();
    simulate->add_option("--seed", seed, "Root seed")->capture_default_str();
    simulate->add_option("--out", out, "Episode log (stdout when omitted)");

    auto* estimate = app.add_subcommand("estimate", "Spectral estimate from an episode log or population moments");
    source.add(estimate);
    estimate->add_option("--episodes-file", batch_path, "Episode log written by simulate");
    estimate->add_option("--episodes", episodes, "Episodes to simulate when no log is given")->capture_default_str();
    estimate->add_option("--seed", seed, "Root seed")->capture_default_str();
    estimate->add_flag("--population-moments", population, "Use exact moments of the model");
    estimate->add_option("--out", out, "Estimated model file (stdout when omitted)");

    auto* plan = app.add_subcommand("plan", "Solve a model and print its optimal value and policy");
    source.add(plan);
    plan->add_option("--planner", planner, "exact | grid")->capture_default_str();
    plan->add_option("--grid-resolution", grid_resolution, "Grid planner resolution")->capture_default_str();
    plan->add_option("--out", out, "Policy document (exact planner only)");

    auto* pac = app.add_subcommand("pac", "Episode bound and simulation-lemma bound");
    source.add(pac);
    pac->add_option("--epsilon", epsilon, "Target sub-optimality")->capture_default_str();
    pac->add_option("--delta", delta, "Failure probability")->capture_default_str();
    pac->add_option("--eps-t", eps_t, "Transition L1 error")->capture_default_str();
    pac->add_option("--eps-o", eps_o, "Observation L1 error")->capture_default_str();
    pac->add_option("--eps-r", eps_r, "Reward error")->capture_default_str();
    pac->add_option("--eps-b", eps_b, "Initial-belief L1 error")->capture_default_str();

    auto* experiment = app.add_subcommand("experiment", "Run the pipeline over an episode schedule and seeds");
    source.add(experiment);
    experiment->add_option("--episodes", schedule, "Strictly increasing episode schedule")->capture_default_str();
    experiment->add_option("--seeds", seeds, "Seeds")->capture_default_str();
    experiment->add_option("--epsilon", epsilon, "Target sub-optimality")->capture_default_str();
    experiment->add_option("--delta", delta, "Failure probability")->capture_default_str();
    experiment->add_flag("--population-moments", population, "Use exact moments of the model");
    experiment->add_option("--planner", planner, "exact | grid")->capture_default_str();
    experiment->add_option("--grid-resolution", grid_resolution, "Grid planner resolution")->capture_default_str();
    experiment->add_option("--workers", workers, "Parallel experiment cells")->capture_default_str();
    experiment->add_option("--out", out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            const TabularPOMDP model = source.load();
            if (out.empty())
                std::cout << model_to_json(model).dump(2) << '\n';
            else
                save_model(model, out);
        } else if (validate_cmd->parsed()) {
            const TabularPOMDP model = source.load();
            const ValidationReport r = validate(model, uniform_for(model));
            std::cout << "sigma_min_O " << r.sigma_min_O << '\n';
            for (std::size_t a = 0; a < r.per_action_sigma_min_T.size(); ++a)
                std::cout << "sigma_min_T[" << a << "] " << r.per_action_sigma_min_T[a] << '\n';
            std::cout << "separation_gap " << r.observation_separation_gap << '\n';
            std::cout << "min_state_occupancy " << r.min_state_occupancy << '\n';
            std::cout << (r.passed ? "passed" : "failed");
            for (const auto& f : r.failures) std::cout << ' ' << f;
            std::cout << '\n';
            return r.passed ? 0 : 1;
        } else if (simulate->parsed()) {
            const TabularPOMDP model = source.load();
            const EpisodeBatch batch = collect_exploration(model, episodes, seed, uniform_for(model));
            if (out.empty()) {
                write_batch(batch, std::cout);
            } else {
                std::ofstream f(out);
                write_batch(batch, f);
                if (!f) throw ConfigError("cannot write " + out);
            }
        } else if (estimate->parsed()) {
            const TabularPOMDP model = source.load();
            std::vector<ViewMoments> moments;
            if (population) {
                moments = population_moments(model, uniform_for(model));
            } else if (!batch_path.empty()) {
                std::ifstream f(batch_path);
                if (!f) throw ConfigError("cannot read " + batch_path);
                moments = empirical_moments(read_batch(f));
            } else {
                moments = empirical_moments(collect_exploration(model, episodes, seed, uniform_for(model)));
            }
            SpectralOptions options;
            options.seed = derive_seed(seed, 2);
            const EstimationResult est = estimate_from_moments(moments, model.num_states, model.reward_max, options);
            const TabularPOMDP estimate_model = to_model(est.estimate, model.horizon, model.reward_max);
            const ParameterErrors e = parameter_errors(model, estimate_model);
            std::cerr << "max_entry_error " << e.max_entry << " transition_l1 " << e.transition_l1 << " observation_l1 "
                      << e.observation_l1 << " reward_abs " << e.reward_abs << " belief_l1 " << e.belief_l1 << '\n';
            nlohmann::json doc = model_to_json(estimate_model);
            write_json(doc, out);
        } else if (plan->parsed()) {
            const TabularPOMDP model = source.load();
            if (parse_planner_kind(planner) == PlannerKind::grid) {
                const GridPolicy policy = solve_belief_grid(model, grid_resolution);
                std::cout << "value " << policy.approximate_value(0, model.initial_belief) << '\n';
                std::cout << "exact_value_of_policy " << evaluate_policy(model, policy).value << '\n';
            } else {
                const AlphaVectorPolicy policy = solve_exact(model);
                std::cout << "value " << policy.value(0, model.initial_belief) << '\n';
                std::cout << "first_action " << policy.best(0, model.initial_belief).action << '\n';
                std::cout << "alpha_vectors " << policy.vector_count() << '\n';
                if (!out.empty()) write_json(policy_to_json(policy), out);
            }
        } else if (pac->parsed()) {
            const TabularPOMDP model = source.load();
            const ValidationReport r = validate(model, uniform_for(model));
            const PacConfig config = PacConfig::from_model(model, r, epsilon, delta);
            std::cout << "required_episodes " << required_episodes(config) << '\n';
            std::cout << "simulation_gap_bound "
                      << simulation_gap_bound(eps_t, eps_o, eps_r, eps_b, model.horizon, model.reward_max) << '\n';
        } else if (experiment->parsed()) {
            ExperimentConfig config;
            if (source.model_path.empty())
                config.domain = source.domain_spec();
            else
                config.model_path = source.model_path;
            config.schedule = schedule;
            config.seeds = seeds;
            config.epsilon = epsilon;
            config.delta = delta;
            config.output_dir = out;
            config.workers = workers;
            config.pipeline.population_moments = population;
            config.pipeline.planner = parse_planner_kind(planner);
            config.pipeline.grid_resolution = grid_resolution;
            const ExperimentReport report = run_experiment(config);
            std::size_t failed = 0;
            for (const auto& row : report.rows) failed += row.status != "ok";
            std::cout << report.rows.size() << " cells, " << failed << " failed; outputs in " << out << '\n';
        }
    } catch (const StageError& e) {
        std::cerr << "error in stage " << e.stage << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
