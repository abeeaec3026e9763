#include "popac/harness.hpp"

#include "popac/errors.hpp"
#include "popac/model_io.hpp"
#include "popac/pac.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace popac {

namespace {

using Clock = std::chrono::steady_clock;

/// Runs one pipeline stage, recording its wall time and tagging errors with
/// the stage name.
template <class F>
auto timed_stage(const char* name, std::vector<StageTiming>& timings, F&& fn) -> decltype(fn()) {
    const auto start = Clock::now();
    auto record = [&] {
        timings.push_back({name, std::chrono::duration<double>(Clock::now() - start).count()});
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record();
        } else {
            auto result = fn();
            record();
            return result;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        record();
        throw StageError(name, e.what());
    }
}

std::vector<std::size_t> identity(std::size_t n) {
    std::vector<std::size_t> id(n);
    std::iota(id.begin(), id.end(), 0);
    return id;
}

double signal_to_noise(const ViewMoments& m, std::size_t k) {
    const double sigma = cross_rank_signal(m, k);
    return m.is_population() ? sigma : std::sqrt(static_cast<double>(m.count)) * sigma;
}

std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

std::string csv_field(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

}  // namespace

PlannerKind parse_planner_kind(const std::string& name) {
    if (name == "exact") return PlannerKind::exact;
    if (name == "grid") return PlannerKind::grid;
    throw ConfigError("unknown planner '" + name + "' (expected exact or grid)");
}

EstimationResult estimate_from_moments(std::span<const ViewMoments> moments, std::size_t k, double reward_max,
                                       const SpectralOptions& options) {
    const std::size_t A = moments.size();
    if (A == 0 || k == 0) throw ConfigError("estimation needs at least one action and one state");
    for (std::size_t a = 0; a < A; ++a)
        if (moments[a].action != a) throw ConfigError("moments must be ordered by action");

    EstimationResult out;
    out.decomposed.assign(A, false);
    std::vector<ActionEstimate> estimates(A);

    if (k == 1) {
        for (std::size_t a = 0; a < A; ++a) estimates[a] = estimate_action(moments[a], 1, reward_max, options);
        out.decomposed.assign(A, true);
        out.alignment.reference_action = 0;
        out.alignment.permutations.assign(A, identity(1));
        out.alignment.matching_cost.assign(A, 0.0);
        out.alignment.margin.assign(A, std::numeric_limits<double>::infinity());
        out.estimate = apply_alignment(estimates, out.alignment);
        return out;
    }

    std::vector<std::size_t> decomposable;
    for (std::size_t a = 0; a < A; ++a)
        if (is_decomposable(moments[a], k, options)) decomposable.push_back(a);
    if (decomposable.empty()) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < A; ++a)
            if (signal_to_noise(moments[a], k) > signal_to_noise(moments[best], k)) best = a;
        decomposable.push_back(best);
    }

    std::size_t reference = 0;
    std::vector<Matrix> o_hats;
    for (std::size_t i = 0; i < decomposable.size(); ++i) {
        const std::size_t a = decomposable[i];
        estimates[a] = estimate_action(moments[a], k, reward_max, options);
        out.decomposed[a] = true;
        o_hats.push_back(estimates[a].o_hat);
        if (moments[a].count > moments[decomposable[reference]].count) reference = i;
    }
    const AlignmentResult partial = align(o_hats, reference);

    out.alignment.reference_action = decomposable[reference];
    out.alignment.permutations.assign(A, identity(k));
    out.alignment.matching_cost.assign(A, 0.0);
    out.alignment.margin.assign(A, std::numeric_limits<double>::infinity());
    std::vector<ActionEstimate> decomposed_estimates;
    for (std::size_t i = 0; i < decomposable.size(); ++i) {
        const std::size_t a = decomposable[i];
        out.alignment.permutations[a] = partial.permutations[i];
        out.alignment.matching_cost[a] = partial.matching_cost[i];
        out.alignment.margin[a] = partial.margin[i];
        decomposed_estimates.push_back(estimates[a]);
    }
    const Matrix anchor = merged_observation(decomposed_estimates, partial);
    for (std::size_t a = 0; a < A; ++a)
        if (!out.decomposed[a]) estimates[a] = recover_anchored(moments[a], anchor, reward_max, options);
    out.estimate = apply_alignment(estimates, out.alignment);
    return out;
}

ParameterErrors parameter_errors(const TabularPOMDP& truth, const TabularPOMDP& estimate) {
    if (truth.num_states != estimate.num_states || truth.num_actions != estimate.num_actions ||
        truth.num_observations != estimate.num_observations)
        throw ConfigError("estimate and truth differ in shape");
    ParameterErrors e;
    e.permutation = match_columns(estimate.observation, truth.observation).permutation;
    const TabularPOMDP aligned = relabel_states(estimate, e.permutation);

    auto max_col_l1 = [](const Matrix& d) { return d.cwiseAbs().colwise().sum().maxCoeff(); };
    auto max_abs = [](const auto& d) { return d.cwiseAbs().maxCoeff(); };
    const Matrix dO = aligned.observation - truth.observation;
    e.observation_l1 = max_col_l1(dO);
    e.max_entry = max_abs(dO);
    for (std::size_t a = 0; a < truth.num_actions; ++a) {
        const Matrix dT = aligned.transitions[a] - truth.transitions[a];
        const Vector dR = aligned.rewards[a] - truth.rewards[a];
        e.transition_l1 = std::max(e.transition_l1, max_col_l1(dT));
        e.reward_abs = std::max(e.reward_abs, max_abs(dR));
        e.max_entry = std::max({e.max_entry, max_abs(dT), max_abs(dR)});
    }
    const Vector db = aligned.initial_belief - truth.initial_belief;
    e.belief_l1 = db.lpNorm<1>();
    e.max_entry = std::max(e.max_entry, max_abs(db));
    return e;
}

double optimal_value(const TabularPOMDP& model) {
    return solve_exact(model).value(0, model.initial_belief);
}

PipelineResult run_pipeline_from_moments(const TabularPOMDP& truth, std::span<const ViewMoments> moments,
                                         std::uint64_t episodes, std::uint64_t seed, const PipelineConfig& config) {
    PipelineResult out;
    out.row.episodes = episodes;
    out.row.seed = seed;
    auto& timings = out.row.timings;

    SpectralOptions spectral = config.spectral;
    spectral.seed = derive_seed(seed, 2);
    out.estimation = timed_stage("estimate", timings, [&] {
        return estimate_from_moments(moments, truth.num_states, truth.reward_max, spectral);
    });
    out.model = timed_stage("assemble", timings,
                            [&] { return to_model(out.estimation.estimate, truth.horizon, truth.reward_max); });
    out.row.errors = timed_stage("errors", timings, [&] { return parameter_errors(truth, out.model); });

    out.policy = timed_stage("plan", timings, [&]() -> std::shared_ptr<const Policy> {
        if (config.planner == PlannerKind::grid)
            return std::make_shared<GridPolicy>(solve_belief_grid(out.model, config.grid_resolution));
        return std::make_shared<AlphaVectorPolicy>(solve_exact(out.model));
    });
    out.row.achieved =
        timed_stage("evaluate", timings, [&] { return evaluate_policy(truth, *out.policy, out.model).value; });
    out.row.oracle = timed_stage("oracle", timings, [&] { return optimal_value(truth); });
    out.row.regret = out.row.oracle - out.row.achieved;
    return out;
}

PipelineResult run_pipeline(const TabularPOMDP& truth, std::uint64_t episodes, std::uint64_t seed,
                            const PipelineConfig& config) {
    std::vector<StageTiming> timings;
    timed_stage("validate", timings, [&] { check_structure(truth); });
    const ExplorationPolicy exploration = config.exploration.value_or(ExplorationPolicy::uniform(truth.num_actions));
    std::vector<ViewMoments> moments;
    if (config.population_moments) {
        moments = timed_stage("moments", timings, [&] { return population_moments(truth, exploration); });
    } else {
        const EpisodeBatch batch = timed_stage("explore", timings, [&] {
            return collect_exploration(truth, episodes, derive_seed(seed, 1), exploration);
        });
        moments = timed_stage("moments", timings, [&] { return empirical_moments(batch); });
    }
    PipelineResult out = run_pipeline_from_moments(truth, moments, episodes, seed, config);
    out.row.timings.insert(out.row.timings.begin(), timings.begin(), timings.end());
    return out;
}

void ExperimentConfig::check() const {
    if (domain.has_value() == model_path.has_value())
        throw ConfigError("an experiment needs exactly one of a domain or a model file");
    if (schedule.empty()) throw ConfigError("episode schedule is empty");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1]) throw ConfigError("episode schedule must be strictly increasing");
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (workers == 0) throw ConfigError("worker count must be positive");
}

const std::vector<std::string>& results_columns() {
    static const std::vector<std::string> columns{
        "episodes",  "seed",     "status", "transition_l1", "observation_l1", "reward_abs",
        "belief_l1", "max_entry", "achieved", "oracle",     "regret"};
    return columns;
}

void write_results_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
    const auto& cols = results_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : rows) {
        out << r.episodes << ',' << r.seed << ',' << csv_field(r.status) << ',' << format_double(r.errors.transition_l1)
            << ',' << format_double(r.errors.observation_l1) << ',' << format_double(r.errors.reward_abs) << ','
            << format_double(r.errors.belief_l1) << ',' << format_double(r.errors.max_entry) << ','
            << format_double(r.achieved) << ',' << format_double(r.oracle) << ',' << format_double(r.regret) << '\n';
    }
}

void write_timings_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
    out << "episodes,seed,stage,seconds\n";
    for (const auto& r : rows)
        for (const auto& t : r.timings) out << r.episodes << ',' << r.seed << ',' << t.stage << ',' << t.seconds << '\n';
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string learning_curve_svg(const std::vector<ReportRow>& rows) {
    std::map<std::uint64_t, std::pair<std::vector<double>, std::vector<double>>> by_n;
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        by_n[r.episodes].first.push_back(r.errors.max_entry);
        by_n[r.episodes].second.push_back(r.regret);
    }
    constexpr double floor = 1e-12;
    struct Series {
        const char* title;
        std::vector<std::pair<double, double>> points;  // (log10 N, log10 value)
    };
    Series series[2] = {{"median max-entry parameter error", {}}, {"median regret", {}}};
    for (const auto& [n, values] : by_n) {
        const double x = std::log10(std::max<double>(static_cast<double>(n), 1.0));
        series[0].points.emplace_back(x, std::log10(std::max(median(values.first), floor)));
        series[1].points.emplace_back(x, std::log10(std::max(median(values.second), floor)));
    }

    constexpr double panel_w = 360, panel_h = 260, margin = 50;
    std::ostringstream svg;
    svg << std::setprecision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * (panel_w + 2 * margin) << "\" height=\""
        << panel_h + 2 * margin << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int p = 0; p < 2; ++p) {
        const double ox = p * (panel_w + 2 * margin) + margin, oy = margin;
        const auto& pts = series[p].points;
        double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
        if (!pts.empty()) {
            x0 = x1 = pts.front().first;
            y0 = y1 = pts.front().second;
            for (const auto& [x, y] : pts) {
                x0 = std::min(x0, x), x1 = std::max(x1, x);
                y0 = std::min(y0, y), y1 = std::max(y1, y);
            }
            x0 = std::floor(x0), x1 = std::ceil(x1), y0 = std::floor(y0), y1 = std::ceil(y1);
            if (x1 <= x0) x1 = x0 + 1;
            if (y1 <= y0) y1 = y0 + 1;
        }
        auto px = [&](double x) { return ox + (x - x0) / (x1 - x0) * panel_w; };
        auto py = [&](double y) { return oy + panel_h - (y - y0) / (y1 - y0) * panel_h; };
        svg << "<text x=\"" << ox + panel_w / 2 << "\" y=\"" << oy - 15 << "\" text-anchor=\"middle\">"
            << series[p].title << " vs N (log-log)</text>\n";
        svg << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << panel_w << "\" height=\"" << panel_h
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (double x = x0; x <= x1 + 1e-9; x += 1)
            svg << "<text x=\"" << px(x) << "\" y=\"" << oy + panel_h + 15 << "\" text-anchor=\"middle\">1e" << x
                << "</text>\n";
        for (double y = y0; y <= y1 + 1e-9; y += 1)
            svg << "<text x=\"" << ox - 5 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">1e" << y << "</text>\n";
        if (!pts.empty()) {
            svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
            for (const auto& [x, y] : pts) svg << px(x) << ',' << py(y) << ' ';
            svg << "\"/>\n";
            for (const auto& [x, y] : pts)
                svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"steelblue\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

nlohmann::json diagnostics_to_json(const EstimationResult& est) {
    nlohmann::json doc;
    doc["reference_action"] = est.alignment.reference_action;
    doc["permutations"] = est.alignment.permutations;
    doc["matching_cost"] = est.alignment.matching_cost;
    nlohmann::json margins = nlohmann::json::array();
    for (double m : est.alignment.margin) margins.push_back(std::isfinite(m) ? nlohmann::json(m) : nlohmann::json());
    doc["margin"] = margins;
    doc["decomposed"] = est.decomposed;
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& d : est.estimate.diagnostics) {
        actions.push_back({{"action", d.action},
                           {"anchored", d.anchored},
                           {"sigma_k_cross", d.sigma_k_cross},
                           {"snr", std::isfinite(d.snr) ? nlohmann::json(d.snr) : nlohmann::json("population")},
                           {"eigenvalues", d.eigenvalues},
                           {"min_eigen_gap", d.min_eigen_gap},
                           {"whitening_residual", d.whitening_residual},
                           {"symmetry_residual", d.symmetry_residual},
                           {"nonconverged", d.nonconverged},
                           {"clamped_weights", d.clamped_weights}});
    }
    doc["actions"] = actions;
    return doc;
}

nlohmann::json policy_to_json(const AlphaVectorPolicy& policy) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& set : policy.steps) {
        nlohmann::json vectors = nlohmann::json::array();
        for (const auto& v : set) vectors.push_back({{"action", v.action}, {"alpha", vector_to_json(v.values)}});
        steps.push_back(vectors);
    }
    return {{"horizon", policy.steps.size()}, {"steps", steps}};
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.check();
    ExperimentReport report;
    report.model = config.domain ? make_domain(*config.domain) : load_model(*config.model_path);

    struct Cell {
        std::uint64_t episodes, seed;
    };
    std::vector<Cell> cells;
    for (auto n : config.schedule)
        for (auto s : config.seeds) cells.push_back({n, s});
    std::sort(cells.begin(), cells.end(),
              [](const Cell& a, const Cell& b) { return std::tie(a.episodes, a.seed) < std::tie(b.episodes, b.seed); });

    std::vector<ReportRow> rows(cells.size());
    std::vector<nlohmann::json> diagnostics(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(config.workers))
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cells.size()); ++i) {
        const auto& cell = cells[static_cast<std::size_t>(i)];
        auto& row = rows[static_cast<std::size_t>(i)];
        auto& diag = diagnostics[static_cast<std::size_t>(i)];
        diag = {{"episodes", cell.episodes}, {"seed", cell.seed}};
        try {
            PipelineResult r = run_pipeline(report.model, cell.episodes, cell.seed, config.pipeline);
            row = std::move(r.row);
            diag["estimation"] = diagnostics_to_json(r.estimation);
        } catch (const StageError& e) {
            row.episodes = cell.episodes;
            row.seed = cell.seed;
            row.status = "failed:" + e.stage + ": " + e.what();
            row.achieved = row.oracle = row.regret = std::numeric_limits<double>::quiet_NaN();
        }
        diag["status"] = row.status;
    }
    report.rows = std::move(rows);
    report.diagnostics = {{"cells", diagnostics}, {"epsilon", config.epsilon}, {"delta", config.delta}};
    try {
        const ExplorationPolicy exploration =
            config.pipeline.exploration.value_or(ExplorationPolicy::uniform(report.model.num_actions));
        const PacConfig pac =
            PacConfig::from_model(report.model, validate(report.model, exploration), config.epsilon, config.delta);
        report.diagnostics["required_episodes"] = required_episodes(pac);
    } catch (const ConfigError& e) {
        // a zero model statistic (e.g. a rank-deficient transition) leaves the bound undefined
        report.diagnostics["required_episodes"] = nullptr;
        report.diagnostics["required_episodes_note"] = e.what();
    }

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        std::ofstream results(config.output_dir / "results.csv");
        write_results_csv(report.rows, results);
        std::ofstream timings(config.output_dir / "timings.csv");
        write_timings_csv(report.rows, timings);
        std::ofstream diag(config.output_dir / "diagnostics.json");
        diag << report.diagnostics.dump(2) << '\n';
        std::ofstream figure(config.output_dir / "learning_curve.svg");
        figure << learning_curve_svg(report.rows);
        if (!results || !timings || !diag || !figure)
            throw ConfigError("failed to write experiment outputs to " + config.output_dir.string());
    }
    return report;
}

}  // namespace popac
