#pragma once

#include "popac/alignment.hpp"
#include "popac/domains.hpp"
#include "popac/model.hpp"
#include "popac/moments.hpp"
#include "popac/planner.hpp"
#include "popac/spectral.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace popac {

enum class PlannerKind { exact, grid };

PlannerKind parse_planner_kind(const std::string& name);

struct PipelineConfig {
    /// Replace sampled moments by their exact expectations.
    bool population_moments = false;
    PlannerKind planner = PlannerKind::exact;
    std::size_t grid_resolution = 20;
    SpectralOptions spectral;
    /// Uniform over actions when empty.
    std::optional<ExplorationPolicy> exploration;
};

/// Estimate in one consistent latent labeling plus how it was assembled.
struct EstimationResult {
    SpectralEstimate estimate;
    AlignmentResult alignment;
    std::vector<bool> decomposed;
};

/// Per-action spectral estimation, alignment of the decomposable actions,
/// anchored estimation of the others, and merging. moments[a] must belong
/// to action a.
EstimationResult estimate_from_moments(std::span<const ViewMoments> moments, std::size_t num_states,
                                       double reward_max, const SpectralOptions& options = {});

/// Errors after matching the estimate's latent labels to the truth's by
/// minimum-cost assignment of observation columns.
struct ParameterErrors {
    /// max over actions and columns of the L1 error of T
    double transition_l1 = 0.0;
    /// max over columns of the L1 error of O
    double observation_l1 = 0.0;
    double reward_abs = 0.0;
    double belief_l1 = 0.0;
    /// max absolute error over every entry of T, O, R and b1
    double max_entry = 0.0;
    /// truth label of each estimated latent state
    std::vector<std::size_t> permutation;
};

ParameterErrors parameter_errors(const TabularPOMDP& truth, const TabularPOMDP& estimate);

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct ReportRow {
    std::uint64_t episodes = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    ParameterErrors errors;
    double achieved = 0.0;
    double oracle = 0.0;
    double regret = 0.0;
    std::vector<StageTiming> timings;
};

struct PipelineResult {
    EstimationResult estimation;
    TabularPOMDP model;
    std::shared_ptr<const Policy> policy;
    ReportRow row;
};

/// Exact optimal value of a model at its initial belief.
double optimal_value(const TabularPOMDP& model);

/// Explore for `episodes` episodes, estimate, align, plan on the estimate and
/// evaluate the resulting policy exactly on the true model while tracking
/// beliefs with the estimate. Failures are rethrown as StageError.
PipelineResult run_pipeline(const TabularPOMDP& truth, std::uint64_t episodes, std::uint64_t seed,
                            const PipelineConfig& config = {});

/// Same pipeline from pre-computed moments (the exploration stage is skipped).
PipelineResult run_pipeline_from_moments(const TabularPOMDP& truth, std::span<const ViewMoments> moments,
                                         std::uint64_t episodes, std::uint64_t seed, const PipelineConfig& config);

struct ExperimentConfig {
    std::optional<DomainSpec> domain;
    std::optional<std::filesystem::path> model_path;
    std::vector<std::uint64_t> schedule;
    std::vector<std::uint64_t> seeds;
    double epsilon = 0.1;
    double delta = 0.05;
    std::filesystem::path output_dir;
    PipelineConfig pipeline;
    std::size_t workers = 1;

    /// Throws ConfigError unless the schedule is strictly increasing, there is
    /// at least one seed and exactly one model source.
    void check() const;
};

struct ExperimentReport {
    TabularPOMDP model;
    std::vector<ReportRow> rows;  // sorted by (episodes, seed)
    nlohmann::json diagnostics;
};

/// Runs every (N, seed) cell; failed cells are recorded and the run continues.
/// Writes results.csv, timings.csv, diagnostics.json and learning_curve.svg
/// when output_dir is set.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Fixed column order of results.csv.
const std::vector<std::string>& results_columns();

void write_results_csv(const std::vector<ReportRow>& rows, std::ostream& out);
void write_timings_csv(const std::vector<ReportRow>& rows, std::ostream& out);

/// Log-log learning curves (median max-entry error and median regret vs N).
std::string learning_curve_svg(const std::vector<ReportRow>& rows);

double median(std::vector<double> values);

nlohmann::json diagnostics_to_json(const EstimationResult& estimation);
nlohmann::json policy_to_json(const AlphaVectorPolicy& policy);

}  // namespace popac
