#pragma once

#include "popac/linalg.hpp"
#include "popac/spectral.hpp"

#include <span>
#include <vector>

namespace popac {

struct Assignment {
    /// row i is matched to column column_for_row[i]
    std::vector<std::size_t> column_for_row;
    double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
Assignment min_cost_assignment(const Matrix& cost);

/// cost(i, j) = || candidate[:, i] - reference[:, j] ||_1
Matrix l1_cost(const Matrix& candidate, const Matrix& reference);

/// Label map taking candidate columns onto the reference's labels, plus the
/// gap to the second-best assignment.
struct ColumnMatch {
    std::vector<std::size_t> permutation;
    double cost = 0.0;
    double margin = 0.0;
};

ColumnMatch match_columns(const Matrix& candidate, const Matrix& reference);

struct AlignmentResult {
    std::size_t reference_action = 0;
    /// permutations[i][s] = reference label of latent label s of the i-th estimate
    std::vector<std::vector<std::size_t>> permutations;
    std::vector<double> matching_cost;
    std::vector<double> margin;
};

/// Aligns every matrix to o_hats[reference]. Throws AmbiguousAlignment when two
/// reference columns lie within `floor` in L1.
AlignmentResult align(std::span<const Matrix> o_hats, std::size_t reference, double floor = 1e-8);

/// Relabels one action estimate: column s of O, row/column s of T, entry s of
/// R, w and the first-step statistic move to label perm[s].
ActionEstimate permute_estimate(const ActionEstimate& estimate, std::span<const std::size_t> perm);

/// Weighted average of the aligned, non-anchored observation matrices.
Matrix merged_observation(std::span<const ActionEstimate> estimates, const AlignmentResult& result);

/// Merges per-action estimates into one labeling: aligned O average, aligned
/// T, R, w per action and b1 from the stacked least-squares system
/// T_a b1 = first_latent_a weighted by first-step counts.
/// estimates[i] must be the estimate of action i.
SpectralEstimate apply_alignment(std::span<const ActionEstimate> estimates, const AlignmentResult& result);

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm);

}  // namespace popac
