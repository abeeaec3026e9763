#include "popac/alignment.hpp"

#include "popac/errors.hpp"

#include <limits>
#include <numeric>

namespace popac {

Assignment min_cost_assignment(const Matrix& cost) {
    const auto n = static_cast<std::size_t>(cost.rows());
    if (cost.cols() != cost.rows()) throw ConfigError("assignment needs a square cost matrix");
    Assignment result;
    if (n == 0) return result;
    constexpr double inf = std::numeric_limits<double>::infinity();
    // potentials u (rows), v (columns); 1-based with a virtual column 0
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> row_of(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        row_of[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = row_of[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    result.column_for_row.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) result.column_for_row[row_of[j] - 1] = j - 1;
    for (std::size_t i = 0; i < n; ++i)
        result.cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(result.column_for_row[i]));
    return result;
}

Matrix l1_cost(const Matrix& candidate, const Matrix& reference) {
    Matrix cost(candidate.cols(), reference.cols());
    for (Eigen::Index i = 0; i < candidate.cols(); ++i)
        for (Eigen::Index j = 0; j < reference.cols(); ++j)
            cost(i, j) = (candidate.col(i) - reference.col(j)).lpNorm<1>();
    return cost;
}

ColumnMatch match_columns(const Matrix& candidate, const Matrix& reference) {
    if (candidate.rows() != reference.rows() || candidate.cols() != reference.cols())
        throw ConfigError("column matching needs matrices of identical shape");
    const Matrix cost = l1_cost(candidate, reference);
    const Assignment best = min_cost_assignment(cost);
    ColumnMatch out;
    out.permutation = best.column_for_row;
    out.cost = best.cost;
    // the runner-up assignment avoids at least one optimal pair
    double second = std::numeric_limits<double>::infinity();
    const auto n = static_cast<std::size_t>(cost.rows());
    if (n >= 2) {
        const double big = 1.0 + cost.sum() * 4.0;
        for (std::size_t i = 0; i < n; ++i) {
            Matrix forbidden = cost;
            forbidden(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(best.column_for_row[i])) = big;
            second = std::min(second, min_cost_assignment(forbidden).cost);
        }
        out.margin = second - best.cost;
    } else {
        out.margin = std::numeric_limits<double>::infinity();
    }
    return out;
}

AlignmentResult align(std::span<const Matrix> o_hats, std::size_t reference, double floor) {
    if (o_hats.empty() || reference >= o_hats.size()) throw ConfigError("alignment reference out of range");
    const Matrix& ref = o_hats[reference];
    for (const auto& m : o_hats)
        if (m.rows() != ref.rows() || m.cols() != ref.cols()) throw ConfigError("observation estimates differ in shape");
    for (Eigen::Index i = 0; i < ref.cols(); ++i)
        for (Eigen::Index j = i + 1; j < ref.cols(); ++j) {
            const double d = (ref.col(i) - ref.col(j)).lpNorm<1>();
            if (d <= floor) throw AmbiguousAlignment(static_cast<std::size_t>(i), static_cast<std::size_t>(j), d);
        }

    AlignmentResult result;
    result.reference_action = reference;
    for (std::size_t a = 0; a < o_hats.size(); ++a) {
        if (a == reference) {
            std::vector<std::size_t> id(static_cast<std::size_t>(ref.cols()));
            std::iota(id.begin(), id.end(), 0);
            result.permutations.push_back(std::move(id));
            result.matching_cost.push_back(0.0);
            result.margin.push_back(match_columns(ref, ref).margin);
            continue;
        }
        ColumnMatch match = match_columns(o_hats[a], ref);
        result.permutations.push_back(std::move(match.permutation));
        result.matching_cost.push_back(match.cost);
        result.margin.push_back(match.margin);
    }
    return result;
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

ActionEstimate permute_estimate(const ActionEstimate& e, std::span<const std::size_t> perm) {
    const auto k = static_cast<Eigen::Index>(perm.size());
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> p(k);
    for (Eigen::Index s = 0; s < k; ++s) p.indices()(s) = static_cast<int>(perm[static_cast<std::size_t>(s)]);
    ActionEstimate out = e;
    out.o_hat = e.o_hat * p.transpose();
    out.t_hat = p * e.t_hat * p.transpose();
    out.r_hat = p * e.r_hat;
    out.w_hat = p * e.w_hat;
    out.first_latent = p * e.first_latent;
    return out;
}

Matrix merged_observation(std::span<const ActionEstimate> estimates, const AlignmentResult& result) {
    Matrix sum;
    double total = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (estimates[i].anchored) continue;
        const ActionEstimate aligned = permute_estimate(estimates[i], result.permutations.at(i));
        if (sum.size() == 0) sum = Matrix::Zero(aligned.o_hat.rows(), aligned.o_hat.cols());
        sum += estimates[i].weight * aligned.o_hat;
        total += estimates[i].weight;
    }
    if (!(total > 0.0)) throw DecompositionFailed("no decomposed action to define the observation matrix");
    Matrix merged = sum / total;
    for (Eigen::Index c = 0; c < merged.cols(); ++c) merged.col(c) = project_simplex(merged.col(c));
    return merged;
}

SpectralEstimate apply_alignment(std::span<const ActionEstimate> estimates, const AlignmentResult& result) {
    if (result.permutations.size() != estimates.size()) throw ConfigError("alignment does not cover every action");
    SpectralEstimate out;
    out.o_hat = merged_observation(estimates, result);
    const auto k = out.o_hat.cols();

    Matrix stacked(static_cast<Eigen::Index>(estimates.size()) * k, k);
    Vector rhs(static_cast<Eigen::Index>(estimates.size()) * k);
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const ActionEstimate aligned = permute_estimate(estimates[i], result.permutations[i]);
        out.t_hat.push_back(aligned.t_hat);
        out.r_hat.push_back(aligned.r_hat);
        out.w_hat.push_back(aligned.w_hat);
        out.diagnostics.push_back(aligned.diagnostics);
        const double root = std::sqrt(std::max(aligned.first_weight, 0.0));
        const auto row = static_cast<Eigen::Index>(i) * k;
        stacked.block(row, 0, k, k) = root * aligned.t_hat;
        rhs.segment(row, k) = root * aligned.first_latent;
    }
    out.b1_hat = project_simplex(pinv(stacked) * rhs);
    return out;
}

}  // namespace popac
