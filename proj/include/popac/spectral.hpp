#pragma once

#include "popac/linalg.hpp"
#include "popac/model.hpp"
#include "popac/moments.hpp"
#include "popac/rng.hpp"

#include <cstdint>
#include <vector>

namespace popac {

struct SpectralOptions {
    std::size_t restarts = 50;
    std::size_t iterations = 100;
    std::size_t polish = 20;
    double tolerance = 1e-10;
    /// Eigenvalue / weight floor applied before any inversion.
    double eigen_floor = 1e-10;
    /// Relative singular-value cutoff of pseudoinverses.
    double pinv_cutoff = 1e-10;
    /// Smallest admissible k-th singular value of the view-1/view-3 cross moment.
    double rank_floor = 1e-10;
    /// An empirical action is decomposed only when sqrt(count) * sigma_k(M13)
    /// reaches this value; otherwise it is estimated against the aligned
    /// observation matrix.
    double snr_threshold = 4.0;
    std::uint64_t seed = 0;
};

struct SymmetricMoments {
    Matrix pair;
    Tensor3 triple;
    double sigma_k = 0.0;
};

/// Moves views 1 and 3 into view-2 coordinates:
/// x1 -> M23 M13^+ x1, x3 -> M21 M31^+ x3, with rank-k pseudoinverses.
/// The returned pair matrix is O diag(w) O^T and the triple tensor
/// sum_i w_i o_i (x) o_i (x) o_i at population.
SymmetricMoments symmetrize(const ViewMoments& moments, std::size_t k, const SpectralOptions& options = {});

/// W (n x k) with W^T M W = I_k from the top-k eigenpairs of M.
Matrix whiten(const Matrix& pair, std::size_t k, double eigen_floor = 1e-10);

struct Eigenpair {
    double value = 0.0;
    Vector vector;
};

struct PowerComponent {
    double best_restart_value = 0.0;
    double final_move = 0.0;
    bool converged = false;
};

struct TensorPowerResult {
    std::vector<Eigenpair> pairs;
    std::vector<PowerComponent> components;
    std::size_t nonconverged = 0;
};

/// Robust tensor power method with deflation.
TensorPowerResult tensor_power(const Tensor3& whitened, std::size_t k, const SpectralOptions& options, Rng& rng);

struct ActionDiagnostics {
    std::size_t action = 0;
    bool anchored = false;
    double sigma_k_cross = 0.0;
    double snr = 0.0;
    std::vector<double> eigenvalues;
    double min_eigen_gap = 0.0;
    double whitening_residual = 0.0;
    double symmetry_residual = 0.0;
    std::size_t nonconverged = 0;
    std::size_t clamped_weights = 0;
};

/// One action's recovered parameters in its own latent labeling.
struct ActionEstimate {
    std::size_t action = 0;
    bool anchored = false;
    Matrix o_hat;
    Matrix t_hat;
    Vector r_hat;
    Vector w_hat;
    /// pinv(O_hat) * P(z_1 | a_1 = action), i.e. an estimate of T_a b1.
    Vector first_latent;
    double weight = 1.0;
    double first_weight = 1.0;
    ActionDiagnostics diagnostics;
};

struct SpectralEstimate {
    Matrix o_hat;
    std::vector<Matrix> t_hat;
    std::vector<Vector> r_hat;
    Vector b1_hat;
    std::vector<Vector> w_hat;
    std::vector<ActionDiagnostics> diagnostics;
};

/// Un-whitens eigenpairs into O columns (weights w_i = lambda_i^-2), then
/// recovers T_a from M23 and R_a from reward_cross against that O.
ActionEstimate recover_model(const ViewMoments& moments, const TensorPowerResult& eigenpairs, const Matrix& whitening,
                             std::size_t k, double reward_max, const SpectralOptions& options = {});

/// Recovers T_a, R_a and the first-step statistic of an action against a
/// known observation matrix; used for actions whose moments cannot be
/// decomposed (rank-deficient transitions).
ActionEstimate recover_anchored(const ViewMoments& moments, const Matrix& observation, double reward_max,
                                const SpectralOptions& options = {});

/// symmetrize -> whiten -> tensor_power -> recover_model.
ActionEstimate estimate_action(const ViewMoments& moments, std::size_t k, double reward_max,
                               const SpectralOptions& options = {});

/// k-th singular value of M13; zero signals an undecomposable action.
double cross_rank_signal(const ViewMoments& moments, std::size_t k);

bool is_decomposable(const ViewMoments& moments, std::size_t k, const SpectralOptions& options = {});

/// Euclidean projection onto the probability simplex.
Vector project_simplex(const Vector& v);

TabularPOMDP to_model(const SpectralEstimate& estimate, std::size_t horizon, double reward_max);

}  // namespace popac
