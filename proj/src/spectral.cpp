#include "popac/spectral.hpp"

#include "popac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace popac {

namespace {

Matrix safe_pinv(const Matrix& m, double cutoff, const char* what) {
    const Vector s = singular_values(m);
    const auto k = std::min(m.rows(), m.cols());
    if (s.size() == 0 || s(k - 1) <= cutoff * s(0)) throw IllConditioned(what, s.size() ? s(k - 1) : 0.0);
    return pinv(m, cutoff);
}

/// Column-normalized, simplex-projected transition estimate from
/// joint(s', h) ~ T(s', h) w(h).
Matrix transitions_from_joint(const Matrix& joint, const Vector& w, double floor) {
    Matrix t(joint.rows(), joint.cols());
    for (Eigen::Index h = 0; h < joint.cols(); ++h) {
        const double colsum = joint.col(h).sum();
        const double scale = colsum > floor ? colsum : std::max(w(h), floor);
        t.col(h) = project_simplex(joint.col(h) / scale);
    }
    return t;
}

Vector clamp_rewards(Vector r, double reward_max) {
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = std::clamp(std::isfinite(r(i)) ? r(i) : 0.0, 0.0, reward_max);
    return r;
}

double sample_weight(std::uint64_t count) {
    return count == kPopulationCount ? 1.0 : static_cast<double>(count);
}

ActionEstimate single_state(const ViewMoments& m, double reward_max) {
    ActionEstimate e;
    e.action = m.action;
    e.o_hat = project_simplex(m.m1);
    e.t_hat = Matrix::Ones(1, 1);
    e.r_hat = clamp_rewards(Vector::Constant(1, m.reward_cross.sum()), reward_max);
    e.w_hat = Vector::Ones(1);
    e.first_latent = Vector::Ones(1);
    e.weight = sample_weight(m.count);
    e.first_weight = sample_weight(m.first_count);
    e.diagnostics.action = m.action;
    e.diagnostics.eigenvalues = {1.0};
    return e;
}

}  // namespace

Vector project_simplex(const Vector& v) {
    const auto n = v.size();
    if (n == 0) return v;
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumulative += u[static_cast<std::size_t>(j)];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
    }
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = std::max(v(i) - theta, 0.0);
    return out;
}

double cross_rank_signal(const ViewMoments& m, std::size_t k) {
    return kth_singular_value(m.m13, k);
}

bool is_decomposable(const ViewMoments& m, std::size_t k, const SpectralOptions& options) {
    if (k <= 1) return true;
    const double sigma = cross_rank_signal(m, k);
    if (sigma < options.rank_floor) return false;
    if (m.is_population()) return true;
    return std::sqrt(static_cast<double>(m.count)) * sigma >= options.snr_threshold;
}

SymmetricMoments symmetrize(const ViewMoments& m, std::size_t k, const SpectralOptions& options) {
    const std::size_t Z = m.num_observations();
    if (k == 0 || k > Z) throw RankDeficient("latent dimension exceeds the number of observations", 0.0);
    const double sigma = cross_rank_signal(m, k);
    if (sigma < options.rank_floor) throw RankDeficient("view-1/view-3 cross moment has rank below k", sigma);

    const Matrix to_middle_1 = m.m23 * pinv_rank(m.m13, k);                // x1 -> view 2
    const Matrix to_middle_3 = m.m12.transpose() * pinv_rank(m.m13.transpose(), k);  // x3 -> view 2

    SymmetricMoments out;
    out.sigma_k = sigma;
    const Matrix pair = to_middle_1 * m.m13 * to_middle_3.transpose();
    out.pair = 0.5 * (pair + pair.transpose());

    // triple(i, j, l) = sum_{p,q} A(i,p) M123(p,j,q) B(l,q)
    const auto Zi = static_cast<Eigen::Index>(Z);
    Tensor3 partial(Z);  // contract view 3 first
    for (std::size_t p = 0; p < Z; ++p)
        for (std::size_t j = 0; j < Z; ++j)
            for (Eigen::Index l = 0; l < Zi; ++l) {
                double s = 0.0;
                for (std::size_t q = 0; q < Z; ++q) s += m.m123(p, j, q) * to_middle_3(l, static_cast<Eigen::Index>(q));
                partial(p, j, static_cast<std::size_t>(l)) = s;
            }
    Tensor3 triple(Z);
    for (Eigen::Index i = 0; i < Zi; ++i)
        for (std::size_t j = 0; j < Z; ++j)
            for (std::size_t l = 0; l < Z; ++l) {
                double s = 0.0;
                for (std::size_t p = 0; p < Z; ++p) s += to_middle_1(i, static_cast<Eigen::Index>(p)) * partial(p, j, l);
                triple(static_cast<std::size_t>(i), j, l) = s;
            }
    out.triple = triple.symmetrized();
    return out;
}

Matrix whiten(const Matrix& pair, std::size_t k, double eigen_floor) {
    const auto n = pair.rows();
    if (pair.cols() != n || k == 0 || static_cast<Eigen::Index>(k) > n)
        throw IllConditioned("whitening needs a square matrix of size at least k", 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (pair + pair.transpose()));
    // eigenvalues ascending; the top k are the last k
    const Vector& values = eig.eigenvalues();
    const Matrix& vectors = eig.eigenvectors();
    Matrix w(n, static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const Eigen::Index idx = n - 1 - static_cast<Eigen::Index>(i);
        if (!(values(idx) > eigen_floor)) throw IllConditioned("pair moment eigenvalue below floor", values(idx));
        w.col(static_cast<Eigen::Index>(i)) = vectors.col(idx) / std::sqrt(values(idx));
    }
    return w;
}

TensorPowerResult tensor_power(const Tensor3& whitened, std::size_t k, const SpectralOptions& options, Rng& rng) {
    const std::size_t n = whitened.dim();
    if (k == 0 || k > n) throw DecompositionFailed("tensor power: k must lie in [1, dim]");
    const auto ni = static_cast<Eigen::Index>(n);
    Tensor3 residual = whitened;
    TensorPowerResult result;

    auto step = [&](const Vector& theta, Vector& next) {
        next = residual.contract_two(theta);
        const double norm = next.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) return false;
        next /= norm;
        return true;
    };

    for (std::size_t c = 0; c < k; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        Vector best_theta = Vector::Unit(ni, 0);
        for (std::size_t r = 0; r < std::max<std::size_t>(options.restarts, 1); ++r) {
            Vector theta(ni);
            for (Eigen::Index i = 0; i < ni; ++i) theta(i) = rng.normal();
            if (!(theta.norm() > 0.0)) theta = Vector::Unit(ni, 0);
            theta.normalize();
            Vector next;
            for (std::size_t it = 0; it < options.iterations; ++it) {
                if (!step(theta, next)) break;
                const double move = (next - theta).norm();
                theta = next;
                if (move <= options.tolerance) break;
            }
            const double value = residual.contract_three(theta);
            if (value > best) {
                best = value;
                best_theta = theta;
            }
        }
        PowerComponent comp;
        comp.best_restart_value = best;
        Vector theta = best_theta, next;
        double move = 0.0;
        for (std::size_t it = 0; it < options.polish; ++it) {
            if (!step(theta, next)) break;
            move = (next - theta).norm();
            theta = next;
        }
        comp.final_move = move;
        comp.converged = move <= options.tolerance;
        if (!comp.converged) ++result.nonconverged;
        const double lambda = residual.contract_three(theta);
        residual.add_rank_one(-lambda, theta);
        result.pairs.push_back({lambda, theta});
        result.components.push_back(comp);
    }
    const bool any_positive = std::any_of(result.pairs.begin(), result.pairs.end(),
                                          [&](const Eigenpair& p) { return p.value > options.eigen_floor; });
    if (!any_positive) throw DecompositionFailed("all tensor eigenvalues fell below the floor");
    return result;
}

ActionEstimate recover_model(const ViewMoments& m, const TensorPowerResult& eigen, const Matrix& whitening,
                             std::size_t k, double reward_max, const SpectralOptions& options) {
    if (eigen.pairs.size() != k) throw DecompositionFailed("eigenpair count differs from the latent dimension");
    const auto Z = static_cast<Eigen::Index>(m.num_observations());
    const auto ki = static_cast<Eigen::Index>(k);
    const Matrix unwhiten = pinv(Matrix(whitening.transpose()), options.pinv_cutoff);

    ActionEstimate e;
    e.action = m.action;
    e.o_hat.resize(Z, ki);
    e.w_hat.resize(ki);
    e.weight = sample_weight(m.count);
    e.first_weight = sample_weight(m.first_count);
    for (Eigen::Index i = 0; i < ki; ++i) {
        const auto& pair = eigen.pairs[static_cast<std::size_t>(i)];
        if (!(pair.value > options.eigen_floor)) throw IllConditioned("tensor eigenvalue below floor", pair.value);
        Vector mu = pair.value * (unwhiten * pair.vector);
        if (mu.sum() < 0.0) mu = -mu;
        e.o_hat.col(i) = project_simplex(mu);
        e.w_hat(i) = 1.0 / (pair.value * pair.value);
    }
    const Matrix proj = safe_pinv(e.o_hat, options.pinv_cutoff, "recovered observation matrix is ill-conditioned");
    const Matrix joint = proj * m.m23.transpose() * proj.transpose();
    e.t_hat = transitions_from_joint(joint, e.w_hat, options.eigen_floor);
    e.r_hat = clamp_rewards((proj * m.reward_cross).cwiseQuotient(e.w_hat), reward_max);
    e.first_latent = proj * m.first_obs;

    auto& d = e.diagnostics;
    d.action = m.action;
    for (const auto& p : eigen.pairs) d.eigenvalues.push_back(p.value);
    d.min_eigen_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            d.min_eigen_gap = std::min(d.min_eigen_gap, std::abs(d.eigenvalues[i] - d.eigenvalues[j]));
    if (k < 2) d.min_eigen_gap = 0.0;
    d.nonconverged = eigen.nonconverged;
    return e;
}

ActionEstimate recover_anchored(const ViewMoments& m, const Matrix& observation, double reward_max,
                                const SpectralOptions& options) {
    const auto k = observation.cols();
    if (k == 1) {
        ActionEstimate e = single_state(m, reward_max);
        e.o_hat = observation;
        e.anchored = true;
        e.diagnostics.anchored = true;
        return e;
    }
    const Matrix proj = safe_pinv(observation, options.pinv_cutoff, "anchor observation matrix is ill-conditioned");
    ActionEstimate e;
    e.action = m.action;
    e.anchored = true;
    e.o_hat = observation;
    e.weight = sample_weight(m.count);
    e.first_weight = sample_weight(m.first_count);
    e.w_hat = proj * m.m1;
    for (Eigen::Index i = 0; i < k; ++i)
        if (!(e.w_hat(i) > options.eigen_floor)) {
            e.w_hat(i) = options.eigen_floor;
            ++e.diagnostics.clamped_weights;
        }
    const Matrix joint = proj * m.m23.transpose() * proj.transpose();
    e.t_hat = transitions_from_joint(joint, e.w_hat, options.eigen_floor);
    e.r_hat = clamp_rewards((proj * m.reward_cross).cwiseQuotient(e.w_hat), reward_max);
    e.first_latent = proj * m.first_obs;
    e.diagnostics.action = m.action;
    e.diagnostics.anchored = true;
    e.diagnostics.sigma_k_cross = cross_rank_signal(m, static_cast<std::size_t>(k));
    return e;
}

ActionEstimate estimate_action(const ViewMoments& m, std::size_t k, double reward_max, const SpectralOptions& options) {
    if (k == 1) return single_state(m, reward_max);
    const SymmetricMoments sym = symmetrize(m, k, options);
    const Matrix w = whiten(sym.pair, k, options.eigen_floor);
    const Tensor3 whitened = sym.triple.multilinear(w);
    Rng rng(derive_seed(options.seed, 0x54504d00ULL + m.action));
    const TensorPowerResult eigen = tensor_power(whitened, k, options, rng);
    ActionEstimate e = recover_model(m, eigen, w, k, reward_max, options);
    e.diagnostics.sigma_k_cross = sym.sigma_k;
    e.diagnostics.snr = m.is_population() ? std::numeric_limits<double>::infinity()
                                          : std::sqrt(static_cast<double>(m.count)) * sym.sigma_k;
    e.diagnostics.whitening_residual =
        (w.transpose() * sym.pair * w - Matrix::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)))
            .norm();
    e.diagnostics.symmetry_residual = (sym.pair - sym.pair.transpose()).cwiseAbs().maxCoeff();
    return e;
}

TabularPOMDP to_model(const SpectralEstimate& est, std::size_t horizon, double reward_max) {
    TabularPOMDP m;
    m.num_states = static_cast<std::size_t>(est.o_hat.cols());
    m.num_actions = est.t_hat.size();
    m.num_observations = static_cast<std::size_t>(est.o_hat.rows());
    m.horizon = horizon;
    m.reward_max = reward_max;
    m.transitions = est.t_hat;
    m.observation = est.o_hat;
    m.rewards = est.r_hat;
    m.initial_belief = est.b1_hat;
    // projection leaves sums within rounding of 1; renormalize for the 1e-12 contract
    for (auto& t : m.transitions)
        for (Eigen::Index c = 0; c < t.cols(); ++c) t.col(c) /= t.col(c).sum();
    for (Eigen::Index c = 0; c < m.observation.cols(); ++c) m.observation.col(c) /= m.observation.col(c).sum();
    m.initial_belief /= m.initial_belief.sum();
    check_structure(m);
    return m;
}

}  // namespace popac
