#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace popac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense cubic tensor of side n, stored with the last index fastest.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(std::size_t n) : n_(n), data_(n * n * n, 0.0) {}

    std::size_t dim() const { return n_; }

    double& operator()(std::size_t i, std::size_t j, std::size_t l) { return data_[(i * n_ + j) * n_ + l]; }
    double operator()(std::size_t i, std::size_t j, std::size_t l) const {
        return data_[(i * n_ + j) * n_ + l];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double sum() const;

    /// T(M, M, M) for an n x k matrix M: result is k x k x k.
    Tensor3 multilinear(const Matrix& m) const;

    /// T(I, v, v).
    Vector contract_two(const Vector& v) const;

    /// T(v, v, v).
    double contract_three(const Vector& v) const;

    /// Average over the six index permutations.
    Tensor3 symmetrized() const;

    /// max |T(i,j,l) - T(perm)| over all index permutations.
    double asymmetry() const;

    Tensor3& add_rank_one(double weight, const Vector& v);

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Pseudoinverse by truncated SVD, discarding singular values below
/// relative_cutoff * largest.
Matrix pinv(const Matrix& m, double relative_cutoff = 1e-10);

/// Rank-k truncated pseudoinverse.
Matrix pinv_rank(const Matrix& m, std::size_t k);

/// Singular values in decreasing order.
Vector singular_values(const Matrix& m);

/// The k-th largest singular value (1-based); zero when the matrix has fewer.
double kth_singular_value(const Matrix& m, std::size_t k);

/// Smallest singular value among the min(rows, cols) values, or zero when a
/// matrix with `rank_needed` columns cannot have full column rank.
double min_singular_value(const Matrix& m, std::size_t rank_needed);

bool is_column_stochastic(const Matrix& m, double tolerance);
bool is_probability_vector(const Vector& v, double tolerance);

/// Maximum over columns of the L1 column difference.
double max_column_l1(const Matrix& a, const Matrix& b);

}  // namespace popac
