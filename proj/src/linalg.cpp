#include "popac/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace popac {

double Tensor3::sum() const {
    double s = 0.0;
    for (double x : data_) s += x;
    return s;
}

Tensor3 Tensor3::multilinear(const Matrix& m) const {
    const auto k = static_cast<std::size_t>(m.cols());
    // contract one mode at a time: n^3 k + n^2 k^2 + n k^3
    std::vector<double> a(n_ * n_ * k, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t l = 0; l < n_; ++l) {
                const double t = (*this)(i, j, l);
                if (t == 0.0) continue;
                for (std::size_t c = 0; c < k; ++c) a[(i * n_ + j) * k + c] += t * m(l, c);
            }
    std::vector<double> b(n_ * k * k, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t c = 0; c < k; ++c) {
                const double t = a[(i * n_ + j) * k + c];
                for (std::size_t bb = 0; bb < k; ++bb) b[(i * k + bb) * k + c] += t * m(j, bb);
            }
    Tensor3 out(k);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t bb = 0; bb < k; ++bb)
            for (std::size_t c = 0; c < k; ++c) {
                const double t = b[(i * k + bb) * k + c];
                for (std::size_t aa = 0; aa < k; ++aa) out(aa, bb, c) += t * m(i, aa);
            }
    return out;
}

Vector Tensor3::contract_two(const Vector& v) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t l = 0; l < n_; ++l) s += (*this)(i, j, l) * v(j) * v(l);
        out(i) = s;
    }
    return out;
}

double Tensor3::contract_three(const Vector& v) const {
    return v.dot(contract_two(v));
}

Tensor3 Tensor3::symmetrized() const {
    Tensor3 out(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t l = 0; l < n_; ++l)
                out(i, j, l) = ((*this)(i, j, l) + (*this)(i, l, j) + (*this)(j, i, l) +
                                (*this)(j, l, i) + (*this)(l, i, j) + (*this)(l, j, i)) /
                               6.0;
    return out;
}

double Tensor3::asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t l = 0; l < n_; ++l) {
                const double t = (*this)(i, j, l);
                const std::array<double, 5> others{(*this)(i, l, j), (*this)(j, i, l), (*this)(j, l, i),
                                                   (*this)(l, i, j), (*this)(l, j, i)};
                for (double o : others) worst = std::max(worst, std::abs(t - o));
            }
    return worst;
}

Tensor3& Tensor3::add_rank_one(double weight, const Vector& v) {
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
            for (std::size_t l = 0; l < n_; ++l) (*this)(i, j, l) += weight * v(i) * v(j) * v(l);
    return *this;
}

Matrix pinv(const Matrix& m, double relative_cutoff) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cut = s.size() ? relative_cutoff * s(0) : 0.0;
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix pinv_rank(const Matrix& m, std::size_t k) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size() && static_cast<std::size_t>(i) < k; ++i)
        if (s(i) > 0.0) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) return Vector();
    return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

double kth_singular_value(const Matrix& m, std::size_t k) {
    const Vector s = singular_values(m);
    if (k == 0 || static_cast<Eigen::Index>(k) > s.size()) return 0.0;
    return s(static_cast<Eigen::Index>(k) - 1);
}

double min_singular_value(const Matrix& m, std::size_t rank_needed) {
    return kth_singular_value(m, rank_needed);
}

bool is_column_stochastic(const Matrix& m, double tolerance) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (!is_probability_vector(m.col(c), tolerance)) return false;
    }
    return true;
}

bool is_probability_vector(const Vector& v, double tolerance) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i)) || v(i) < 0.0) return false;
        s += v(i);
    }
    return std::abs(s - 1.0) <= tolerance;
}

double max_column_l1(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) worst = std::max(worst, (a.col(c) - b.col(c)).lpNorm<1>());
    return worst;
}

}  // namespace popac
