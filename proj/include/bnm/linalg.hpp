#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnm/matrix.hpp"

namespace bnm {

inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kLogClamp = 1e-12;
inline constexpr double kDefaultRankTolerance = 0.1;

// Row-stochastic B x C matrix of per-sample category probabilities: entries in
// [0, 1] and every row summing to one within kRowSumTolerance.
class BatchOutput {
public:
    // Throws std::invalid_argument when the matrix is not row-stochastic.
    explicit BatchOutput(Matrix m);

    const Matrix& matrix() const noexcept { return m_; }
    std::size_t batch_size() const noexcept { return m_.rows(); }
    std::size_t categories() const noexcept { return m_.cols(); }

    // Returns a description of the first violated constraint, or an empty
    // string when the matrix is a valid batch output.
    static std::string check(const Matrix& m);

private:
    Matrix m_;
};

// Thin SVD A = U diag(sigma) V^T with D = min(rows, cols) triplets.
struct SvdFactors {
    Matrix u;                  // rows x D, orthonormal columns
    std::vector<double> sigma; // D values, descending, non-negative
    Matrix v;                  // cols x D, orthonormal columns

    std::size_t rank_bound() const noexcept { return sigma.size(); }
};

class SvdConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kJacobiMaxSweeps = 60;
inline constexpr double kJacobiTolerance = 1e-12;
// Column norms below this fraction of ||A||_F count as zero singular values.
inline constexpr double kJacobiNegligible = 1e-15;

// -(1/B) sum_ij a_ij ln a_ij with 0 ln 0 = 0. The Matrix overload does not
// check row sums and is the functional differentiated by the regularizers.
double entropy(const BatchOutput& a);
double entropy(const Matrix& a);

double frobenius_norm(const Matrix& a);

// One-sided Jacobi SVD. Deterministic; throws SvdConvergenceError when the
// sweep cap is reached and std::invalid_argument on non-finite input.
SvdFactors thin_svd(const Matrix& a);

double nuclear_norm(const Matrix& a);

// Number of singular values strictly above tol_ratio * sigma_1.
std::size_t numeric_rank(const SvdFactors& s, double tol_ratio = kDefaultRankTolerance);

// Smallest of the consecutive singular value gaps and the smallest singular
// value. The nuclear norm is differentiable when this is positive.
double spectral_gap(const SvdFactors& s);

} // namespace bnm
