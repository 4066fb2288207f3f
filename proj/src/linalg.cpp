#include "bnm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace bnm {

BatchOutput::BatchOutput(Matrix m) : m_(std::move(m)) {
    if (auto problem = check(m_); !problem.empty()) {
        throw std::invalid_argument("BatchOutput: " + problem);
    }
}

std::string BatchOutput::check(const Matrix& m) {
    if (m.empty()) return "empty matrix";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                std::ostringstream os;
                os << "entry (" << i << ", " << j << ") = " << v << " outside [0, 1]";
                return os.str();
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "row " << i << " sums to " << sum;
            return os.str();
        }
    }
    return {};
}

// Both functionals accumulate per row first so that permuting rows leaves the
// result bit-identical.
double entropy(const Matrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (double v : a.row(i)) {
            if (v != 0.0) row += v * std::log(std::max(v, kLogClamp));
        }
        acc += row;
    }
    return acc == 0.0 ? 0.0 : -acc / static_cast<double>(a.rows());
}

double entropy(const BatchOutput& a) { return entropy(a.matrix()); }

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        for (double v : a.row(i)) row += v * v;
        acc += row;
    }
    return std::sqrt(acc);
}

namespace {

double column_dot(const Matrix& w, std::size_t p, std::size_t q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) acc += w(i, p) * w(i, q);
    return acc;
}

void rotate_columns(Matrix& w, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double wp = w(i, p);
        const double wq = w(i, q);
        w(i, p) = c * wp - s * wq;
        w(i, q) = s * wp + c * wq;
    }
}

// Fills column `col` of u with a unit vector orthogonal to the columns listed
// in `done`, taken from the first standard basis vector that survives
// Gram-Schmidt.
void complete_column(Matrix& u, std::size_t col, const std::vector<std::size_t>& done) {
    const std::size_t m = u.rows();
    std::vector<double> cand(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::fill(cand.begin(), cand.end(), 0.0);
        cand[k] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t j : done) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += cand[i] * u(i, j);
                for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, j);
            }
        }
        const double norm = std::sqrt(std::inner_product(cand.begin(), cand.end(), cand.begin(), 0.0));
        if (norm > 0.5) {
            for (std::size_t i = 0; i < m; ++i) u(i, col) = cand[i] / norm;
            return;
        }
    }
    throw SvdConvergenceError("thin_svd: could not complete orthonormal basis");
}

// SVD of a tall (rows >= cols) matrix.
SvdFactors jacobi_tall(Matrix w) {
    const std::size_t m = w.rows();
    const std::size_t n = w.cols();
    Matrix v = Matrix::identity(n);
    // Columns whose squared norm falls below this are numerically null; their
    // inner products are rounding noise and are left alone.
    const double negligible = kJacobiNegligible * kJacobiNegligible * frobenius_norm(w) * frobenius_norm(w);

    bool converged = false;
    for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = column_dot(w, p, p);
                const double beta = column_dot(w, q, q);
                const double gamma = column_dot(w, p, q);
                if (gamma == 0.0 || std::min(alpha, beta) <= negligible ||
                    std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha) * std::sqrt(beta)) {
                    continue;
                }
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_columns(w, p, q, c, s);
                rotate_columns(v, p, q, c, s);
            }
        }
    }
    if (!converged) {
        throw SvdConvergenceError("thin_svd: no convergence after " +
                                  std::to_string(kJacobiMaxSweeps) + " sweeps");
    }

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(column_dot(w, j, j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    SvdFactors out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
    std::vector<std::size_t> filled;
    std::vector<std::size_t> zero_cols;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.sigma[k] = norms[j];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v(i, j);
        if (norms[j] * norms[j] > negligible) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(i, j) / norms[j];
            filled.push_back(k);
        } else {
            zero_cols.push_back(k);
        }
    }
    for (std::size_t k : zero_cols) {
        complete_column(out.u, k, filled);
        filled.push_back(k);
    }
    return out;
}

} // namespace

SvdFactors thin_svd(const Matrix& a) {
    if (a.empty()) throw std::invalid_argument("thin_svd: empty matrix");
    a.require_finite("thin_svd");
    if (a.rows() >= a.cols()) return jacobi_tall(a);
    SvdFactors t = jacobi_tall(a.transpose());
    std::swap(t.u, t.v);
    return t;
}

double nuclear_norm(const Matrix& a) {
    const SvdFactors s = thin_svd(a);
    return std::accumulate(s.sigma.begin(), s.sigma.end(), 0.0);
}

std::size_t numeric_rank(const SvdFactors& s, double tol_ratio) {
    if (!(tol_ratio > 0.0 && tol_ratio < 1.0)) {
        throw std::invalid_argument("numeric_rank: tol_ratio must lie in (0, 1)");
    }
    if (s.sigma.empty() || s.sigma.front() == 0.0) return 0;
    const double cut = tol_ratio * s.sigma.front();
    return static_cast<std::size_t>(
        std::count_if(s.sigma.begin(), s.sigma.end(), [cut](double x) { return x > cut; }));
}

double spectral_gap(const SvdFactors& s) {
    if (s.sigma.empty()) return 0.0;
    double gap = s.sigma.back();
    for (std::size_t i = 0; i + 1 < s.sigma.size(); ++i)
        gap = std::min(gap, s.sigma[i] - s.sigma[i + 1]);
    return gap;
}

} // namespace bnm
