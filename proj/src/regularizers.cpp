#include "bnm/regularizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace bnm {

namespace {

constexpr std::array<std::pair<ObjectiveKind, std::string_view>, 5> kNames{{
    {ObjectiveKind::None, "None"},
    {ObjectiveKind::EntMin, "EntMin"},
    {ObjectiveKind::BFM, "BFM"},
    {ObjectiveKind::BNM, "BNM"},
    {ObjectiveKind::Balance, "Balance"},
}};

ObjectiveEval entmin_raw(const Matrix& a) {
    const double inv_b = 1.0 / static_cast<double>(a.rows());
    Matrix grad(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        grad.data()[i] = -inv_b * (std::log(std::max(a.data()[i], kLogClamp)) + 1.0);
    }
    return {entropy(a), std::move(grad)};
}

ObjectiveEval bfm_raw(const Matrix& a) {
    const double norm = frobenius_norm(a);
    if (norm == 0.0) throw std::invalid_argument("BFM objective undefined for the zero matrix");
    const double b = static_cast<double>(a.rows());
    return {-norm / b, (-1.0 / (b * norm)) * a};
}

ObjectiveEval bnm_raw(const Matrix& a) {
    const SvdFactors f = thin_svd(a);
    const double b = static_cast<double>(a.rows());
    const double nuclear = std::accumulate(f.sigma.begin(), f.sigma.end(), 0.0);
    Matrix grad = f.u * f.v.transpose();
    grad *= -1.0 / b;
    return {-nuclear / b, std::move(grad)};
}

ObjectiveEval balance_raw(const Matrix& a) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    const double inv_b = 1.0 / static_cast<double>(rows);
    std::vector<double> mean(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) mean[j] += a(i, j);
    double value = 0.0;
    std::vector<double> col_grad(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        mean[j] *= inv_b;
        const double log_m = std::log(std::max(mean[j], kLogClamp));
        if (mean[j] != 0.0) value += mean[j] * log_m;
        col_grad[j] = inv_b * (log_m + 1.0);
    }
    Matrix grad(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) grad(i, j) = col_grad[j];
    return {value, std::move(grad)};
}

} // namespace

std::string_view to_string(ObjectiveKind kind) noexcept {
    for (const auto& [k, name] : kNames)
        if (k == kind) return name;
    return "?";
}

std::optional<ObjectiveKind> parse_objective(std::string_view name) noexcept {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    return std::nullopt;
}

ObjectiveEval evaluate(ObjectiveKind kind, const Matrix& a) {
    if (a.empty()) throw std::invalid_argument("objective evaluated on an empty matrix");
    switch (kind) {
    case ObjectiveKind::None: return {0.0, Matrix(a.rows(), a.cols())};
    case ObjectiveKind::EntMin: return entmin_raw(a);
    case ObjectiveKind::BFM: return bfm_raw(a);
    case ObjectiveKind::BNM: return bnm_raw(a);
    case ObjectiveKind::Balance: return balance_raw(a);
    }
    throw std::invalid_argument("unknown objective kind");
}

ObjectiveEval evaluate(ObjectiveKind kind, const BatchOutput& a) {
    return evaluate(kind, a.matrix());
}

ObjectiveEval eval_entmin(const BatchOutput& a) { return entmin_raw(a.matrix()); }
ObjectiveEval eval_bfm(const BatchOutput& a) { return bfm_raw(a.matrix()); }
ObjectiveEval eval_bnm(const BatchOutput& a) { return bnm_raw(a.matrix()); }
ObjectiveEval eval_balance(const BatchOutput& a) { return balance_raw(a.matrix()); }

double fd_check(ObjectiveKind kind, const BatchOutput& a, double step) {
    return fd_check(kind, a, step,
                    [](ObjectiveKind k, const Matrix& m) { return evaluate(k, m); });
}

double fd_check(ObjectiveKind kind, const BatchOutput& a, double step,
                const ObjectiveEvaluator& evaluator) {
    if (!(step > kFdMinStep && step < kFdMaxStep)) {
        throw std::invalid_argument("fd_check: step must lie in (1e-9, 1e-3)");
    }
    const Matrix& base = a.matrix();
    const ObjectiveEval analytic = evaluator(kind, base);
    if (analytic.grad.rows() != base.rows() || analytic.grad.cols() != base.cols()) {
        throw std::invalid_argument("fd_check: gradient shape does not match input");
    }
    double worst = 0.0;
    Matrix probe = base;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double orig = base.data()[i];
        probe.data()[i] = orig + step;
        const double up = evaluator(kind, probe).value;
        probe.data()[i] = orig - step;
        const double down = evaluator(kind, probe).value;
        probe.data()[i] = orig;
        const double fd = (up - down) / (2.0 * step);
        const double g = analytic.grad.data()[i];
        worst = std::max(worst, std::abs(g - fd) / std::max(1.0, std::abs(g)));
    }
    return worst;
}

DiversityDemo equal_entropy_diversity_demo() {
    BatchOutput concentrated(Matrix::from_rows({{0.9, 0.1}, {0.9, 0.1}, {0.9, 0.1}, {0.9, 0.1}}));
    BatchOutput diverse(Matrix::from_rows({{0.9, 0.1}, {0.9, 0.1}, {0.9, 0.1}, {0.1, 0.9}}));
    if (entropy(concentrated) != entropy(diverse) ||
        frobenius_norm(concentrated.matrix()) != frobenius_norm(diverse.matrix()) ||
        !(nuclear_norm(diverse.matrix()) > nuclear_norm(concentrated.matrix()))) {
        throw std::logic_error("equal_entropy_diversity_demo: ordering violated");
    }
    return {std::move(concentrated), std::move(diverse)};
}

} // namespace bnm
