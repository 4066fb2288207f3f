#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "bnm/linalg.hpp"
#include "bnm/matrix.hpp"

namespace bnm {

// Batch objectives applied to the unlabeled prediction matrix. All of them are
// losses to minimize; the maximization objectives carry their minus sign.
enum class ObjectiveKind { None, EntMin, BFM, BNM, Balance };

std::string_view to_string(ObjectiveKind kind) noexcept;
std::optional<ObjectiveKind> parse_objective(std::string_view name) noexcept;

struct ObjectiveEval {
    double value = 0.0;
    Matrix grad; // d value / d A, same shape as A
};

// Entropy H(A); gradient -(1/B)(ln a_ij + 1) with the clamped log.
ObjectiveEval eval_entmin(const BatchOutput& a);
// -||A||_F / B; gradient -A / (B ||A||_F).
ObjectiveEval eval_bfm(const BatchOutput& a);
// -||A||_* / B; gradient -U V^T / B from the thin SVD of A.
ObjectiveEval eval_bnm(const BatchOutput& a);
// sum_j m_j ln m_j over the batch-mean prediction m.
ObjectiveEval eval_balance(const BatchOutput& a);

// Evaluates the unconstrained functional on an arbitrary matrix. Rows need not
// sum to one, which is what finite differencing relies on.
ObjectiveEval evaluate(ObjectiveKind kind, const Matrix& a);
ObjectiveEval evaluate(ObjectiveKind kind, const BatchOutput& a);

using ObjectiveEvaluator = std::function<ObjectiveEval(ObjectiveKind, const Matrix&)>;

inline constexpr double kFdMinStep = 1e-9;
inline constexpr double kFdMaxStep = 1e-3;

// max_ij |g_analytic - g_central| / max(1, |g_analytic|), perturbing one
// entry at a time by +/- step without re-normalizing the row. The BNM
// gradient is only unique when spectral_gap(thin_svd(a)) is positive.
double fd_check(ObjectiveKind kind, const BatchOutput& a, double step);
double fd_check(ObjectiveKind kind, const BatchOutput& a, double step,
                const ObjectiveEvaluator& evaluator);

// Two 4x2 batches with identical entropy and Frobenius norm: every row of
// `concentrated` is [0.9, 0.1]; `diverse` flips the last row to [0.1, 0.9]
// and has the strictly larger nuclear norm.
struct DiversityDemo {
    BatchOutput concentrated;
    BatchOutput diverse;
};

DiversityDemo equal_entropy_diversity_demo();

} // namespace bnm
