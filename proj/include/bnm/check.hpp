#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bnm/linalg.hpp"
#include "bnm/random.hpp"
#include "bnm/regularizers.hpp"

namespace bnm {

// Random row-stochastic matrix. Rows are softmax of scaled Gaussian logits
// with a per-matrix temperature; a fraction of rows are exactly one-hot or
// exactly uniform so the bounds are exercised at their extremes.
BatchOutput random_batch_output(Xoshiro256pp& rng, std::size_t rows, std::size_t cols);

// Softmax rows only, with every entry at least min_entry (redrawn otherwise).
// Used where finite differences need entries away from zero.
BatchOutput random_smooth_batch_output(Xoshiro256pp& rng, std::size_t rows, std::size_t cols,
                                       double min_entry = 1e-3);

// One-hot B x C matrix assigning each row to `labels[i]`.
BatchOutput one_hot(const std::vector<std::size_t>& labels, std::size_t cols);

struct CheckOptions {
    std::uint64_t seed = 1;
    std::size_t population = 10000;    // bound / SVD suites
    std::size_t fd_population = 1000;  // per objective
    std::size_t max_dim = 8;
    ObjectiveEvaluator evaluator = [](ObjectiveKind k, const Matrix& m) { return evaluate(k, m); };
};

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::size_t cases = 0;
    double worst = 0.0;          // largest violation margin or error observed
    std::string counterexample;  // first failing matrix, when !passed
};

// The seven invariant suites: frobenius_bound, sandwich, nuclear_bound,
// svd_factors, onehot_rank, monotonicity, fd_check.
std::vector<SuiteResult> run_check_suites(const CheckOptions& opts);

} // namespace bnm
