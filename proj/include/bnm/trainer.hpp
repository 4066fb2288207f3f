#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "bnm/model.hpp"
#include "bnm/random.hpp"
#include "bnm/regularizers.hpp"
#include "bnm/scenarios.hpp"

namespace bnm {

struct TrainConfig {
    ObjectiveKind objective = ObjectiveKind::None;
    double lambda = 1.0;
    std::size_t b_labeled = 36;
    std::size_t b_unlabeled = 36;
    double lr = 0.1;
    std::size_t steps = 2000;
    std::size_t eval_every = 50;
    std::uint64_t seed = 1;
    double rank_tol = kDefaultRankTolerance;
    // Unlabeled batches drawn per evaluation for the diversity ratio.
    std::size_t eval_batches = 20;

    void validate() const;
};

// Metrics at one evaluation point. Losses are those of the minibatch step that
// produced the evaluated parameters; all other metrics are computed on the
// unlabeled pool (holdout rows excluded).
struct RunRecord {
    std::size_t step = 0;
    double loss_cls = 0.0;
    double loss_obj = 0.0;
    double loss_total = 0.0; // loss_cls + lambda * loss_obj
    double acc_unlabeled = 0.0;
    std::vector<double> per_class_recall;
    double minority_recall = 0.0; // mean recall over Dataset::minority_classes()
    double diversity_ratio = 0.0;
    double minority_ratio = 0.0;
    double unknown_ratio = 0.0; // zero outside OpenSet
    std::size_t batch_rank = 0; // numeric rank of the step's unlabeled batch output

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct TrainResult {
    Classifier model;
    std::vector<RunRecord> records;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Optimizes L_cls + lambda * L_obj with one labeled and one unlabeled batch per
// step. Labeled and unlabeled batches come from separate streams derived from
// cfg.seed, so the objective never changes the batch sequence.
TrainResult train(const Classifier& c0, const Dataset& d, const TrainConfig& cfg);

// Unlabeled-pool metrics for `c`; loss fields are left at zero.
RunRecord evaluate(const Classifier& c, const Dataset& d, const TrainConfig& cfg, std::size_t step);

// Mean distinct argmax categories over n_batches random unlabeled batches,
// divided by the mean distinct ground-truth categories of the same batches.
double diversity_ratio(const Classifier& c, const Dataset& d, std::size_t b, std::size_t n_batches,
                       Xoshiro256pp& rng);

// Fraction of rows of x whose argmax falls in class_set (non-empty).
double category_ratio(const Classifier& c, const Matrix& x, std::span<const std::size_t> class_set);

// Header `step,loss_cls,loss_obj,acc,recall_0..recall_{C-1},div_ratio,minority_ratio,unknown_ratio`,
// reals with 9 significant digits.
void write_run_csv(std::ostream& os, std::span<const RunRecord> records, std::size_t n_classes);

// Formats a real with 9 significant digits in the C locale.
std::string format_real(double v);

} // namespace bnm
