#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bnm/model.hpp"
#include "bnm/scenarios.hpp"
#include "bnm/trainer.hpp"

namespace bnm {

struct ModelSpec {
    std::size_t hidden = 0; // 0 = linear softmax
    // OpenSet only: examples per unknown class used for head initialization.
    std::size_t prototypes = kDefaultPrototypes;
    // Scale of the nearest-mean head initialization used for OpenSet.
    double head_scale = 1.0;
};

struct ExperimentSetup {
    ScenarioSpec scenario;
    ModelSpec model;
};

struct PreparedRun {
    Dataset data;
    Classifier initial;
};

// Builds the dataset and initial classifier for one seed. The scenario and
// init streams are derived from `seed`. For OpenSet the classifier is linear and
// its heads are set to the nearest-mean rule over labeled class means (known
// classes) and prototype means (unknown classes).
PreparedRun prepare(const ExperimentSetup& setup, std::uint64_t seed);

// Sets every output head to w_k = s * mu_k, b_k = -s |mu_k|^2 / 2.
Classifier nearest_mean_heads(const std::vector<std::array<double, 2>>& means, double scale);

struct MethodSpec {
    std::string label;
    TrainConfig config;
};

struct CellResult {
    std::string method;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RunRecord initial;              // metrics of the shared initial classifier
    std::vector<RunRecord> records; // empty when !ok
};

struct MetricSummary {
    std::string name;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation; 0 with a single cell
};

struct MethodSummary {
    std::string label;
    ObjectiveKind objective = ObjectiveKind::None;
    double lambda = 0.0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    std::vector<MetricSummary> metrics;

    const MetricSummary& metric(const std::string& name) const;
};

struct CompareTable {
    std::vector<MethodSummary> rows;
    std::vector<CellResult> cells; // method-major, seeds in order
};

// Named scalar metrics of a record: acc, minority_recall, div_ratio,
// minority_ratio, unknown_ratio, recall_k, loss_cls, loss_obj.
std::vector<std::pair<std::string, double>> metric_columns(const RunRecord& r);

// Runs every method on seeds master_seed, master_seed + 1, ... Each seed's
// dataset and initial classifier are shared by all methods and the run seed
// equals the seed, so methods see identical batch sequences. A throwing cell is
// marked failed and the table is still produced.
CompareTable compare(const std::vector<MethodSpec>& methods, const ExperimentSetup& setup,
                     std::uint64_t master_seed, std::size_t n_seeds = 4);

// Header `method,objective,lambda,n_ok,n_failed,<metric>_mean,<metric>_std,...`.
void write_compare_csv(std::ostream& os, const CompareTable& table);

} // namespace bnm
