#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnm/experiment.hpp"
#include "bnm/trainer.hpp"

namespace bnm {

// Malformed or invalid configuration; the message carries the source name and
// the offending line and/or field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Run configuration read from a flat `key = value` file with `[section]`
// headers. `#` and `;` start comment lines. Unknown sections and keys are
// errors.
//
//   [scenario]  kind (required), n_labeled, n_unlabeled, n_classes, n_known,
//               priors (comma list), shift_x, shift_y, shift_deg, cluster_std
//   [model]     hidden, prototypes, head_scale
//   [train]     objective, lambda, b_labeled, b_unlabeled, lr, steps,
//               eval_every, seed, rank_tol, eval_batches
//   [compare]   methods (comma list of Objective or Objective@lambda), seeds
//
// Unset scenario fields take ScenarioSpec::defaults(kind).
struct RunConfig {
    ExperimentSetup setup;
    TrainConfig train;
    std::optional<std::uint64_t> seed; // [train] seed, if given
    std::vector<MethodSpec> methods;   // [compare] methods
    std::optional<std::size_t> seeds;  // [compare] seeds
};

enum class ConfigPurpose { Train, Compare };

// Train requires [train] objective; Compare requires at least two methods.
RunConfig parse_config(std::istream& is, ConfigPurpose purpose, const std::string& source = "<config>");
RunConfig load_config(const std::string& path, ConfigPurpose purpose);

// Parses `EntMin` or `BNM@1.5`; the label is the token as written.
MethodSpec parse_method(const std::string& token, const TrainConfig& base);

} // namespace bnm
