#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "bnm/check.hpp"

namespace bnm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kSeedEnvVar = "BNMLAB_SEED";
inline constexpr std::uint64_t kDefaultSeed = 1;

enum class Verbosity { Quiet, Normal, Verbose };

struct Options {
    std::optional<std::filesystem::path> config_path;
    std::filesystem::path output_dir = ".";
    std::optional<std::uint64_t> seed_override;
    std::optional<std::size_t> seeds; // compare only
    Verbosity verbosity = Verbosity::Normal;
};

// Precedence: flag > config > environment > default 1. A malformed
// environment value is ignored.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config,
                           const char* env_value);

// Runs the invariant suites and prints one line per suite, followed by the
// first counterexample of any failing suite.
int cmd_check(const CheckOptions& opts, std::ostream& out);

// Prints entropy, F-norm and nuclear norm for the four 2x2 entropy optima and
// the equal-entropy pair, asserting that only the permutation matrices reach
// nuclear norm 2 and that the diverse batch has the larger nuclear norm.
int cmd_toy(std::ostream& out);

// Writes run.csv, summary.txt and dataset.csv to the output directory.
int cmd_train(const Options& opts, std::ostream& out, std::ostream& err);

// Writes compare.csv and runs/<method>_seed<seed>.csv to the output directory.
int cmd_compare(const Options& opts, std::ostream& out, std::ostream& err);

} // namespace bnm::cli
