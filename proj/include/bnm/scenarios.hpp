#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "bnm/matrix.hpp"
#include "bnm/random.hpp"

namespace bnm {

// Label-insufficient regimes: semi-supervised (no shift), domain adaptation
// (shifted unlabeled domain) and open-set (unlabeled domain holds classes the
// labeled domain never shows).
enum class ScenarioKind { SSL, UDA, OpenSet };

std::string_view to_string(ScenarioKind kind) noexcept;
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) noexcept;

// Rotation about the origin followed by translation, applied to the
// unlabeled class means.
struct DomainShift {
    double dx = 0.0;
    double dy = 0.0;
    double angle = 0.0; // radians

    bool is_zero() const noexcept { return dx == 0.0 && dy == 0.0 && angle == 0.0; }
    std::array<double, 2> apply(std::array<double, 2> p) const noexcept;
};

inline constexpr double kClassCircleRadius = 3.0;
inline constexpr double kDefaultClusterStd = 0.8;
inline constexpr std::size_t kDefaultPrototypes = 5;

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::SSL;
    std::size_t n_labeled = 0;
    std::size_t n_unlabeled = 0;
    std::size_t n_classes = 0;
    std::size_t n_known = 0;
    std::vector<double> class_priors;
    DomainShift shift;
    double cluster_std = kDefaultClusterStd;
    std::uint64_t seed = 1;

    // Throws std::invalid_argument naming the violated constraint.
    void validate() const;

    static ScenarioSpec defaults(ScenarioKind kind);
};

// Class mean k sits at angle 2 pi k / C on the circle of radius 3.
std::array<double, 2> class_mean(std::size_t k, std::size_t n_classes) noexcept;

struct DatasetMeta {
    ScenarioKind kind = ScenarioKind::SSL;
    std::size_t n_classes = 0;
    std::size_t n_known = 0;
    std::vector<double> class_priors;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

// Labeled and unlabeled samples in two feature dimensions with one-hot labels
// over all n_classes columns. Unlabeled labels are for evaluation only.
// `holdout` flags unlabeled rows reserved for prototype initialization; they
// never enter training batches or evaluation.
struct Dataset {
    DatasetMeta meta;
    Matrix labeled_x;
    Matrix labeled_y;
    Matrix unlabeled_x;
    Matrix unlabeled_y;
    std::vector<std::size_t> labeled_labels;
    std::vector<std::size_t> unlabeled_labels;
    std::vector<bool> holdout;

    std::size_t n_labeled() const noexcept { return labeled_labels.size(); }
    std::size_t n_unlabeled() const noexcept { return unlabeled_labels.size(); }

    // Unlabeled row indices not flagged as holdout, ascending.
    std::vector<std::size_t> unlabeled_pool() const;
    // Features/labels of the unlabeled pool, in pool order.
    Matrix pool_x() const;
    std::vector<std::size_t> pool_labels() const;

    std::vector<std::size_t> known_classes() const;
    std::vector<std::size_t> unknown_classes() const;
    // Classes whose prior is below the uniform share 1 / n_classes.
    std::vector<std::size_t> minority_classes() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

Dataset generate(const ScenarioSpec& spec);

struct PrototypeInit {
    Dataset dataset;                            // copy with the used rows flagged
    std::vector<std::size_t> classes;           // unknown class ids
    std::vector<std::array<double, 2>> means;   // one per entry of `classes`
};

// Averages the first k unlabeled examples (by index) of every unknown class and
// flags them as holdout. Throws when a class has fewer than k eligible rows.
PrototypeInit prototype_init(const Dataset& d, std::size_t k);

enum class Domain { Labeled, Unlabeled };

struct Batch {
    Matrix x;
    std::optional<Matrix> y; // labeled domain only
    std::vector<std::size_t> indices;
};

// Uniform sampling with replacement; unlabeled batches skip holdout rows.
Batch sample_batch(const Dataset& d, Domain domain, std::size_t b, Xoshiro256pp& rng);
// Sampling without replacement (partial Fisher-Yates); b = N yields a
// permutation of the domain.
Batch sample_batch_without_replacement(const Dataset& d, Domain domain, std::size_t b,
                                       Xoshiro256pp& rng);

// CSV with header `domain,split_flag,x1,x2,label`; split_flag is 1 for holdout
// rows. Coordinates are written with 17 significant digits so a round trip is
// exact.
void write_dataset_csv(std::ostream& os, const Dataset& d);
Dataset read_dataset_csv(std::istream& is, const DatasetMeta& meta);

} // namespace bnm
