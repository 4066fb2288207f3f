#include "bnm/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bnm {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("ScenarioSpec: " + what);
}

std::size_t draw_class(const std::vector<double>& weights, double total, Xoshiro256pp& rng) {
    const double u = rng.uniform() * total;
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        cum += weights[k];
        last_positive = k;
        if (u < cum) return k;
    }
    return last_positive;
}

void fill_sample(Matrix& x, Matrix& y, std::size_t row, std::size_t cls,
                 std::array<double, 2> mean, double std_dev, Xoshiro256pp& rng) {
    x(row, 0) = mean[0] + std_dev * rng.normal();
    x(row, 1) = mean[1] + std_dev * rng.normal();
    y(row, cls) = 1.0;
}

const std::vector<std::size_t>& domain_indices(const Dataset& d, Domain domain,
                                               std::vector<std::size_t>& storage) {
    if (domain == Domain::Labeled) {
        storage.resize(d.n_labeled());
        std::iota(storage.begin(), storage.end(), std::size_t{0});
    } else {
        storage = d.unlabeled_pool();
    }
    if (storage.empty()) throw std::invalid_argument("sample_batch: empty domain");
    return storage;
}

Batch gather(const Dataset& d, Domain domain, std::vector<std::size_t> indices) {
    const Matrix& src_x = domain == Domain::Labeled ? d.labeled_x : d.unlabeled_x;
    Batch b{Matrix(indices.size(), src_x.cols()), std::nullopt, {}};
    std::optional<Matrix> y;
    if (domain == Domain::Labeled) y.emplace(indices.size(), d.labeled_y.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const std::size_t i = indices[r];
        for (std::size_t c = 0; c < src_x.cols(); ++c) b.x(r, c) = src_x(i, c);
        if (y)
            for (std::size_t c = 0; c < y->cols(); ++c) (*y)(r, c) = d.labeled_y(i, c);
    }
    b.y = std::move(y);
    b.indices = std::move(indices);
    return b;
}

} // namespace

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
    case ScenarioKind::SSL: return "SSL";
    case ScenarioKind::UDA: return "UDA";
    case ScenarioKind::OpenSet: return "OpenSet";
    }
    return "?";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) noexcept {
    if (name == "SSL") return ScenarioKind::SSL;
    if (name == "UDA") return ScenarioKind::UDA;
    if (name == "OpenSet") return ScenarioKind::OpenSet;
    return std::nullopt;
}

std::array<double, 2> DomainShift::apply(std::array<double, 2> p) const noexcept {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p[0] - s * p[1] + dx, s * p[0] + c * p[1] + dy};
}

std::array<double, 2> class_mean(std::size_t k, std::size_t n_classes) noexcept {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n_classes);
    return {kClassCircleRadius * std::cos(theta), kClassCircleRadius * std::sin(theta)};
}

void ScenarioSpec::validate() const {
    require(n_classes >= 1, "n_classes must be positive");
    require(n_labeled >= 1 && n_unlabeled >= 1, "both domains need at least one sample");
    require(class_priors.size() == n_classes,
            "class_priors has " + std::to_string(class_priors.size()) + " entries, expected " +
                std::to_string(n_classes));
    require(std::all_of(class_priors.begin(), class_priors.end(),
                        [](double p) { return std::isfinite(p) && p >= 0.0; }),
            "class priors must be non-negative");
    const double total = std::accumulate(class_priors.begin(), class_priors.end(), 0.0);
    require(std::abs(total - 1.0) <= 1e-12, "class priors must sum to 1");
    require(n_known >= 1 && n_known <= n_classes, "n_known must lie in [1, n_classes]");
    if (kind == ScenarioKind::OpenSet) {
        require(n_known < n_classes, "OpenSet requires n_known < n_classes");
    } else {
        require(n_known == n_classes, "only OpenSet may have unknown classes");
    }
    if (kind == ScenarioKind::SSL) require(shift.is_zero(), "SSL scenarios carry no domain shift");
    for (std::size_t k = 0; k < n_known; ++k) {
        require(class_priors[k] > 0.0,
                "known class " + std::to_string(k) + " has zero prior but labeled samples are requested");
    }
    require(std::isfinite(cluster_std) && cluster_std > 0.0, "cluster_std must be positive");
    require(std::isfinite(shift.dx) && std::isfinite(shift.dy) && std::isfinite(shift.angle),
            "shift must be finite");
}

ScenarioSpec ScenarioSpec::defaults(ScenarioKind kind) {
    ScenarioSpec s;
    s.kind = kind;
    s.n_labeled = 200;
    s.n_unlabeled = 2000;
    s.cluster_std = kDefaultClusterStd;
    switch (kind) {
    case ScenarioKind::SSL:
        s.n_classes = s.n_known = 4;
        s.class_priors = {0.5, 0.3, 0.1, 0.1};
        break;
    case ScenarioKind::UDA:
        s.n_classes = s.n_known = 4;
        s.class_priors = {0.5, 0.3, 0.1, 0.1};
        s.shift = {1.0, 0.5, 15.0 * std::numbers::pi / 180.0};
        break;
    case ScenarioKind::OpenSet:
        s.n_classes = 5;
        s.n_known = 4;
        s.class_priors = {0.35, 0.25, 0.1, 0.1, 0.2};
        s.shift = {1.0, 0.5, 15.0 * std::numbers::pi / 180.0};
        break;
    }
    return s;
}

std::vector<std::size_t> Dataset::unlabeled_pool() const {
    std::vector<std::size_t> pool;
    pool.reserve(n_unlabeled());
    for (std::size_t i = 0; i < n_unlabeled(); ++i)
        if (!holdout[i]) pool.push_back(i);
    return pool;
}

Matrix Dataset::pool_x() const {
    const auto pool = unlabeled_pool();
    if (pool.empty()) throw std::invalid_argument("Dataset: unlabeled pool is empty");
    Matrix x(pool.size(), unlabeled_x.cols());
    for (std::size_t r = 0; r < pool.size(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = unlabeled_x(pool[r], c);
    return x;
}

std::vector<std::size_t> Dataset::pool_labels() const {
    std::vector<std::size_t> out;
    for (std::size_t i : unlabeled_pool()) out.push_back(unlabeled_labels[i]);
    return out;
}

std::vector<std::size_t> Dataset::known_classes() const {
    std::vector<std::size_t> out(meta.n_known);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

std::vector<std::size_t> Dataset::unknown_classes() const {
    std::vector<std::size_t> out;
    for (std::size_t k = meta.n_known; k < meta.n_classes; ++k) out.push_back(k);
    return out;
}

std::vector<std::size_t> Dataset::minority_classes() const {
    std::vector<std::size_t> out;
    const double uniform = 1.0 / static_cast<double>(meta.n_classes);
    for (std::size_t k = 0; k < meta.class_priors.size(); ++k)
        if (meta.class_priors[k] < uniform) out.push_back(k);
    return out;
}

Dataset generate(const ScenarioSpec& spec) {
    spec.validate();
    Xoshiro256pp rng(spec.seed);
    const std::size_t C = spec.n_classes;

    std::vector<double> known_weights(spec.class_priors.begin(),
                                      spec.class_priors.begin() + static_cast<long>(spec.n_known));
    const double known_total = std::accumulate(known_weights.begin(), known_weights.end(), 0.0);

    Dataset d;
    d.meta = {spec.kind, C, spec.n_known, spec.class_priors};
    d.labeled_x = Matrix(spec.n_labeled, 2);
    d.labeled_y = Matrix(spec.n_labeled, C);
    d.unlabeled_x = Matrix(spec.n_unlabeled, 2);
    d.unlabeled_y = Matrix(spec.n_unlabeled, C);
    d.labeled_labels.resize(spec.n_labeled);
    d.unlabeled_labels.resize(spec.n_unlabeled);
    d.holdout.assign(spec.n_unlabeled, false);

    for (std::size_t i = 0; i < spec.n_labeled; ++i) {
        const std::size_t k = draw_class(known_weights, known_total, rng);
        d.labeled_labels[i] = k;
        fill_sample(d.labeled_x, d.labeled_y, i, k, class_mean(k, C), spec.cluster_std, rng);
    }
    for (std::size_t i = 0; i < spec.n_unlabeled; ++i) {
        const std::size_t k = draw_class(spec.class_priors, 1.0, rng);
        d.unlabeled_labels[i] = k;
        fill_sample(d.unlabeled_x, d.unlabeled_y, i, k, spec.shift.apply(class_mean(k, C)),
                    spec.cluster_std, rng);
    }
    return d;
}

PrototypeInit prototype_init(const Dataset& d, std::size_t k) {
    if (k == 0) throw std::invalid_argument("prototype_init: k must be positive");
    const auto unknown = d.unknown_classes();
    if (unknown.empty()) throw std::invalid_argument("prototype_init: dataset has no unknown classes");
    PrototypeInit out{d, unknown, {}};
    for (std::size_t cls : unknown) {
        std::array<double, 2> sum{0.0, 0.0};
        std::size_t taken = 0;
        for (std::size_t i = 0; i < d.n_unlabeled() && taken < k; ++i) {
            if (d.unlabeled_labels[i] != cls || out.dataset.holdout[i]) continue;
            sum[0] += d.unlabeled_x(i, 0);
            sum[1] += d.unlabeled_x(i, 1);
            out.dataset.holdout[i] = true;
            ++taken;
        }
        if (taken < k) {
            throw std::invalid_argument("prototype_init: class " + std::to_string(cls) + " has " +
                                        std::to_string(taken) + " examples, need " +
                                        std::to_string(k));
        }
        const double n = static_cast<double>(k);
        out.means.push_back({sum[0] / n, sum[1] / n});
    }
    return out;
}

Batch sample_batch(const Dataset& d, Domain domain, std::size_t b, Xoshiro256pp& rng) {
    if (b == 0) throw std::invalid_argument("sample_batch: batch size must be positive");
    std::vector<std::size_t> storage;
    const auto& idx = domain_indices(d, domain, storage);
    std::vector<std::size_t> picked(b);
    for (auto& p : picked) p = idx[rng.below(idx.size())];
    return gather(d, domain, std::move(picked));
}

Batch sample_batch_without_replacement(const Dataset& d, Domain domain, std::size_t b,
                                       Xoshiro256pp& rng) {
    if (b == 0) throw std::invalid_argument("sample_batch: batch size must be positive");
    std::vector<std::size_t> idx;
    domain_indices(d, domain, idx);
    if (b > idx.size()) throw std::invalid_argument("sample_batch: batch larger than domain");
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t j = i + rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(b);
    return gather(d, domain, std::move(idx));
}

void write_dataset_csv(std::ostream& os, const Dataset& d) {
    std::ostringstream buf;
    buf.imbue(std::locale::classic());
    buf << std::setprecision(17);
    buf << "domain,split_flag,x1,x2,label\n";
    for (std::size_t i = 0; i < d.n_labeled(); ++i) {
        buf << "labeled,0," << d.labeled_x(i, 0) << ',' << d.labeled_x(i, 1) << ','
            << d.labeled_labels[i] << '\n';
    }
    for (std::size_t i = 0; i < d.n_unlabeled(); ++i) {
        buf << "unlabeled," << (d.holdout[i] ? 1 : 0) << ',' << d.unlabeled_x(i, 0) << ','
            << d.unlabeled_x(i, 1) << ',' << d.unlabeled_labels[i] << '\n';
    }
    os << buf.str();
}

Dataset read_dataset_csv(std::istream& is, const DatasetMeta& meta) {
    const auto fail = [](std::size_t line, const std::string& why) {
        throw std::invalid_argument("dataset csv line " + std::to_string(line) + ": " + why);
    };
    if (meta.n_classes == 0) throw std::invalid_argument("read_dataset_csv: n_classes must be positive");
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line) || line != "domain,split_flag,x1,x2,label") fail(1, "bad header");

    struct Row { double x1, x2; std::size_t label; bool flag; };
    std::vector<Row> labeled;
    std::vector<Row> unlabeled;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        ss.imbue(std::locale::classic());
        std::string domain, flag, x1, x2, label;
        if (!std::getline(ss, domain, ',') || !std::getline(ss, flag, ',') ||
            !std::getline(ss, x1, ',') || !std::getline(ss, x2, ',') || !std::getline(ss, label)) {
            fail(lineno, "expected 5 fields");
        }
        Row r{};
        try {
            std::size_t used = 0;
            r.x1 = std::stod(x1, &used);
            if (used != x1.size()) fail(lineno, "bad x1");
            r.x2 = std::stod(x2, &used);
            if (used != x2.size()) fail(lineno, "bad x2");
            r.label = std::stoul(label, &used);
            if (used != label.size()) fail(lineno, "bad label");
        } catch (const std::logic_error&) {
            fail(lineno, "unparsable number");
        }
        if (flag != "0" && flag != "1") fail(lineno, "split_flag must be 0 or 1");
        r.flag = flag == "1";
        if (r.label >= meta.n_classes) fail(lineno, "label out of range");
        if (domain == "labeled") {
            if (r.flag) fail(lineno, "labeled rows cannot be holdout");
            if (r.label >= meta.n_known) fail(lineno, "labeled row uses an unknown class");
            labeled.push_back(r);
        } else if (domain == "unlabeled") {
            unlabeled.push_back(r);
        } else {
            fail(lineno, "unknown domain '" + domain + "'");
        }
    }
    if (labeled.empty() || unlabeled.empty()) fail(lineno, "both domains must be non-empty");

    Dataset d;
    d.meta = meta;
    d.labeled_x = Matrix(labeled.size(), 2);
    d.labeled_y = Matrix(labeled.size(), meta.n_classes);
    d.unlabeled_x = Matrix(unlabeled.size(), 2);
    d.unlabeled_y = Matrix(unlabeled.size(), meta.n_classes);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        d.labeled_x(i, 0) = labeled[i].x1;
        d.labeled_x(i, 1) = labeled[i].x2;
        d.labeled_y(i, labeled[i].label) = 1.0;
        d.labeled_labels.push_back(labeled[i].label);
    }
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
        d.unlabeled_x(i, 0) = unlabeled[i].x1;
        d.unlabeled_x(i, 1) = unlabeled[i].x2;
        d.unlabeled_y(i, unlabeled[i].label) = 1.0;
        d.unlabeled_labels.push_back(unlabeled[i].label);
        d.holdout.push_back(unlabeled[i].flag);
    }
    return d;
}

} // namespace bnm
