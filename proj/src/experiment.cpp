#include "bnm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace bnm {

Classifier nearest_mean_heads(const std::vector<std::array<double, 2>>& means, double scale) {
    if (means.empty()) throw std::invalid_argument("nearest_mean_heads: no class means");
    Dense out{Matrix(2, means.size()), std::vector<double>(means.size())};
    for (std::size_t k = 0; k < means.size(); ++k) {
        out.weight(0, k) = scale * means[k][0];
        out.weight(1, k) = scale * means[k][1];
        out.bias[k] = -0.5 * scale * (means[k][0] * means[k][0] + means[k][1] * means[k][1]);
    }
    return Classifier(ParameterSet{std::nullopt, std::move(out)});
}

PreparedRun prepare(const ExperimentSetup& setup, std::uint64_t seed) {
    ScenarioSpec spec = setup.scenario;
    spec.seed = derive_seed(seed, Stream::Data);
    Dataset data = generate(spec);
    const std::size_t C = spec.n_classes;

    if (spec.kind != ScenarioKind::OpenSet || setup.model.prototypes == 0) {
        Classifier c = make_classifier(2, setup.model.hidden, C, derive_seed(seed, Stream::Init));
        return {std::move(data), std::move(c)};
    }
    if (setup.model.hidden != 0) {
        throw std::invalid_argument("prototype head initialization needs a linear classifier (hidden = 0)");
    }
    PrototypeInit protos = prototype_init(data, setup.model.prototypes);

    std::vector<std::array<double, 2>> means(C, {0.0, 0.0});
    std::vector<std::size_t> counts(C, 0);
    for (std::size_t i = 0; i < protos.dataset.n_labeled(); ++i) {
        const std::size_t k = protos.dataset.labeled_labels[i];
        means[k][0] += protos.dataset.labeled_x(i, 0);
        means[k][1] += protos.dataset.labeled_x(i, 1);
        ++counts[k];
    }
    for (std::size_t k = 0; k < spec.n_known; ++k) {
        if (counts[k] == 0) {
            throw std::invalid_argument("prepare: known class " + std::to_string(k) +
                                        " has no labeled examples");
        }
        means[k][0] /= static_cast<double>(counts[k]);
        means[k][1] /= static_cast<double>(counts[k]);
    }
    for (std::size_t u = 0; u < protos.classes.size(); ++u) means[protos.classes[u]] = protos.means[u];
    Classifier c = nearest_mean_heads(means, setup.model.head_scale);
    return {std::move(protos.dataset), std::move(c)};
}

const MetricSummary& MethodSummary::metric(const std::string& name) const {
    for (const auto& m : metrics)
        if (m.name == name) return m;
    throw std::out_of_range("no metric named '" + name + "'");
}

std::vector<std::pair<std::string, double>> metric_columns(const RunRecord& r) {
    std::vector<std::pair<std::string, double>> out{
        {"acc", r.acc_unlabeled},
        {"minority_recall", r.minority_recall},
        {"div_ratio", r.diversity_ratio},
        {"minority_ratio", r.minority_ratio},
        {"unknown_ratio", r.unknown_ratio},
    };
    for (std::size_t k = 0; k < r.per_class_recall.size(); ++k)
        out.emplace_back("recall_" + std::to_string(k), r.per_class_recall[k]);
    out.emplace_back("loss_cls", r.loss_cls);
    out.emplace_back("loss_obj", r.loss_obj);
    return out;
}

CompareTable compare(const std::vector<MethodSpec>& methods, const ExperimentSetup& setup,
                     std::uint64_t master_seed, std::size_t n_seeds) {
    if (methods.empty()) throw std::invalid_argument("compare: no methods");
    if (n_seeds == 0) throw std::invalid_argument("compare: n_seeds must be positive");

    std::vector<PreparedRun> runs;
    runs.reserve(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) runs.push_back(prepare(setup, master_seed + s));

    CompareTable table;
    for (const MethodSpec& m : methods) {
        MethodSummary row{m.label, m.config.objective, m.config.lambda, 0, 0, {}};
        std::vector<std::vector<std::pair<std::string, double>>> finals;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            CellResult cell;
            cell.method = m.label;
            cell.seed = master_seed + s;
            TrainConfig cfg = m.config;
            cfg.seed = cell.seed;
            try {
                cell.initial = evaluate(runs[s].initial, runs[s].data, cfg, 0);
                cell.records = train(runs[s].initial, runs[s].data, cfg).records;
                if (cell.records.empty()) throw std::runtime_error("no evaluation records");
                cell.ok = true;
                finals.push_back(metric_columns(cell.records.back()));
                ++row.n_ok;
            } catch (const std::exception& e) {
                cell.error = e.what();
                cell.records.clear();
                ++row.n_failed;
            }
            table.cells.push_back(std::move(cell));
        }
        if (!finals.empty()) {
            for (std::size_t j = 0; j < finals.front().size(); ++j) {
                MetricSummary ms{finals.front()[j].first, 0.0, 0.0};
                for (const auto& f : finals) ms.mean += f[j].second;
                ms.mean /= static_cast<double>(finals.size());
                if (finals.size() > 1) {
                    double ss = 0.0;
                    for (const auto& f : finals) ss += (f[j].second - ms.mean) * (f[j].second - ms.mean);
                    ms.stddev = std::sqrt(ss / static_cast<double>(finals.size() - 1));
                }
                row.metrics.push_back(std::move(ms));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_compare_csv(std::ostream& os, const CompareTable& table) {
    std::vector<std::string> names;
    for (const auto& row : table.rows) {
        if (!row.metrics.empty()) {
            for (const auto& m : row.metrics) names.push_back(m.name);
            break;
        }
    }
    std::string out = "method,objective,lambda,n_ok,n_failed";
    for (const auto& n : names) out += ',' + n + "_mean," + n + "_std";
    out += '\n';
    for (const auto& row : table.rows) {
        out += row.label + ',' + std::string(to_string(row.objective)) + ',' +
               format_real(row.lambda) + ',' + std::to_string(row.n_ok) + ',' +
               std::to_string(row.n_failed);
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (row.metrics.empty()) {
                out += ",nan,nan";
            } else {
                out += ',' + format_real(row.metrics[j].mean) + ',' + format_real(row.metrics[j].stddev);
            }
        }
        out += '\n';
    }
    os << out;
}

} // namespace bnm
