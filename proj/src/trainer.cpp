#include "bnm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

namespace bnm {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("TrainConfig: " + what);
}

std::size_t count_distinct(std::span<const std::size_t> labels, std::size_t n_classes) {
    std::vector<bool> seen(n_classes, false);
    std::size_t n = 0;
    for (std::size_t l : labels) {
        if (!seen[l]) {
            seen[l] = true;
            ++n;
        }
    }
    return n;
}

std::string dump_state(std::size_t step, double loss_cls, double loss_obj, const Classifier& c) {
    std::ostringstream os;
    os.precision(17);
    os << "training diverged at step " << step << ": loss_cls=" << loss_cls
       << " loss_obj=" << loss_obj << "\n  output.weight=" << c.params().output.weight
       << "\n  output.bias=[";
    for (std::size_t i = 0; i < c.params().output.bias.size(); ++i)
        os << (i ? ", " : "") << c.params().output.bias[i];
    os << ']';
    if (const auto& h = c.params().hidden) os << "\n  hidden.weight=" << h->weight;
    return os.str();
}

} // namespace

void TrainConfig::validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be non-negative");
    require(b_labeled >= 1 && b_unlabeled >= 1, "batch sizes must be positive");
    require(std::isfinite(lr) && lr > 0.0, "lr must be positive");
    require(steps >= 1, "steps must be positive");
    require(eval_every >= 1, "eval_every must be positive");
    require(rank_tol > 0.0 && rank_tol < 1.0, "rank_tol must lie in (0, 1)");
    require(eval_batches >= 1, "eval_batches must be positive");
}

double category_ratio(const Classifier& c, const Matrix& x, std::span<const std::size_t> class_set) {
    if (class_set.empty()) throw std::invalid_argument("category_ratio: class_set must be non-empty");
    std::vector<bool> member(c.n_classes(), false);
    for (std::size_t k : class_set) {
        if (k >= c.n_classes()) throw std::invalid_argument("category_ratio: class index out of range");
        member[k] = true;
    }
    const auto pred = argmax_rows(forward(c, x).logits);
    const auto hits = std::count_if(pred.begin(), pred.end(), [&](std::size_t p) { return member[p]; });
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double diversity_ratio(const Classifier& c, const Dataset& d, std::size_t b, std::size_t n_batches,
                       Xoshiro256pp& rng) {
    if (b == 0 || n_batches == 0) throw std::invalid_argument("diversity_ratio: empty sampling");
    const std::size_t C = d.meta.n_classes;
    std::size_t predicted = 0;
    std::size_t truth = 0;
    std::vector<std::size_t> labels(b);
    for (std::size_t n = 0; n < n_batches; ++n) {
        const Batch batch = sample_batch(d, Domain::Unlabeled, b, rng);
        predicted += count_distinct(argmax_rows(forward(c, batch.x).logits), C);
        for (std::size_t i = 0; i < b; ++i) labels[i] = d.unlabeled_labels[batch.indices[i]];
        truth += count_distinct(labels, C);
    }
    return static_cast<double>(predicted) / static_cast<double>(truth);
}

RunRecord evaluate(const Classifier& c, const Dataset& d, const TrainConfig& cfg, std::size_t step) {
    const std::size_t C = d.meta.n_classes;
    const Matrix x = d.pool_x();
    const auto truth = d.pool_labels();
    const auto pred = argmax_rows(forward(c, x).logits);

    RunRecord r;
    r.step = step;
    std::vector<std::size_t> support(C, 0);
    std::vector<std::size_t> correct(C, 0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++support[truth[i]];
        if (pred[i] == truth[i]) {
            ++correct[truth[i]];
            ++hits;
        }
    }
    r.acc_unlabeled = static_cast<double>(hits) / static_cast<double>(truth.size());
    r.per_class_recall.resize(C);
    for (std::size_t k = 0; k < C; ++k) {
        r.per_class_recall[k] =
            support[k] ? static_cast<double>(correct[k]) / static_cast<double>(support[k]) : 0.0;
    }

    const auto in_set = [&](std::span<const std::size_t> set) {
        if (set.empty()) return 0.0;
        std::size_t n = 0;
        for (std::size_t p : pred) n += std::find(set.begin(), set.end(), p) != set.end();
        return static_cast<double>(n) / static_cast<double>(pred.size());
    };
    const auto minority = d.minority_classes();
    r.minority_ratio = in_set(minority);
    r.unknown_ratio = in_set(d.unknown_classes());
    if (!minority.empty()) {
        double acc = 0.0;
        for (std::size_t k : minority) acc += r.per_class_recall[k];
        r.minority_recall = acc / static_cast<double>(minority.size());
    }

    Xoshiro256pp eval_rng(derive_seed(cfg.seed, Stream::Evaluation));
    r.diversity_ratio = diversity_ratio(c, d, cfg.b_unlabeled, cfg.eval_batches, eval_rng);
    return r;
}

TrainResult train(const Classifier& c0, const Dataset& d, const TrainConfig& cfg) {
    cfg.validate();
    if (c0.in_dim() != d.labeled_x.cols() || c0.n_classes() != d.meta.n_classes) {
        throw std::invalid_argument("train: classifier shape does not match the dataset");
    }
    Xoshiro256pp labeled_rng(derive_seed(cfg.seed, Stream::LabeledBatches));
    Xoshiro256pp unlabeled_rng(derive_seed(cfg.seed, Stream::UnlabeledBatches));
    const bool use_objective = cfg.objective != ObjectiveKind::None && cfg.lambda != 0.0;

    TrainResult out{c0, {}};
    out.records.reserve(cfg.steps / cfg.eval_every);
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const Batch lb = sample_batch(d, Domain::Labeled, cfg.b_labeled, labeled_rng);
        const Batch ub = sample_batch(d, Domain::Unlabeled, cfg.b_unlabeled, unlabeled_rng);
        const ForwardTrace tl = forward(out.model, lb.x);
        const ForwardTrace tu = forward(out.model, ub.x);

        const double loss_cls = cross_entropy(tl.probs, *lb.y);
        const ObjectiveEval obj = evaluate(cfg.objective, tu.probs);
        const double loss_total = loss_cls + cfg.lambda * obj.value;
        if (!std::isfinite(loss_total) || !obj.grad.all_finite()) {
            throw TrainingDiverged(dump_state(step, loss_cls, obj.value, out.model));
        }

        Gradients g = backward_ce(out.model, tl, *lb.y);
        if (use_objective) {
            Gradients go = backward_objective(out.model, tu, obj.grad);
            go *= cfg.lambda;
            g += go;
        }
        out.model = sgd_step(out.model, g, cfg.lr);

        if (step % cfg.eval_every == 0) {
            RunRecord r = evaluate(out.model, d, cfg, step);
            r.loss_cls = loss_cls;
            r.loss_obj = obj.value;
            r.loss_total = loss_total;
            r.batch_rank = numeric_rank(thin_svd(tu.probs.matrix()), cfg.rank_tol);
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_run_csv(std::ostream& os, std::span<const RunRecord> records, std::size_t n_classes) {
    std::string out = "step,loss_cls,loss_obj,acc";
    for (std::size_t k = 0; k < n_classes; ++k) out += ",recall_" + std::to_string(k);
    out += ",div_ratio,minority_ratio,unknown_ratio\n";
    for (const RunRecord& r : records) {
        out += std::to_string(r.step);
        out += ',' + format_real(r.loss_cls) + ',' + format_real(r.loss_obj) + ',' +
               format_real(r.acc_unlabeled);
        for (std::size_t k = 0; k < n_classes; ++k) out += ',' + format_real(r.per_class_recall.at(k));
        out += ',' + format_real(r.diversity_ratio) + ',' + format_real(r.minority_ratio) + ',' +
               format_real(r.unknown_ratio) + '\n';
    }
    os << out;
}

} // namespace bnm
