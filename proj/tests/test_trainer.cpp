#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "bnm/experiment.hpp"
#include "bnm/trainer.hpp"

using namespace bnm;

namespace {

TrainConfig short_config(ObjectiveKind kind, std::size_t steps = 200) {
    TrainConfig cfg;
    cfg.objective = kind;
    cfg.steps = steps;
    cfg.eval_every = 50;
    return cfg;
}

PreparedRun prepared(ScenarioKind kind, std::uint64_t seed = 1) {
    return prepare(ExperimentSetup{ScenarioSpec::defaults(kind), ModelSpec{}}, seed);
}

// Dataset whose samples sit almost exactly on their class means.
Dataset tight_ssl() {
    auto spec = ScenarioSpec::defaults(ScenarioKind::SSL);
    spec.cluster_std = 1e-3;
    return generate(spec);
}

std::vector<std::array<double, 2>> circle_means(std::size_t c) {
    std::vector<std::array<double, 2>> m;
    for (std::size_t k = 0; k < c; ++k) m.push_back(class_mean(k, c));
    return m;
}

} // namespace

TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.rank_tol = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("train rejects a mismatched classifier") {
    const auto run = prepared(ScenarioKind::SSL);
    CHECK_THROWS_AS(train(make_classifier(2, 0, 3, 1), run.data, short_config(ObjectiveKind::None)),
                    std::invalid_argument);
}

TEST_CASE("lambda = 0 BNM equals the supervised-only run bit for bit") {
    const auto run = prepared(ScenarioKind::UDA);
    TrainConfig none = short_config(ObjectiveKind::None, 500);
    TrainConfig zero = short_config(ObjectiveKind::BNM, 500);
    zero.lambda = 0.0;
    const auto a = train(run.initial, run.data, none);
    const auto b = train(run.initial, run.data, zero);
    CHECK(a.model == b.model);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].loss_cls == b.records[i].loss_cls);
        CHECK(a.records[i].acc_unlabeled == b.records[i].acc_unlabeled);
    }
}

TEST_CASE("objective choice does not change the batch sequence") {
    // The classification loss of the first step depends only on the initial
    // model and the first labeled batch; a shared batch sequence makes it equal
    // across objectives.
    const auto run = prepared(ScenarioKind::UDA);
    std::vector<double> first;
    for (auto kind : {ObjectiveKind::None, ObjectiveKind::EntMin, ObjectiveKind::BFM, ObjectiveKind::BNM,
                      ObjectiveKind::Balance}) {
        TrainConfig cfg = short_config(kind, 1);
        cfg.eval_every = 1;
        first.push_back(train(run.initial, run.data, cfg).records.at(0).loss_cls);
    }
    for (double v : first) CHECK(v == first.front());
}

TEST_CASE("replay gives identical records") {
    const auto run = prepared(ScenarioKind::OpenSet);
    const auto cfg = short_config(ObjectiveKind::BNM, 300);
    const auto a = train(run.initial, run.data, cfg);
    const auto b = train(run.initial, run.data, cfg);
    CHECK(a.records == b.records);
    CHECK(a.model == b.model);
    CHECK(a.records.size() == 6);
    CHECK(a.records.back().step == 300);
}

TEST_CASE("supervised-only SSL beats chance") {
    const auto run = prepared(ScenarioKind::SSL);
    const auto r = train(run.initial, run.data, short_config(ObjectiveKind::None, 500));
    CHECK(r.records.back().acc_unlabeled > 0.25);
}

TEST_CASE("recorded total loss is the optimized scalar") {
    const auto run = prepared(ScenarioKind::UDA);
    TrainConfig cfg = short_config(ObjectiveKind::BNM, 4);
    cfg.lambda = 1.7;
    cfg.eval_every = 1;
    const auto records = train(run.initial, run.data, cfg).records;
    Xoshiro256pp lrng(derive_seed(cfg.seed, Stream::LabeledBatches));
    Xoshiro256pp urng(derive_seed(cfg.seed, Stream::UnlabeledBatches));
    Classifier model = run.initial;
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const Batch lb = sample_batch(run.data, Domain::Labeled, cfg.b_labeled, lrng);
        const Batch ub = sample_batch(run.data, Domain::Unlabeled, cfg.b_unlabeled, urng);
        const double cls = cross_entropy(forward(model, lb.x).probs, *lb.y);
        const double obj = -nuclear_norm(forward(model, ub.x).probs.matrix()) / cfg.b_unlabeled;
        const RunRecord& r = records[step - 1];
        CHECK(std::abs(r.loss_cls - cls) <= 1e-12);
        CHECK(std::abs(r.loss_obj - obj) <= 1e-12);
        CHECK(std::abs(r.loss_cls + cfg.lambda * r.loss_obj - r.loss_total) <= 1e-12);
        CHECK(std::abs(cls + cfg.lambda * obj - r.loss_total) <= 1e-12);
        TrainConfig prefix = cfg;
        prefix.steps = step;
        model = train(run.initial, run.data, prefix).model;
    }
}

TEST_CASE("labeled-set loss is non-increasing over 50-step window averages") {
    for (auto kind : {ScenarioKind::SSL, ScenarioKind::UDA}) {
        for (std::uint64_t seed = 1; seed <= 2; ++seed) {
            const auto run = prepared(kind, seed);
            TrainConfig cfg = short_config(ObjectiveKind::None, 2000);
            cfg.seed = seed;
            // Plain supervised SGD replayed step by step so the whole labeled
            // set can be scored after every update.
            Xoshiro256pp lrng(derive_seed(seed, Stream::LabeledBatches));
            Classifier m = run.initial;
            std::vector<double> full;
            for (std::size_t step = 0; step < cfg.steps; ++step) {
                const Batch b = sample_batch(run.data, Domain::Labeled, cfg.b_labeled, lrng);
                m = sgd_step(m, backward_ce(m, forward(m, b.x), *b.y), cfg.lr);
                full.push_back(cross_entropy(forward(m, run.data.labeled_x).probs, run.data.labeled_y));
            }
            REQUIRE(m == train(run.initial, run.data, cfg).model);
            double prev = INFINITY;
            for (std::size_t w = 0; w + 50 <= full.size(); w += 50) {
                double mean = 0;
                for (std::size_t i = w; i < w + 50; ++i) mean += full[i] / 50.0;
                CHECK(mean <= prev);
                prev = mean;
            }
        }
    }
}

TEST_CASE("holdout rows never reach training or evaluation") {
    auto run = prepared(ScenarioKind::OpenSet);
    // Poison the reserved rows; any use would surface as NaN.
    Dataset poisoned = run.data;
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < poisoned.n_unlabeled(); ++i) {
        if (!poisoned.holdout[i]) continue;
        poisoned.unlabeled_x(i, 0) = NAN;
        ++flagged;
    }
    CHECK(flagged == 5);
    const auto cfg = short_config(ObjectiveKind::BNM, 2000);
    const auto clean = train(run.initial, run.data, cfg);
    const auto dirty = train(run.initial, poisoned, cfg);
    CHECK(clean.model == dirty.model);
    CHECK(clean.records == dirty.records);

    // Exhaustive index audit of the unlabeled stream.
    Xoshiro256pp urng(derive_seed(cfg.seed, Stream::UnlabeledBatches));
    for (std::size_t step = 0; step < cfg.steps; ++step)
        for (auto i : sample_batch(run.data, Domain::Unlabeled, cfg.b_unlabeled, urng).indices)
            REQUIRE_FALSE(run.data.holdout[i]);
}

TEST_CASE("diversity ratio") {
    const Dataset d = tight_ssl();
    SUBCASE("perfect classifier") {
        const Classifier perfect = nearest_mean_heads(circle_means(4), 1.0);
        Xoshiro256pp rng(1);
        CHECK(diversity_ratio(perfect, d, 36, 20, rng) == 1.0);
    }
    SUBCASE("constant classifier") {
        ParameterSet p{std::nullopt, Dense{Matrix(2, 4), {0.0, 0.0, 5.0, 0.0}}};
        const Classifier constant{p};
        Xoshiro256pp a(2), b(2);
        const double ratio = diversity_ratio(constant, d, 36, 20, a);
        double truth = 0;
        for (int n = 0; n < 20; ++n) {
            std::set<std::size_t> s;
            for (auto i : sample_batch(d, Domain::Unlabeled, 36, b).indices) s.insert(d.unlabeled_labels[i]);
            truth += s.size() / 20.0;
        }
        CHECK(ratio == doctest::Approx(1.0 / truth).epsilon(1e-15));
    }
    SUBCASE("random classifier against a recount") {
        const Dataset du = generate(ScenarioSpec::defaults(ScenarioKind::UDA));
        const Classifier c = make_classifier(2, 0, 4, 99);
        Xoshiro256pp a(3), b(3);
        const double ratio = diversity_ratio(c, du, 36, 25, a);
        std::size_t pred = 0, truth = 0;
        for (int n = 0; n < 25; ++n) {
            const Batch batch = sample_batch(du, Domain::Unlabeled, 36, b);
            std::set<std::size_t> ps, ts;
            for (std::size_t r = 0; r < 36; ++r) {
                const auto& w = c.params().output;
                std::size_t best = 0;
                double best_v = -INFINITY;
                for (std::size_t k = 0; k < 4; ++k) {
                    const double z = batch.x(r, 0) * w.weight(0, k) + batch.x(r, 1) * w.weight(1, k) + w.bias[k];
                    if (z > best_v) {
                        best_v = z;
                        best = k;
                    }
                }
                ps.insert(best);
                ts.insert(du.unlabeled_labels[batch.indices[r]]);
            }
            pred += ps.size();
            truth += ts.size();
        }
        CHECK(ratio == static_cast<double>(pred) / static_cast<double>(truth));
    }
}

TEST_CASE("category ratio") {
    const Classifier c = nearest_mean_heads(circle_means(3), 1.0);
    const Matrix x = Matrix::from_rows({{3.0, 0.0}, {-1.5, 2.6}, {-1.5, -2.6}});
    const std::vector<std::size_t> all{0, 1, 2}, one{1}, none{};
    CHECK(category_ratio(c, x, all) == 1.0);
    CHECK(category_ratio(c, x, one) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(category_ratio(c, x, none), std::invalid_argument);
}

TEST_CASE("evaluation metrics match a naive recount") {
    auto run = prepared(ScenarioKind::OpenSet);
    const TrainConfig cfg = short_config(ObjectiveKind::BNM, 100);
    const Classifier c = train(run.initial, run.data, cfg).model;
    const RunRecord r = evaluate(c, run.data, cfg, 100);
    std::vector<double> support(5), correct(5);
    double hits = 0, unknown = 0, minority = 0, n = 0;
    for (std::size_t i = 0; i < run.data.n_unlabeled(); ++i) {
        if (run.data.holdout[i]) continue;
        const Matrix xi = Matrix::from_rows({{run.data.unlabeled_x(i, 0), run.data.unlabeled_x(i, 1)}});
        const std::size_t p = argmax_rows(forward(c, xi).logits)[0];
        const std::size_t t = run.data.unlabeled_labels[i];
        n += 1;
        support[t] += 1;
        if (p == t) {
            hits += 1;
            correct[t] += 1;
        }
        unknown += p == 4;
        minority += p == 2 || p == 3;
    }
    CHECK(r.acc_unlabeled == doctest::Approx(hits / n).epsilon(1e-15));
    CHECK(r.unknown_ratio == doctest::Approx(unknown / n).epsilon(1e-15));
    CHECK(r.minority_ratio == doctest::Approx(minority / n).epsilon(1e-15));
    for (std::size_t k = 0; k < 5; ++k) CHECK(r.per_class_recall[k] == doctest::Approx(correct[k] / support[k]));
    CHECK(r.minority_recall == doctest::Approx((correct[2] / support[2] + correct[3] / support[3]) / 2));
}

TEST_CASE("run csv") {
    const auto run = prepared(ScenarioKind::SSL);
    const auto r = train(run.initial, run.data, short_config(ObjectiveKind::EntMin, 150));
    std::ostringstream os;
    write_run_csv(os, r.records, 4);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "step,loss_cls,loss_obj,acc,recall_0,recall_1,recall_2,recall_3,div_ratio,minority_ratio,unknown_ratio");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 10);
    }
    CHECK(rows == 3);
    CHECK(format_real(1.0 / 3.0) == "0.333333333");
    CHECK(format_real(2.0) == "2");
}

TEST_CASE("open-set initialization") {
    const auto run = prepared(ScenarioKind::OpenSet);
    CHECK(std::count(run.data.holdout.begin(), run.data.holdout.end(), true) == 5);
    CHECK_FALSE(run.initial.hidden_width().has_value());
    const RunRecord r0 = evaluate(run.initial, run.data, short_config(ObjectiveKind::None), 0);
    CHECK(r0.unknown_ratio > 0.05);
    ExperimentSetup deep{ScenarioSpec::defaults(ScenarioKind::OpenSet), ModelSpec{8}};
    CHECK_THROWS(prepare(deep, 1));
}

TEST_CASE("nearest-mean heads") {
    const Classifier c = nearest_mean_heads({{{1.0, 2.0}}, {{-3.0, 0.5}}}, 2.0);
    CHECK(c.params().output.weight(0, 0) == 2.0);
    CHECK(c.params().output.weight(1, 1) == 1.0);
    CHECK(c.params().output.bias[0] == doctest::Approx(-5.0));
    CHECK(c.params().output.bias[1] == doctest::Approx(-9.25));
}

TEST_CASE("compare") {
    const ExperimentSetup setup{ScenarioSpec::defaults(ScenarioKind::UDA), ModelSpec{}};
    const TrainConfig base = short_config(ObjectiveKind::None, 200);

    SUBCASE("single cell equals a direct run") {
        MethodSpec m{"BNM", base};
        m.config.objective = ObjectiveKind::BNM;
        const auto table = compare({m}, setup, 7, 1);
        const auto run = prepare(setup, 7);
        TrainConfig cfg = m.config;
        cfg.seed = 7;
        const auto direct = train(run.initial, run.data, cfg);
        REQUIRE(table.cells.size() == 1);
        CHECK(table.cells[0].records == direct.records);
        CHECK(table.rows[0].metric("acc").mean == direct.records.back().acc_unlabeled);
        CHECK(table.rows[0].metric("acc").stddev == 0.0);
    }
    SUBCASE("identical configs give identical rows") {
        const auto table = compare({{"a", base}, {"b", base}}, setup, 1, 2);
        for (std::size_t j = 0; j < table.rows[0].metrics.size(); ++j) {
            CHECK(table.rows[0].metrics[j].mean == table.rows[1].metrics[j].mean);
            CHECK(table.rows[0].metrics[j].stddev == table.rows[1].metrics[j].stddev);
        }
    }
    SUBCASE("failing cells are marked without aborting") {
        MethodSpec broken{"broken", base};
        broken.config.steps = 10; // fewer steps than eval_every: no records
        const auto table = compare({{"ok", base}, broken}, setup, 1, 2);
        CHECK(table.rows[0].n_ok == 2);
        CHECK(table.rows[1].n_ok == 0);
        CHECK(table.rows[1].n_failed == 2);
        CHECK_FALSE(table.cells[2].ok);
        CHECK_FALSE(table.cells[2].error.empty());
        std::ostringstream os;
        write_compare_csv(os, table);
        CHECK(os.str().rfind("method,objective,lambda,n_ok,n_failed,acc_mean,acc_std", 0) == 0);
    }
    SUBCASE("sample standard deviation") {
        const auto table = compare({{"a", base}}, setup, 1, 3);
        double mean = 0, ss = 0;
        for (const auto& c : table.cells) mean += c.records.back().acc_unlabeled / 3;
        for (const auto& c : table.cells) ss += std::pow(c.records.back().acc_unlabeled - mean, 2);
        CHECK(table.rows[0].metric("acc").mean == doctest::Approx(mean));
        CHECK(table.rows[0].metric("acc").stddev == doctest::Approx(std::sqrt(ss / 2)));
    }
}
