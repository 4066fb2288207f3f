#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "bnm/random.hpp"
#include "bnm/scenarios.hpp"

using namespace bnm;

namespace {

std::vector<std::size_t> counts(const std::vector<std::size_t>& labels, std::size_t c) {
    std::vector<std::size_t> n(c);
    for (auto l : labels) ++n[l];
    return n;
}

std::array<double, 2> mean_of_class(const Matrix& x, const std::vector<std::size_t>& labels, std::size_t k) {
    std::array<double, 2> m{0, 0};
    double n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != k) continue;
        m[0] += x(i, 0);
        m[1] += x(i, 1);
        n += 1;
    }
    return {m[0] / n, m[1] / n};
}

} // namespace

TEST_CASE("splitmix64 reference output") {
    SplitMix64 s(0);
    CHECK(s.next() == 0xe220a8397b1dcdafULL);
    CHECK(s.next() == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("rng streams and ranges") {
    CHECK(derive_seed(1, Stream::Data) != derive_seed(1, Stream::Init));
    CHECK(derive_seed(1, Stream::Data) != derive_seed(2, Stream::Data));
    Xoshiro256pp a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Xoshiro256pp r(6);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(r.below(3) < 3);
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("scenario spec validation") {
    auto s = ScenarioSpec::defaults(ScenarioKind::SSL);
    CHECK_NOTHROW(s.validate());
    s.class_priors = {0.5, 0.3, 0.1, 0.05};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = ScenarioSpec::defaults(ScenarioKind::OpenSet);
    CHECK_NOTHROW(s.validate());
    s.n_known = s.n_classes;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = ScenarioSpec::defaults(ScenarioKind::UDA);
    s.n_known = 5;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("generation is deterministic") {
    const auto spec = ScenarioSpec::defaults(ScenarioKind::UDA);
    CHECK(generate(spec) == generate(spec));
    auto other = spec;
    other.seed = spec.seed + 1;
    CHECK_FALSE(generate(other) == generate(spec));
}

TEST_CASE("zero shift keeps the class means") {
    auto spec = ScenarioSpec::defaults(ScenarioKind::SSL);
    spec.n_labeled = 20000;
    spec.n_unlabeled = 20000;
    spec.class_priors = {0.25, 0.25, 0.25, 0.25};
    const Dataset d = generate(spec);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto lm = mean_of_class(d.labeled_x, d.labeled_labels, k);
        const auto um = mean_of_class(d.unlabeled_x, d.unlabeled_labels, k);
        const auto truth = class_mean(k, 4);
        // 5000 samples per class, std 0.8: the standard error is about 0.011.
        for (int c = 0; c < 2; ++c) {
            CHECK(std::abs(lm[c] - truth[c]) < 0.06);
            CHECK(std::abs(um[c] - truth[c]) < 0.06);
        }
    }
}

TEST_CASE("domain shift rotates then translates") {
    const DomainShift s{1.0, 0.5, std::numbers::pi / 2};
    const auto p = s.apply({3.0, 0.0});
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(3.5));
    const auto spec = ScenarioSpec::defaults(ScenarioKind::UDA);
    CHECK(spec.shift.dx == 1.0);
    CHECK(spec.shift.dy == 0.5);
    CHECK(spec.shift.angle == doctest::Approx(15.0 * std::numbers::pi / 180.0));
}

TEST_CASE("unlabeled class counts within 3 sigma of the binomial expectation") {
    ScenarioSpec spec = ScenarioSpec::defaults(ScenarioKind::SSL);
    spec.n_classes = 2;
    spec.n_known = 2;
    spec.class_priors = {0.8, 0.2};
    spec.n_unlabeled = 1000;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        spec.seed = seed;
        const auto n = counts(generate(spec).unlabeled_labels, 2);
        const double sigma = std::sqrt(1000 * 0.8 * 0.2);
        CHECK(std::abs(static_cast<double>(n[0]) - 800.0) <= 3 * sigma);
    }
}

TEST_CASE("class priors pass a chi-square test") {
    // 0.999 quantiles of chi-square with 3 and 4 degrees of freedom.
    const double q3 = 16.266, q4 = 18.467;
    for (auto kind : {ScenarioKind::SSL, ScenarioKind::OpenSet}) {
        ScenarioSpec spec = ScenarioSpec::defaults(kind);
        spec.n_unlabeled = 10000;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            spec.seed = seed;
            const auto n = counts(generate(spec).unlabeled_labels, spec.n_classes);
            double chi = 0;
            for (std::size_t k = 0; k < spec.n_classes; ++k) {
                const double e = 10000 * spec.class_priors[k];
                chi += (n[k] - e) * (n[k] - e) / e;
            }
            CHECK(chi < (spec.n_classes == 4 ? q3 : q4));
        }
    }
}

TEST_CASE("open-set labeled data has no unknown-class mass") {
    const Dataset d = generate(ScenarioSpec::defaults(ScenarioKind::OpenSet));
    CHECK(d.known_classes() == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(d.unknown_classes() == std::vector<std::size_t>{4});
    for (std::size_t i = 0; i < d.n_labeled(); ++i) CHECK(d.labeled_y(i, 4) == 0.0);
    const auto n = counts(d.unlabeled_labels, 5);
    const double sigma = std::sqrt(2000 * 0.2 * 0.8);
    CHECK(std::abs(static_cast<double>(n[4]) - 400.0) <= 3 * sigma);
    // Every class with positive prior shows up once N_U >= 10 / min prior.
    for (auto c : n) CHECK(c > 0);
}

TEST_CASE("minority classes fall below the uniform share") {
    const Dataset d = generate(ScenarioSpec::defaults(ScenarioKind::UDA));
    CHECK(d.minority_classes() == std::vector<std::size_t>{2, 3});
}

TEST_CASE("prototype init") {
    const Dataset d = generate(ScenarioSpec::defaults(ScenarioKind::OpenSet));
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.n_unlabeled(); ++i)
        if (d.unlabeled_labels[i] == 4) rows.push_back(i);

    SUBCASE("k = 1 returns the first example") {
        const auto p = prototype_init(d, 1);
        CHECK(p.classes == std::vector<std::size_t>{4});
        CHECK(p.means[0][0] == d.unlabeled_x(rows[0], 0));
        CHECK(p.means[0][1] == d.unlabeled_x(rows[0], 1));
        CHECK(std::count(p.dataset.holdout.begin(), p.dataset.holdout.end(), true) == 1);
        CHECK(p.dataset.holdout[rows[0]]);
    }
    SUBCASE("k = all gives the empirical class mean") {
        const auto p = prototype_init(d, rows.size());
        const auto m = mean_of_class(d.unlabeled_x, d.unlabeled_labels, 4);
        CHECK(p.means[0][0] == doctest::Approx(m[0]).epsilon(1e-12));
        CHECK(p.means[0][1] == doctest::Approx(m[1]).epsilon(1e-12));
        CHECK(p.dataset.pool_labels().size() == d.n_unlabeled() - rows.size());
    }
    SUBCASE("too few examples") {
        CHECK_THROWS(prototype_init(d, rows.size() + 1));
    }
    SUBCASE("closed-set data has no unknown classes") {
        CHECK_THROWS(prototype_init(generate(ScenarioSpec::defaults(ScenarioKind::UDA)), 1));
    }
}

TEST_CASE("prototypes approach the generator mean as the spread vanishes") {
    auto spec = ScenarioSpec::defaults(ScenarioKind::OpenSet);
    const std::size_t k = 5;
    for (double std_dev : {0.1, 0.01, 1e-4}) {
        spec.cluster_std = std_dev;
        const auto p = prototype_init(generate(spec), k);
        const auto truth = spec.shift.apply(class_mean(4, 5));
        const double bound = 3.0 * std_dev / std::sqrt(static_cast<double>(k));
        CHECK(std::abs(p.means[0][0] - truth[0]) <= bound);
        CHECK(std::abs(p.means[0][1] - truth[1]) <= bound);
    }
}

TEST_CASE("batch sampling") {
    Dataset d = generate(ScenarioSpec::defaults(ScenarioKind::OpenSet));
    d = prototype_init(d, 5).dataset;

    SUBCASE("replay and successive calls") {
        Xoshiro256pp a(3), b(3);
        const Batch first = sample_batch(d, Domain::Unlabeled, 36, a);
        CHECK(sample_batch(d, Domain::Unlabeled, 36, b).indices == first.indices);
        CHECK(sample_batch(d, Domain::Unlabeled, 36, a).indices != first.indices);
        CHECK(first.x.rows() == 36);
        CHECK_FALSE(first.y.has_value());
        const Batch lab = sample_batch(d, Domain::Labeled, 10, a);
        REQUIRE(lab.y.has_value());
        for (std::size_t i = 0; i < 10; ++i) CHECK((*lab.y)(i, d.labeled_labels[lab.indices[i]]) == 1.0);
    }
    SUBCASE("holdout rows never sampled") {
        Xoshiro256pp r(4);
        for (int n = 0; n < 500; ++n)
            for (auto i : sample_batch(d, Domain::Unlabeled, 36, r).indices) REQUIRE_FALSE(d.holdout[i]);
    }
    SUBCASE("without replacement covers the domain") {
        Xoshiro256pp r(5);
        auto idx = sample_batch_without_replacement(d, Domain::Labeled, d.n_labeled(), r).indices;
        std::sort(idx.begin(), idx.end());
        std::vector<std::size_t> all(d.n_labeled());
        std::iota(all.begin(), all.end(), 0);
        CHECK(idx == all);
        auto pool = sample_batch_without_replacement(d, Domain::Unlabeled, d.unlabeled_pool().size(), r).indices;
        std::sort(pool.begin(), pool.end());
        CHECK(pool == d.unlabeled_pool());
        CHECK_THROWS(sample_batch_without_replacement(d, Domain::Labeled, d.n_labeled() + 1, r));
    }
}

TEST_CASE("sampling frequencies on a two-element domain") {
    auto spec = ScenarioSpec::defaults(ScenarioKind::SSL);
    spec.n_labeled = 2;
    spec.n_classes = 2;
    spec.n_known = 2;
    spec.class_priors = {0.5, 0.5};
    const Dataset d = generate(spec);
    Xoshiro256pp r(17);
    std::size_t zeros = 0;
    const Batch b = sample_batch(d, Domain::Labeled, 10000, r);
    for (auto i : b.indices) zeros += i == 0;
    CHECK(std::abs(zeros / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("dataset csv round trip") {
    Dataset d = prototype_init(generate(ScenarioSpec::defaults(ScenarioKind::OpenSet)), 3).dataset;
    std::stringstream ss;
    write_dataset_csv(ss, d);
    std::string header;
    std::getline(std::stringstream(ss.str()), header);
    CHECK(header == "domain,split_flag,x1,x2,label");
    CHECK(read_dataset_csv(ss, d.meta) == d);
    std::stringstream bad("domain,split_flag,x1,x2,label\nlabeled,0,1.0,2.0,9\n");
    CHECK_THROWS(read_dataset_csv(bad, d.meta));
}
