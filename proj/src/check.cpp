#include "bnm/check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bnm/model.hpp"

namespace bnm {

namespace {

constexpr double kBoundSlack = 1e-9;

std::string describe(const Matrix& m, const std::string& detail) {
    std::ostringstream os;
    os.precision(17);
    os << m << "  (" << detail << ")";
    return os.str();
}

struct Dims {
    std::size_t rows;
    std::size_t cols;
};

Dims random_dims(Xoshiro256pp& rng, std::size_t max_dim) {
    return {1 + rng.below(max_dim), 1 + rng.below(max_dim)};
}

// Records a failure only for the first counterexample; keeps the worst margin.
void note(SuiteResult& r, double margin, const Matrix& m, const std::string& detail) {
    r.worst = std::max(r.worst, margin);
    if (margin > 0.0 && r.passed) {
        r.passed = false;
        r.counterexample = describe(m, detail);
    }
}

double max_identity_error(const Matrix& q) {
    const Matrix g = q.transpose() * q;
    return max_abs_diff(g, Matrix::identity(g.rows()));
}

SuiteResult suite_bounds(const CheckOptions& o, int which) {
    static const char* names[] = {"frobenius_bound", "sandwich", "nuclear_bound"};
    SuiteResult r;
    r.name = names[which];
    Xoshiro256pp rng(derive_seed(o.seed, Stream::Population));
    for (std::size_t n = 0; n < o.population; ++n, ++r.cases) {
        const auto [rows, cols] = random_dims(rng, o.max_dim);
        const BatchOutput a = random_batch_output(rng, rows, cols);
        const double b = static_cast<double>(rows);
        const double d = static_cast<double>(std::min(rows, cols));
        const double fro = frobenius_norm(a.matrix());
        if (which == 0) {
            note(r, fro - std::sqrt(b) - kBoundSlack, a.matrix(), "||A||_F > sqrt(B)");
            continue;
        }
        const double nuc = nuclear_norm(a.matrix());
        if (which == 1) {
            note(r, nuc / std::sqrt(d) - fro - kBoundSlack, a.matrix(), "||A||_*/sqrt(D) > ||A||_F");
            note(r, fro - nuc - kBoundSlack, a.matrix(), "||A||_F > ||A||_*");
            note(r, nuc - std::sqrt(d) * fro - kBoundSlack, a.matrix(), "||A||_* > sqrt(D)||A||_F");
        } else {
            note(r, nuc - std::sqrt(d * b) - kBoundSlack, a.matrix(), "||A||_* > sqrt(D B)");
        }
    }
    return r;
}

SuiteResult suite_svd(const CheckOptions& o) {
    SuiteResult r;
    r.name = "svd_factors";
    Xoshiro256pp rng(derive_seed(o.seed, Stream::Population));
    for (std::size_t n = 0; n < o.population; ++n, ++r.cases) {
        const auto [rows, cols] = random_dims(rng, o.max_dim);
        const BatchOutput a = random_batch_output(rng, rows, cols);
        const SvdFactors f = thin_svd(a.matrix());
        Matrix us = f.u;
        for (std::size_t i = 0; i < us.rows(); ++i)
            for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= f.sigma[k];
        const double smax = f.sigma.front();
        const double recon = frobenius_norm(us * f.v.transpose() - a.matrix());
        const double allowed = smax > 0.0 ? 1e-10 * smax : 1e-12;
        note(r, recon - allowed, a.matrix(), "reconstruction error " + std::to_string(recon));
        note(r, max_identity_error(f.u) - 1e-10, a.matrix(), "U not orthonormal");
        note(r, max_identity_error(f.v) - 1e-10, a.matrix(), "V not orthonormal");
        for (std::size_t k = 0; k < f.sigma.size(); ++k) {
            note(r, -f.sigma[k], a.matrix(), "negative singular value");
            if (k + 1 < f.sigma.size())
                note(r, f.sigma[k + 1] - f.sigma[k], a.matrix(), "singular values not descending");
        }
    }
    return r;
}

SuiteResult suite_onehot_rank(const CheckOptions& o) {
    SuiteResult r;
    r.name = "onehot_rank";
    Xoshiro256pp rng(derive_seed(o.seed, Stream::Population) ^ 0x5bd1e995ULL);
    for (std::size_t n = 0; n < o.population; ++n, ++r.cases) {
        const auto [rows, cols] = random_dims(rng, o.max_dim);
        std::vector<std::size_t> labels(rows);
        for (auto& l : labels) l = rng.below(cols);
        auto sorted = labels;
        std::sort(sorted.begin(), sorted.end());
        const auto distinct =
            static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
        const BatchOutput a = one_hot(labels, cols);
        const std::size_t rank = numeric_rank(thin_svd(a.matrix()), kDefaultRankTolerance);
        note(r, rank == distinct ? 0.0 : 1.0, a.matrix(),
             "rank " + std::to_string(rank) + " vs " + std::to_string(distinct) + " categories");
    }
    return r;
}

SuiteResult suite_monotonicity(const CheckOptions& o) {
    SuiteResult r;
    r.name = "monotonicity";
    double prev_h = 0.0;
    double prev_f = 0.0;
    for (int step = 0; step <= 50; ++step, ++r.cases) {
        const double x = 0.5 + 0.01 * step;
        const Matrix a = Matrix::from_rows({{x, 1.0 - x}});
        const double h = entropy(a);
        const double f = frobenius_norm(a);
        if (step > 0) {
            note(r, h >= prev_h ? 1.0 : 0.0, a, "entropy not strictly decreasing");
            note(r, f <= prev_f ? 1.0 : 0.0, a, "F-norm not strictly increasing");
        }
        prev_h = h;
        prev_f = f;
    }
    // Shared optimum: H = 0 exactly on one-hot matrices, where ||A||_F = sqrt(B).
    Xoshiro256pp rng(derive_seed(o.seed, Stream::Population));
    for (std::size_t n = 0; n < o.population; ++n, ++r.cases) {
        const auto [rows, cols] = random_dims(rng, o.max_dim);
        const BatchOutput a = random_batch_output(rng, rows, cols);
        const auto& m = a.matrix();
        const bool all_one_hot = std::all_of(m.data().begin(), m.data().end(),
                                             [](double v) { return v == 0.0 || v == 1.0; });
        const double h = entropy(a);
        const double gap = std::abs(frobenius_norm(m) - std::sqrt(static_cast<double>(rows)));
        note(r, (h == 0.0) != all_one_hot ? 1.0 : 0.0, m, "H = 0 does not match one-hot rows");
        if (h == 0.0) note(r, gap - kBoundSlack, m, "H = 0 but ||A||_F != sqrt(B)");
    }
    return r;
}

SuiteResult suite_fd(const CheckOptions& o) {
    SuiteResult r;
    r.name = "fd_check";
    constexpr ObjectiveKind kinds[] = {ObjectiveKind::EntMin, ObjectiveKind::BFM, ObjectiveKind::BNM,
                                       ObjectiveKind::Balance};
    for (ObjectiveKind kind : kinds) {
        Xoshiro256pp rng(derive_seed(o.seed, Stream::Population) + static_cast<std::uint64_t>(kind));
        for (std::size_t n = 0; n < o.fd_population; ++n, ++r.cases) {
            const auto [rows, cols] = random_dims(rng, o.max_dim);
            BatchOutput a = random_smooth_batch_output(rng, rows, cols);
            if (kind == ObjectiveKind::BNM) {
                while (spectral_gap(thin_svd(a.matrix())) < 1e-3)
                    a = random_smooth_batch_output(rng, rows, cols);
            }
            const double err = fd_check(kind, a, 1e-6, o.evaluator);
            note(r, err - 1e-4, a.matrix(),
                 std::string(to_string(kind)) + " gradient error " + std::to_string(err));
        }
    }
    return r;
}

} // namespace

BatchOutput random_batch_output(Xoshiro256pp& rng, std::size_t rows, std::size_t cols) {
    const bool all_one_hot = rng.uniform() < 0.1;
    const double scale = rng.uniform(0.0, 3.0);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const double mode = all_one_hot ? 0.0 : rng.uniform();
        if (mode < 0.1) {
            m(i, rng.below(cols)) = 1.0;
        } else if (mode < 0.15) {
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = 1.0 / static_cast<double>(cols);
        } else {
            Matrix logits(1, cols);
            for (double& z : logits.data()) z = scale * rng.normal();
            const Matrix p = softmax_rows(logits);
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = p(0, j);
        }
    }
    return BatchOutput(std::move(m));
}

BatchOutput random_smooth_batch_output(Xoshiro256pp& rng, std::size_t rows, std::size_t cols,
                                       double min_entry) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (;;) {
            Matrix logits(1, cols);
            const double scale = rng.uniform(0.2, 1.5);
            for (double& z : logits.data()) z = scale * rng.normal();
            const Matrix p = softmax_rows(logits);
            if (*std::min_element(p.data().begin(), p.data().end()) < min_entry) continue;
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = p(0, j);
            break;
        }
    }
    return BatchOutput(std::move(m));
}

BatchOutput one_hot(const std::vector<std::size_t>& labels, std::size_t cols) {
    Matrix m(labels.size(), cols);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= cols) throw std::invalid_argument("one_hot: label out of range");
        m(i, labels[i]) = 1.0;
    }
    return BatchOutput(std::move(m));
}

std::vector<SuiteResult> run_check_suites(const CheckOptions& opts) {
    return {suite_bounds(opts, 0), suite_bounds(opts, 1), suite_bounds(opts, 2), suite_svd(opts),
            suite_onehot_rank(opts), suite_monotonicity(opts), suite_fd(opts)};
}

} // namespace bnm
