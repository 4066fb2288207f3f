#include "bnm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bnm/random.hpp"

namespace bnm {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

void check_dense(const Dense& d, const char* name) {
    require(!d.weight.empty(), std::string(name) + ": empty weight");
    require(d.bias.size() == d.out_dim(), std::string(name) + ": bias length mismatch");
    require(d.weight.all_finite(), std::string(name) + ": non-finite weight");
    require(std::all_of(d.bias.begin(), d.bias.end(), [](double v) { return std::isfinite(v); }),
            std::string(name) + ": non-finite bias");
}

Dense random_dense(std::size_t in, std::size_t out, Xoshiro256pp& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    Dense d{Matrix(in, out), std::vector<double>(out, 0.0)};
    for (double& w : d.weight.data()) w = scale * rng.uniform(-0.5, 0.5);
    return d;
}

Dense zero_like(const Dense& d) {
    return {Matrix(d.weight.rows(), d.weight.cols()), std::vector<double>(d.bias.size(), 0.0)};
}

Matrix affine(const Matrix& x, const Dense& d) {
    Matrix out = x * d.weight;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += d.bias[j];
    return out;
}

// Fills weight/bias gradients of an affine layer given its input and the
// gradient at its output.
void accumulate_dense(Dense& g, const Matrix& input, const Matrix& grad_out) {
    g.weight = input.transpose() * grad_out;
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
    for (std::size_t i = 0; i < grad_out.rows(); ++i)
        for (std::size_t j = 0; j < grad_out.cols(); ++j) g.bias[j] += grad_out(i, j);
}

void add_dense(Dense& a, const Dense& b, double scale) {
    for (std::size_t i = 0; i < a.weight.size(); ++i) a.weight.data()[i] += scale * b.weight.data()[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += scale * b.bias[i];
}

void require_same_structure(const ParameterSet& a, const ParameterSet& b, const char* where) {
    const auto same = [](const Dense& x, const Dense& y) {
        return x.weight.rows() == y.weight.rows() && x.weight.cols() == y.weight.cols() &&
               x.bias.size() == y.bias.size();
    };
    require(a.hidden.has_value() == b.hidden.has_value() && same(a.output, b.output) &&
                (!a.hidden || same(*a.hidden, *b.hidden)),
            std::string(where) + ": parameter shapes differ");
}

} // namespace

Classifier::Classifier(ParameterSet params) : params_(std::move(params)) {
    check_dense(params_.output, "output layer");
    if (params_.hidden) {
        check_dense(*params_.hidden, "hidden layer");
        require(params_.hidden->out_dim() == params_.output.in_dim(),
                "Classifier: hidden width does not match output layer input");
    }
}

std::size_t Classifier::in_dim() const noexcept {
    return params_.hidden ? params_.hidden->in_dim() : params_.output.in_dim();
}

std::optional<std::size_t> Classifier::hidden_width() const noexcept {
    if (params_.hidden) return params_.hidden->out_dim();
    return std::nullopt;
}

Gradients& Gradients::operator+=(const Gradients& other) {
    require_same_structure(params, other.params, "Gradients::operator+=");
    add_dense(params.output, other.params.output, 1.0);
    if (params.hidden) add_dense(*params.hidden, *other.params.hidden, 1.0);
    return *this;
}

Gradients& Gradients::operator*=(double s) {
    params.output.weight *= s;
    for (double& b : params.output.bias) b *= s;
    if (params.hidden) {
        params.hidden->weight *= s;
        for (double& b : params.hidden->bias) b *= s;
    }
    return *this;
}

Classifier make_classifier(std::size_t in_dim, std::size_t hidden, std::size_t n_classes,
                           std::uint64_t seed) {
    require(in_dim > 0 && n_classes > 0, "make_classifier: dimensions must be positive");
    Xoshiro256pp rng(seed);
    ParameterSet p;
    if (hidden > 0) {
        p.hidden = random_dense(in_dim, hidden, rng);
        p.output = random_dense(hidden, n_classes, rng);
    } else {
        p.output = random_dense(in_dim, n_classes, rng);
    }
    return Classifier(std::move(p));
}

Gradients zero_gradients(const Classifier& c) {
    Gradients g;
    g.params.output = zero_like(c.params().output);
    if (c.params().hidden) g.params.hidden = zero_like(*c.params().hidden);
    return g;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            out(i, j) = std::exp(row[j] - mx);
            sum += out(i, j);
        }
        for (std::size_t j = 0; j < row.size(); ++j) out(i, j) /= sum;
    }
    return out;
}

ForwardTrace forward(const Classifier& c, const Matrix& x) {
    require(x.cols() == c.in_dim(), "forward: input has " + std::to_string(x.cols()) +
                                        " features, classifier expects " +
                                        std::to_string(c.in_dim()));
    std::optional<Matrix> hidden_act;
    Matrix logits;
    if (const auto& h = c.params().hidden) {
        Matrix act = affine(x, *h);
        for (double& v : act.data()) v = std::tanh(v);
        logits = affine(act, c.params().output);
        hidden_act = std::move(act);
    } else {
        logits = affine(x, c.params().output);
    }
    BatchOutput probs(softmax_rows(logits));
    return {x, std::move(hidden_act), std::move(logits), std::move(probs)};
}

double cross_entropy(const BatchOutput& probs, const Matrix& labels) {
    const Matrix& p = probs.matrix();
    require(labels.rows() == p.rows() && labels.cols() == p.cols(),
            "cross_entropy: label shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double y = labels.data()[i];
        if (y != 0.0) acc += y * std::log(std::max(p.data()[i], kLogClamp));
    }
    return -acc / static_cast<double>(p.rows());
}

Gradients backward_logits(const Classifier& c, const ForwardTrace& t, const Matrix& grad_logits) {
    require(grad_logits.rows() == t.logits.rows() && grad_logits.cols() == t.logits.cols(),
            "backward: logit gradient shape mismatch");
    Gradients g = zero_gradients(c);
    if (c.params().hidden) {
        const Matrix& act = *t.hidden_act;
        accumulate_dense(g.params.output, act, grad_logits);
        Matrix grad_act = grad_logits * c.params().output.weight.transpose();
        for (std::size_t i = 0; i < grad_act.size(); ++i) {
            const double a = act.data()[i];
            grad_act.data()[i] *= 1.0 - a * a;
        }
        accumulate_dense(*g.params.hidden, t.input, grad_act);
    } else {
        accumulate_dense(g.params.output, t.input, grad_logits);
    }
    return g;
}

Gradients backward_ce(const Classifier& c, const ForwardTrace& t, const Matrix& labels) {
    const Matrix& p = t.probs.matrix();
    require(labels.rows() == p.rows() && labels.cols() == p.cols(),
            "backward_ce: label shape mismatch");
    Matrix grad = p - labels;
    grad *= 1.0 / static_cast<double>(p.rows());
    return backward_logits(c, t, grad);
}

Gradients backward_objective(const Classifier& c, const ForwardTrace& t, const Matrix& grad_probs) {
    const Matrix& p = t.probs.matrix();
    require(grad_probs.rows() == p.rows() && grad_probs.cols() == p.cols(),
            "backward_objective: gradient shape mismatch");
    Matrix grad(p.rows(), p.cols());
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) dot += grad_probs(i, j) * p(i, j);
        for (std::size_t k = 0; k < p.cols(); ++k) grad(i, k) = p(i, k) * (grad_probs(i, k) - dot);
    }
    return backward_logits(c, t, grad);
}

Classifier sgd_step(const Classifier& c, const Gradients& g, double lr) {
    require(lr >= 0.0, "sgd_step: learning rate must be non-negative");
    require_same_structure(c.params(), g.params, "sgd_step");
    ParameterSet next = c.params();
    add_dense(next.output, g.params.output, -lr);
    if (next.hidden) add_dense(*next.hidden, *g.params.hidden, -lr);
    return Classifier(std::move(next));
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
    std::vector<std::size_t> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

} // namespace bnm
