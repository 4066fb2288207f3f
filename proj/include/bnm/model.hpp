#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "bnm/linalg.hpp"
#include "bnm/matrix.hpp"

namespace bnm {

// Affine layer y = x W + b with W of shape in x out.
struct Dense {
    Matrix weight;
    std::vector<double> bias;

    std::size_t in_dim() const noexcept { return weight.rows(); }
    std::size_t out_dim() const noexcept { return weight.cols(); }

    friend bool operator==(const Dense&, const Dense&) = default;
};

// Optional tanh hidden layer followed by a linear output layer.
struct ParameterSet {
    std::optional<Dense> hidden;
    Dense output;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

// The network G: linear softmax over raw features, optionally with one tanh
// hidden layer.
class Classifier {
public:
    explicit Classifier(ParameterSet params);

    const ParameterSet& params() const noexcept { return params_; }
    std::size_t in_dim() const noexcept;
    std::size_t n_classes() const noexcept { return params_.output.out_dim(); }
    std::optional<std::size_t> hidden_width() const noexcept;

    friend bool operator==(const Classifier&, const Classifier&) = default;

private:
    ParameterSet params_;
};

// Gradient of a scalar loss with respect to every parameter, shaped like the
// classifier it was computed for.
struct Gradients {
    ParameterSet params;

    Gradients& operator+=(const Gradients& other);
    Gradients& operator*=(double s);
};

inline constexpr std::size_t kDefaultHiddenWidth = 16;

// Weights uniform in [-0.5, 0.5] / sqrt(fan_in), biases zero. hidden = 0
// builds the linear model.
Classifier make_classifier(std::size_t in_dim, std::size_t hidden, std::size_t n_classes,
                           std::uint64_t seed);

Gradients zero_gradients(const Classifier& c);

// Row-wise softmax with the row max subtracted before exponentiation.
Matrix softmax_rows(const Matrix& logits);

struct ForwardTrace {
    Matrix input;
    std::optional<Matrix> hidden_act; // tanh activations, B x hidden
    Matrix logits;
    BatchOutput probs;
};

ForwardTrace forward(const Classifier& c, const Matrix& x);

// -(1/B) sum_ij y_ij ln p_ij with the clamped log.
double cross_entropy(const BatchOutput& probs, const Matrix& labels);

// Closed form d L_cls / d logits = (probs - labels) / B, then backprop.
Gradients backward_ce(const Classifier& c, const ForwardTrace& t, const Matrix& labels);

// Chains an A-gradient through the softmax Jacobian and the layers.
Gradients backward_objective(const Classifier& c, const ForwardTrace& t, const Matrix& grad_probs);

// Backprop from an explicit logit gradient.
Gradients backward_logits(const Classifier& c, const ForwardTrace& t, const Matrix& grad_logits);

Classifier sgd_step(const Classifier& c, const Gradients& g, double lr);

// Index of the largest entry in each row; ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const Matrix& m);

} // namespace bnm
