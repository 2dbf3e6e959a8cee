#pragma once

// One-hidden-layer MLP classifier (input -> ReLU hidden -> softmax) with
// hand-derived gradients and an analytic per-sample FLOPs count. hidden_dim
// may be 0, in which case the model degenerates to a linear softmax layer.
//
// Parameter vector layout (canonical order, row-major):
//   hidden_dim > 0:  W1[h x d], b1[h], W2[C x h], b2[C]
//   hidden_dim = 0:  W2[C x d], b2[C]
//
// All functions are pure; identical inputs give bit-identical outputs.

#include <cstdint>
#include <span>
#include <vector>

namespace prunebench {

struct ModelLayout {
    int input_dim = 0;
    int hidden_dim = 0;  // 0 = linear softmax model
    int num_classes = 0;

    bool linear() const { return hidden_dim == 0; }
    std::size_t param_count() const;
    /// Throws ConfigError unless input_dim >= 1, num_classes >= 2, hidden_dim >= 0.
    void validate() const;
};

struct ModelParams {
    ModelLayout layout;
    std::vector<double> weights;  // canonical order, see above

    std::span<double> w1();
    std::span<double> b1();
    std::span<double> w2();
    std::span<double> b2();
    std::span<const double> w1() const;
    std::span<const double> b1() const;
    std::span<const double> w2() const;
    std::span<const double> b2() const;
};

/// Gradient of a loss w.r.t. ModelParams::weights, same canonical order.
using Gradient = std::vector<double>;

/// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per weight matrix,
/// biases zero. Deterministic given (layout, seed).
ModelParams init_params(const ModelLayout& layout, std::uint64_t seed);

/// All-zero parameters (uniform predictor), handy for tests.
ModelParams zero_params(const ModelLayout& layout);

/// Softmax class probabilities for one sample, max-subtraction stabilized.
/// Entries are in (0,1) and sum to 1 within 1e-12.
std::vector<double> forward(const ModelParams& params, std::span<const double> x);

/// Cross-entropy -log p_y computed from forward().
double sample_loss(const ModelParams& params, std::span<const double> x, int y);

struct GradStats {
    Gradient grad;                     // d(mean loss)/d(weights)
    double mean_loss = 0.0;
    std::vector<double> sample_losses; // per batch member, batch order
};

/// Gradient of the mean cross-entropy over a batch, via backprop.
/// The per-sample losses fall out of the same forward pass and are exposed
/// so the scoring phase can reuse them at zero extra cost.
GradStats batch_grad(const ModelParams& params, std::span<const double> features,
                     std::size_t feature_dim, std::span<const int> labels);

/// Same, but the batch is the given subset of rows of a flat sample matrix.
GradStats batch_grad_rows(const ModelParams& params, const double* features,
                          std::size_t feature_dim, const int* labels,
                          std::span<const std::uint32_t> rows);

enum class Pass { Forward, ForwardBackward };

/// Analytic per-sample workload: forward = 2 * MACs with
/// MACs = d*h + h*C (or d*C when h = 0); forward+backward = 3 * forward.
/// Activation and softmax FLOPs are ignored by convention.
std::uint64_t flops_per_sample(const ModelLayout& layout, Pass pass);

}  // namespace prunebench
