#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fblearn {

enum class OutputActivation { affine, unit_interval_squash };
enum class LossKind { l1, l2 };

// Fully-connected network with tanh hidden units and explicit parameters.
// weights[l] is (out x in) row-major for the transition from layer l to l+1.
struct Mlp {
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    OutputActivation output_activation = OutputActivation::affine;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += weights[l].size() + biases[l].size();
        return n;
    }

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Deterministic scaled-uniform fan-in initialization: weights from
// U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
Mlp mlp_init(const std::vector<int>& layer_sizes, OutputActivation output_activation,
             std::uint64_t seed);

std::vector<double> forward(const Mlp& mlp, std::span<const double> input);

// Per-layer activation buffers reused across calls.
struct MlpWorkspace {
    std::vector<std::vector<double>> activations;  // activations[l], l = 0..layers
    std::vector<std::vector<double>> deltas;       // deltas[l] for layer l+1 outputs
};

void forward_into(const Mlp& mlp, std::span<const double> input, MlpWorkspace& ws);

// Gradient accumulator with the same shapes as the model parameters.
struct MlpGrad {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    void set_zero();
};

MlpGrad make_grad_like(const Mlp& mlp);

// Mean loss over (batch x output dims): L1 is |e| with subgradient
// convention sign(0) = 0, L2 is e^2.
double batch_loss(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& targets,
                  std::span<const int> indices, LossKind kind);

// Exact analytic gradient of the mean loss; returns the loss value.
// `grad` must have the model's shapes and is overwritten.
double batch_gradient(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                      const std::vector<std::vector<double>>& targets,
                      std::span<const int> indices, LossKind kind, MlpGrad& grad,
                      MlpWorkspace& ws);

}  // namespace fblearn
