#include "fblearn/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "fblearn/rng.hpp"

namespace fblearn {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void ensure_workspace(const Mlp& mlp, MlpWorkspace& ws) {
    const std::size_t layers = mlp.layer_count();
    ws.activations.resize(layers + 1);
    ws.deltas.resize(layers);
    for (std::size_t l = 0; l <= layers; ++l)
        ws.activations[l].resize(static_cast<std::size_t>(mlp.layer_sizes[l]));
    for (std::size_t l = 0; l < layers; ++l)
        ws.deltas[l].resize(static_cast<std::size_t>(mlp.layer_sizes[l + 1]));
}

}  // namespace

Mlp mlp_init(const std::vector<int>& layer_sizes, OutputActivation output_activation,
             std::uint64_t seed) {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("mlp_init: need at least input and output layers");
    for (int n : layer_sizes)
        if (n < 1) throw std::invalid_argument("mlp_init: layer sizes must be >= 1");

    Mlp mlp;
    mlp.layer_sizes = layer_sizes;
    mlp.output_activation = output_activation;

    Xoshiro256pp rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
        for (auto& v : w) v = rng.uniform(-bound, bound);
        mlp.weights.push_back(std::move(w));
        mlp.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
    }
    return mlp;
}

void forward_into(const Mlp& mlp, std::span<const double> input, MlpWorkspace& ws) {
    if (input.size() != static_cast<std::size_t>(mlp.input_size()))
        throw std::invalid_argument("forward: input dimension mismatch");
    ensure_workspace(mlp, ws);

    std::copy(input.begin(), input.end(), ws.activations[0].begin());
    const std::size_t layers = mlp.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& x = ws.activations[l];
        auto& a = ws.activations[l + 1];
        const int in = mlp.layer_sizes[l];
        const int out = mlp.layer_sizes[l + 1];
        const double* w = mlp.weights[l].data();
        const bool last = (l + 1 == layers);
        for (int o = 0; o < out; ++o) {
            const double* row = w + static_cast<std::size_t>(o) * in;
            double z = mlp.biases[l][static_cast<std::size_t>(o)];
            for (int i = 0; i < in; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
            if (!last) {
                a[static_cast<std::size_t>(o)] = std::tanh(z);
            } else {
                a[static_cast<std::size_t>(o)] =
                    mlp.output_activation == OutputActivation::unit_interval_squash
                        ? sigmoid(z)
                        : z;
            }
        }
    }
}

std::vector<double> forward(const Mlp& mlp, std::span<const double> input) {
    MlpWorkspace ws;
    forward_into(mlp, input, ws);
    return ws.activations.back();
}

void MlpGrad::set_zero() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

MlpGrad make_grad_like(const Mlp& mlp) {
    MlpGrad g;
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        g.weights.emplace_back(mlp.weights[l].size(), 0.0);
        g.biases.emplace_back(mlp.biases[l].size(), 0.0);
    }
    return g;
}

double batch_loss(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& targets,
                  std::span<const int> indices, LossKind kind) {
    if (indices.empty()) throw std::invalid_argument("batch_loss: empty batch");
    MlpWorkspace ws;
    double total = 0.0;
    for (int idx : indices) {
        forward_into(mlp, inputs[static_cast<std::size_t>(idx)], ws);
        const auto& out = ws.activations.back();
        const auto& tgt = targets[static_cast<std::size_t>(idx)];
        if (tgt.size() != out.size())
            throw std::invalid_argument("batch_loss: target dimension mismatch");
        for (std::size_t d = 0; d < out.size(); ++d) {
            const double e = out[d] - tgt[d];
            total += kind == LossKind::l1 ? std::abs(e) : e * e;
        }
    }
    return total / (static_cast<double>(indices.size()) *
                    static_cast<double>(mlp.output_size()));
}

double batch_gradient(const Mlp& mlp, const std::vector<std::vector<double>>& inputs,
                      const std::vector<std::vector<double>>& targets,
                      std::span<const int> indices, LossKind kind, MlpGrad& grad,
                      MlpWorkspace& ws) {
    if (indices.empty()) throw std::invalid_argument("batch_gradient: empty batch");
    grad.set_zero();

    const std::size_t layers = mlp.layer_count();
    const double scale = 1.0 / (static_cast<double>(indices.size()) *
                                static_cast<double>(mlp.output_size()));
    double total = 0.0;

    for (int idx : indices) {
        forward_into(mlp, inputs[static_cast<std::size_t>(idx)], ws);
        const auto& out = ws.activations.back();
        const auto& tgt = targets[static_cast<std::size_t>(idx)];
        if (tgt.size() != out.size())
            throw std::invalid_argument("batch_gradient: target dimension mismatch");

        // Output-layer delta = dLoss/dz.
        auto& delta_out = ws.deltas[layers - 1];
        for (std::size_t d = 0; d < out.size(); ++d) {
            const double e = out[d] - tgt[d];
            total += kind == LossKind::l1 ? std::abs(e) : e * e;
            double dl = kind == LossKind::l1 ? sign0(e) : 2.0 * e;
            if (mlp.output_activation == OutputActivation::unit_interval_squash)
                dl *= out[d] * (1.0 - out[d]);
            delta_out[d] = dl * scale;
        }

        for (std::size_t l = layers; l-- > 0;) {
            const auto& x = ws.activations[l];
            const auto& delta = ws.deltas[l];
            const int in = mlp.layer_sizes[l];
            const int out_dim = mlp.layer_sizes[l + 1];
            double* gw = grad.weights[l].data();
            for (int o = 0; o < out_dim; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                if (d != 0.0) {
                    double* grow = gw + static_cast<std::size_t>(o) * in;
                    for (int i = 0; i < in; ++i) grow[i] += d * x[static_cast<std::size_t>(i)];
                }
                grad.biases[l][static_cast<std::size_t>(o)] += d;
            }
            if (l > 0) {
                auto& delta_prev = ws.deltas[l - 1];
                std::fill(delta_prev.begin(), delta_prev.end(), 0.0);
                const double* w = mlp.weights[l].data();
                for (int o = 0; o < out_dim; ++o) {
                    const double d = delta[static_cast<std::size_t>(o)];
                    if (d == 0.0) continue;
                    const double* row = w + static_cast<std::size_t>(o) * in;
                    for (int i = 0; i < in; ++i)
                        delta_prev[static_cast<std::size_t>(i)] += d * row[i];
                }
                // tanh'(z) = 1 - a^2
                for (int i = 0; i < in; ++i) {
                    const double a = x[static_cast<std::size_t>(i)];
                    delta_prev[static_cast<std::size_t>(i)] *= 1.0 - a * a;
                }
            }
        }
    }
    return total * scale;
}

}  // namespace fblearn
