#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgc/matrix.hpp"

namespace lgc {

enum class Activation { Sigmoid, TanH, ReLU, ELU };

double activate(Activation kind, double net);

/// f'(net). ReLU's derivative at exactly 0 is 0. ELU uses alpha = 1.
double activate_derivative(Activation kind, double net);

std::string_view to_string(Activation kind);
Activation parse_activation(std::string_view name);

/// Single-hidden-layer perceptron with biases on both layers.
struct MlpSpec {
  std::size_t n_input = 0;
  std::size_t n_hidden = 0;
  std::size_t n_output = 0;
  Activation hidden = Activation::TanH;
  // Cross-entropy needs outputs in (0,1); only Sigmoid is accepted here.
  Activation output = Activation::Sigmoid;

  std::size_t param_count() const {
    return (n_input + 1) * n_hidden + (n_hidden + 1) * n_output;
  }

  void validate() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

// The four benchmark architectures.
MlpSpec xor_spec(Activation hidden);
MlpSpec iris_spec(Activation hidden);
MlpSpec heart_spec(Activation hidden);
MlpSpec mnist_spec(Activation hidden);

/// Flat parameter vector. Layout: hidden layer row-major (one row per hidden neuron,
/// n_input weights then the bias), followed by the output layer row-major (one row
/// per output neuron, n_hidden weights then the bias).
using WeightVector = std::vector<double>;

inline std::size_t hidden_weight_index(const MlpSpec& spec, std::size_t neuron, std::size_t input) {
  return neuron * (spec.n_input + 1) + input;
}

inline std::size_t output_weight_index(const MlpSpec& spec, std::size_t neuron, std::size_t hidden) {
  return spec.n_hidden * (spec.n_input + 1) + neuron * (spec.n_hidden + 1) + hidden;
}

struct Batch {
  Matrix inputs;   // n_patterns x n_input
  Matrix targets;  // n_patterns x n_output

  std::size_t size() const { return inputs.rows(); }
};

struct ForwardResult {
  Matrix hidden_net;  // pre-activation of the hidden layer
  Matrix hidden;      // hidden activations
  Matrix outputs;     // sigmoid outputs, unclamped
};

ForwardResult forward(const MlpSpec& spec, std::span<const double> weights, const Matrix& inputs);

inline constexpr double kOutputClamp = 1e-12;

/// Mean over patterns of the summed binary cross-entropy of every output unit.
/// Outputs are clamped to [1e-12, 1 - 1e-12] before taking logarithms.
double cross_entropy(const Matrix& outputs, const Matrix& targets);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Loss and its analytic gradient in the WeightVector layout. The output delta uses
/// the sigmoid/cross-entropy closed form (o - t), i.e. the derivative of the
/// unclamped loss; the two only differ where an output sits inside the clamp band.
LossGradient loss_and_gradient(const MlpSpec& spec, std::span<const double> weights,
                               const Batch& batch);

std::vector<double> gradient(const MlpSpec& spec, std::span<const double> weights,
                             const Batch& batch);

double loss(const MlpSpec& spec, std::span<const double> weights, const Batch& batch);

}  // namespace lgc
