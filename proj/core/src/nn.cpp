#include "lgc/nn.hpp"

#include <algorithm>
#include <cmath>

#include "lgc/error.hpp"

namespace lgc {

double activate(Activation kind, double net) {
  switch (kind) {
    case Activation::Sigmoid:
      // Split by sign so exp() never overflows.
      if (net >= 0.0) return 1.0 / (1.0 + std::exp(-net));
      {
        const double e = std::exp(net);
        return e / (1.0 + e);
      }
    case Activation::TanH:
      return std::tanh(net);
    case Activation::ReLU:
      return net > 0.0 ? net : 0.0;
    case Activation::ELU:
      return net > 0.0 ? net : std::expm1(net);
  }
  return 0.0;
}

double activate_derivative(Activation kind, double net) {
  switch (kind) {
    case Activation::Sigmoid: {
      const double f = activate(kind, net);
      return f * (1.0 - f);
    }
    case Activation::TanH: {
      const double f = std::tanh(net);
      return 1.0 - f * f;
    }
    case Activation::ReLU:
      return net > 0.0 ? 1.0 : 0.0;
    case Activation::ELU:
      return net > 0.0 ? 1.0 : std::exp(net);
  }
  return 0.0;
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::TanH: return "tanh";
    case Activation::ReLU: return "relu";
    case Activation::ELU: return "elu";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "sigmoid") return Activation::Sigmoid;
  if (lower == "tanh") return Activation::TanH;
  if (lower == "relu") return Activation::ReLU;
  if (lower == "elu") return Activation::ELU;
  throw UsageError("unknown activation '" + std::string(name) + "' (expected sigmoid, tanh, relu or elu)");
}

void MlpSpec::validate() const {
  if (n_input == 0 || n_hidden == 0 || n_output == 0)
    throw ShapeError("MLP layer sizes must all be positive");
  if (output != Activation::Sigmoid)
    throw ShapeError("output activation must be sigmoid (cross-entropy needs outputs in (0,1))");
}

MlpSpec xor_spec(Activation hidden) { return {2, 2, 1, hidden, Activation::Sigmoid}; }
MlpSpec iris_spec(Activation hidden) { return {4, 4, 3, hidden, Activation::Sigmoid}; }
MlpSpec heart_spec(Activation hidden) { return {32, 10, 1, hidden, Activation::Sigmoid}; }
MlpSpec mnist_spec(Activation hidden) { return {784, 10, 10, hidden, Activation::Sigmoid}; }

namespace {

void check_weights(const MlpSpec& spec, std::span<const double> weights) {
  if (weights.size() != spec.param_count())
    throw ShapeError("weight vector has " + std::to_string(weights.size()) +
                     " entries, architecture needs " + std::to_string(spec.param_count()));
}

void check_batch(const MlpSpec& spec, const Batch& batch) {
  if (batch.inputs.cols() != spec.n_input)
    throw ShapeError("batch has " + std::to_string(batch.inputs.cols()) + " input columns, expected " +
                     std::to_string(spec.n_input));
  if (batch.targets.cols() != spec.n_output)
    throw ShapeError("batch has " + std::to_string(batch.targets.cols()) + " target columns, expected " +
                     std::to_string(spec.n_output));
  if (batch.targets.rows() != batch.inputs.rows())
    throw ShapeError("batch inputs and targets differ in row count");
  if (batch.size() == 0) throw ShapeError("empty batch");
}

}  // namespace

ForwardResult forward(const MlpSpec& spec, std::span<const double> weights, const Matrix& inputs) {
  spec.validate();
  check_weights(spec, weights);
  if (inputs.cols() != spec.n_input)
    throw ShapeError("input has " + std::to_string(inputs.cols()) + " columns, expected " +
                     std::to_string(spec.n_input));

  const std::size_t n = inputs.rows();
  ForwardResult out{Matrix(n, spec.n_hidden), Matrix(n, spec.n_hidden), Matrix(n, spec.n_output)};
  const double* w1 = weights.data();
  const double* w2 = weights.data() + spec.n_hidden * (spec.n_input + 1);

  for (std::size_t p = 0; p < n; ++p) {
    const auto x = inputs.row(p);
    for (std::size_t j = 0; j < spec.n_hidden; ++j) {
      const double* row = w1 + j * (spec.n_input + 1);
      double net = row[spec.n_input];
      for (std::size_t i = 0; i < spec.n_input; ++i) net += row[i] * x[i];
      out.hidden_net(p, j) = net;
      out.hidden(p, j) = activate(spec.hidden, net);
    }
    const auto h = out.hidden.row(p);
    for (std::size_t k = 0; k < spec.n_output; ++k) {
      const double* row = w2 + k * (spec.n_hidden + 1);
      double net = row[spec.n_hidden];
      for (std::size_t j = 0; j < spec.n_hidden; ++j) net += row[j] * h[j];
      out.outputs(p, k) = activate(spec.output, net);
    }
  }
  return out;
}

double cross_entropy(const Matrix& outputs, const Matrix& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols())
    throw ShapeError("outputs and targets differ in shape");
  if (outputs.rows() == 0) throw ShapeError("empty batch");
  double total = 0.0;
  for (std::size_t p = 0; p < outputs.rows(); ++p) {
    for (std::size_t k = 0; k < outputs.cols(); ++k) {
      const double o = std::clamp(outputs(p, k), kOutputClamp, 1.0 - kOutputClamp);
      const double t = targets(p, k);
      total -= t * std::log(o) + (1.0 - t) * std::log1p(-o);
    }
  }
  return total / static_cast<double>(outputs.rows());
}

LossGradient loss_and_gradient(const MlpSpec& spec, std::span<const double> weights,
                               const Batch& batch) {
  check_batch(spec, batch);
  const ForwardResult fwd = forward(spec, weights, batch.inputs);

  LossGradient result;
  result.loss = cross_entropy(fwd.outputs, batch.targets);
  result.gradient.assign(spec.param_count(), 0.0);

  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double* w2 = weights.data() + spec.n_hidden * (spec.n_input + 1);
  double* g1 = result.gradient.data();
  double* g2 = result.gradient.data() + spec.n_hidden * (spec.n_input + 1);

  std::vector<double> delta_out(spec.n_output);
  std::vector<double> delta_hidden(spec.n_hidden);
  for (std::size_t p = 0; p < n; ++p) {
    const auto x = batch.inputs.row(p);
    const auto h = fwd.hidden.row(p);
    for (std::size_t k = 0; k < spec.n_output; ++k)
      delta_out[k] = (fwd.outputs(p, k) - batch.targets(p, k)) * inv_n;

    std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
    for (std::size_t k = 0; k < spec.n_output; ++k) {
      const double d = delta_out[k];
      const double* row = w2 + k * (spec.n_hidden + 1);
      double* grow = g2 + k * (spec.n_hidden + 1);
      for (std::size_t j = 0; j < spec.n_hidden; ++j) {
        grow[j] += d * h[j];
        delta_hidden[j] += row[j] * d;
      }
      grow[spec.n_hidden] += d;
    }

    for (std::size_t j = 0; j < spec.n_hidden; ++j) {
      const double d = delta_hidden[j] * activate_derivative(spec.hidden, fwd.hidden_net(p, j));
      if (d == 0.0) continue;
      double* grow = g1 + j * (spec.n_input + 1);
      for (std::size_t i = 0; i < spec.n_input; ++i) grow[i] += d * x[i];
      grow[spec.n_input] += d;
    }
  }
  return result;
}

std::vector<double> gradient(const MlpSpec& spec, std::span<const double> weights,
                             const Batch& batch) {
  return loss_and_gradient(spec, weights, batch).gradient;
}

double loss(const MlpSpec& spec, std::span<const double> weights, const Batch& batch) {
  check_batch(spec, batch);
  return cross_entropy(forward(spec, weights, batch.inputs).outputs, batch.targets);
}

}  // namespace lgc
