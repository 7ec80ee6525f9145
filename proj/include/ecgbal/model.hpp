#pragma once

// Small fully connected classifier with manual backpropagation and Adam.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ecgbal/losses.hpp"

namespace ecgbal {

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // row-major outputs x inputs
  std::vector<double> bias;     // outputs

  std::span<const double> row(std::size_t o) const { return {weights.data() + o * inputs, inputs}; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Affine layers with ReLU between them; the last layer emits logits.
struct ModelParams {
  std::vector<DenseLayer> layers;

  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t output_size() const { return layers.empty() ? 0 : layers.back().outputs; }
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// sizes = {input, hidden..., outputs}. He-uniform weights, zero biases.
ModelParams init_model(const std::vector<std::size_t>& sizes, std::uint64_t seed);
ModelParams zero_model(const std::vector<std::size_t>& sizes);

PredictionVector forward(const ModelParams& m, std::span<const double> x);

// Same shapes as ModelParams; holds d(loss)/d(parameter).
using ParamGrads = ModelParams;

ParamGrads zero_grads_like(const ModelParams& m);

// Backpropagates evaluate_loss(cfg, forward(m, x), target) and adds the
// parameter gradient, times `weight`, into `grads`. Returns the loss value.
double accumulate_gradient(const ModelParams& m, std::span<const double> x, std::size_t target,
                           const LossConfig& cfg, ParamGrads& grads, double weight = 1.0);

// Gradient of the mean loss over a batch.
ParamGrads backward(const ModelParams& m, std::span<const std::vector<double>> inputs,
                    std::span<const std::size_t> targets, const LossConfig& cfg,
                    double* mean_loss = nullptr);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  ModelParams first_moment;
  ModelParams second_moment;
};

AdamState make_adam_state(const ModelParams& m);
void adam_step(ModelParams& params, AdamState& state, const ParamGrads& grads, double lr);

// Flat views over every weight and bias, in layer order (weights then bias).
std::vector<double> flatten(const ModelParams& m);
void unflatten(std::span<const double> flat, ModelParams& m);

// Text format; values round-trip exactly.
void write_model(const ModelParams& m, std::ostream& out);
ModelParams read_model(std::istream& in);

}  // namespace ecgbal
