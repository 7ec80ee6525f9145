#include "ecgbal/model.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "csv_util.hpp"
#include "ecgbal/error.hpp"
#include "ecgbal/kernels.hpp"

namespace ecgbal {

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

namespace {

void check_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw ConfigError("a model needs at least an input and an output size");
  for (std::size_t s : sizes) {
    if (s == 0) throw ConfigError("layer sizes must be positive");
  }
}

}  // namespace

ModelParams zero_model(const std::vector<std::size_t>& sizes) {
  check_sizes(sizes);
  ModelParams m;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    layer.inputs = sizes[l];
    layer.outputs = sizes[l + 1];
    layer.weights.assign(layer.inputs * layer.outputs, 0.0);
    layer.bias.assign(layer.outputs, 0.0);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

ModelParams init_model(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  ModelParams m = zero_model(sizes);
  std::mt19937_64 rng(seed);
  for (auto& layer : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weights) w = dist(rng);
  }
  return m;
}

ParamGrads zero_grads_like(const ModelParams& m) {
  ParamGrads g = m;
  for (auto& layer : g.layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  return g;
}

namespace {

// activations[0] is the input; activations[l + 1] is the output of layer l
// (ReLU applied to every layer but the last).
void forward_all(const ModelParams& m, std::span<const double> x,
                 std::vector<std::vector<double>>& activations) {
  if (x.size() != m.input_size()) {
    throw DimensionError("model expects " + std::to_string(m.input_size()) + " inputs, got " +
                         std::to_string(x.size()));
  }
  activations.resize(m.layers.size() + 1);
  activations[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const DenseLayer& layer = m.layers[l];
    const bool hidden = l + 1 < m.layers.size();
    auto& out = activations[l + 1];
    out.resize(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double z = kernels::dot(layer.row(o), activations[l]) + layer.bias[o];
      out[o] = hidden ? std::max(z, 0.0) : z;
    }
  }
}

}  // namespace

PredictionVector forward(const ModelParams& m, std::span<const double> x) {
  std::vector<std::vector<double>> acts;
  forward_all(m, x, acts);
  return make_prediction(acts.back());
}

double accumulate_gradient(const ModelParams& m, std::span<const double> x, std::size_t target,
                           const LossConfig& cfg, ParamGrads& grads, double weight) {
  thread_local std::vector<std::vector<double>> acts;
  forward_all(m, x, acts);
  const LossOutput loss = evaluate_loss(cfg, acts.back(), target);

  std::vector<double> delta(loss.grad_logits);
  for (double& d : delta) d *= weight;
  std::vector<double> upstream;
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const DenseLayer& layer = m.layers[l];
    DenseLayer& g = grads.layers[l];
    const std::span<const double> input = acts[l];
    if (l > 0) upstream.assign(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      g.bias[o] += d;
      kernels::axpy(d, input, std::span<double>(g.weights).subspan(o * layer.inputs, layer.inputs));
      if (l > 0) kernels::axpy(d, layer.row(o), upstream);
    }
    if (l > 0) {
      for (std::size_t i = 0; i < layer.inputs; ++i) {
        if (!(input[i] > 0.0)) upstream[i] = 0.0;
      }
      delta.swap(upstream);
    }
  }
  return loss.value;
}

ParamGrads backward(const ModelParams& m, std::span<const std::vector<double>> inputs,
                    std::span<const std::size_t> targets, const LossConfig& cfg,
                    double* mean_loss) {
  if (inputs.size() != targets.size()) throw DimensionError("inputs and targets differ in count");
  if (inputs.empty()) throw ConfigError("backward needs a nonempty batch");
  ParamGrads grads = zero_grads_like(m);
  const double w = 1.0 / static_cast<double>(inputs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    total += accumulate_gradient(m, inputs[i], targets[i], cfg, grads, w);
  }
  if (mean_loss) *mean_loss = total / static_cast<double>(inputs.size());
  return grads;
}

AdamState make_adam_state(const ModelParams& m) {
  AdamState s;
  s.first_moment = zero_grads_like(m);
  s.second_moment = zero_grads_like(m);
  return s;
}

void adam_step(ModelParams& params, AdamState& state, const ParamGrads& grads, double lr) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = std::sqrt(1.0 - std::pow(state.beta2, t));
  const kernels::AdamCoefficients c{lr * bc2 / bc1, state.beta1, state.beta2, state.epsilon * bc2};
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& p = params.layers[l];
    auto& m1 = state.first_moment.layers[l];
    auto& m2 = state.second_moment.layers[l];
    const auto& g = grads.layers[l];
    kernels::adam_update(p.weights, g.weights, m1.weights, m2.weights, c);
    kernels::adam_update(p.bias, g.bias, m1.bias, m2.bias, c);
  }
}

std::vector<double> flatten(const ModelParams& m) {
  std::vector<double> flat;
  flat.reserve(m.parameter_count());
  for (const auto& l : m.layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void unflatten(std::span<const double> flat, ModelParams& m) {
  if (flat.size() != m.parameter_count()) throw DimensionError("flat parameter length mismatch");
  std::size_t pos = 0;
  for (auto& l : m.layers) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), l.weights.size(), l.weights.begin());
    pos += l.weights.size();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.begin());
    pos += l.bias.size();
  }
}

void write_model(const ModelParams& m, std::ostream& out) {
  out << "layers " << m.layers.size() << '\n';
  std::string line;
  auto emit = [&](std::span<const double> values) {
    line.clear();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ' ';
      detail::append_double(line, values[i]);
    }
    out << line << '\n';
  };
  for (const auto& l : m.layers) {
    out << "dense " << l.inputs << ' ' << l.outputs << '\n';
    for (std::size_t o = 0; o < l.outputs; ++o) emit(l.row(o));
    emit(l.bias);
  }
}

ModelParams read_model(std::istream& in) {
  auto fail = [](const std::string& why) { return DataError("bad model file: " + why); };
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "layers") throw fail("missing 'layers' header");
  ModelParams m;
  for (std::size_t l = 0; l < count; ++l) {
    DenseLayer layer;
    if (!(in >> word >> layer.inputs >> layer.outputs) || word != "dense") {
      throw fail("missing 'dense' header for layer " + std::to_string(l));
    }
    layer.weights.resize(layer.inputs * layer.outputs);
    layer.bias.resize(layer.outputs);
    for (auto* values : {&layer.weights, &layer.bias}) {
      for (double& v : *values) {
        if (!(in >> word)) throw fail("truncated parameters");
        const auto parsed = detail::parse_double(word);
        if (!parsed || !std::isfinite(*parsed)) throw fail("non-finite parameter '" + word + "'");
        v = *parsed;
      }
    }
    if (!m.layers.empty() && m.layers.back().outputs != layer.inputs) {
      throw fail("layer dimensions do not chain");
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

}  // namespace ecgbal
