#include "ecgbal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ecgbal/error.hpp"

namespace ecgbal {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t m = 0; m < logits.size(); ++m) {
    p[m] = std::exp(logits[m] - mx);
    total += p[m];
  }
  for (double& v : p) v /= total;
  return p;
}

PredictionVector make_prediction(std::span<const double> logits) {
  return {std::vector<double>(logits.begin(), logits.end()), softmax(logits)};
}

double negative_log_prob(std::span<const double> logits, std::size_t target) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  const double zt = logits[target];
  if (zt == mx) {
    double rest = 0.0;
    for (std::size_t m = 0; m < logits.size(); ++m) {
      if (m != target) rest += std::exp(logits[m] - zt);
    }
    return std::log1p(rest);
  }
  double total = 0.0;
  for (double z : logits) total += std::exp(z - mx);
  return std::log(total) - (zt - mx);
}

std::size_t one_hot_index(std::span<const double> y) {
  std::size_t hot = y.size();
  for (std::size_t m = 0; m < y.size(); ++m) {
    if (y[m] == 1.0 && hot == y.size()) hot = m;
    else if (y[m] != 0.0) throw std::invalid_argument("label vector is not one-hot");
  }
  if (hot == y.size()) throw std::invalid_argument("label vector is not one-hot");
  return hot;
}

namespace {

void check_target(const PredictionVector& pred, std::size_t target) {
  if (target >= pred.probs.size()) {
    throw DimensionError("target class " + std::to_string(target) + " out of range for " +
                         std::to_string(pred.probs.size()) + " logits");
  }
}

// Probability mass off the target, summed directly so it stays accurate as p -> 1.
double off_target_mass(const PredictionVector& pred, std::size_t target) {
  double q = 0.0;
  for (std::size_t m = 0; m < pred.probs.size(); ++m) {
    if (m != target) q += pred.probs[m];
  }
  return q;
}

// Any loss of the form L(p_target) has dL/dz_j = coef * (p_j - y_j) with
// coef = -p L'(p). The target entry p_t - 1 is written as -q.
std::vector<double> softmax_chain(const PredictionVector& pred, std::size_t target, double coef) {
  std::vector<double> g(pred.probs.size());
  for (std::size_t m = 0; m < g.size(); ++m) {
    g[m] = coef * (m == target ? -off_target_mass(pred, target) : pred.probs[m]);
  }
  return g;
}

}  // namespace

LossOutput cross_entropy(const PredictionVector& pred, std::size_t target) {
  check_target(pred, target);
  return {negative_log_prob(pred.logits, target), softmax_chain(pred, target, 1.0)};
}

double iwl_weight(double p, const IwlConfig& cfg) {
  const double scale = cfg.base == LogBase::Ten ? std::numbers::ln10 : 1.0;
  const double a = std::log(10.0 / (p + cfg.epsilon)) / scale;
  return std::pow(a, cfg.beta);
}

LossOutput iwl_loss(const PredictionVector& pred, std::size_t target, const IwlConfig& cfg) {
  check_target(pred, target);
  const double scale = cfg.base == LogBase::Ten ? std::numbers::ln10 : 1.0;
  const double p = pred.probs[target];
  const double nll = negative_log_prob(pred.logits, target) / scale;
  const double a = std::log(10.0 / (p + cfg.epsilon)) / scale;
  const double weight = std::pow(a, cfg.beta);

  // -p dL/dp = weight / scale + beta a^(beta-1) nll p / ((p + eps) scale)
  double coef = weight;
  if (!cfg.stop_weight_gradient) {
    coef += cfg.beta * std::pow(a, cfg.beta - 1.0) * nll * (p / (p + cfg.epsilon));
  }
  coef /= scale;
  return {weight * nll, softmax_chain(pred, target, coef)};
}

LossOutput focal_loss(const PredictionVector& pred, std::size_t target, double gamma) {
  check_target(pred, target);
  const double p = pred.probs[target];
  const double q = off_target_mass(pred, target);
  const double nll = negative_log_prob(pred.logits, target);
  const double modulator = std::pow(q, gamma);
  // -p dL/dp = q^gamma + gamma q^(gamma-1) p nll
  double coef = modulator;
  if (q > 0.0 && gamma != 0.0) coef += gamma * std::pow(q, gamma - 1.0) * p * nll;
  return {modulator * nll, softmax_chain(pred, target, coef)};
}

std::vector<double> class_balanced_weights(std::span<const std::size_t> class_counts,
                                           double cb_beta) {
  const std::size_t M = class_counts.size();
  std::vector<double> w(M);
  double total = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double effective = (1.0 - std::pow(cb_beta, static_cast<double>(class_counts[m])));
    w[m] = (1.0 - cb_beta) / effective;
    total += w[m];
  }
  for (double& v : w) v *= static_cast<double>(M) / total;
  return w;
}

LossOutput class_balanced_loss(const PredictionVector& pred, std::size_t target, double cb_beta,
                               std::span<const std::size_t> class_counts, CbInner inner,
                               double gamma) {
  check_target(pred, target);
  if (class_counts.size() != pred.probs.size()) {
    throw DimensionError("class_counts length does not match the number of logits");
  }
  const double w = class_balanced_weights(class_counts, cb_beta)[target];
  LossOutput out = inner == CbInner::Focal ? focal_loss(pred, target, gamma)
                                           : cross_entropy(pred, target);
  out.value *= w;
  for (double& g : out.grad_logits) g *= w;
  return out;
}

std::vector<double> ldam_margins(std::span<const std::size_t> class_counts, double mu) {
  std::vector<double> margin(class_counts.size());
  double largest = 0.0;
  for (std::size_t m = 0; m < margin.size(); ++m) {
    margin[m] = 1.0 / std::sqrt(std::sqrt(static_cast<double>(class_counts[m])));
    largest = std::max(largest, margin[m]);
  }
  for (double& v : margin) v *= mu / largest;
  return margin;
}

LossOutput ldam_loss(const PredictionVector& pred, std::size_t target, double mu, double s,
                     std::span<const std::size_t> class_counts) {
  check_target(pred, target);
  if (class_counts.size() != pred.logits.size()) {
    throw DimensionError("class_counts length does not match the number of logits");
  }
  std::vector<double> shifted(pred.logits);
  shifted[target] -= ldam_margins(class_counts, mu)[target];
  for (double& v : shifted) v *= s;
  LossOutput out = cross_entropy(make_prediction(shifted), target);
  for (double& g : out.grad_logits) g *= s;
  return out;
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "ce" || name == "cross_entropy") return LossKind::CrossEntropy;
  if (name == "iwl") return LossKind::Iwl;
  if (name == "focal") return LossKind::Focal;
  if (name == "cb" || name == "class_balanced") return LossKind::ClassBalanced;
  if (name == "cb_focal") return LossKind::CbFocal;
  if (name == "ldam") return LossKind::Ldam;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected iwl, ce, focal, cb, cb_focal or ldam)");
}

std::string_view loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: return "ce";
    case LossKind::Iwl: return "iwl";
    case LossKind::Focal: return "focal";
    case LossKind::ClassBalanced: return "cb";
    case LossKind::CbFocal: return "cb_focal";
    case LossKind::Ldam: return "ldam";
  }
  return "?";
}

void validate(const LossConfig& cfg, std::size_t num_classes) {
  switch (cfg.kind) {
    case LossKind::CrossEntropy:
      return;
    case LossKind::Iwl:
      if (!(cfg.iwl.beta >= 0.0)) throw ConfigError("iwl.beta must be >= 0");
      if (!(cfg.iwl.epsilon > 0.0)) throw ConfigError("iwl.epsilon must be > 0");
      return;
    case LossKind::Focal:
      if (!(cfg.focal_gamma >= 0.0)) throw ConfigError("focal.gamma must be >= 0");
      return;
    case LossKind::ClassBalanced:
    case LossKind::CbFocal:
    case LossKind::Ldam:
      break;
  }
  if (cfg.class_counts.size() != num_classes) {
    throw ConfigError(std::string(loss_kind_name(cfg.kind)) + " needs one class count per class");
  }
  for (std::size_t n : cfg.class_counts) {
    if (n == 0) throw ConfigError(std::string(loss_kind_name(cfg.kind)) + " needs positive class counts");
  }
  if (cfg.kind == LossKind::Ldam) {
    if (!(cfg.ldam_mu >= 0.0)) throw ConfigError("ldam.mu must be >= 0");
    if (!(cfg.ldam_s > 0.0)) throw ConfigError("ldam.s must be > 0");
  } else {
    if (!(cfg.cb_beta >= 0.0 && cfg.cb_beta < 1.0)) throw ConfigError("cb.beta must lie in [0, 1)");
    if (cfg.kind == LossKind::CbFocal && !(cfg.focal_gamma >= 0.0)) {
      throw ConfigError("focal.gamma must be >= 0");
    }
  }
}

LossOutput evaluate_loss(const LossConfig& cfg, std::span<const double> logits,
                         std::size_t target) {
  const PredictionVector pred = make_prediction(logits);
  switch (cfg.kind) {
    case LossKind::CrossEntropy: return cross_entropy(pred, target);
    case LossKind::Iwl: return iwl_loss(pred, target, cfg.iwl);
    case LossKind::Focal: return focal_loss(pred, target, cfg.focal_gamma);
    case LossKind::ClassBalanced:
      return class_balanced_loss(pred, target, cfg.cb_beta, cfg.class_counts, CbInner::CrossEntropy);
    case LossKind::CbFocal:
      return class_balanced_loss(pred, target, cfg.cb_beta, cfg.class_counts, CbInner::Focal,
                                 cfg.focal_gamma);
    case LossKind::Ldam: return ldam_loss(pred, target, cfg.ldam_mu, cfg.ldam_s, cfg.class_counts);
  }
  throw ConfigError("unhandled loss kind");
}

double batch_loss(const LossConfig& cfg, std::span<const std::vector<double>> logits,
                  std::span<const std::size_t> targets) {
  if (logits.size() != targets.size()) throw DimensionError("logits and targets differ in count");
  if (logits.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += evaluate_loss(cfg, logits[i], targets[i]).value;
  return total / static_cast<double>(logits.size());
}

std::vector<double> finite_difference_grad(const ScalarFunction& f, std::span<const double> x,
                                           double h) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t m = 0; m < x.size(); ++m) {
    probe[m] = x[m] + h;
    const double up = f(probe);
    probe[m] = x[m] - h;
    const double down = f(probe);
    probe[m] = x[m];
    g[m] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<double> finite_difference_grad(const LossConfig& cfg, std::span<const double> logits,
                                           std::size_t target, double h) {
  return finite_difference_grad(
      [&](std::span<const double> z) { return evaluate_loss(cfg, z, target).value; }, logits, h);
}

double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw DimensionError("gradient lengths differ");
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(std::max(na, nn));
  return denom < 1e-8 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}


GradcheckReport gradcheck(const LossConfig& cfg, std::size_t trials, std::uint64_t seed,
                          double tolerance, double h) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> classes(2, 12);
  std::uniform_int_distribution<std::size_t> counts(1, 1000);
  // LDAM logits are cosine-like scores; s * logits would otherwise saturate.
  const double range = cfg.kind == LossKind::Ldam ? 1.0 : 4.0;
  std::uniform_real_distribution<double> logit(-range, range);

  GradcheckReport report;
  report.trials = trials;
  report.tolerance = tolerance;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t M = classes(rng);
    std::vector<double> z(M);
    for (double& v : z) v = logit(rng);
    const std::size_t target = std::uniform_int_distribution<std::size_t>(0, M - 1)(rng);
    LossConfig instance = cfg;
    if (cfg.kind == LossKind::ClassBalanced || cfg.kind == LossKind::CbFocal ||
        cfg.kind == LossKind::Ldam) {
      instance.class_counts.resize(M);
      for (auto& n : instance.class_counts) n = counts(rng);
    }
    validate(instance, M);
    const LossOutput analytic = evaluate_loss(instance, z, target);
    const std::vector<double> numeric = finite_difference_grad(instance, z, target, h);
    report.max_error = std::max(report.max_error, gradient_relative_error(analytic.grad_logits, numeric));
  }
  report.passed = report.max_error < tolerance;
  return report;
}

}  // namespace ecgbal
