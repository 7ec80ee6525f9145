#pragma once

// Classification losses over softmax logits, each returning the value and its
// exact gradient with respect to the logits.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecgbal {

struct PredictionVector {
  std::vector<double> logits;
  std::vector<double> probs;
};

std::vector<double> softmax(std::span<const double> logits);
PredictionVector make_prediction(std::span<const double> logits);

// -ln softmax(logits)[target], accurate when the target probability is close to 1.
double negative_log_prob(std::span<const double> logits, std::size_t target);

struct LossOutput {
  double value = 0.0;
  std::vector<double> grad_logits;
};

// Converts a one-hot vector to its class index; throws std::invalid_argument otherwise.
std::size_t one_hot_index(std::span<const double> y);

LossOutput cross_entropy(const PredictionVector& pred, std::size_t target);

enum class LogBase { Natural, Ten };

struct IwlConfig {
  double beta = 0.3;
  double epsilon = 1e-12;
  LogBase base = LogBase::Natural;
  // Treat the weight (log(10 / (p + eps)))^beta as a constant during backprop.
  bool stop_weight_gradient = false;
};

// (log(10 / (p + eps)))^beta
double iwl_weight(double p, const IwlConfig& cfg);

// weight(p) * (-log p) for the true-class probability p.
LossOutput iwl_loss(const PredictionVector& pred, std::size_t target, const IwlConfig& cfg = {});

// -(1 - p)^gamma * ln p
LossOutput focal_loss(const PredictionVector& pred, std::size_t target, double gamma);

enum class CbInner { CrossEntropy, Focal };

// Effective-number weights (1 - b) / (1 - b^n_m), rescaled to mean 1 over classes.
std::vector<double> class_balanced_weights(std::span<const std::size_t> class_counts,
                                           double cb_beta);

LossOutput class_balanced_loss(const PredictionVector& pred, std::size_t target, double cb_beta,
                               std::span<const std::size_t> class_counts, CbInner inner,
                               double gamma = 2.0);

// Delta_m proportional to n_m^(-1/4), largest margin equal to mu.
std::vector<double> ldam_margins(std::span<const std::size_t> class_counts, double mu);

// Cross-entropy of s * (logits - Delta_target * e_target).
LossOutput ldam_loss(const PredictionVector& pred, std::size_t target, double mu, double s,
                     std::span<const std::size_t> class_counts);

enum class LossKind { CrossEntropy, Iwl, Focal, ClassBalanced, CbFocal, Ldam };

// Accepts the config-file spellings: ce, iwl, focal, cb, cb_focal, ldam.
LossKind parse_loss_kind(std::string_view name);
std::string_view loss_kind_name(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::Iwl;
  IwlConfig iwl;
  double focal_gamma = 2.0;
  double cb_beta = 0.9999;
  double ldam_mu = 0.2;
  double ldam_s = 20.0;
  std::vector<std::size_t> class_counts;  // required by cb, cb_focal, ldam
};

// Throws ConfigError when parameters needed by `kind` are missing or out of range.
void validate(const LossConfig& cfg, std::size_t num_classes);

LossOutput evaluate_loss(const LossConfig& cfg, std::span<const double> logits,
                         std::size_t target);

// Mean of per-record losses, summed in record order.
double batch_loss(const LossConfig& cfg, std::span<const std::vector<double>> logits,
                  std::span<const std::size_t> targets);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_m) - f(x - h e_m)) / 2h.
std::vector<double> finite_difference_grad(const ScalarFunction& f, std::span<const double> x,
                                           double h = 1e-6);
std::vector<double> finite_difference_grad(const LossConfig& cfg, std::span<const double> logits,
                                           std::size_t target, double h = 1e-6);

// ||a - b||_2 / max(||a||_2, ||b||_2), or the absolute norm when both are below 1e-8.
double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric);

}  // namespace ecgbal

namespace ecgbal {

struct GradcheckReport {
  std::size_t trials = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Draws `trials` random (logits, target[, class counts]) instances for
// cfg.kind and compares the analytical gradient to finite_difference_grad.
// cfg's hyperparameters are kept; class counts are drawn per instance when the
// loss needs them.
GradcheckReport gradcheck(const LossConfig& cfg, std::size_t trials, std::uint64_t seed,
                          double tolerance = 1e-4, double h = 1e-6);

}  // namespace ecgbal
