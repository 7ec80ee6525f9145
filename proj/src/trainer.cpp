#include "ecgbal/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "csv_util.hpp"
#include "ecgbal/error.hpp"

namespace ecgbal {

Encoding parse_encoding(const std::string& name) {
  if (name == "cme" || name == "cme_image") return Encoding::CmeImage;
  if (name == "raw") return Encoding::Raw;
  throw ConfigError("unknown encoding '" + name + "' (expected cme or raw)");
}

std::string encoding_name(Encoding e) { return e == Encoding::CmeImage ? "cme" : "raw"; }

std::vector<double> encode_input(const EcgRecord& r, const EncodeConfig& cfg) {
  if (cfg.kind == Encoding::CmeImage) return cme_pipeline(r, cfg.cme).pixels;
  const EcgRecord w = window_record(r, cfg.raw_skip, cfg.raw_take);
  return {w.samples().begin(), w.samples().end()};
}

std::size_t encoded_size(const EncodeConfig& cfg, std::size_t channels) {
  if (cfg.kind == Encoding::CmeImage) return cfg.cme.height * cfg.cme.width;
  return channels * cfg.raw_take;
}

EncodedSet encode_dataset(const Dataset& d, const EncodeConfig& cfg) {
  EncodedSet out;
  out.inputs.reserve(d.size());
  out.targets.reserve(d.size());
  for (const auto& r : d.records()) {
    if (!r.label()) throw DataError("record '" + r.record_id() + "' has no label");
    out.inputs.push_back(encode_input(r, cfg));
    out.targets.push_back(*r.label());
  }
  return out;
}

TrainConfig TrainConfig::desk_scale() {
  TrainConfig cfg;
  cfg.epochs = 30;
  return cfg;
}

TrainResult train(const Dataset& d_train, const TrainConfig& cfg) {
  if (d_train.empty()) throw ConfigError("cannot train on an empty dataset");
  return train_encoded(encode_dataset(d_train, cfg.encode), d_train.num_classes(), cfg);
}

TrainResult train_encoded(const EncodedSet& data, std::size_t num_classes, const TrainConfig& cfg) {
  if (data.inputs.empty()) throw ConfigError("cannot train on an empty dataset");
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");

  LossConfig loss = cfg.loss;
  if (loss.class_counts.empty() &&
      (loss.kind == LossKind::ClassBalanced || loss.kind == LossKind::CbFocal ||
       loss.kind == LossKind::Ldam)) {
    loss.class_counts.assign(num_classes, 0);
    for (std::size_t t : data.targets) ++loss.class_counts.at(t);
    for (auto& n : loss.class_counts) n = std::max<std::size_t>(n, 1);
  }
  validate(loss, num_classes);

  std::vector<std::size_t> sizes{data.inputs.front().size()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(num_classes);

  TrainResult result;
  result.model = init_model(sizes, cfg.seed);
  AdamState adam = make_adam_state(result.model);
  std::mt19937_64 shuffler(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

  const std::size_t n = data.inputs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  ParamGrads grads = zero_grads_like(result.model);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      for (auto& layer : grads.layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
      }
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        epoch_loss += accumulate_gradient(result.model, data.inputs[idx], data.targets[idx], loss,
                                          grads, w);
      }
      adam_step(result.model, adam, grads, cfg.learning_rate);
    }
    result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
  const std::size_t M = confusion.size();
  Metrics out;
  out.confusion = confusion;
  out.precision.assign(M, 0.0);
  out.recall.assign(M, 0.0);
  out.f1.assign(M, 0.0);
  std::size_t total = 0, correct = 0;
  std::vector<std::size_t> predicted(M, 0), actual(M, 0);
  for (std::size_t t = 0; t < M; ++t) {
    for (std::size_t p = 0; p < M; ++p) {
      total += confusion[t][p];
      actual[t] += confusion[t][p];
      predicted[p] += confusion[t][p];
    }
    correct += confusion[t][t];
  }
  out.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  double f1_sum = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double tp = static_cast<double>(confusion[m][m]);
    out.precision[m] = predicted[m] ? tp / static_cast<double>(predicted[m]) : 0.0;
    out.recall[m] = actual[m] ? tp / static_cast<double>(actual[m]) : 0.0;
    const double denom = out.precision[m] + out.recall[m];
    out.f1[m] = denom > 0.0 ? 2.0 * out.precision[m] * out.recall[m] / denom : 0.0;
    f1_sum += out.f1[m];
  }
  out.macro_f1 = M ? f1_sum / static_cast<double>(M) : 0.0;
  return out;
}

std::size_t predict_class(const ModelParams& m, std::span<const double> x) {
  const PredictionVector p = forward(m, x);
  return static_cast<std::size_t>(std::max_element(p.logits.begin(), p.logits.end()) -
                                  p.logits.begin());
}

Metrics evaluate(const ModelParams& m, const EncodedSet& data, std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> confusion(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    ++confusion.at(data.targets[i]).at(predict_class(m, data.inputs[i]));
  }
  return metrics_from_confusion(confusion);
}

Metrics evaluate(const ModelParams& m, const Dataset& d_test, const EncodeConfig& encode) {
  return evaluate(m, encode_dataset(d_test, encode), d_test.num_classes());
}

void save_trained_model(const TrainedModel& m, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  const auto& e = m.encode;
  out << "ecgbal-model 1\n";
  out << "encode " << encoding_name(e.kind) << '\n';
  out << "cme " << e.cme.skip << ' ' << e.cme.take << ' ' << e.cme.height << ' ' << e.cme.width
      << ' ' << (e.cme.stat == MagnitudeStat::Rms ? "rms" : "l2") << '\n';
  out << "raw " << e.raw_skip << ' ' << e.raw_take << '\n';
  out << "classes " << m.class_names.size();
  for (const auto& name : m.class_names) out << ' ' << name;
  out << '\n';
  write_model(m.params, out);
  if (!out) throw DataError("failed writing '" + file.string() + "'");
}

TrainedModel load_trained_model(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open model '" + file.string() + "'");
  auto fail = [&](const std::string& why) {
    return DataError("bad model file '" + file.string() + "': " + why);
  };
  TrainedModel m;
  std::string word, kind, stat;
  int version = 0;
  if (!(in >> word >> version) || word != "ecgbal-model" || version != 1) throw fail("header");
  if (!(in >> word >> kind) || word != "encode") throw fail("encode line");
  m.encode.kind = parse_encoding(kind);
  if (!(in >> word >> m.encode.cme.skip >> m.encode.cme.take >> m.encode.cme.height >>
        m.encode.cme.width >> stat) ||
      word != "cme") {
    throw fail("cme line");
  }
  m.encode.cme.stat = stat == "l2" ? MagnitudeStat::L2Norm : MagnitudeStat::Rms;
  if (!(in >> word >> m.encode.raw_skip >> m.encode.raw_take) || word != "raw") throw fail("raw line");
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "classes") throw fail("classes line");
  m.class_names.resize(count);
  for (auto& name : m.class_names) {
    if (!(in >> name)) throw fail("class names");
  }
  m.params = read_model(in);
  if (m.params.output_size() != m.class_names.size()) throw fail("output size != class count");
  return m;
}

void write_metrics_csv(const Metrics& metrics, const std::vector<std::string>& class_names,
                       const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  std::string line = "class,precision,recall,f1";
  for (const auto& name : class_names) line += ",pred_" + name;
  out << line << '\n';
  for (std::size_t m = 0; m < class_names.size(); ++m) {
    line = class_names[m] + ',';
    detail::append_double(line, metrics.precision[m]);
    line += ',';
    detail::append_double(line, metrics.recall[m]);
    line += ',';
    detail::append_double(line, metrics.f1[m]);
    for (std::size_t n : metrics.confusion[m]) line += ',' + std::to_string(n);
    out << line << '\n';
  }
  line = "accuracy,";
  detail::append_double(line, metrics.accuracy);
  out << line << '\n';
  line = "macro_f1,";
  detail::append_double(line, metrics.macro_f1);
  out << line << '\n';
}

}  // namespace ecgbal
