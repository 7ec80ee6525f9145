#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecgbal/channel_equalizer.hpp"
#include "ecgbal/ecg_data.hpp"
#include "ecgbal/losses.hpp"
#include "ecgbal/model.hpp"

namespace ecgbal {

enum class Encoding { CmeImage, Raw };

Encoding parse_encoding(const std::string& name);  // "cme" | "raw"
std::string encoding_name(Encoding e);

struct EncodeConfig {
  Encoding kind = Encoding::CmeImage;
  PipelineConfig cme;          // used by CmeImage
  std::size_t raw_skip = 0;    // used by Raw
  std::size_t raw_take = 3000;
};

// Flattened model input: the CME image (H * W) or the windowed raw record (C * take).
std::vector<double> encode_input(const EcgRecord& r, const EncodeConfig& cfg);
std::size_t encoded_size(const EncodeConfig& cfg, std::size_t channels);

struct EncodedSet {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> targets;
};

EncodedSet encode_dataset(const Dataset& d, const EncodeConfig& cfg);

struct TrainConfig {
  std::size_t epochs = 150;
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  LossConfig loss;
  EncodeConfig encode;
  std::vector<std::size_t> hidden{64, 32};

  // 30 epochs; everything else as above.
  static TrainConfig desk_scale();
};

struct TrainResult {
  ModelParams model;
  std::vector<double> epoch_mean_loss;
};

// Class counts for cb / cb_focal / ldam default to the training histogram
// (classes absent from training count as 1).
TrainResult train(const Dataset& d_train, const TrainConfig& cfg);
TrainResult train_encoded(const EncodedSet& data, std::size_t num_classes, const TrainConfig& cfg);

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);
std::size_t predict_class(const ModelParams& m, std::span<const double> x);
Metrics evaluate(const ModelParams& m, const EncodedSet& data, std::size_t num_classes);
Metrics evaluate(const ModelParams& m, const Dataset& d_test, const EncodeConfig& encode);

// A model plus what is needed to encode records for it.
struct TrainedModel {
  ModelParams params;
  EncodeConfig encode;
  std::vector<std::string> class_names;
};

void save_trained_model(const TrainedModel& m, const std::filesystem::path& file);
TrainedModel load_trained_model(const std::filesystem::path& file);

void write_metrics_csv(const Metrics& metrics, const std::vector<std::string>& class_names,
                       const std::filesystem::path& file);

}  // namespace ecgbal
