#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ecgbal {

// Multi-channel signal stored channel-major: channel c occupies
// samples [c * length, (c + 1) * length).
class EcgRecord {
 public:
  EcgRecord() = default;
  // Throws MalformedRecord on empty shape or size mismatch, NonFiniteSample on NaN/Inf.
  EcgRecord(std::string record_id, std::size_t channels, std::size_t length,
            std::vector<double> samples, double sample_rate,
            std::optional<std::size_t> label = std::nullopt);

  const std::string& record_id() const { return record_id_; }
  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  double sample_rate() const { return sample_rate_; }
  const std::optional<std::size_t>& label() const { return label_; }

  std::span<const double> channel(std::size_t c) const {
    return {samples_.data() + c * length_, length_};
  }
  std::span<const double> samples() const { return samples_; }
  double at(std::size_t c, std::size_t t) const { return samples_[c * length_ + t]; }

  EcgRecord with_id(std::string id) const;
  EcgRecord with_samples(std::vector<double> samples) const;

  friend bool operator==(const EcgRecord&, const EcgRecord&) = default;

 private:
  std::string record_id_;
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<double> samples_;
  double sample_rate_ = 0.0;
  std::optional<std::size_t> label_;
};

// Immutable collection of records sharing channel count and sample rate.
class Dataset {
 public:
  Dataset() = default;
  // Enforces: at least two class names, shared C and sample rate, label < M.
  Dataset(std::vector<EcgRecord> records, std::vector<std::string> class_names,
          std::uint64_t seed = 0);

  const std::vector<EcgRecord>& records() const { return records_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t num_classes() const { return class_names_.size(); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t channels() const { return records_.empty() ? 0 : records_.front().channels(); }
  double sample_rate() const { return records_.empty() ? 0.0 : records_.front().sample_rate(); }

  // Count of records per class; unlabeled records are not counted.
  std::vector<std::size_t> class_histogram() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<EcgRecord> records_;
  std::vector<std::string> class_names_;
  std::uint64_t seed_ = 0;
};

// Canonical CPSC2018 single-label diagnostic classes.
const std::vector<std::string>& canonical_class_names();

struct SplitSpec {
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
};

struct SynthSpec {
  std::size_t num_classes = 9;
  std::size_t channels = 12;
  std::size_t length = 3000;
  double sample_rate = 500.0;
  std::vector<std::size_t> per_class_counts;
  std::vector<double> channel_gain;  // length C, all > 0; empty means all ones
  double noise_sd = 0.05;
  std::uint64_t seed = 0;
  double base_rate_hz = 1.0;         // fundamental of class 0
  double rate_spacing_hz = 1.0;      // fundamental step between classes, >= 1
  std::vector<std::string> class_names;  // empty means canonical (M = 9) or class<m>
};

// Reads a manifest with header `file,record_id,label,sample_rate`; files are
// resolved relative to the manifest's directory.
Dataset load_csv(const std::filesystem::path& manifest,
                 const std::vector<std::string>& class_names = canonical_class_names());
// Reads a single record file (L rows x C columns, no header).
EcgRecord load_record_csv(const std::filesystem::path& file, const std::string& record_id,
                          std::optional<std::size_t> label, double sample_rate);

// Writes one CSV per record, manifest.csv and classes.txt into `dir`.
void write_csv(const Dataset& d, const std::filesystem::path& dir);
// Loads a directory written by write_csv (class names from classes.txt when present).
Dataset load_directory(const std::filesystem::path& dir);

Dataset generate_synthetic(const SynthSpec& spec);

// Noise-free waveform of one class, channel-major C x L, before channel gain.
// Every channel has unit RMS.
std::vector<double> synthetic_template(const SynthSpec& spec, std::size_t class_index);

EcgRecord window_record(const EcgRecord& r, std::size_t skip, std::size_t take);

// Stratified by class; train gets floor(n_m * train_fraction) of each class.
std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& s);

// floor(x), except values within a relative 1e-9 of an integer are taken as that
// integer. Closed-form counts like 640 * 0.05^1 are exact integers that pow() may
// land just below.
std::size_t floor_count(double x);

}  // namespace ecgbal
