#include "ecgbal/ecg_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "ecgbal/error.hpp"
#include "ecgbal/kernels.hpp"
#include "csv_util.hpp"

namespace ecgbal {

EcgRecord::EcgRecord(std::string record_id, std::size_t channels, std::size_t length,
                     std::vector<double> samples, double sample_rate,
                     std::optional<std::size_t> label)
    : record_id_(std::move(record_id)),
      channels_(channels),
      length_(length),
      samples_(std::move(samples)),
      sample_rate_(sample_rate),
      label_(label) {
  if (channels_ == 0 || length_ == 0) throw MalformedRecord(record_id_, "empty shape");
  if (samples_.size() != channels_ * length_) {
    throw MalformedRecord(record_id_, "sample count does not match C x L");
  }
  if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_)) {
    throw MalformedRecord(record_id_, "sample rate must be positive");
  }
  for (std::size_t c = 0; c < channels_; ++c) {
    for (std::size_t t = 0; t < length_; ++t) {
      if (!std::isfinite(samples_[c * length_ + t])) throw NonFiniteSample(record_id_, t, c);
    }
  }
}

EcgRecord EcgRecord::with_id(std::string id) const {
  EcgRecord r = *this;
  r.record_id_ = std::move(id);
  return r;
}

EcgRecord EcgRecord::with_samples(std::vector<double> samples) const {
  return EcgRecord(record_id_, channels_, length_, std::move(samples), sample_rate_, label_);
}

Dataset::Dataset(std::vector<EcgRecord> records, std::vector<std::string> class_names,
                 std::uint64_t seed)
    : records_(std::move(records)), class_names_(std::move(class_names)), seed_(seed) {
  if (class_names_.size() < 2) throw SpecError("a dataset needs at least two classes");
  for (const auto& r : records_) {
    if (r.channels() != records_.front().channels()) {
      throw MalformedRecord(r.record_id(), "channel count differs from the rest of the dataset");
    }
    if (r.sample_rate() != records_.front().sample_rate()) {
      throw MalformedRecord(r.record_id(), "sample rate differs from the rest of the dataset");
    }
    if (r.label() && *r.label() >= class_names_.size()) {
      throw UnknownClass("record '" + r.record_id() + "' has label " + std::to_string(*r.label()) +
                         " but only " + std::to_string(class_names_.size()) + " classes exist");
    }
  }
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(class_names_.size(), 0);
  for (const auto& r : records_) {
    if (r.label()) ++h[*r.label()];
  }
  return h;
}

const std::vector<std::string>& canonical_class_names() {
  static const std::vector<std::string> names{"RBBB", "AF",  "Normal", "STD", "I-AVB",
                                              "PVC",  "PAC", "STE",    "LBBB"};
  return names;
}

std::size_t floor_count(double x) {
  if (!(x >= 0.0)) return 0;
  const double r = std::round(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x))) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::floor(x));
}

// ---------------------------------------------------------------------------
// CSV ingestion

EcgRecord load_record_csv(const std::filesystem::path& file, const std::string& record_id,
                          std::optional<std::size_t> label, double sample_rate) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open record file '" + file.string() + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (rows.empty()) columns = fields.size();
    if (fields.size() != columns) {
      throw MalformedRecord(record_id, "row " + std::to_string(rows.size()) + " has " +
                                           std::to_string(fields.size()) + " values, expected " +
                                           std::to_string(columns));
    }
    std::vector<double> row(columns);
    for (std::size_t c = 0; c < columns; ++c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v) {
        throw MalformedRecord(record_id, "unparsable value '" + std::string(fields[c]) + "'");
      }
      if (!std::isfinite(*v)) throw NonFiniteSample(record_id, rows.size(), c);
      row[c] = *v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || columns == 0) throw MalformedRecord(record_id, "no samples");

  const std::size_t length = rows.size();
  std::vector<double> samples(columns * length);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t c = 0; c < columns; ++c) samples[c * length + t] = rows[t][c];
  }
  return EcgRecord(record_id, columns, length, std::move(samples), sample_rate, label);
}

Dataset load_csv(const std::filesystem::path& manifest,
                 const std::vector<std::string>& class_names) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest '" + manifest.string() + "'");
  const auto base = manifest.parent_path();

  std::string line;
  if (!std::getline(in, line)) throw DataError("manifest '" + manifest.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "file,record_id,label,sample_rate") {
    throw DataError("manifest header must be 'file,record_id,label,sample_rate'");
  }

  std::vector<EcgRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 4) {
      throw DataError("manifest line " + std::to_string(line_no) + " needs 4 fields");
    }
    const std::string record_id(fields[1]);
    const auto label = detail::parse_index(fields[2]);
    const auto rate = detail::parse_double(fields[3]);
    if (!label) throw DataError("manifest line " + std::to_string(line_no) + ": bad label");
    if (!rate) throw DataError("manifest line " + std::to_string(line_no) + ": bad sample rate");
    if (*label >= class_names.size()) {
      throw UnknownClass("record '" + record_id + "' has label " + std::to_string(*label) +
                         " but only " + std::to_string(class_names.size()) + " classes exist");
    }
    records.push_back(load_record_csv(base / std::string(fields[0]), record_id, *label, *rate));
  }
  return Dataset(std::move(records), class_names);
}

void write_csv(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  manifest << "file,record_id,label,sample_rate\n";
  for (const auto& r : d.records()) {
    const std::string file = r.record_id() + ".csv";
    std::ofstream out(dir / file, std::ios::binary);
    std::string row;
    for (std::size_t t = 0; t < r.length(); ++t) {
      row.clear();
      for (std::size_t c = 0; c < r.channels(); ++c) {
        if (c) row += ',';
        detail::append_double(row, r.at(c, t));
      }
      row += '\n';
      out << row;
    }
    if (!out) throw DataError("failed writing '" + (dir / file).string() + "'");
    std::string rate;
    detail::append_double(rate, r.sample_rate());
    manifest << file << ',' << r.record_id() << ',' << (r.label() ? std::to_string(*r.label()) : "")
             << ',' << rate << '\n';
  }
  std::ofstream classes(dir / "classes.txt", std::ios::binary);
  for (const auto& name : d.class_names()) classes << name << '\n';
  if (!manifest || !classes) throw DataError("failed writing dataset to '" + dir.string() + "'");
}

Dataset load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.csv")) {
    throw DataError("no manifest.csv in '" + dir.string() + "'");
  }
  std::vector<std::string> names;
  if (std::ifstream classes(dir / "classes.txt"); classes) {
    std::string line;
    while (std::getline(classes, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) names.push_back(line);
    }
  }
  if (names.empty()) names = canonical_class_names();
  return load_csv(dir / "manifest.csv", names);
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate(const SynthSpec& s) {
  if (s.num_classes < 2) throw SpecError("synthetic spec needs at least two classes");
  if (s.per_class_counts.size() != s.num_classes) {
    throw SpecError("per_class_counts has " + std::to_string(s.per_class_counts.size()) +
                    " entries for " + std::to_string(s.num_classes) + " classes");
  }
  if (s.channels == 0 || s.length == 0) throw SpecError("channels and length must be positive");
  if (!(s.sample_rate > 0.0)) throw SpecError("sample_rate must be positive");
  if (!s.channel_gain.empty()) {
    if (s.channel_gain.size() != s.channels) {
      throw SpecError("channel_gain needs one entry per channel");
    }
    for (double g : s.channel_gain) {
      if (!(g > 0.0) || !std::isfinite(g)) throw SpecError("channel_gain entries must be > 0");
    }
  }
  if (!(s.noise_sd >= 0.0) || !std::isfinite(s.noise_sd)) {
    throw SpecError("noise_sd must be >= 0");
  }
  if (!(s.base_rate_hz > 0.0)) throw SpecError("base_rate_hz must be positive");
  if (!(s.rate_spacing_hz >= 1.0)) throw SpecError("rate_spacing_hz must be >= 1 Hz");
  if (!s.class_names.empty() && s.class_names.size() != s.num_classes) {
    throw SpecError("class_names needs one entry per class");
  }
}

std::vector<std::string> synth_class_names(const SynthSpec& s) {
  if (!s.class_names.empty()) return s.class_names;
  if (s.num_classes == canonical_class_names().size()) return canonical_class_names();
  std::vector<std::string> names;
  for (std::size_t m = 0; m < s.num_classes; ++m) names.push_back("class" + std::to_string(m));
  return names;
}

// Wrapped distance on the unit circle of beat phase.
double phase_distance(double phase, double centre) {
  double d = phase - centre;
  d -= std::round(d);
  return d;
}

}  // namespace

std::vector<double> synthetic_template(const SynthSpec& spec, std::size_t m) {
  const std::size_t C = spec.channels;
  const std::size_t L = spec.length;
  const double rate = spec.base_rate_hz + static_cast<double>(m) * spec.rate_spacing_hz;

  // Three beat components (P-, QRS- and T-like bumps). Widths depend on the
  // class; each lead sees its own projection of the components.
  constexpr double centres[3] = {0.18, 0.42, 0.70};
  constexpr double base_width[3] = {0.035, 0.015, 0.060};
  double width[3];
  for (int k = 0; k < 3; ++k) {
    width[k] = base_width[k] * (1.0 + 0.25 * static_cast<double>((m * (k + 2) + k) % 5));
  }

  std::vector<double> out(C * L);
  for (std::size_t c = 0; c < C; ++c) {
    double amp[3];
    for (int k = 0; k < 3; ++k) {
      amp[k] = std::cos(kTwoPi * (0.13 * static_cast<double>(c) + 0.31 * k +
                                  0.17 * static_cast<double>(m)));
    }
    amp[1] *= 2.5;
    const double wander_phase = 0.5 * static_cast<double>(c);
    auto row = std::span<double>(out).subspan(c * L, L);
    for (std::size_t t = 0; t < L; ++t) {
      const double time = static_cast<double>(t) / spec.sample_rate;
      const double phase = time * rate - std::floor(time * rate);
      double v = 0.1 * std::sin(kTwoPi * 0.3 * time + wander_phase);
      for (int k = 0; k < 3; ++k) {
        const double d = phase_distance(phase, centres[k]) / width[k];
        v += amp[k] * std::exp(-0.5 * d * d);
      }
      row[t] = v;
    }
    const double rms = std::sqrt(kernels::sum_squares(row) / static_cast<double>(L));
    kernels::scale(rms > 0.0 ? 1.0 / rms : 1.0, row, row);
  }
  return out;
}

Dataset generate_synthetic(const SynthSpec& spec) {
  validate(spec);
  const std::size_t C = spec.channels;
  const std::size_t L = spec.length;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<EcgRecord> records;
  std::size_t serial = 0;
  for (std::size_t m = 0; m < spec.num_classes; ++m) {
    if (spec.per_class_counts[m] == 0) continue;
    std::vector<double> tmpl = synthetic_template(spec, m);
    for (std::size_t c = 0; c < C; ++c) {
      const double gain = spec.channel_gain.empty() ? 1.0 : spec.channel_gain[c];
      auto row = std::span<double>(tmpl).subspan(c * L, L);
      kernels::scale(gain, row, row);
    }
    for (std::size_t i = 0; i < spec.per_class_counts[m]; ++i) {
      std::vector<double> samples = tmpl;
      if (spec.noise_sd > 0.0) {
        for (double& v : samples) v += spec.noise_sd * noise(rng);
      }
      char id[32];
      std::snprintf(id, sizeof id, "rec%06zu", serial++);
      records.emplace_back(id, C, L, std::move(samples), spec.sample_rate, m);
    }
  }
  return Dataset(std::move(records), synth_class_names(spec), spec.seed);
}

// ---------------------------------------------------------------------------

EcgRecord window_record(const EcgRecord& r, std::size_t skip, std::size_t take) {
  if (take == 0 || skip > r.length() || take > r.length() - skip) {
    throw WindowOutOfRange("window [" + std::to_string(skip) + ", " +
                           std::to_string(skip + take) + ") exceeds record '" + r.record_id() +
                           "' of length " + std::to_string(r.length()));
  }
  std::vector<double> out(r.channels() * take);
  for (std::size_t c = 0; c < r.channels(); ++c) {
    const auto src = r.channel(c).subspan(skip, take);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(c * take));
  }
  return EcgRecord(r.record_id(), r.channels(), take, std::move(out), r.sample_rate(), r.label());
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& s) {
  if (d.empty()) throw EmptyDataset("cannot split an empty dataset");
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(d.num_classes());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& label = d.records()[i].label();
    if (!label) throw DataError("record '" + d.records()[i].record_id() + "' has no label");
    by_class[*label].push_back(i);
  }

  std::mt19937_64 rng(s.seed);
  std::vector<EcgRecord> train;
  std::vector<EcgRecord> test;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_train =
        std::min(members.size(), floor_count(static_cast<double>(members.size()) * s.train_fraction));
    for (std::size_t j = 0; j < members.size(); ++j) {
      (j < n_train ? train : test).push_back(d.records()[members[j]]);
    }
  }
  return {Dataset(std::move(train), d.class_names(), s.seed),
          Dataset(std::move(test), d.class_names(), s.seed)};
}

}  // namespace ecgbal
