#include "ecgbal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "csv_util.hpp"
#include "ecgbal/error.hpp"
#include "ecgbal/imbalance.hpp"

namespace ecgbal {

namespace {

std::vector<double> parse_gains(const KeyValueConfig& kv, std::size_t channels) {
  const auto text = kv.string("data.gains");
  if (!text) return {};
  if (text->rfind("geom:", 0) == 0) {
    const auto parts = detail::split_fields(std::string_view(*text).substr(5), ':');
    const auto first = parts.size() == 2 ? detail::parse_double(parts[0]) : std::nullopt;
    const auto last = parts.size() == 2 ? detail::parse_double(parts[1]) : std::nullopt;
    if (!first || !last || !(*first > 0.0) || !(*last > 0.0)) {
      throw SpecError("data.gains geom form is geom:<first>:<last> with positive values");
    }
    std::vector<double> gains(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      const double t = channels == 1 ? 0.0 : static_cast<double>(c) / static_cast<double>(channels - 1);
      gains[c] = *first * std::pow(*last / *first, t);
    }
    return gains;
  }
  std::vector<double> gains;
  for (const auto field : detail::split_fields(*text)) {
    const auto v = detail::parse_double(field);
    if (!v) throw SpecError("data.gains has a non-numeric entry '" + std::string(field) + "'");
    gains.push_back(*v);
  }
  return gains;
}

}  // namespace

SynthSpec read_synth_spec(const KeyValueConfig& kv) {
  SynthSpec s;
  s.num_classes = kv.count_or("data.classes", s.num_classes);
  s.channels = kv.count_or("data.channels", s.channels);
  s.length = kv.count_or("data.length", s.length);
  s.sample_rate = kv.real_or("data.sample_rate", s.sample_rate);
  s.noise_sd = kv.real_or("data.noise_sd", s.noise_sd);
  s.seed = kv.seed_or("data.seed", s.seed);
  s.base_rate_hz = kv.real_or("data.base_rate_hz", s.base_rate_hz);
  s.rate_spacing_hz = kv.real_or("data.rate_spacing_hz", s.rate_spacing_hz);
  s.class_names = kv.list("data.class_names");
  if (kv.contains("data.counts") && kv.contains("data.head_count")) {
    throw SpecError("give either data.counts or data.head_count, not both");
  }
  if (kv.contains("data.counts")) {
    s.per_class_counts = kv.count_list("data.counts");
  } else {
    s.per_class_counts.assign(s.num_classes, kv.count_or("data.head_count", 640));
  }
  s.channel_gain = parse_gains(kv, s.channels);
  return s;
}

TrainConfig read_train_config(const KeyValueConfig& kv, bool single_run) {
  TrainConfig cfg = TrainConfig::desk_scale();
  cfg.epochs = kv.count_or("train.epochs", cfg.epochs);
  cfg.learning_rate = kv.real_or("train.lr", cfg.learning_rate);
  cfg.batch_size = kv.count_or("train.batch_size", cfg.batch_size);
  if (kv.contains("model.hidden")) cfg.hidden = kv.count_list("model.hidden");

  auto& loss = cfg.loss;
  loss.iwl.epsilon = kv.real_or("iwl.epsilon", loss.iwl.epsilon);
  const std::string base = kv.string_or("iwl.log_base", "e");
  if (base == "e") loss.iwl.base = LogBase::Natural;
  else if (base == "10") loss.iwl.base = LogBase::Ten;
  else throw ConfigError("iwl.log_base must be e or 10");
  loss.iwl.stop_weight_gradient = kv.flag_or("iwl.stop_gradient", false);
  loss.focal_gamma = kv.real_or("focal.gamma", loss.focal_gamma);
  loss.cb_beta = kv.real_or("cb.beta", loss.cb_beta);
  loss.ldam_mu = kv.real_or("ldam.mu", loss.ldam_mu);
  loss.ldam_s = kv.real_or("ldam.s", loss.ldam_s);

  auto& enc = cfg.encode;
  enc.cme.skip = kv.count_or("cme.skip", enc.cme.skip);
  enc.cme.take = kv.count_or("cme.take", enc.cme.take);
  enc.cme.height = kv.count_or("image.height", enc.cme.height);
  enc.cme.width = kv.count_or("image.width", enc.cme.width);
  const std::string stat = kv.string_or("cme.stat", "rms");
  if (stat == "rms") enc.cme.stat = MagnitudeStat::Rms;
  else if (stat == "l2") enc.cme.stat = MagnitudeStat::L2Norm;
  else throw ConfigError("cme.stat must be rms or l2");
  enc.raw_skip = kv.count_or("raw.skip", enc.raw_skip);
  enc.raw_take = kv.count_or("raw.take", enc.raw_take);

  if (single_run) {
    loss.kind = parse_loss_kind(kv.string_or("loss", "iwl"));
    loss.iwl.beta = kv.real_or("iwl.beta", loss.iwl.beta);
    enc.kind = parse_encoding(kv.string_or("encode", "cme"));
    cfg.seed = kv.seed_or("seed", 0);
  }
  return cfg;
}

ExperimentSpec read_experiment_spec(const KeyValueConfig& kv) {
  ExperimentSpec spec;
  for (const auto& name : kv.list("loss")) spec.losses.push_back(parse_loss_kind(name));
  spec.betas = kv.real_list("beta");
  for (const auto& a : kv.list("alpha")) {
    if (a == "none") {
      spec.alphas.push_back(std::nullopt);
      continue;
    }
    const auto v = detail::parse_double(a);
    if (!v || !(*v > 0.0 && *v <= 1.0)) throw ConfigError("alpha entries must lie in (0, 1] or be 'none'");
    spec.alphas.push_back(*v);
  }
  for (const auto& e : kv.list("encode")) spec.encodes.push_back(parse_encoding(e));
  for (std::size_t s : kv.count_list("seeds")) spec.seeds.push_back(s);
  for (double b : spec.betas) {
    if (!(b >= 0.0)) throw ConfigError("beta entries must be >= 0");
  }
  // Absent grids collapse to one default value; an absent loss grid stays empty.
  if (!kv.contains("alpha")) spec.alphas.push_back(std::nullopt);
  if (!kv.contains("encode")) spec.encodes.push_back(Encoding::CmeImage);
  if (!kv.contains("seeds")) spec.seeds.push_back(0);

  if (const auto dir = kv.string("data.dir")) spec.data_dir = *dir;
  spec.synth = read_synth_spec(kv);
  spec.train_fraction = kv.real_or("split.train_fraction", spec.train_fraction);
  const std::string test = kv.string_or("split.test", "stratified");
  if (test == "balanced") spec.test_set = TestSet::Balanced;
  else if (test != "stratified") throw ConfigError("split.test must be stratified or balanced");
  spec.test_per_class = kv.count_or("split.test_per_class", spec.test_per_class);
  if (spec.test_set == TestSet::Balanced && spec.data_dir) {
    throw ConfigError("split.test = balanced needs synthetic data (no data.dir)");
  }
  spec.train = read_train_config(kv, false);
  kv.reject_unused();
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& file) {
  return read_experiment_spec(KeyValueConfig::load(file));
}

std::vector<CellKey> expand_grid(const ExperimentSpec& spec) {
  std::vector<CellKey> cells;
  for (LossKind loss : spec.losses) {
    std::vector<std::optional<double>> betas;
    if (loss == LossKind::Iwl) {
      for (double b : spec.betas) betas.emplace_back(b);
      if (spec.betas.empty()) betas.emplace_back(spec.train.loss.iwl.beta);
    } else {
      betas.emplace_back(std::nullopt);
    }
    for (const auto& beta : betas) {
      for (const auto& alpha : spec.alphas) {
        for (Encoding enc : spec.encodes) cells.push_back({loss, beta, alpha, enc});
      }
    }
  }
  return cells;
}

Dataset experiment_dataset(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.data_dir) return load_directory(*spec.data_dir);
  SynthSpec s = spec.synth;
  s.seed = spec.synth.seed + seed;
  return generate_synthetic(s);
}

Dataset balanced_test_dataset(const ExperimentSpec& spec, std::uint64_t seed) {
  SynthSpec s = spec.synth;
  s.per_class_counts.assign(s.num_classes, spec.test_per_class);
  s.seed = (spec.synth.seed + seed) ^ 0xD1B54A32D192ED03ULL;
  return generate_synthetic(s);
}

namespace {

struct PreparedSplit {
  EncodedSet train;
  EncodedSet test;
  std::size_t num_classes = 0;
};

PreparedSplit prepare(const ExperimentSpec& spec, const Dataset& base,
                      const std::optional<double>& alpha, Encoding encode, std::uint64_t seed) {
  Dataset working = base;
  if (alpha) working = resample(base, longtail_counts(base.class_histogram(), *alpha), seed);
  EncodeConfig enc = spec.train.encode;
  enc.kind = encode;
  if (spec.test_set == TestSet::Balanced) {
    return {encode_dataset(working, enc), encode_dataset(balanced_test_dataset(spec, seed), enc),
            base.num_classes()};
  }
  auto [train_set, test_set] = split(working, SplitSpec{spec.train_fraction, seed});
  return {encode_dataset(train_set, enc), encode_dataset(test_set, enc), base.num_classes()};
}

RunResult train_and_score(const ExperimentSpec& spec, const PreparedSplit& data,
                          const CellKey& key, std::uint64_t seed) {
  TrainConfig cfg = spec.train;
  cfg.seed = seed;
  cfg.loss.kind = key.loss;
  if (key.beta) cfg.loss.iwl.beta = *key.beta;
  cfg.encode.kind = key.encode;
  const TrainResult trained = train_encoded(data.train, data.num_classes, cfg);
  const Metrics m = evaluate(trained.model, data.test, data.num_classes);
  return {m.accuracy, m.macro_f1};
}

}  // namespace

RunResult run_single(const ExperimentSpec& spec, const Dataset& base, const CellKey& key,
                     std::uint64_t seed) {
  return train_and_score(spec, prepare(spec, base, key.alpha, key.encode, seed), key, seed);
}

std::pair<double, double> mean_and_sd(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::size_t jobs) {
  const std::vector<CellKey> cells = expand_grid(spec);
  std::vector<ResultRow> rows(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) rows[i].key = cells[i];
  if (cells.empty() || spec.seeds.empty()) return rows;
  jobs = std::max<std::size_t>(1, jobs);

  for (std::uint64_t seed : spec.seeds) {
    const Dataset base = experiment_dataset(spec, seed);
    // Cells sharing (alpha, encode) share the resampled, split and encoded data.
    for (const auto& alpha : spec.alphas) {
      for (Encoding enc : spec.encodes) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i].alpha == alpha && cells[i].encode == enc) members.push_back(i);
        }
        if (members.empty()) continue;
        const PreparedSplit data = prepare(spec, base, alpha, enc, seed);
        std::vector<RunResult> results(members.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
          for (std::size_t j = next++; j < members.size(); j = next++) {
            results[j] = train_and_score(spec, data, cells[members[j]], seed);
          }
        };
        const std::size_t n_threads = std::min(jobs, members.size());
        std::vector<std::thread> pool;
        for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        for (std::size_t j = 0; j < members.size(); ++j) rows[members[j]].runs.push_back(results[j]);
      }
    }
  }

  for (auto& row : rows) {
    std::vector<double> acc, f1;
    for (const auto& r : row.runs) {
      acc.push_back(r.accuracy);
      f1.push_back(r.macro_f1);
    }
    std::tie(row.accuracy_mean, row.accuracy_sd) = mean_and_sd(acc);
    std::tie(row.macro_f1_mean, row.macro_f1_sd) = mean_and_sd(f1);
  }
  return rows;
}

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

std::string plain(double v) {
  std::string s;
  detail::append_double(s, v);
  return s;
}

}  // namespace

std::string format_results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "loss,beta,alpha,encode,seeds,accuracy_mean,accuracy_sd,macro_f1_mean,macro_f1_sd\n";
  for (const auto& row : rows) {
    out += std::string(loss_kind_name(row.key.loss)) + ',';
    out += (row.key.beta ? plain(*row.key.beta) : "NA") + ',';
    out += (row.key.alpha ? plain(*row.key.alpha) : "none") + ',';
    out += encoding_name(row.key.encode) + ',';
    out += std::to_string(row.runs.size()) + ',';
    out += percent(row.accuracy_mean) + ',' + percent(row.accuracy_sd) + ',';
    out += percent(row.macro_f1_mean) + ',' + percent(row.macro_f1_sd) + '\n';
  }
  return out;
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  out << format_results_csv(rows);
  if (!out) throw DataError("failed writing '" + file.string() + "'");
}

}  // namespace ecgbal
