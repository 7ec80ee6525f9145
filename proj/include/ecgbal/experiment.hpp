#pragma once

// Grid runner over {loss, beta, alpha, encode} x seeds, and the config-file
// schema shared with the CLI.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ecgbal/ecg_data.hpp"
#include "ecgbal/keyvalue.hpp"
#include "ecgbal/trainer.hpp"

namespace ecgbal {

// data.classes, data.channels, data.length, data.sample_rate, data.counts or
// data.head_count, data.gains (list, or geom:<first>:<last>), data.noise_sd,
// data.seed, data.base_rate_hz, data.rate_spacing_hz, data.class_names.
SynthSpec read_synth_spec(const KeyValueConfig& kv);

// Everything but the grids: train.*, model.hidden, loss parameters, encoder
// parameters. Single-valued `loss`, `encode`, `seed` and `iwl.beta` are read
// when `single_run` is true.
TrainConfig read_train_config(const KeyValueConfig& kv, bool single_run);

enum class TestSet { Stratified, Balanced };

struct ExperimentSpec {
  std::vector<LossKind> losses;
  std::vector<double> betas;                 // applies to iwl only
  std::vector<std::optional<double>> alphas; // nullopt: keep the original distribution
  std::vector<Encoding> encodes;
  std::vector<std::uint64_t> seeds;

  std::optional<std::filesystem::path> data_dir;  // otherwise synthesize
  SynthSpec synth;
  double train_fraction = 0.9;
  // Balanced: train on the whole resampled set and score on a fresh synthetic
  // draw holding test_per_class records of every class.
  TestSet test_set = TestSet::Stratified;
  std::size_t test_per_class = 50;
  TrainConfig train;
};

ExperimentSpec read_experiment_spec(const KeyValueConfig& kv);
ExperimentSpec load_experiment_spec(const std::filesystem::path& file);

struct CellKey {
  LossKind loss = LossKind::Iwl;
  std::optional<double> beta;   // set only for iwl
  std::optional<double> alpha;
  Encoding encode = Encoding::CmeImage;
};

// Cells in output order: loss, then beta, then alpha, then encode. Non-iwl
// losses appear once regardless of the beta grid.
std::vector<CellKey> expand_grid(const ExperimentSpec& spec);

struct RunResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct ResultRow {
  CellKey key;
  std::vector<RunResult> runs;  // one per seed, in seed order
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;
  double macro_f1_mean = 0.0;
  double macro_f1_sd = 0.0;
};

// Base dataset for one seed: loaded from data_dir or synthesized with
// synth.seed + seed.
Dataset experiment_dataset(const ExperimentSpec& spec, std::uint64_t seed);

// Held-out balanced test set for TestSet::Balanced, independent of the training draw.
Dataset balanced_test_dataset(const ExperimentSpec& spec, std::uint64_t seed);

// resample (alpha) -> stratified split -> encode -> train -> evaluate on the test split.
RunResult run_single(const ExperimentSpec& spec, const Dataset& base, const CellKey& key,
                     std::uint64_t seed);

// `jobs` worker threads share the cells of each seed; results do not depend on it.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::size_t jobs = 1);

// Mean and sample standard deviation (0 for fewer than two values).
std::pair<double, double> mean_and_sd(const std::vector<double>& values);

std::string format_results_csv(const std::vector<ResultRow>& rows);
void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& file);

}  // namespace ecgbal
