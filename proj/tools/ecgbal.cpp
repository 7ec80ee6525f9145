// Command-line front end: synth, analyze, encode, resample, gradcheck, train,
// eval and experiment. Exit codes: 0 success, 1 usage or configuration error,
// 2 data error, 3 verification failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ecgbal/channel_equalizer.hpp"
#include "ecgbal/ecg_data.hpp"
#include "ecgbal/error.hpp"
#include "ecgbal/experiment.hpp"
#include "ecgbal/imbalance.hpp"
#include "ecgbal/kernels.hpp"
#include "ecgbal/keyvalue.hpp"
#include "ecgbal/losses.hpp"
#include "ecgbal/trainer.hpp"

namespace fs = std::filesystem;
using namespace ecgbal;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerification = 3;

int cmd_synth(const fs::path& spec_file, const fs::path& out) {
  const KeyValueConfig kv = KeyValueConfig::load(spec_file);
  const SynthSpec spec = read_synth_spec(kv);
  kv.reject_unused();
  const Dataset d = generate_synthetic(spec);
  write_csv(d, out);
  std::cout << "wrote " << d.size() << " records to " << out.string() << '\n';
  return 0;
}

int cmd_analyze(const fs::path& data, const std::optional<fs::path>& out) {
  const Dataset d = load_directory(data);
  if (d.empty()) throw EmptyDataset("no records in '" + data.string() + "'");
  const ChannelMagnitudeStats stats = channel_stats(d);
  if (out) {
    write_channel_stats_csv(stats, d.class_names(), *out);
  } else {
    const fs::path tmp = fs::temp_directory_path() / "ecgbal_stats.csv";
    write_channel_stats_csv(stats, d.class_names(), tmp);
    std::ifstream in(tmp);
    std::cout << in.rdbuf();
    fs::remove(tmp);
  }
  return 0;
}

int cmd_encode(const fs::path& data, const fs::path& out, const PipelineConfig& cfg) {
  const Dataset d = load_directory(data);
  fs::create_directories(out);
  for (const auto& r : d.records()) {
    const EncodedImage img = cme_pipeline(r, cfg);
    write_image_csv(img, out / (r.record_id() + ".csv"));
    write_image_bin(img, out / (r.record_id() + ".bin"));
  }
  std::cout << "encoded " << d.size() << " records (" << cfg.height << "x" << cfg.width << ")\n";
  return 0;
}

int cmd_resample(const fs::path& data, std::optional<double> alpha, std::uint64_t seed,
                 const fs::path& out) {
  const Dataset d = load_directory(data);
  const auto before = d.class_histogram();
  Dataset result = d;
  if (alpha) result = resample(d, longtail_counts(before, *alpha), seed);
  write_csv(result, out);
  write_histogram_csv(d.class_names(), before, out / "histogram_before.csv");
  write_histogram_csv(d.class_names(), result.class_histogram(), out / "histogram_after.csv");
  std::cout << "kept " << result.size() << " of " << d.size() << " records\n";
  return 0;
}

int cmd_gradcheck(const LossConfig& cfg, std::size_t trials, std::uint64_t seed, double tol,
                  double h) {
  const GradcheckReport r = gradcheck(cfg, trials, seed, tol, h);
  std::printf("loss=%s trials=%zu max_rel_error=%.3e tolerance=%.3e %s\n",
              std::string(loss_kind_name(cfg.kind)).c_str(), r.trials, r.max_error, r.tolerance,
              r.passed ? "PASS" : "FAIL");
  return r.passed ? 0 : kExitVerification;
}

int cmd_train(const fs::path& data, const fs::path& config, const fs::path& out,
              const std::optional<fs::path>& log) {
  const KeyValueConfig kv = KeyValueConfig::load(config);
  const TrainConfig cfg = read_train_config(kv, true);
  kv.reject_unused();
  const Dataset d = load_directory(data);
  const TrainResult result = train(d, cfg);
  save_trained_model({result.model, cfg.encode, d.class_names()}, out);
  if (log) {
    std::ofstream csv(*log, std::ios::binary);
    csv << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, result.epoch_mean_loss[e]);
      csv << buf;
    }
  }
  if (!result.epoch_mean_loss.empty()) {
    std::printf("trained %zu epochs, final mean loss %.6f\n", result.epoch_mean_loss.size(),
                result.epoch_mean_loss.back());
  }
  return 0;
}

int cmd_eval(const fs::path& data, const fs::path& model_file, const std::optional<fs::path>& out) {
  const TrainedModel model = load_trained_model(model_file);
  const Dataset d = load_directory(data);
  if (d.num_classes() != model.class_names.size()) {
    throw DataError("dataset has " + std::to_string(d.num_classes()) + " classes, model has " +
                    std::to_string(model.class_names.size()));
  }
  const Metrics m = evaluate(model.params, d, model.encode);
  if (out) write_metrics_csv(m, d.class_names(), *out);
  std::printf("accuracy=%.4f macro_f1=%.4f\n", m.accuracy, m.macro_f1);
  return 0;
}

int cmd_experiment(const fs::path& spec_file, const fs::path& out, std::size_t jobs) {
  const ExperimentSpec spec = load_experiment_spec(spec_file);
  const auto rows = run_experiment(spec, jobs);
  write_results_csv(rows, out);
  std::cout << format_results_csv(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-magnitude equalization and imbalance-aware losses for multi-lead ECG"};
  app.require_subcommand(1);
  std::string kernel_choice;
  app.add_option("--kernels", kernel_choice, "Force the kernel backend")
      ->check(CLI::IsMember({"scalar", "avx2"}));

  fs::path spec, out, data, config, model;
  std::optional<fs::path> out_opt, log_opt;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--spec", spec, "Synthetic dataset spec (key = value)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "Output directory")->required();

  auto* analyze = app.add_subcommand("analyze", "Per-channel magnitude statistics");
  analyze->add_option("--data", data, "Dataset directory")->required();
  analyze->add_option("--out", out_opt, "Output CSV (default: stdout)");

  PipelineConfig pipe;
  std::string stat = "rms";
  auto* encode = app.add_subcommand("encode", "Apply the CME pipeline and export images");
  encode->add_option("--data", data, "Dataset directory")->required();
  encode->add_option("--out", out, "Output directory")->required();
  encode->add_option("--height", pipe.height, "Image rows")->capture_default_str();
  encode->add_option("--width", pipe.width, "Image columns")->capture_default_str();
  encode->add_option("--skip", pipe.skip, "Leading samples dropped")->capture_default_str();
  encode->add_option("--take", pipe.take, "Samples kept after skip")->capture_default_str();
  encode->add_option("--stat", stat, "Channel magnitude statistic")->check(CLI::IsMember({"rms", "l2"}));

  std::optional<double> alpha;
  bool no_resample = false;
  std::uint64_t seed = 0;
  auto* resample_cmd = app.add_subcommand("resample", "Long-tail resampling");
  resample_cmd->add_option("--data", data, "Dataset directory")->required();
  auto* alpha_opt = resample_cmd->add_option("--alpha", alpha, "Imbalance factor in (0, 1]");
  auto* none_opt = resample_cmd->add_flag("--no-resample", no_resample, "Keep the original distribution");
  alpha_opt->excludes(none_opt);
  resample_cmd->add_option("--seed", seed, "Random seed")->required();
  resample_cmd->add_option("--out", out, "Output directory")->required();

  std::string loss_name = "iwl";
  std::size_t trials = 100;
  double tol = 1e-4, h = 1e-6;
  LossConfig loss_cfg;
  auto* grad = app.add_subcommand("gradcheck", "Compare analytical and finite-difference loss gradients");
  grad->add_option("--loss", loss_name, "iwl, ce, focal, cb, cb_focal or ldam")->required();
  grad->add_option("--trials", trials, "Random instances")->capture_default_str();
  grad->add_option("--seed", seed, "Random seed")->capture_default_str();
  grad->add_option("--tol", tol, "Maximum relative error")->capture_default_str();
  grad->add_option("--step", h, "Central-difference step")->capture_default_str();
  grad->add_option("--beta", loss_cfg.iwl.beta, "IWL temperature")->capture_default_str();
  grad->add_option("--epsilon", loss_cfg.iwl.epsilon, "IWL epsilon")->capture_default_str();
  grad->add_option("--gamma", loss_cfg.focal_gamma, "Focal gamma")->capture_default_str();
  grad->add_option("--cb-beta", loss_cfg.cb_beta, "Class-balanced beta")->capture_default_str();
  grad->add_option("--mu", loss_cfg.ldam_mu, "LDAM largest margin")->capture_default_str();
  grad->add_option("--s", loss_cfg.ldam_s, "LDAM logit scale")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train a classifier");
  train_cmd->add_option("--data", data, "Training dataset directory")->required();
  train_cmd->add_option("--config", config, "Training config (key = value)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out, "Model file")->required();
  train_cmd->add_option("--log", log_opt, "Per-epoch loss CSV");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model");
  eval_cmd->add_option("--data", data, "Test dataset directory")->required();
  eval_cmd->add_option("--model", model, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out_opt, "Metrics CSV");

  std::size_t jobs = 1;
  auto* experiment = app.add_subcommand("experiment", "Run a loss/beta/alpha/encode grid");
  experiment->add_option("--spec", spec, "Experiment spec (key = value)")->required()->check(CLI::ExistingFile);
  experiment->add_option("--out", out, "Results CSV")->required();
  experiment->add_option("--jobs", jobs, "Worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (kernel_choice == "scalar") kernels::force_backend(kernels::Backend::Scalar);
    if (kernel_choice == "avx2") kernels::force_backend(kernels::Backend::Avx2);

    if (*synth) return cmd_synth(spec, out);
    if (*analyze) return cmd_analyze(data, out_opt);
    if (*encode) {
      pipe.stat = stat == "l2" ? MagnitudeStat::L2Norm : MagnitudeStat::Rms;
      return cmd_encode(data, out, pipe);
    }
    if (*resample_cmd) {
      if (!alpha && !no_resample) {
        std::cerr << "resample: one of --alpha or --no-resample is required\n";
        return kExitUsage;
      }
      return cmd_resample(data, alpha, seed, out);
    }
    if (*grad) {
      loss_cfg.kind = parse_loss_kind(loss_name);
      return cmd_gradcheck(loss_cfg, trials, seed, tol, h);
    }
    if (*train_cmd) return cmd_train(data, config, out, log_opt);
    if (*eval_cmd) return cmd_eval(data, model, out_opt);
    if (*experiment) return cmd_experiment(spec, out, jobs);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
