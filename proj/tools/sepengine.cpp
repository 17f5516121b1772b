// Copyright 2026 The sepengine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line driver: synth | train | engine | eval | report.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "sepengine/error.hpp"
#include "sepengine/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sepengine;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitStarved = 4;

struct Common {
  std::string config;
  std::string run_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config (missing keys take defaults)");
  cmd->add_option("--run-dir", c.run_dir, "Run directory (overrides output_dir)");
  cmd->add_option("--threads", c.threads, "Worker threads for gradient evaluation");
  cmd->add_option("--seed", c.seed, "Master seed");
}

RunConfig Resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : LoadRunConfig(c.config);
  if (!c.run_dir.empty()) cfg.output_dir = c.run_dir;
  if (c.threads) cfg.threads = *c.threads;
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query-conditioned source separation with an iterative data engine"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  AddCommon(synth, common);

  auto* train = app.add_subcommand("train", "Train a separator on the artificial mixtures");
  AddCommon(train, common);
  std::optional<int> epochs;
  std::optional<double> silence_rate, step;
  std::string name = "model";
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--silence-rate", silence_rate, "Silence augmentation probability");
  train->add_option("--step", step, "Optimizer step size");
  train->add_option("--name", name, "Model name (checkpoints/<name>.json)");

  auto* engine = app.add_subcommand("engine", "Run data-engine iterations");
  AddCommon(engine, common);
  std::string checkpoint;
  std::optional<int> iterations, first_epochs, later_epochs;
  std::optional<double> itt_db, sst_db;
  engine->add_option("--checkpoint", checkpoint, "Starting checkpoint (default checkpoints/model.json)");
  engine->add_option("--iterations", iterations, "Number of engine iterations");
  engine->add_option("--itt-db", itt_db, "ITT tier threshold in dB");
  engine->add_option("--sst-db", sst_db, "SST tier threshold in dB");
  engine->add_option("--first-epochs", first_epochs, "Epochs of the first iteration");
  engine->add_option("--later-epochs", later_epochs, "Epochs of later iterations");
  engine->add_option("--silence-rate", silence_rate, "Silence augmentation probability");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on the evaluation probes");
  AddCommon(eval, common);
  std::string predictor = "model";
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate (default checkpoints/model.json)");
  eval->add_option("--name", name, "Output name (eval/<name>/)");
  eval->add_option("--predict", predictor, "model, stems or mixture");

  auto* report = app.add_subcommand("report", "Render summary tables of a finished run");
  AddCommon(report, common);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = Resolve(common);
    if (epochs) cfg.separator.epochs = *epochs;
    if (silence_rate) cfg.separator.silence_rate = *silence_rate;
    if (step) cfg.separator.optimizer.step = *step;
    if (iterations) cfg.engine.iterations = *iterations;
    if (itt_db) cfg.engine.thresholds.itt_db = *itt_db;
    if (sst_db) cfg.engine.thresholds.sst_db = *sst_db;
    if (first_epochs) cfg.engine.schedule.first_epochs = *first_epochs;
    if (later_epochs) cfg.engine.schedule.later_epochs = *later_epochs;
    cfg.Validate();
    const fs::path run = RunDirectory(cfg);
    const fs::path ckpt = checkpoint.empty() ? run / "checkpoints" / "model.json" : fs::path(checkpoint);

    if (*synth) {
      const auto s = CmdSynth(cfg);
      std::cout << "wrote " << s.clean << " clean tracks, " << s.train << " train, " << s.valid
                << " valid, " << s.eval << " eval and " << s.natural << " natural clips to "
                << (run / "corpus").string() << "\n";
    } else if (*train) {
      const auto s = CmdTrain(cfg, name);
      std::cout << "trained " << s.epoch_loss.size() << " epochs; validation SDRi "
                << s.valid_sdri << " dB, SISDRi " << s.valid_sisdri << " dB\n"
                << "checkpoint " << s.checkpoint.string() << "\n";
    } else if (*engine) {
      const auto s = CmdEngine(cfg, ckpt);
      std::cout << "baseline validation SDRi " << s.baseline_sdri << " dB\n";
      for (const auto& r : s.reports) {
        std::cout << "iteration " << r.iteration << ": processed " << r.clips_processed
                  << ", accepted itt " << r.accepted_itt << " sst " << r.accepted_sst
                  << " (total " << r.accepted_total << "), validation SDRi " << r.validation_sdri
                  << " dB\n";
        if (r.starved) {
          std::cerr << "warning: iteration " << r.iteration << " accepted no clips\n";
        }
      }
      std::cout << "checkpoint " << s.checkpoint.string() << "\n";
      if (s.starved) {
        std::cerr << "warning: the engine accepted no clips; training used only the originals\n";
        return kExitStarved;
      }
    } else if (*eval) {
      const auto s = CmdEval(cfg, ckpt, name, PredictorFromString(predictor));
      for (const auto& [k, v] : s.aggregates) std::cout << k << " " << v << "\n";
    } else if (*report) {
      std::cout << CmdReport(run);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
