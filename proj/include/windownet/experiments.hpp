#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "windownet/checkpoint.hpp"
#include "windownet/keyvalue.hpp"
#include "windownet/metrics.hpp"
#include "windownet/synthlab.hpp"
#include "windownet/trainer.hpp"
#include "windownet/windowing.hpp"

namespace windownet {

/// How raw 12-bit pixels are turned into model input for one run.
struct InputMode {
  enum class Kind {
    Quantized,  ///< quantize to `bits`, values used as-is on the (0, 2^bits - 1) scale
    Window,     ///< fixed window, (window(px) - L) * 255 / width
    Raw,        ///< raw pixels for a model with a trainable front-end
  };
  Kind kind = Kind::Raw;
  int bits = 8;
  WindowSpec window{2048.0, 4096.0};

  static InputMode quantized(int bits) { return {Kind::Quantized, bits, {}}; }
  static InputMode fixed_window(WindowSpec w) { return {Kind::Window, 8, w}; }
  static InputMode raw() { return {}; }

  ImageTensor apply(const ImageTensor& img) const;
  LabeledSet apply(const std::vector<SynthSample>& samples) const;
  void write(KeyValues& kv, const std::string& prefix = "input.") const;
  static InputMode read(const KeyValues& kv, const std::string& prefix = "input.");
};

enum class ExperimentKind { BitDepth, Grid, MultiWindow };
std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

/// The 15 levels x 5 widths fixed-window grid followed by the (2048, 4096)
/// no-windowing baseline: 76 windows.
std::vector<WindowSpec> full_window_grid();
/// Desk default: levels {1250, 2250, 3250} x widths {500, 1000}, then the baseline.
std::vector<WindowSpec> desk_window_grid();

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::BitDepth;
  /// Dataset directory written by save_dataset; when empty the dataset is
  /// generated in memory from `synth`.
  std::filesystem::path dataset;
  SynthConfig synth;
  TrainConfig train = desk_train_config();
  std::uint64_t seed = 0;
  int low_bits = 8;
  std::vector<WindowSpec> grid = desk_window_grid();
  std::vector<WindowSpec> init_windows = default_init_windows();
  /// Concurrent training runs; results never depend on this.
  int workers = 1;

  /// Training settings used by the experiments: the optimizer schedule of the
  /// library defaults with a larger step size and a 25-epoch cap.
  static TrainConfig desk_train_config();

  void validate() const;
  KeyValues to_keyvalues() const;
  /// Reads `[experiment]`, `[synth]` and `[train]` sections; missing keys keep defaults.
  static ExperimentSpec from_keyvalues(const KeyValues& kv);
  static ExperimentSpec load(const std::filesystem::path& path);
  std::uint64_t fingerprint() const;
};

struct RunResult {
  std::string name;
  std::string arm;  ///< "8bit", "12bit", "window", "windownet", "nowindow"
  InputMode input;
  std::string front;  ///< model front kind
  std::uint64_t fingerprint = 0;
  EvalResult val;
  EvalResult test;
  std::vector<EpochRecord> history;
  std::vector<WindowSpec> init_windows;  ///< clamped front-end only
  Checkpoint best;
  double seconds = 0.0;
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::BitDepth;
  std::uint64_t seed = 0;
  std::uint64_t spec_fingerprint = 0;
  std::uint64_t dataset_fingerprint = 0;
  std::vector<std::string> class_names;
  std::vector<RunResult> runs;

  const RunResult& run(const std::string& name) const;
};

using ProgressFn = std::function<void(const std::string& run, const EpochRecord&)>;

/// Trains one model on `input`-preprocessed splits, selects the best-validation
/// checkpoint and evaluates it on validation and test data.
RunResult train_run(const std::string& name, const std::string& arm, const InputMode& input,
                    WindowNetModel model, const TrainConfig& config, const SynthDataset& data,
                    std::uint64_t dataset_fingerprint, const ProgressFn& progress = {});

SynthDataset experiment_dataset(const ExperimentSpec& spec);

/// 8-bit and 12-bit arms without windowing; identical backbone initialization.
ExperimentResult run_bitdepth(const ExperimentSpec& spec, const ProgressFn& progress = {});
/// One single-window run per grid entry.
ExperimentResult run_grid(const ExperimentSpec& spec, const ProgressFn& progress = {});
/// WindowNet, the unclamped "no windowing" front-end and the 8-bit baseline.
ExperimentResult run_multiwindow(const ExperimentSpec& spec, const ProgressFn& progress = {});
ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});

struct RankedWindow {
  WindowSpec window;
  std::string run;
  double auc = 0.0;
};
/// Per class, grid windows ordered by validation AUC (highest first, grid order
/// on ties). Classes without a defined AUC get an empty list.
std::vector<std::vector<RankedWindow>> rank_grid_windows(const ExperimentResult& grid);
/// Union of every class's top-k windows (baseline excluded), deduplicated in
/// first-seen order, with the full-range window appended.
std::vector<WindowSpec> select_top_windows(const ExperimentResult& grid, int k = 3);

/// Writes auc.csv, table.csv, runs.csv, kind-specific tables, per-run
/// evaluation CSVs and checkpoints, summary.txt and manifest.txt into `dir`.
/// Wall-clock times go to timings.txt only, so every other file is a pure
/// function of the result.
void write_report(const ExperimentResult& result, const ExperimentSpec& spec, const std::filesystem::path& dir);

}  // namespace windownet
