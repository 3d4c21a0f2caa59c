#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "windownet/checkpoint.hpp"
#include "windownet/error.hpp"
#include "windownet/experiments.hpp"
#include "windownet/imagepipe.hpp"
#include "windownet/multiwindow.hpp"
#include "windownet/random.hpp"
#include "windownet/synthlab.hpp"
#include "windownet/trainer.hpp"
#include "windownet/windowing.hpp"

namespace fs = std::filesystem;
using namespace windownet;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kIo = 3, kData = 4 };

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir = ".";
};

/// Flags that override keys of the experiment/synth/train config.
struct Overrides {
  std::string dataset;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<int> batch;
  std::optional<int> workers;
  std::optional<int> n_train, n_val, n_test, size;
  std::optional<std::uint64_t> synth_seed;
  bool full_grid = false;

  void add_synth(CLI::App* app) {
    app->add_option("--n-train", n_train, "Training images")->check(CLI::PositiveNumber);
    app->add_option("--n-val", n_val, "Validation images")->check(CLI::PositiveNumber);
    app->add_option("--n-test", n_test, "Test images")->check(CLI::PositiveNumber);
    app->add_option("--size", size, "Image side length in pixels")->check(CLI::Range(8, 4096));
    app->add_option("--synth-seed", synth_seed, "Dataset generator seed");
  }
  void add_train(CLI::App* app) {
    app->add_option("--dataset", dataset, "Dataset directory (default: generate in memory)");
    app->add_option("--epochs", epochs, "Maximum epochs")->check(CLI::NonNegativeNumber);
    app->add_option("--lr", lr, "Initial learning rate")->check(CLI::PositiveNumber);
    app->add_option("--batch-size", batch, "Mini-batch size")->check(CLI::PositiveNumber);
    add_synth(app);
  }
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentSpec resolve_spec(const Globals& g, const Overrides& o) {
  ExperimentSpec s;
  if (!g.config.empty()) s = ExperimentSpec::from_keyvalues(KeyValues::parse(read_text(g.config)));
  if (g.seed) s.seed = *g.seed;
  if (!o.dataset.empty()) s.dataset = o.dataset;
  if (o.epochs) s.train.max_epochs = *o.epochs;
  if (o.lr) s.train.learning_rate = *o.lr;
  if (o.batch) s.train.batch_size = *o.batch;
  if (o.workers) s.workers = *o.workers;
  if (o.n_train) s.synth.n_train = *o.n_train;
  if (o.n_val) s.synth.n_val = *o.n_val;
  if (o.n_test) s.synth.n_test = *o.n_test;
  if (o.size) s.synth.image_size = *o.size;
  if (o.synth_seed) s.synth.seed = *o.synth_seed;
  if (o.full_grid) s.grid = full_window_grid();
  s.train.seed = s.seed;
  return s;
}

void print_fingerprint(std::uint64_t fp) { std::cerr << "config fingerprint " << hex64(fp) << '\n'; }

fs::path out_path(const Globals& g, const std::string& name) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw IoError("cannot create " + g.out_dir + ": " + ec.message());
  return fs::path(g.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

/// PGM when the extension says so, otherwise a lossless tensor.
void save_any(const ImageTensor& img, const fs::path& path, const std::string& comment = {}) {
  if (path.extension() == ".pgm") {
    if (img.channels() != 1) throw ParameterError("PGM output needs a single-channel image");
    const int bits = std::clamp(img.bit_depth(), 1, 16);
    save_pgm(img, path, (1 << bits) - 1, comment);
  } else {
    save_tensor(img, path);
  }
}

void progress_line(const std::string& run, const EpochRecord& r) {
  std::fprintf(stderr, "%s epoch %d train_loss %.5f val_loss %.5f val_auc %s lr %g%s\n", run.c_str(), r.epoch,
               r.train_loss, r.val_loss, r.val_mean_auc ? format_double(*r.val_mean_auc).c_str() : "NA", r.lr,
               r.new_best ? " *" : "");
}

InputMode arm_input(const std::string& arm, const WindowSpec& w) {
  if (arm == "8bit") return InputMode::quantized(8);
  if (arm == "12bit") return InputMode::fixed_window({2048.0, 4096.0});
  if (arm == "window") return InputMode::fixed_window(w);
  return InputMode::raw();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learnable intensity windowing for high bit depth images"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for model initialization and batch order");
  app.add_option("--config", g.config, "key=value config file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();

  // image
  auto* image = app.add_subcommand("image", "Image loading and preprocessing");
  image->require_subcommand(1);
  std::string in_path, out_file;
  int height = 0, width = 0, bits = 8;
  std::string interp = "bilinear", qmode = "round";
  double source_max = 4095.0;

  auto* info = image->add_subcommand("info", "Print shape, bit depth and value range");
  info->add_option("input", in_path, "PGM or tensor file")->required();

  auto* resize_cmd = image->add_subcommand("resize", "Resample to a new size");
  resize_cmd->add_option("input", in_path, "Input image")->required();
  resize_cmd->add_option("output", out_file, "Output (.pgm or .wnt)")->required();
  resize_cmd->add_option("--height", height, "Output height")->required()->check(CLI::PositiveNumber);
  resize_cmd->add_option("--width", width, "Output width")->required()->check(CLI::PositiveNumber);
  resize_cmd->add_option("--interp", interp, "bilinear or nearest")
      ->check(CLI::IsMember({"bilinear", "nearest"}))->capture_default_str();

  auto* quant_cmd = image->add_subcommand("quantize", "Reduce bit depth");
  quant_cmd->add_option("input", in_path, "Input image")->required();
  quant_cmd->add_option("output", out_file, "Output (.pgm or .wnt)")->required();
  quant_cmd->add_option("--bits", bits, "Target bit depth")->check(CLI::Range(1, 16))->capture_default_str();
  quant_cmd->add_option("--mode", qmode, "round or shift")
      ->check(CLI::IsMember({"round", "shift"}))->capture_default_str();

  auto* scale_cmd = image->add_subcommand("scale", "Rescale values to the 0..255 range");
  scale_cmd->add_option("input", in_path, "Input image")->required();
  scale_cmd->add_option("output", out_file, "Output tensor")->required();
  scale_cmd->add_option("--source-max", source_max, "Value mapped to 255")
      ->check(CLI::PositiveNumber)->capture_default_str();

  auto* norm_cmd = image->add_subcommand("normalize", "Replicate to RGB and apply ImageNet normalization");
  norm_cmd->add_option("input", in_path, "Input image on the 0..255 scale")->required();
  norm_cmd->add_option("output", out_file, "Output tensor")->required();

  // window
  auto* window = app.add_subcommand("window", "Window operation and its affine form");
  window->require_subcommand(1);
  double level = 2048.0, wwidth = 4096.0;
  auto* apply_cmd = window->add_subcommand("apply", "Window an image and write an 8-bit PGM");
  apply_cmd->add_option("--level", level, "Window level")->required();
  apply_cmd->add_option("--width", wwidth, "Window width")->required()->check(CLI::PositiveNumber);
  apply_cmd->add_option("--input", in_path, "Input image")->required();
  apply_cmd->add_option("--output", out_file, "Output PGM")->required();
  auto* affine_cmd = window->add_subcommand("affine", "Print the clamped affine form of a window");
  affine_cmd->add_option("--level", level, "Window level")->required();
  affine_cmd->add_option("--width", wwidth, "Window width")->required()->check(CLI::PositiveNumber);

  // synth
  Overrides o;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset into --out-dir");
  o.add_synth(synth);

  // train
  auto* train = app.add_subcommand("train", "Train one model and write its checkpoints");
  std::string arm = "windownet";
  train->add_option("--arm", arm, "8bit, 12bit, window, windownet or nowindow")
      ->check(CLI::IsMember({"8bit", "12bit", "window", "windownet", "nowindow"}))->capture_default_str();
  train->add_option("--level", level, "Window level for --arm window");
  train->add_option("--width", wwidth, "Window width for --arm window")->check(CLI::PositiveNumber);
  o.add_train(train);

  // eval
  auto* eval = app.add_subcommand("eval", "Per-class AUC CSV of a checkpoint on a dataset split");
  std::string ckpt, split = "test", dataset;
  eval->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  eval->add_option("--dataset", dataset, "Dataset directory (default: generate from --config)");
  eval->add_option("--split", split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  eval->add_option("--output", out_file, "CSV path (default: stdout)");
  o.add_synth(eval);

  // recover
  auto* recover = app.add_subcommand("recover", "Print the (level, width) of every front-end channel");
  recover->add_option("--checkpoint", ckpt, "Checkpoint file")->required();

  // experiments
  auto* bitdepth = app.add_subcommand("bitdepth", "8-bit versus 12-bit input");
  auto* grid = app.add_subcommand("grid", "Single fixed-window grid search");
  auto* multi = app.add_subcommand("multiwindow", "WindowNet versus no-windowing and 8-bit arms");
  for (auto* cmd : {bitdepth, grid, multi}) {
    o.add_train(cmd);
    cmd->add_option("--workers", o.workers, "Concurrent training runs")->check(CLI::PositiveNumber);
  }
  grid->add_flag("--full-grid", o.full_grid, "Use the full 76-window grid");

  for (auto* cmd : {image, info, resize_cmd, quant_cmd, scale_cmd, norm_cmd, window, apply_cmd, affine_cmd, synth,
                    train, eval, recover, bitdepth, grid, multi})
    cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*info) {
      const auto img = load_image(in_path);
      double lo = INFINITY, hi = -INFINITY;
      for (double v : img.values()) lo = std::min(lo, v), hi = std::max(hi, v);
      std::cout << "channels " << img.channels() << "\nheight " << img.height() << "\nwidth " << img.width()
                << "\nbit_depth " << img.bit_depth() << "\nmin " << format_double(lo) << "\nmax "
                << format_double(hi) << '\n';
    } else if (*resize_cmd) {
      save_any(resize(load_image(in_path), height, width,
                      interp == "nearest" ? Interpolation::Nearest : Interpolation::Bilinear),
               out_file);
    } else if (*quant_cmd) {
      save_any(quantize(load_image(in_path), bits, qmode == "shift" ? QuantizeMode::Shift : QuantizeMode::RoundRescale),
               out_file);
    } else if (*scale_cmd) {
      save_tensor(scale_to_255(load_image(in_path), source_max), out_file);
    } else if (*norm_cmd) {
      auto img = load_image(in_path);
      if (img.channels() == 1) img = replicate_to_rgb(img);
      save_tensor(normalize(img, NormalizationSpec::imagenet()), out_file);
    } else if (*apply_cmd) {
      const WindowSpec w{level, wwidth};
      validate(w);
      const auto img = load_image(in_path);
      if (img.channels() != 1) throw ParameterError("window apply needs a single-channel image");
      const auto out = InputMode::fixed_window(w).apply(img);
      save_pgm(out, out_file, 255, "level=" + format_double(level) + " width=" + format_double(wwidth));
      KeyValues kv;
      InputMode::fixed_window(w).write(kv);
      print_fingerprint(fnv1a64(kv.to_text()));
    } else if (*affine_cmd) {
      const WindowSpec w{level, wwidth};
      const auto a = to_affine(w);
      std::cout << "weight " << format_double(a.weight) << "\nbias " << format_double(a.bias) << "\nceiling "
                << format_double(a.ceiling) << '\n';
    } else if (*synth) {
      const auto spec = resolve_spec(g, o);
      KeyValues kv;
      spec.synth.write(kv);
      print_fingerprint(fnv1a64(kv.to_text()));
      const auto ds = generate(spec.synth);
      save_dataset(ds, g.out_dir);
      std::cout << "dataset fingerprint " << hex64(ds.fingerprint()) << '\n';
    } else if (*train) {
      const auto spec = resolve_spec(g, o);
      spec.validate();
      print_fingerprint(spec.fingerprint());
      const auto data = experiment_dataset(spec);
      WindowNetModel model;
      model.backbone = TinyBackbone::init(data.config.n_classes, derive_seed(spec.seed, {0x6e6574ULL}));
      const auto front_seed = derive_seed(spec.seed, {0x66726fULL});
      if (arm == "windownet") model.front = make_windowed_layer(spec.init_windows, front_seed);
      if (arm == "nowindow") model.front = plain_mixer_init(static_cast<int>(spec.init_windows.size()), front_seed);
      const WindowSpec w{level, wwidth};
      validate(w);
      auto run = train_run(arm, arm, arm_input(arm, w), model, spec.train, data, data.fingerprint(), progress_line);
      save_checkpoint(run.best, out_path(g, "model.wnck"));
      write_text(out_path(g, "test.csv"), eval_to_csv(run.test, class_names(data.config.n_classes)));
      std::cout << "test mean AUC " << (run.test.mean_auc ? format_double(*run.test.mean_auc) : "NA") << '\n';
    } else if (*eval) {
      const auto ck = load_checkpoint(ckpt);
      const auto model = model_from_checkpoint(ck);
      const auto input = InputMode::read(ck.config);
      auto spec = resolve_spec(g, o);
      if (!dataset.empty()) spec.dataset = dataset;
      const auto data = experiment_dataset(spec);
      if (auto fp = ck.config.get("dataset.fingerprint"); fp && *fp != hex64(data.fingerprint()))
        std::cerr << "warning: dataset fingerprint " << hex64(data.fingerprint()) << " differs from the training data "
                  << *fp << '\n';
      if (data.config.n_classes != model.n_classes()) throw DataError("dataset and checkpoint class counts differ");
      print_fingerprint(fnv1a64(ck.config.to_text()));
      const auto set = input.apply(data.split(split));
      const auto r = evaluate(predict_set(model, set).logits, set.labels, set.n_classes, true);
      const auto csv = eval_to_csv(r, class_names(set.n_classes));
      if (out_file.empty()) std::cout << csv;
      else write_text(out_file, csv);
    } else if (*recover) {
      const auto ck = load_checkpoint(ckpt);
      const auto model = model_from_checkpoint(ck);
      print_fingerprint(fnv1a64(ck.config.to_text()));
      if (!model.front) throw DataError("checkpoint has no window front-end");
      if (!model.front->clamp) throw DataError("front-end is unclamped, its channels are not windows");
      const auto ws = recover_windows(*model.front);
      std::cout << "channel,level,width\n";
      for (std::size_t i = 0; i < ws.size(); ++i)
        std::cout << i << ',' << csv_number(ws[i].level) << ',' << csv_number(ws[i].width) << '\n';
    } else {
      auto spec = resolve_spec(g, o);
      spec.kind = *bitdepth ? ExperimentKind::BitDepth : *grid ? ExperimentKind::Grid : ExperimentKind::MultiWindow;
      spec.validate();
      print_fingerprint(spec.fingerprint());
      const auto result = run_experiment(spec, progress_line);
      write_report(result, spec, g.out_dir);
      std::cout << read_text(fs::path(g.out_dir) / "summary.txt");
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
