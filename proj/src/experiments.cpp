#include "windownet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "windownet/error.hpp"
#include "windownet/imagepipe.hpp"
#include "windownet/random.hpp"

namespace windownet {

namespace {

constexpr std::uint64_t kBackboneTag = 0x6e6574;
constexpr std::uint64_t kFrontTag = 0x66726f;

std::string input_kind_name(InputMode::Kind k) {
  switch (k) {
    case InputMode::Kind::Quantized: return "quantized";
    case InputMode::Kind::Window: return "window";
    case InputMode::Kind::Raw: return "raw";
  }
  return "raw";
}

std::string format_windows(const std::vector<WindowSpec>& ws) {
  std::string out;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (i) out += ';';
    out += format_double(ws[i].level) + ':' + format_double(ws[i].width);
  }
  return out;
}

std::vector<WindowSpec> parse_windows(const std::string& text, const std::string& key) {
  std::vector<WindowSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ParameterError(key + ": expected level:width, got '" + item + "'");
    WindowSpec w{parse_double(item.substr(0, colon)), parse_double(item.substr(colon + 1))};
    validate(w);
    out.push_back(w);
  }
  return out;
}

std::string window_run_name(const WindowSpec& w) {
  return "L" + format_double(w.level) + "_W" + format_double(w.width);
}

bool is_full_range(const WindowSpec& w) { return w.level == 2048.0 && w.width == 4096.0; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string auc_cell(const std::optional<double>& v) { return v ? csv_number(*v) : "NA"; }

KeyValues spec_keyvalues(const ExperimentSpec& s, bool with_workers) {
  KeyValues kv;
  kv.set("experiment.kind", to_string(s.kind));
  kv.set("experiment.dataset", s.dataset.generic_string());
  kv.set("experiment.seed", s.seed);
  kv.set("experiment.low_bits", s.low_bits);
  kv.set("experiment.grid", format_windows(s.grid));
  kv.set("experiment.init_windows", format_windows(s.init_windows));
  if (with_workers) kv.set("experiment.workers", s.workers);
  s.synth.write(kv, "synth.");
  s.train.write(kv, "train.");
  return kv;
}

std::uint64_t run_fingerprint(const InputMode& input, const std::string& front, const TrainConfig& config,
                              std::uint64_t backbone_seed, std::uint64_t front_seed,
                              std::uint64_t dataset_fingerprint) {
  KeyValues kv;
  input.write(kv);
  kv.set("model.front", front);
  kv.set("model.backbone_seed", backbone_seed);
  kv.set("model.front_seed", front_seed);
  config.write(kv);
  kv.set("dataset.fingerprint", hex64(dataset_fingerprint));
  return fnv1a64(kv.to_text());
}

struct RunJob {
  std::string name;
  std::string arm;
  InputMode input;
  WindowNetModel model;
  std::uint64_t front_seed = 0;
};

std::vector<RunResult> execute(const std::vector<RunJob>& jobs, const ExperimentSpec& spec,
                               const SynthDataset& data, std::uint64_t dataset_fp,
                               const ProgressFn& progress) {
  std::vector<RunResult> results(jobs.size());
  std::mutex progress_mutex;
  ProgressFn locked;
  if (progress) {
    locked = [&](const std::string& run, const EpochRecord& r) {
      std::lock_guard lock(progress_mutex);
      progress(run, r);
    };
  }
  TrainConfig config = spec.train;
  config.seed = spec.seed;
  const std::uint64_t backbone_seed = derive_seed(spec.seed, {kBackboneTag});

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto& job = jobs[i];
        results[i] = train_run(job.name, job.arm, job.input, job.model, config, data, dataset_fp, locked);
        results[i].fingerprint = run_fingerprint(job.input, job.model.front_kind(), config, backbone_seed,
                                                 job.front_seed, dataset_fp);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::clamp<int>(spec.workers, 1, static_cast<int>(jobs.size())));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

WindowNetModel bare_model(const ExperimentSpec& spec) {
  WindowNetModel m;
  m.backbone = TinyBackbone::init(spec.synth.n_classes, derive_seed(spec.seed, {kBackboneTag}));
  return m;
}

ExperimentResult make_result(const ExperimentSpec& spec, std::uint64_t dataset_fp) {
  ExperimentResult r;
  r.kind = spec.kind;
  r.seed = spec.seed;
  r.spec_fingerprint = spec.fingerprint();
  r.dataset_fingerprint = dataset_fp;
  r.class_names = class_names(spec.synth.n_classes);
  return r;
}

InputMode identity_input() { return InputMode::fixed_window({2048.0, 4096.0}); }

}  // namespace

ImageTensor InputMode::apply(const ImageTensor& img) const {
  switch (kind) {
    case Kind::Quantized: {
      ImageTensor q = quantize(img, bits);
      return bits == 8 ? q : scale_to_255(q, std::ldexp(1.0, bits) - 1.0);
    }
    case Kind::Window: {
      ImageTensor out = img;
      const double lo = window.lower();
      const double scale = 255.0 / window.width;
      for (auto& v : out.values()) v = (apply_window(v, window) - lo) * scale;
      out.set_bit_depth(8);
      return out;
    }
    case Kind::Raw: return img;
  }
  return img;
}

LabeledSet InputMode::apply(const std::vector<SynthSample>& samples) const {
  LabeledSet set;
  set.n_classes = samples.empty() ? 0 : static_cast<int>(samples.front().labels.size());
  set.images.reserve(samples.size());
  set.labels.reserve(samples.size() * set.n_classes);
  for (const auto& s : samples) {
    set.images.push_back(apply(s.image));
    set.labels.insert(set.labels.end(), s.labels.begin(), s.labels.end());
  }
  return set;
}

void InputMode::write(KeyValues& kv, const std::string& prefix) const {
  kv.set(prefix + "mode", input_kind_name(kind));
  if (kind == Kind::Quantized) kv.set(prefix + "bits", bits);
  if (kind == Kind::Window) {
    kv.set(prefix + "level", window.level);
    kv.set(prefix + "width", window.width);
  }
}

InputMode InputMode::read(const KeyValues& kv, const std::string& prefix) {
  const std::string mode = kv.get_string(prefix + "mode", "raw");
  if (mode == "raw") return raw();
  if (mode == "quantized") {
    const auto b = kv.get_int(prefix + "bits", 8);
    if (b < 1 || b > 16) throw ParameterError(prefix + "bits must be in [1, 16]");
    return quantized(static_cast<int>(b));
  }
  if (mode == "window") {
    WindowSpec w{kv.get_double(prefix + "level", 2048.0), kv.get_double(prefix + "width", 4096.0)};
    validate(w);
    return fixed_window(w);
  }
  throw ParameterError("unknown input mode '" + mode + "'");
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::BitDepth: return "bitdepth";
    case ExperimentKind::Grid: return "grid";
    case ExperimentKind::MultiWindow: return "multiwindow";
  }
  return "bitdepth";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  if (text == "bitdepth") return ExperimentKind::BitDepth;
  if (text == "grid") return ExperimentKind::Grid;
  if (text == "multiwindow") return ExperimentKind::MultiWindow;
  throw ParameterError("unknown experiment kind '" + text + "' (bitdepth, grid, multiwindow)");
}

std::vector<WindowSpec> full_window_grid() {
  std::vector<double> levels{100.0};
  for (int l = 250; l <= 3500; l += 250) levels.push_back(l);
  std::vector<WindowSpec> out;
  for (double l : levels)
    for (double w : {500.0, 1000.0, 1500.0, 2000.0, 3000.0}) out.push_back({l, w});
  out.push_back({2048.0, 4096.0});
  return out;
}

std::vector<WindowSpec> desk_window_grid() {
  std::vector<WindowSpec> out;
  for (double l : {1250.0, 2250.0, 3250.0})
    for (double w : {500.0, 1000.0}) out.push_back({l, w});
  out.push_back({2048.0, 4096.0});
  return out;
}

TrainConfig ExperimentSpec::desk_train_config() {
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.max_epochs = 25;
  return c;
}

void ExperimentSpec::validate() const {
  synth.validate();
  train.validate();
  if (kind == ExperimentKind::Grid && grid.empty()) throw ParameterError("window grid is empty");
  for (const auto& w : grid) windownet::validate(w);
  if (kind == ExperimentKind::MultiWindow && init_windows.empty()) throw ParameterError("init window list is empty");
  for (const auto& w : init_windows) windownet::validate(w);
  if (low_bits != 8) throw ParameterError("low_bits must be 8 (quantization targets 8, 12 or 16 bits)");
  if (workers < 1) throw ParameterError("workers must be >= 1");
  if (!dataset.empty() && !std::filesystem::is_directory(dataset))
    throw IoError("dataset directory not found: " + dataset.string());
}

KeyValues ExperimentSpec::to_keyvalues() const { return spec_keyvalues(*this, true); }

ExperimentSpec ExperimentSpec::from_keyvalues(const KeyValues& kv) {
  ExperimentSpec s;
  s.kind = parse_experiment_kind(kv.get_string("experiment.kind", to_string(s.kind)));
  s.dataset = kv.get_string("experiment.dataset", "");
  s.seed = kv.get_u64("experiment.seed", s.seed);
  s.low_bits = static_cast<int>(kv.get_int("experiment.low_bits", s.low_bits));
  if (auto g = kv.get("experiment.grid")) {
    if (*g == "desk") s.grid = desk_window_grid();
    else if (*g == "full") s.grid = full_window_grid();
    else s.grid = parse_windows(*g, "experiment.grid");
  }
  if (auto g = kv.get("experiment.init_windows")) {
    s.init_windows = *g == "default" ? default_init_windows() : parse_windows(*g, "experiment.init_windows");
  }
  s.workers = static_cast<int>(kv.get_int("experiment.workers", s.workers));
  s.synth = SynthConfig::read(kv, "synth.");
  s.train = TrainConfig::read(kv, "train.");
  {
    TrainConfig d = desk_train_config();
    s.train.learning_rate = kv.get_double("train.learning_rate", d.learning_rate);
    s.train.max_epochs = static_cast<int>(kv.get_int("train.max_epochs", d.max_epochs));
  }
  return s;
}

ExperimentSpec ExperimentSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_keyvalues(KeyValues::parse(ss.str()));
}

std::uint64_t ExperimentSpec::fingerprint() const { return fnv1a64(spec_keyvalues(*this, false).to_text()); }

const RunResult& ExperimentResult::run(const std::string& name) const {
  for (const auto& r : runs)
    if (r.name == name) return r;
  throw ParameterError("no run named '" + name + "'");
}

RunResult train_run(const std::string& name, const std::string& arm, const InputMode& input,
                    WindowNetModel model, const TrainConfig& config, const SynthDataset& data,
                    std::uint64_t dataset_fingerprint, const ProgressFn& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.name = name;
  r.arm = arm;
  r.input = input;
  r.front = model.front_kind();
  if (model.front && model.front->clamp) r.init_windows = recover_windows(*model.front);

  const LabeledSet train = input.apply(data.train);
  const LabeledSet val = input.apply(data.val);
  const LabeledSet test = input.apply(data.test);

  Trainer trainer(std::move(model), config);
  r.history = trainer.fit(train, val, [&](const EpochRecord& rec) {
    if (progress) progress(name, rec);
  });
  const WindowNetModel best = trainer.best_model();
  r.val = evaluate(predict_set(best, val).logits, val.labels, val.n_classes, false);
  r.test = evaluate(predict_set(best, test).logits, test.labels, test.n_classes, false);
  r.best = trainer.best_checkpoint() ? *trainer.best_checkpoint() : trainer.checkpoint();
  input.write(r.best.config);
  r.best.config.set("dataset.fingerprint", hex64(dataset_fingerprint));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

SynthDataset experiment_dataset(const ExperimentSpec& spec) {
  if (spec.dataset.empty()) return generate(spec.synth);
  if (!std::filesystem::is_directory(spec.dataset))
    throw IoError("dataset directory not found: " + spec.dataset.string());
  return load_dataset(spec.dataset);
}

ExperimentResult run_bitdepth(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  const SynthDataset data = experiment_dataset(spec);
  const auto fp = data.fingerprint();
  ExperimentSpec s = spec;
  s.synth = data.config;
  const auto base = bare_model(s);
  std::vector<RunJob> jobs{
      {std::to_string(s.low_bits) + "bit", std::to_string(s.low_bits) + "bit", InputMode::quantized(s.low_bits), base, 0},
      {"12bit", "12bit", identity_input(), base, 0},
  };
  ExperimentResult r = make_result(s, fp);
  r.runs = execute(jobs, s, data, fp, progress);
  return r;
}

ExperimentResult run_grid(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  const SynthDataset data = experiment_dataset(spec);
  const auto fp = data.fingerprint();
  ExperimentSpec s = spec;
  s.synth = data.config;
  const auto base = bare_model(s);
  std::vector<RunJob> jobs;
  for (const auto& w : s.grid) jobs.push_back({window_run_name(w), "window", InputMode::fixed_window(w), base, 0});
  for (std::size_t i = 0; i < jobs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (jobs[i].name == jobs[j].name) throw ParameterError("duplicate grid window " + jobs[i].name);
  ExperimentResult r = make_result(s, fp);
  r.runs = execute(jobs, s, data, fp, progress);
  return r;
}

ExperimentResult run_multiwindow(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  const SynthDataset data = experiment_dataset(spec);
  const auto fp = data.fingerprint();
  ExperimentSpec s = spec;
  s.synth = data.config;
  const auto base = bare_model(s);
  const std::uint64_t front_seed = derive_seed(s.seed, {kFrontTag});

  WindowNetModel windowed = base;
  windowed.front = make_windowed_layer(s.init_windows, front_seed);
  WindowNetModel plain = base;
  plain.front = plain_mixer_init(static_cast<int>(s.init_windows.size()), front_seed);

  std::vector<RunJob> jobs{
      {"windownet", "windownet", InputMode::raw(), windowed, front_seed},
      {"nowindow", "nowindow", InputMode::raw(), plain, front_seed},
      {std::to_string(s.low_bits) + "bit", std::to_string(s.low_bits) + "bit", InputMode::quantized(s.low_bits), base, 0},
  };
  ExperimentResult r = make_result(s, fp);
  r.runs = execute(jobs, s, data, fp, progress);
  return r;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress) {
  switch (spec.kind) {
    case ExperimentKind::BitDepth: return run_bitdepth(spec, progress);
    case ExperimentKind::Grid: return run_grid(spec, progress);
    case ExperimentKind::MultiWindow: return run_multiwindow(spec, progress);
  }
  throw ParameterError("unknown experiment kind");
}

std::vector<std::vector<RankedWindow>> rank_grid_windows(const ExperimentResult& grid) {
  const int n_classes = static_cast<int>(grid.class_names.size());
  std::vector<std::vector<RankedWindow>> out(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    for (const auto& run : grid.runs) {
      if (run.input.kind != InputMode::Kind::Window) continue;
      const auto& auc = run.val.per_class_auc.at(c);
      if (auc) out[c].push_back({run.input.window, run.name, *auc});
    }
    std::stable_sort(out[c].begin(), out[c].end(),
                     [](const RankedWindow& a, const RankedWindow& b) { return a.auc > b.auc; });
  }
  return out;
}

std::vector<WindowSpec> select_top_windows(const ExperimentResult& grid, int k) {
  if (k < 1) throw ParameterError("k must be >= 1");
  std::vector<WindowSpec> out;
  for (const auto& ranked : rank_grid_windows(grid)) {
    int taken = 0;
    for (const auto& rw : ranked) {
      if (taken == k) break;
      if (is_full_range(rw.window)) continue;
      ++taken;
      if (std::find(out.begin(), out.end(), rw.window) == out.end()) out.push_back(rw.window);
    }
  }
  out.push_back({2048.0, 4096.0});
  return out;
}

void write_report(const ExperimentResult& result, const ExperimentSpec& spec, const std::filesystem::path& dir) {
  if (result.runs.empty()) throw ParameterError("no runs to report");
  std::error_code ec;
  std::filesystem::create_directories(dir / "runs", ec);
  if (!ec) std::filesystem::create_directories(dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const auto& names = result.class_names;
  const int n_classes = static_cast<int>(names.size());

  std::ostringstream auc;
  auc << "run,class,auc\n";
  for (const auto& run : result.runs) {
    for (int c = 0; c < n_classes; ++c) auc << run.name << ',' << names[c] << ',' << auc_cell(run.test.per_class_auc[c]) << '\n';
    auc << run.name << ",mean," << auc_cell(run.test.mean_auc) << '\n';
  }
  write_file(dir / "auc.csv", auc.str());

  std::ostringstream table;
  table << "run,arm,config_fingerprint";
  for (const auto& n : names) table << ',' << n;
  table << ",mean\n";
  for (const auto& run : result.runs) {
    table << run.name << ',' << run.arm << ',' << hex64(run.fingerprint);
    for (const auto& a : run.test.per_class_auc) table << ',' << auc_cell(a);
    table << ',' << auc_cell(run.test.mean_auc) << '\n';
  }
  write_file(dir / "table.csv", table.str());

  std::ostringstream runs;
  runs << "run,arm,input,front,config_fingerprint,dataset_fingerprint,epochs,best_epoch,val_mean_auc,test_mean_auc\n";
  for (const auto& run : result.runs) {
    runs << run.name << ',' << run.arm << ',' << input_kind_name(run.input.kind) << ',' << run.front << ','
         << hex64(run.fingerprint) << ',' << hex64(result.dataset_fingerprint) << ',' << run.history.size() << ','
         << run.best.config.get_int("state.best_epoch", 0) << ',' << auc_cell(run.val.mean_auc) << ','
         << auc_cell(run.test.mean_auc) << '\n';
  }
  write_file(dir / "runs.csv", runs.str());

  for (const auto& run : result.runs) {
    write_file(dir / "runs" / (run.name + "_test.csv"), eval_to_csv(run.test, names));
    write_file(dir / "runs" / (run.name + "_val.csv"), eval_to_csv(run.val, names));
    std::ostringstream hist;
    hist << "epoch,train_loss,val_loss,val_mean_auc,lr,lr_decayed,new_best,stopped\n";
    for (const auto& h : run.history) {
      hist << h.epoch << ',' << csv_number(h.train_loss) << ',' << csv_number(h.val_loss) << ','
           << auc_cell(h.val_mean_auc) << ',' << csv_number(h.lr) << ',' << int(h.lr_decayed) << ','
           << int(h.new_best) << ',' << int(h.stopped) << '\n';
    }
    write_file(dir / "runs" / (run.name + "_history.csv"), hist.str());
    save_checkpoint(run.best, dir / "checkpoints" / (run.name + ".wnck"));
  }

  if (result.kind == ExperimentKind::Grid) {
    std::ostringstream best;
    best << "class,rank,run,level,width,lower,upper,val_auc,test_auc\n";
    const auto ranked = rank_grid_windows(result);
    for (int c = 0; c < n_classes; ++c) {
      for (std::size_t i = 0; i < ranked[c].size() && i < 3; ++i) {
        const auto& rw = ranked[c][i];
        const auto& run = result.run(rw.run);
        best << names[c] << ',' << i + 1 << ',' << rw.run << ',' << csv_number(rw.window.level) << ','
             << csv_number(rw.window.width) << ',' << csv_number(rw.window.lower()) << ','
             << csv_number(rw.window.upper()) << ',' << csv_number(rw.auc) << ','
             << auc_cell(run.test.per_class_auc[c]) << '\n';
      }
    }
    write_file(dir / "best_windows.csv", best.str());
    std::ostringstream top;
    top << "level,width\n";
    for (const auto& w : select_top_windows(result)) top << csv_number(w.level) << ',' << csv_number(w.width) << '\n';
    write_file(dir / "top_windows.csv", top.str());
  }

  if (result.kind == ExperimentKind::MultiWindow) {
    std::ostringstream win;
    win << "arm,epoch,channel,level,width\n";
    for (const auto& run : result.runs) {
      if (run.init_windows.empty()) continue;
      auto emit = [&](int epoch, const std::vector<WindowSpec>& ws) {
        for (std::size_t ch = 0; ch < ws.size(); ++ch)
          win << run.name << ',' << epoch << ',' << ch << ',' << csv_number(ws[ch].level) << ','
              << csv_number(ws[ch].width) << '\n';
      };
      emit(0, run.init_windows);
      for (const auto& h : run.history) emit(h.epoch, h.windows);
    }
    write_file(dir / "windows.csv", win.str());
  }

  KeyValues manifest = spec.to_keyvalues();
  manifest.set("result.kind", to_string(result.kind));
  manifest.set("result.seed", result.seed);
  manifest.set("result.spec_fingerprint", hex64(result.spec_fingerprint));
  manifest.set("result.dataset_fingerprint", hex64(result.dataset_fingerprint));
  for (const auto& run : result.runs) manifest.set("run." + run.name + ".config_fingerprint", hex64(run.fingerprint));
  write_file(dir / "manifest.txt", manifest.to_text());

  std::ostringstream sum;
  sum << to_string(result.kind) << " experiment, seed " << result.seed << ", spec " << hex64(result.spec_fingerprint)
      << ", dataset " << hex64(result.dataset_fingerprint) << "\n\n";
  std::size_t width = 4;
  for (const auto& run : result.runs) width = std::max(width, run.name.size());
  for (const auto& run : result.runs) {
    sum << "  " << run.name << std::string(width - run.name.size() + 2, ' ') << "test mean AUC ";
    if (run.test.mean_auc) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *run.test.mean_auc);
      sum << buf;
    } else {
      sum << "NA";
    }
    sum << "  (" << run.history.size() << " epochs)\n";
  }
  std::vector<std::string> undefined;
  for (int c = 0; c < n_classes; ++c) {
    for (const auto& run : result.runs) {
      if (!run.test.per_class_auc[c]) {
        undefined.push_back(names[c]);
        break;
      }
    }
  }
  sum << '\n';
  if (undefined.empty()) {
    sum << "All classes have a defined test AUC.\n";
  } else {
    sum << "Undefined test AUC (single label value in split), excluded from means:\n";
    for (const auto& n : undefined) sum << "  " << n << '\n';
  }
  if (result.kind == ExperimentKind::Grid) {
    sum << "\nBest window per class (validation AUC):\n";
    const auto ranked = rank_grid_windows(result);
    for (int c = 0; c < n_classes; ++c) {
      sum << "  " << names[c] << ": ";
      if (ranked[c].empty()) {
        sum << "NA\n";
      } else {
        sum << "level " << format_double(ranked[c][0].window.level) << " width "
            << format_double(ranked[c][0].window.width) << '\n';
      }
    }
  }
  write_file(dir / "summary.txt", sum.str());

  std::ostringstream times;
  for (const auto& run : result.runs) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", run.seconds);
    times << run.name << ' ' << buf << " s\n";
  }
  write_file(dir / "timings.txt", times.str());
}

}  // namespace windownet
