#include "windownet/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "windownet/error.hpp"
#include "windownet/imagepipe.hpp"
#include "windownet/random.hpp"

namespace windownet {

namespace {

constexpr double kMaxRaw = 4095.0;
constexpr double kStep8 = kMaxRaw / 255.0;

struct Ellipse {
  double cy, cx, ry, rx, angle;

  bool contains(double y, double x) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dy = y - cy, dx = x - cx;
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
};

Ellipse random_ellipse(Rng& rng, double r_lo, double r_hi, double cy, double cx) {
  return {cy, cx, rng.uniform(r_lo, r_hi), rng.uniform(r_lo, r_hi), rng.uniform(0.0, std::numbers::pi)};
}

// Low-frequency cosine mixture plus a ramp.
std::vector<double> smooth_background(Rng& rng, int size) {
  struct Wave { double fy, fx, phase, amp; };
  std::vector<Wave> waves(4);
  for (auto& w : waves) {
    const double freq = rng.uniform(0.5, 1.5) / size;
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    w = {freq * std::sin(dir), freq * std::cos(dir), rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.5, 1.0)};
  }
  const double gy = rng.uniform(-1.0, 1.0), gx = rng.uniform(-1.0, 1.0);
  std::vector<double> f(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double v = (gy * y + gx * x) / size;
      for (const auto& w : waves) v += w.amp * std::cos(2.0 * std::numbers::pi * (w.fy * y + w.fx * x) + w.phase);
      f[static_cast<std::size_t>(y) * size + x] = v;
    }
  return f;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::vector<SignalBand> parse_bands(const std::string& text) {
  std::vector<SignalBand> bands;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream is(item);
    std::string field;
    std::vector<double> v;
    while (std::getline(is, field, ':')) v.push_back(parse_double(field));
    if (v.size() != 4) throw ParameterError("synth band must be class:center:halfwidth:delta, got '" + item + "'");
    bands.push_back({static_cast<int>(v[0]), v[1], v[2], v[3]});
  }
  return bands;
}

std::string format_bands(const std::vector<SignalBand>& bands) {
  std::string out;
  for (const auto& b : bands) {
    if (!out.empty()) out += ';';
    out += std::to_string(b.class_index) + ':' + format_double(b.center) + ':' + format_double(b.halfwidth) + ':' +
           format_double(b.delta);
  }
  return out;
}

}  // namespace

std::vector<SignalBand> SynthConfig::default_bands() {
  return {{1, 1250.0, 100.0, 200.0}, {3, 2250.0, 100.0, 200.0}, {9, 3250.0, 100.0, 200.0}};
}

void SynthConfig::validate() const {
  if (n_train < 1 || n_val < 1 || n_test < 1) throw ParameterError("synth split sizes must be positive");
  if (image_size < 8) throw ParameterError("synth image_size must be at least 8");
  if (n_classes < 1) throw ParameterError("synth n_classes must be positive");
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw ParameterError("synth prevalence must lie in [0, 1]");
  if (!(noise_sigma >= 0.0)) throw ParameterError("synth noise_sigma must be non-negative");
  if (!(carrier_radius > 0.0) || 2.0 * std::ceil(carrier_radius) + 1.0 > image_size)
    throw ParameterError("synth carrier_radius must be positive and fit the image");
  if (!(blob_radius_min > 0.0 && blob_radius_min <= blob_radius_max && blob_radius_max < carrier_radius))
    throw ParameterError("synth blob radii must satisfy 0 < min <= max < carrier_radius");
  std::vector<int> seen;
  for (const auto& b : signal_bands) {
    if (b.class_index < 0 || b.class_index >= n_classes)
      throw ParameterError("synth band class " + std::to_string(b.class_index) + " out of range");
    if (std::find(seen.begin(), seen.end(), b.class_index) != seen.end())
      throw ParameterError("synth class " + std::to_string(b.class_index) + " has two bands");
    seen.push_back(b.class_index);
    if (!(b.halfwidth > 0.0) || !(b.center - b.halfwidth >= 0.0) || !(b.center + b.halfwidth <= kMaxRaw))
      throw ParameterError("synth band for class " + std::to_string(b.class_index) + " must lie inside [0, 4095]");
    if (!(b.delta > 0.0)) throw ParameterError("synth band contrast delta must be positive");
  }
}

void SynthConfig::write(KeyValues& kv, const std::string& p) const {
  kv.set(p + "n_train", n_train);
  kv.set(p + "n_val", n_val);
  kv.set(p + "n_test", n_test);
  kv.set(p + "image_size", image_size);
  kv.set(p + "n_classes", n_classes);
  kv.set(p + "prevalence", prevalence);
  kv.set(p + "bands", format_bands(signal_bands));
  kv.set(p + "noise_sigma", noise_sigma);
  kv.set(p + "carrier_radius", carrier_radius);
  kv.set(p + "blob_radius_min", blob_radius_min);
  kv.set(p + "blob_radius_max", blob_radius_max);
  kv.set(p + "lattice_carriers", lattice_carriers);
  kv.set(p + "seed", seed);
}

SynthConfig SynthConfig::read(const KeyValues& kv, const std::string& p) {
  SynthConfig c;
  c.n_train = static_cast<int>(kv.get_int(p + "n_train", c.n_train));
  c.n_val = static_cast<int>(kv.get_int(p + "n_val", c.n_val));
  c.n_test = static_cast<int>(kv.get_int(p + "n_test", c.n_test));
  c.image_size = static_cast<int>(kv.get_int(p + "image_size", c.image_size));
  c.n_classes = static_cast<int>(kv.get_int(p + "n_classes", c.n_classes));
  c.prevalence = kv.get_double(p + "prevalence", c.prevalence);
  if (auto b = kv.get(p + "bands")) c.signal_bands = parse_bands(*b);
  c.noise_sigma = kv.get_double(p + "noise_sigma", c.noise_sigma);
  c.carrier_radius = kv.get_double(p + "carrier_radius", c.carrier_radius);
  c.blob_radius_min = kv.get_double(p + "blob_radius_min", c.blob_radius_min);
  c.blob_radius_max = kv.get_double(p + "blob_radius_max", c.blob_radius_max);
  c.lattice_carriers = kv.get_bool(p + "lattice_carriers", c.lattice_carriers);
  c.seed = kv.get_u64(p + "seed", c.seed);
  return c;
}

double carrier_level(const SignalBand& band, bool lattice) {
  double level = band.center - band.delta / 2.0;
  if (lattice && band.delta < kStep8) level = std::round(band.center / kStep8) * kStep8 - band.delta / 2.0;
  return std::clamp(std::round(level), std::ceil(band.center - band.halfwidth), std::floor(band.center + band.halfwidth));
}

SynthSample generate_sample(const SynthConfig& config, Split split, std::uint64_t index) {
  Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(split), index}));
  const int n = config.image_size;
  const auto px = [n](int y, int x) { return static_cast<std::size_t>(y) * n + x; };

  SynthSample s;
  s.labels.resize(config.n_classes);
  for (auto& l : s.labels) l = rng.bernoulli(config.prevalence) ? 1.0 : 0.0;

  std::vector<double> img = smooth_background(rng, n);

  // Non-overlapping circular carriers with integer centres, so every image
  // spends the same number of pixels on them.
  std::vector<Ellipse> carriers;
  std::vector<char> is_carrier(img.size(), 0);
  const double cr = config.carrier_radius;
  const int lo_c = static_cast<int>(std::ceil(cr)), hi_c = n - 1 - lo_c;
  for (const auto& band : config.signal_bands) {
    Ellipse e{};
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const auto cy = static_cast<double>(lo_c + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi_c - lo_c + 1))));
      const auto cx = static_cast<double>(lo_c + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi_c - lo_c + 1))));
      e = {cy, cx, cr, cr, 0.0};
      bool clear = true;
      for (const auto& o : carriers)
        if (std::hypot(o.cy - e.cy, o.cx - e.cx) < 2.0 * cr + 1.0) clear = false;
      if (clear) break;
    }
    const double level = carrier_level(band, config.lattice_carriers);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (e.contains(y, x)) {
          img[px(y, x)] = level;
          is_carrier[px(y, x)] = 1;
        }
    carriers.push_back(e);
  }

  // Rank-equalize the remaining pixels to evenly spaced values over [0, 4095],
  // giving every image the same background histogram.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < img.size(); ++i)
    if (!is_carrier[i]) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&img](std::size_t a, std::size_t b) { return img[a] < img[b]; });
  const double step = order.size() > 1 ? kMaxRaw / static_cast<double>(order.size() - 1) : 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) img[order[r]] = static_cast<double>(r) * step;

  for (std::size_t k = 0; k < config.signal_bands.size(); ++k) {
    const auto& band = config.signal_bands[k];
    if (s.labels[band.class_index] == 0.0) continue;
    const Ellipse& host = carriers[k];
    // Blob centre drawn inside the host so that the blob stays within it.
    const double room = std::max(0.0, host.ry - config.blob_radius_max - 1.0);
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = room * std::sqrt(rng.uniform());
    Ellipse blob = random_ellipse(rng, config.blob_radius_min, config.blob_radius_max, host.cy + r * std::sin(t),
                                  host.cx + r * std::cos(t));
    const double lo = band.center - band.halfwidth, hi = band.center + band.halfwidth;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double& v = img[px(y, x)];
        if (blob.contains(y, x) && v >= lo && v <= hi) v += band.delta;
      }
  }

  for (auto& v : img) v = std::clamp(std::round(v + rng.normal(0.0, config.noise_sigma)), 0.0, kMaxRaw);
  s.image = ImageTensor(1, n, n, 12, std::move(img));
  return s;
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  SynthDataset ds;
  ds.config = config;
  const auto fill = [&](std::vector<SynthSample>& out, Split split, int count) {
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(generate_sample(config, split, static_cast<std::uint64_t>(i)));
  };
  fill(ds.train, Split::Train, config.n_train);
  fill(ds.val, Split::Val, config.n_val);
  fill(ds.test, Split::Test, config.n_test);
  return ds;
}

const std::vector<SynthSample>& SynthDataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ParameterError("unknown split '" + name + "'");
}

std::uint64_t SynthDataset::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto* part : {&train, &val, &test}) {
    const std::uint64_t count = part->size();
    feed(&count, sizeof count);
    for (const auto& s : *part) {
      feed(s.image.data().data(), s.image.size() * sizeof(double));
      feed(s.labels.data(), s.labels.size() * sizeof(double));
    }
  }
  return h;
}

WindowSpec oracle_best_window(const SynthConfig& config, int class_index) {
  for (const auto& b : config.signal_bands)
    if (b.class_index == class_index) return {b.center, 2.0 * b.halfwidth * 1.5};
  throw ParameterError("class " + std::to_string(class_index) + " has no planted band");
}

void save_dataset(const SynthDataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
  for (Split split : {Split::Train, Split::Val, Split::Test}) {
    const std::string name = split_name(split);
    const auto& samples = ds.split(name);
    const fs::path sub = dir / name;
    fs::create_directories(sub, ec);
    if (ec) throw IoError("cannot create " + sub.string() + ": " + ec.message());
    std::ofstream csv(sub / "labels.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write " + (sub / "labels.csv").string());
    csv << "index";
    for (int c = 0; c < ds.config.n_classes; ++c) csv << ",class_" << c;
    csv << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
      char file[32];
      std::snprintf(file, sizeof file, "%06zu.wnt", i);
      save_tensor(samples[i].image, sub / file);
      csv << i;
      for (double l : samples[i].labels) csv << ',' << (l != 0.0 ? 1 : 0);
      csv << '\n';
    }
    if (!csv) throw IoError("failed writing " + (sub / "labels.csv").string());
  }
  KeyValues kv;
  ds.config.write(kv);
  kv.set("dataset.fingerprint", hex64(ds.fingerprint()));
  std::ofstream man(dir / "manifest.txt", std::ios::binary);
  man << kv.to_text();
  if (!man) throw IoError("cannot write " + (dir / "manifest.txt").string());
}

SynthDataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path man_path = dir / "manifest.txt";
  std::ifstream man(man_path, std::ios::binary);
  if (!man) throw IoError("dataset manifest not found: " + man_path.string());
  std::stringstream text;
  text << man.rdbuf();
  const KeyValues kv = KeyValues::parse(text.str());
  SynthDataset ds;
  ds.config = SynthConfig::read(kv);
  ds.config.validate();
  for (Split split : {Split::Train, Split::Val, Split::Test}) {
    const std::string name = split_name(split);
    auto& samples = split == Split::Train ? ds.train : split == Split::Val ? ds.val : ds.test;
    std::ifstream csv(dir / name / "labels.csv", std::ios::binary);
    if (!csv) throw IoError("labels not found: " + (dir / name / "labels.csv").string());
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      std::stringstream ls(line);
      std::string field;
      std::getline(ls, field, ',');
      const std::size_t index = std::stoul(field);
      if (index != samples.size()) throw DataError("labels.csv rows out of order in " + name);
      SynthSample s;
      while (std::getline(ls, field, ',')) s.labels.push_back(parse_double(field));
      if (static_cast<int>(s.labels.size()) != ds.config.n_classes)
        throw DataError("labels.csv row " + std::to_string(index) + " has wrong class count");
      char file[32];
      std::snprintf(file, sizeof file, "%06zu.wnt", index);
      s.image = load_image(dir / name / file);
      samples.push_back(std::move(s));
    }
  }
  if (auto fp = kv.get("dataset.fingerprint"); fp && *fp != hex64(ds.fingerprint()))
    throw DataError("dataset fingerprint mismatch in " + dir.string());
  return ds;
}

}  // namespace windownet
