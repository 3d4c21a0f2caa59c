#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "windownet/image.hpp"
#include "windownet/keyvalue.hpp"
#include "windownet/windowing.hpp"

namespace windownet {

/// Planted signal for one class: positives carry a blob whose pixels inside
/// [center - halfwidth, center + halfwidth] are raised by `delta` raw units.
struct SignalBand {
  int class_index = 0;
  double center = 2048.0;
  double halfwidth = 100.0;
  double delta = 8.0;

  friend bool operator==(const SignalBand&, const SignalBand&) = default;
};

struct SynthConfig {
  int n_train = 2000;
  int n_val = 500;
  int n_test = 500;
  int image_size = 64;
  int n_classes = 14;
  double prevalence = 0.3;
  std::vector<SignalBand> signal_bands = default_bands();
  double noise_sigma = 1.0;
  /// Each planted band gets a flat "carrier" ellipse per image; blobs sit inside it.
  double carrier_radius = 12.0;
  double blob_radius_min = 8.0;
  double blob_radius_max = 10.0;
  /// Place carriers on the 8-bit grid, offset by -delta/2, so a planted shift
  /// below half an 8-bit step vanishes under round-rescale quantization.
  bool lattice_carriers = true;
  std::uint64_t seed = 0;

  static std::vector<SignalBand> default_bands();
  /// Throws ParameterError on out-of-range sizes, classes or bands.
  void validate() const;
  void write(KeyValues& kv, const std::string& prefix = "synth.") const;
  static SynthConfig read(const KeyValues& kv, const std::string& prefix = "synth.");
};

struct SynthSample {
  ImageTensor image;           ///< 1 x S x S, bit depth 12, integers in [0, 4095]
  std::vector<double> labels;  ///< n_classes entries in {0, 1}
};

struct SynthDataset {
  SynthConfig config;
  std::vector<SynthSample> train;
  std::vector<SynthSample> val;
  std::vector<SynthSample> test;

  const std::vector<SynthSample>& split(const std::string& name) const;
  /// Hash of every pixel and label in every split.
  std::uint64_t fingerprint() const;
};

enum class Split : std::uint64_t { Train = 1, Val = 2, Test = 3 };

/// Deterministic in (config, seed); sample i of a split draws from its own
/// stream derived from (seed, split, i), so splits never share a stream.
SynthDataset generate(const SynthConfig& config);
SynthSample generate_sample(const SynthConfig& config, Split split, std::uint64_t index);

/// (band center, 2 * halfwidth * 1.5) for the class's planted band.
/// Throws ParameterError if the class has no planted band.
WindowSpec oracle_best_window(const SynthConfig& config, int class_index);

/// The integer carrier intensity used for a band.
double carrier_level(const SignalBand& band, bool lattice);

/// Directory layout: manifest.txt (config, seed, fingerprint) and, per split,
/// <split>/NNNNNN.wnt tensors plus <split>/labels.csv (index,class_0,...).
void save_dataset(const SynthDataset& ds, const std::filesystem::path& dir);
SynthDataset load_dataset(const std::filesystem::path& dir);

}  // namespace windownet
