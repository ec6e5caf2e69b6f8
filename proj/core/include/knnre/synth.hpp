#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "knnre/data_model.hpp"

namespace knnre {

// Portable random stream: std::mt19937_64 (bit-exact by the standard) with
// uniform doubles taken from the top 53 bits and normals from the Box-Muller
// transform, both outputs of each pair used in order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();             // [0, 1)
  double normal();              // N(0, 1)
  std::size_t index(std::size_t n);  // uniform in [0, n)

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct SynthClass {
  std::string name;
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::size_t ds = 0;
  double spread = 1.0;
  std::optional<std::vector<double>> mean;  // drawn from N(0, mean_scale^2 I) when absent
};

// Miscalibrated base classifier: softmax over negative squared distances to
// class centroids estimated from the training split, with `bias_strength`
// added to the majority-class logit. With probability `label_noise` the
// true-class logit is swapped with a random other class before the softmax.
struct CentroidModel {
  LabelId majority_class = 0;
  double bias_strength = 0.0;
  double label_noise = 0.0;
  double temperature = 1.0;
};

struct SynthSpec {
  std::size_t dim = 0;
  std::vector<SynthClass> classes;
  double mean_scale = 1.0;
  CentroidModel base;
  double ds_label_noise = 0.0;  // uniform label flipping in the DS split
  std::optional<std::string> negative_label;
  std::uint64_t seed = 0;

  void validate() const;
  static SynthSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct SynthData {
  LabelVocab vocab;
  std::vector<std::vector<double>> means;
  LabeledSet train, dev, test, ds;
  BaseProbSet train_base, dev_base, test_base;
};

SynthData generate(const SynthSpec& spec);

// Writes train/dev/test (and ds when non-empty) with a manifest.json into
// `dir` and returns the manifest path.
std::filesystem::path write_synth(const SynthData& data, const std::filesystem::path& dir);

// Base distributions for `queries` from centroids fitted on `fit`. Classes
// absent from `fit` get zero probability.
BaseProbSet centroid_base_probs(const LabeledSet& fit, const LabeledSet& queries, const CentroidModel& model,
                                Rng& rng);

// Stratified subsample of round(fraction * N) rows: floor(fraction * n_c) per
// class plus the remainder spread by largest fractional part, with at least
// one row for every present class. Rows are chosen per class in label-id
// order by a partial Fisher-Yates shuffle and returned in original order.
LabeledSet subsample(const LabeledSet& set, double fraction, std::uint64_t seed);

}  // namespace knnre
