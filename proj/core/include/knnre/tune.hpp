#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "knnre/aggregate.hpp"
#include "knnre/data_model.hpp"
#include "knnre/memory.hpp"
#include "knnre/search.hpp"

namespace knnre {

struct SearchSpace {
  std::vector<int> k_grid;
  std::vector<double> temperature_grid;
  std::vector<double> lambda_grid;
  std::vector<double> alpha_grid;

  // k in {2, 4, ..., 256}; T in {0.05, 0.1, 0.2, ..., 0.9};
  // lambda and alpha in {0, 0.1, ..., 1}.
  static SearchSpace defaults();
  // Non-empty, sorted ascending, within range.
  void validate() const;
};

struct TracePoint {
  HyperParams params;
  double dev_f1 = 0.0;
};

struct TuneResult {
  HyperParams best;
  double dev_f1 = 0.0;
  std::vector<TracePoint> trace;
};

struct TuneOptions {
  DistanceKind distance = DistanceKind::sq_l2;
  // Dev records that also live in the memory never retrieve themselves.
  bool exclude_self = true;
  // Defaults to "exclude iff the vocab declares a negative label".
  std::optional<bool> exclude_negative;
  std::size_t workers = 1;
};

// Micro-F1 of argmax predictions under the dataset's scoring convention.
double micro_f1(const std::vector<LabelId>& gold, const std::vector<LabelId>& predicted, const LabelVocab& vocab,
                bool exclude_negative);

// kNN-RE distributions for every dev record from a neighbor cache retrieved
// at k >= params.k; each list is cut to its first params.k entries.
std::vector<LabelDistribution> cached_distributions(const std::vector<NeighborList>& cache,
                                                    const LabeledSet& dev, const BaseProbSet& base,
                                                    const HyperParams& params);

// Stage 1: joint (k, T) grid at lambda = 1. Stage 2: lambda sweep at the best
// (k, T). Neighbors are retrieved once at max(k_grid). Stage 1 only fixes
// (k, T); the best point is the earliest stage-2 entry with the maximal dev
// F1, so lambda always comes from lambda_grid.
TuneResult greedy_search(const MemoryStore& memory, const LabeledSet& dev, const BaseProbSet& base,
                         const SearchSpace& space, const TuneOptions& options = {});
TuneResult greedy_search_cached(const std::vector<NeighborList>& cache, const LabeledSet& dev,
                                const BaseProbSet& base, const SearchSpace& space, const TuneOptions& options);

struct AlphaResult {
  double alpha = 0.0;
  double dev_f1 = 0.0;
  std::vector<std::pair<double, double>> trace;  // (alpha, dev F1) in grid order
};

// Mixes two independently tuned kNN-RE distributions per record and picks the
// alpha with the best dev micro-F1 (earliest grid point on ties).
AlphaResult tune_alpha(const std::map<std::string, LabelDistribution>& train_side,
                       const std::map<std::string, LabelDistribution>& ds_side,
                       const std::map<std::string, LabelId>& gold, const LabelVocab& vocab,
                       const std::vector<double>& alpha_grid, std::optional<bool> exclude_negative = std::nullopt);

std::string to_json(const HyperParams& params);
HyperParams hyper_params_from_json(const std::string& text);
std::string to_json(const TuneResult& result);
std::string to_json(const AlphaResult& result);

}  // namespace knnre
