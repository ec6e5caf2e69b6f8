#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "knnre/data_model.hpp"
#include "knnre/memory.hpp"
#include "knnre/search.hpp"

namespace knnre {

struct HyperParams {
  int k = 8;
  double temperature = 1.0;
  double lambda = 1.0;
  double alpha = 1.0;  // combined memories only
  DistanceKind distance = DistanceKind::sq_l2;

  // Throws ValidationError unless k >= 1, T > 0 and lambda, alpha in [0, 1].
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// Softmax over negative neighbor distances at temperature T, accumulated per
// label:  p(y) = sum_{i: r_i = y} exp(-d_i / T) / sum_i exp(-d_i / T).
// Distances are shifted by the minimum before exponentiation so the result is
// finite for any distance scale.
LabelDistribution knn_distribution(std::span<const Neighbor> neighbors, std::size_t num_labels,
                                   double temperature);
inline LabelDistribution knn_distribution(std::span<const Neighbor> neighbors, const LabelVocab& vocab,
                                          double temperature) {
  return knn_distribution(neighbors, vocab.size(), temperature);
}

// lambda * p_knn + (1 - lambda) * p_base.
LabelDistribution interpolate(const LabelDistribution& p_knn, const LabelDistribution& p_base, double lambda);

// alpha * train side + (1 - alpha) * DS side.
LabelDistribution combine(const LabelDistribution& train_side, const LabelDistribution& ds_side, double alpha);

struct Prediction {
  LabelDistribution distribution;
  LabelId label = 0;
  std::vector<NeighborList> neighbors;  // one list per consulted memory
};

// Retrieval settings for one memory; k, T, lambda and distance are used.
struct MemoryRoute {
  const MemoryStore* memory = nullptr;
  HyperParams params;
};

// search -> knn_distribution -> interpolate for one query vector whose base
// row is looked up in `base` by record id.
Prediction predict(std::string_view query_id, std::span<const double> query, const MemoryRoute& route,
                   const BaseProbSet& base, bool exclude_self = false);

// Two memories, each interpolated with its own settings, then mixed with alpha.
Prediction predict_combined(std::string_view query_id, std::span<const double> query, const MemoryRoute& train,
                            const MemoryRoute& ds, double alpha, const BaseProbSet& base,
                            bool exclude_self = false);

// kNN-RE distribution from an already retrieved list; only the first
// min(k, size) neighbors are used.
LabelDistribution knn_re_distribution(std::span<const Neighbor> neighbors, std::span<const double> base_row,
                                      const HyperParams& params);

// predict() for every row of `queries`, parallel across queries.
std::vector<Prediction> predict_all(const EmbeddingSet& queries, const MemoryRoute& route, const BaseProbSet& base,
                                    bool exclude_self = false, std::size_t workers = 1);
std::vector<Prediction> predict_all_combined(const EmbeddingSet& queries, const MemoryRoute& train,
                                             const MemoryRoute& ds, double alpha, const BaseProbSet& base,
                                             bool exclude_self = false, std::size_t workers = 1);

}  // namespace knnre
