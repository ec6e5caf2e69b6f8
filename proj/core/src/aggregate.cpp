#include "knnre/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "knnre/error.hpp"
#include "knnre/parallel.hpp"

namespace knnre {

void HyperParams::validate() const {
  if (k < 1) throw ValidationError("k must be >= 1, got " + std::to_string(k));
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("temperature must be positive, got " + std::to_string(temperature));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

LabelDistribution knn_distribution(std::span<const Neighbor> neighbors, std::size_t num_labels,
                                   double temperature) {
  if (neighbors.empty()) {
    throw ValidationError("knn_distribution: empty neighbor list");
  }
  if (!(temperature > 0.0)) {
    throw ValidationError("knn_distribution: temperature must be positive, got " + std::to_string(temperature));
  }
  double shift = neighbors.front().distance;
  for (const auto& n : neighbors) shift = std::min(shift, n.distance);

  LabelDistribution p(num_labels);
  double total = 0.0;
  for (const auto& n : neighbors) {
    if (n.label >= num_labels) {
      throw ValidationError("knn_distribution: neighbor label " + std::to_string(n.label) + " outside vocab");
    }
    const double w = std::exp(-(n.distance - shift) / temperature);
    p[n.label] += w;
    total += w;
  }
  for (std::size_t y = 0; y < num_labels; ++y) p[y] /= total;
  return p;
}

namespace {

LabelDistribution mix(const LabelDistribution& a, const LabelDistribution& b, double w, const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ValidationError(std::string(what) + ": weight must lie in [0, 1], got " + std::to_string(w));
  }
  LabelDistribution out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = w * a[i] + (1.0 - w) * b[i];
  return out;
}

}  // namespace

LabelDistribution interpolate(const LabelDistribution& p_knn, const LabelDistribution& p_base, double lambda) {
  return mix(p_knn, p_base, lambda, "interpolate");
}

LabelDistribution combine(const LabelDistribution& train_side, const LabelDistribution& ds_side, double alpha) {
  return mix(train_side, ds_side, alpha, "combine");
}

LabelDistribution knn_re_distribution(std::span<const Neighbor> neighbors, std::span<const double> base_row,
                                      const HyperParams& params) {
  const std::size_t k = std::min<std::size_t>(neighbors.size(), static_cast<std::size_t>(std::max(params.k, 0)));
  const LabelDistribution p_knn = knn_distribution(neighbors.first(k), base_row.size(), params.temperature);
  const LabelDistribution p_base(std::vector<double>(base_row.begin(), base_row.end()));
  return interpolate(p_knn, p_base, params.lambda);
}

namespace {

void check_route(const MemoryRoute& route, const BaseProbSet& base) {
  if (route.memory == nullptr) throw ValidationError("predict: no memory given");
  route.params.validate();
  if (route.memory->vocab().size() != base.vocab().size()) {
    throw ValidationError("predict: memory vocab has " + std::to_string(route.memory->vocab().size()) +
                          " labels, base probabilities have " + std::to_string(base.vocab().size()));
  }
}

NeighborList retrieve(std::string_view query_id, std::span<const double> query, const MemoryRoute& route,
                      bool exclude_self) {
  std::unordered_set<std::string> exclude;
  if (exclude_self) exclude.emplace(query_id);
  return search(*route.memory, query, route.params.k, route.params.distance, exclude);
}

}  // namespace

Prediction predict(std::string_view query_id, std::span<const double> query, const MemoryRoute& route,
                   const BaseProbSet& base, bool exclude_self) {
  check_route(route, base);
  const auto base_row = base.row(query_id);
  Prediction out;
  out.neighbors.push_back(retrieve(query_id, query, route, exclude_self));
  out.distribution = knn_re_distribution(out.neighbors[0], base_row, route.params);
  out.label = out.distribution.argmax();
  return out;
}

Prediction predict_combined(std::string_view query_id, std::span<const double> query, const MemoryRoute& train,
                            const MemoryRoute& ds, double alpha, const BaseProbSet& base, bool exclude_self) {
  check_route(train, base);
  check_route(ds, base);
  const auto base_row = base.row(query_id);
  Prediction out;
  out.neighbors.push_back(retrieve(query_id, query, train, exclude_self));
  out.neighbors.push_back(retrieve(query_id, query, ds, exclude_self));
  out.distribution = combine(knn_re_distribution(out.neighbors[0], base_row, train.params),
                             knn_re_distribution(out.neighbors[1], base_row, ds.params), alpha);
  out.label = out.distribution.argmax();
  return out;
}

namespace {

void check_base_rows(const EmbeddingSet& queries, const BaseProbSet& base) {
  for (const auto& id : queries.ids()) {
    if (!base.contains(id)) {
      throw ComputationError("no base probabilities for record \"" + id + "\"");
    }
  }
}

}  // namespace

std::vector<Prediction> predict_all(const EmbeddingSet& queries, const MemoryRoute& route, const BaseProbSet& base,
                                    bool exclude_self, std::size_t workers) {
  check_route(route, base);
  check_base_rows(queries, base);
  auto lists = batch_search(*route.memory, queries, route.params.k, route.params.distance, exclude_self, workers);
  std::vector<Prediction> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out[i].neighbors.push_back(std::move(lists[i]));
    out[i].distribution = knn_re_distribution(out[i].neighbors[0], base.row(queries.id(i)), route.params);
    out[i].label = out[i].distribution.argmax();
  }
  return out;
}

std::vector<Prediction> predict_all_combined(const EmbeddingSet& queries, const MemoryRoute& train,
                                             const MemoryRoute& ds, double alpha, const BaseProbSet& base,
                                             bool exclude_self, std::size_t workers) {
  check_route(train, base);
  check_route(ds, base);
  check_base_rows(queries, base);
  auto train_lists =
      batch_search(*train.memory, queries, train.params.k, train.params.distance, exclude_self, workers);
  auto ds_lists = batch_search(*ds.memory, queries, ds.params.k, ds.params.distance, exclude_self, workers);
  std::vector<Prediction> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto base_row = base.row(queries.id(i));
    out[i].distribution = combine(knn_re_distribution(train_lists[i], base_row, train.params),
                                  knn_re_distribution(ds_lists[i], base_row, ds.params), alpha);
    out[i].label = out[i].distribution.argmax();
    out[i].neighbors.push_back(std::move(train_lists[i]));
    out[i].neighbors.push_back(std::move(ds_lists[i]));
  }
  return out;
}

}  // namespace knnre
