#include "knnre/tune.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "knnre/error.hpp"
#include "knnre/parallel.hpp"

namespace knnre {

using json = nlohmann::json;

SearchSpace SearchSpace::defaults() {
  SearchSpace s;
  for (int k = 2; k <= 256; k *= 2) s.k_grid.push_back(k);
  s.temperature_grid.push_back(0.05);
  for (int i = 1; i <= 9; ++i) s.temperature_grid.push_back(i / 10.0);
  for (int i = 0; i <= 10; ++i) {
    s.lambda_grid.push_back(i / 10.0);
    s.alpha_grid.push_back(i / 10.0);
  }
  return s;
}

namespace {

template <typename T>
void check_grid(const std::vector<T>& grid, const char* name, T lo, T hi, bool open_low) {
  if (grid.empty()) throw ValidationError(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const T v = grid[i];
    if ((open_low ? !(v > lo) : !(v >= lo)) || !(v <= hi)) {
      throw ValidationError(std::string(name) + " grid value " + std::to_string(v) + " out of range");
    }
    if (i > 0 && !(grid[i - 1] < v)) {
      throw ValidationError(std::string(name) + " grid must be strictly ascending");
    }
  }
}

bool resolve_exclusion(std::optional<bool> requested, const LabelVocab& vocab) {
  return requested.value_or(vocab.negative_label().has_value());
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

void SearchSpace::validate() const {
  check_grid<int>(k_grid, "k", 1, std::numeric_limits<int>::max(), false);
  check_grid<double>(temperature_grid, "temperature", 0.0, 1.0, true);
  check_grid<double>(lambda_grid, "lambda", 0.0, 1.0, false);
  check_grid<double>(alpha_grid, "alpha", 0.0, 1.0, false);
}

double micro_f1(const std::vector<LabelId>& gold, const std::vector<LabelId>& predicted, const LabelVocab& vocab,
                bool exclude_negative) {
  if (gold.size() != predicted.size()) {
    throw ValidationError("micro_f1: size mismatch");
  }
  const auto negative = vocab.negative_label();
  if (exclude_negative && !negative) {
    throw ValidationError("micro_f1: negative-class exclusion requested but the vocab has no negative label");
  }
  if (!exclude_negative) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == predicted[i];
    return safe_div(static_cast<double>(correct), static_cast<double>(gold.size()));
  }
  std::size_t pos_correct = 0, pos_pred = 0, pos_gold = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool gp = gold[i] != *negative;
    const bool pp = predicted[i] != *negative;
    pos_gold += gp;
    pos_pred += pp;
    pos_correct += gp && gold[i] == predicted[i];
  }
  const double p = safe_div(static_cast<double>(pos_correct), static_cast<double>(pos_pred));
  const double r = safe_div(static_cast<double>(pos_correct), static_cast<double>(pos_gold));
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::vector<LabelDistribution> cached_distributions(const std::vector<NeighborList>& cache,
                                                    const LabeledSet& dev, const BaseProbSet& base,
                                                    const HyperParams& params) {
  if (cache.size() != dev.size()) {
    throw ValidationError("neighbor cache has " + std::to_string(cache.size()) + " lists for " +
                          std::to_string(dev.size()) + " dev records");
  }
  std::vector<LabelDistribution> out;
  out.reserve(dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) {
    out.push_back(knn_re_distribution(cache[i], base.row(dev.embeddings.id(i)), params));
  }
  return out;
}

namespace {

double score_point(const std::vector<NeighborList>& cache, const LabeledSet& dev, const BaseProbSet& base,
                   const HyperParams& params, bool exclude_negative) {
  std::vector<LabelId> predicted(dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) {
    predicted[i] = knn_re_distribution(cache[i], base.row(dev.embeddings.id(i)), params).argmax();
  }
  return micro_f1(dev.labels, predicted, dev.vocab, exclude_negative);
}

void score_all(std::vector<TracePoint>& points, const std::vector<NeighborList>& cache, const LabeledSet& dev,
               const BaseProbSet& base, bool exclude_negative, std::size_t workers) {
  parallel_for(points.size(), workers, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      points[i].dev_f1 = score_point(cache, dev, base, points[i].params, exclude_negative);
    }
  });
}

}  // namespace

TuneResult greedy_search_cached(const std::vector<NeighborList>& cache, const LabeledSet& dev,
                                const BaseProbSet& base, const SearchSpace& space, const TuneOptions& options) {
  space.validate();
  if (dev.size() == 0) throw ValidationError("greedy_search: empty dev set");
  if (cache.size() != dev.size()) {
    throw ValidationError("greedy_search: neighbor cache does not match the dev set");
  }
  for (const auto& id : dev.embeddings.ids()) {
    if (!base.contains(id)) {
      throw ValidationError("greedy_search: dev record \"" + id + "\" has no base probabilities");
    }
  }
  const bool exclude_negative = resolve_exclusion(options.exclude_negative, dev.vocab);

  std::vector<TracePoint> stage1;
  for (int k : space.k_grid) {
    for (double t : space.temperature_grid) {
      stage1.push_back({HyperParams{k, t, 1.0, 1.0, options.distance}, 0.0});
    }
  }
  score_all(stage1, cache, dev, base, exclude_negative, options.workers);
  std::size_t best1 = 0;
  for (std::size_t i = 1; i < stage1.size(); ++i) {
    if (stage1[i].dev_f1 > stage1[best1].dev_f1) best1 = i;
  }

  std::vector<TracePoint> stage2;
  for (double lambda : space.lambda_grid) {
    HyperParams p = stage1[best1].params;
    p.lambda = lambda;
    stage2.push_back({p, 0.0});
  }
  score_all(stage2, cache, dev, base, exclude_negative, options.workers);

  std::size_t best2 = 0;
  for (std::size_t i = 1; i < stage2.size(); ++i) {
    if (stage2[i].dev_f1 > stage2[best2].dev_f1) best2 = i;
  }

  TuneResult result;
  result.best = stage2[best2].params;
  result.dev_f1 = stage2[best2].dev_f1;
  result.trace = std::move(stage1);
  result.trace.insert(result.trace.end(), stage2.begin(), stage2.end());
  return result;
}

TuneResult greedy_search(const MemoryStore& memory, const LabeledSet& dev, const BaseProbSet& base,
                         const SearchSpace& space, const TuneOptions& options) {
  space.validate();
  if (dev.size() == 0) throw ValidationError("greedy_search: empty dev set");
  const int k_max = space.k_grid.back();
  const auto cache = batch_search(memory, dev.embeddings, k_max, options.distance, options.exclude_self,
                                  options.workers);
  return greedy_search_cached(cache, dev, base, space, options);
}

AlphaResult tune_alpha(const std::map<std::string, LabelDistribution>& train_side,
                       const std::map<std::string, LabelDistribution>& ds_side,
                       const std::map<std::string, LabelId>& gold, const LabelVocab& vocab,
                       const std::vector<double>& alpha_grid, std::optional<bool> exclude_negative) {
  check_grid<double>(alpha_grid, "alpha", 0.0, 1.0, false);
  if (train_side.size() != gold.size() || ds_side.size() != gold.size()) {
    throw ValidationError("tune_alpha: record sets differ in size");
  }
  std::vector<LabelId> gold_labels;
  std::vector<const LabelDistribution*> a, b;
  for (const auto& [id, label] : gold) {
    auto ia = train_side.find(id);
    auto ib = ds_side.find(id);
    if (ia == train_side.end() || ib == ds_side.end()) {
      throw ValidationError("tune_alpha: record \"" + id + "\" missing from one side");
    }
    gold_labels.push_back(label);
    a.push_back(&ia->second);
    b.push_back(&ib->second);
  }
  if (gold.empty()) throw ValidationError("tune_alpha: empty dev set");
  const bool excl = resolve_exclusion(exclude_negative, vocab);

  AlphaResult out;
  for (double alpha : alpha_grid) {
    std::vector<LabelId> predicted(gold_labels.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) predicted[i] = combine(*a[i], *b[i], alpha).argmax();
    const double f1 = micro_f1(gold_labels, predicted, vocab, excl);
    out.trace.emplace_back(alpha, f1);
    if (out.trace.size() == 1 || f1 > out.dev_f1) {
      out.alpha = alpha;
      out.dev_f1 = f1;
    }
  }
  return out;
}

namespace {

json params_json(const HyperParams& p) {
  return json{{"k", p.k},
              {"temperature", p.temperature},
              {"lambda", p.lambda},
              {"alpha", p.alpha},
              {"distance", std::string(to_string(p.distance))}};
}

}  // namespace

std::string to_json(const HyperParams& params) { return params_json(params).dump(2); }

HyperParams hyper_params_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    HyperParams p;
    p.k = doc.at("k").get<int>();
    p.temperature = doc.at("temperature").get<double>();
    p.lambda = doc.at("lambda").get<double>();
    p.alpha = doc.value("alpha", 1.0);
    p.distance = parse_distance(doc.value("distance", std::string("sq_l2")));
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("hyperparameters: ") + e.what());
  }
}

std::string to_json(const TuneResult& result) {
  json doc;
  doc["best"] = params_json(result.best);
  doc["dev_f1"] = result.dev_f1;
  json trace = json::array();
  for (const auto& t : result.trace) {
    json e = params_json(t.params);
    e["dev_f1"] = t.dev_f1;
    trace.push_back(std::move(e));
  }
  doc["trace"] = std::move(trace);
  return doc.dump(2);
}

std::string to_json(const AlphaResult& result) {
  json doc;
  doc["alpha"] = result.alpha;
  doc["dev_f1"] = result.dev_f1;
  json trace = json::array();
  for (const auto& [alpha, f1] : result.trace) trace.push_back({{"alpha", alpha}, {"dev_f1", f1}});
  doc["trace"] = std::move(trace);
  return doc.dump(2);
}

}  // namespace knnre
