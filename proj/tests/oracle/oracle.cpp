#include "oracle.hpp"

#include <algorithm>
#include <cmath>

namespace knnre::oracle {

std::vector<RefNeighbor> naive_search(const std::vector<std::vector<double>>& keys,
                                      const std::vector<unsigned>& labels, const std::vector<double>& query,
                                      std::size_t k, bool euclidean, const std::vector<std::size_t>& excluded) {
  std::vector<RefNeighbor> all;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    if (std::find(excluded.begin(), excluded.end(), r) != excluded.end()) continue;
    double d = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double diff = query[j] - keys[r][j];
      d += diff * diff;
    }
    all.push_back({r, euclidean ? std::sqrt(d) : d, labels[r]});
  }
  std::sort(all.begin(), all.end(), [](const RefNeighbor& a, const RefNeighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.row < b.row;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<double> naive_knn(const std::vector<RefNeighbor>& neighbors, std::size_t num_labels, double temperature) {
  std::vector<double> p(num_labels, 0.0);
  double z = 0.0;
  for (const auto& n : neighbors) {
    const double w = std::exp(-n.distance / temperature);
    p[n.label] += w;
    z += w;
  }
  for (auto& v : p) v /= z;
  return p;
}

std::vector<double> naive_mix(const std::vector<double>& a, const std::vector<double>& b, double lambda) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
  return out;
}

std::vector<double> naive_predict(const std::vector<std::vector<double>>& keys, const std::vector<unsigned>& labels,
                                  const std::vector<double>& query, const std::vector<double>& base, std::size_t k,
                                  double temperature, double lambda, bool euclidean) {
  const auto nn = naive_search(keys, labels, query, k, euclidean);
  return naive_mix(naive_knn(nn, base.size(), temperature), base, lambda);
}

double naive_micro_f1(const std::vector<unsigned>& gold, const std::vector<unsigned>& predicted, int negative) {
  double tp = 0, pred_pos = 0, gold_pos = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = static_cast<int>(gold[i]) != negative;
    const bool p = static_cast<int>(predicted[i]) != negative;
    if (g) gold_pos += 1;
    if (p) pred_pos += 1;
    if (g && gold[i] == predicted[i]) tp += 1;
  }
  const double prec = pred_pos > 0 ? tp / pred_pos : 0.0;
  const double rec = gold_pos > 0 ? tp / gold_pos : 0.0;
  return prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
}

}  // namespace knnre::oracle
