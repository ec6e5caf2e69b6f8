#include <benchmark/benchmark.h>

#include <random>
#include <map>
#include <string>

#include "knnre/aggregate.hpp"
#include "knnre/search.hpp"

namespace {

using namespace knnre;

struct Data {
  MemoryStore memory;
  EmbeddingSet queries;
};

Data make_data(std::size_t rows, std::size_t dim, std::size_t nq) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  LabeledSet set{EmbeddingSet(dim), {}, LabelVocab({"A", "B", "C", "D"})};
  std::vector<double> v(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& x : v) x = unit(gen);
    set.embeddings.append("m" + std::to_string(r), v);
    set.labels.push_back(static_cast<LabelId>(r % 4));
  }
  EmbeddingSet queries(dim);
  for (std::size_t q = 0; q < nq; ++q) {
    for (auto& x : v) x = unit(gen);
    queries.append("q" + std::to_string(q), v);
  }
  return {build_memory(set, SourceTag::train()), std::move(queries)};
}

void BM_BatchSearch(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const int k = static_cast<int>(state.range(2));
  static std::map<std::pair<std::size_t, std::size_t>, Data> cache;
  auto it = cache.find({rows, dim});
  if (it == cache.end()) it = cache.emplace(std::make_pair(rows, dim), make_data(rows, dim, 64)).first;
  const Data& d = it->second;
  for (auto _ : state) {
    benchmark::DoNotOptimize(batch_search(d.memory, d.queries, k));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.queries.size()));
  state.counters["pairs/s"] = benchmark::Counter(
      static_cast<double>(state.iterations()) * static_cast<double>(d.queries.size() * rows),
      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_BatchSearch)
    ->Args({10000, 768, 8})
    ->Args({10000, 768, 256})
    ->Args({100000, 64, 16})
    ->Unit(benchmark::kMillisecond);

void BM_KnnDistribution(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> unit(0.0, 5.0);
  NeighborList n(k);
  for (std::size_t i = 0; i < k; ++i) n[i] = Neighbor{i, {}, unit(gen), static_cast<LabelId>(i % 40)};
  for (auto _ : state) benchmark::DoNotOptimize(knn_distribution(n, 41, 0.5));
}
BENCHMARK(BM_KnnDistribution)->Arg(8)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
