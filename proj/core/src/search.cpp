#include "knnre/search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <utility>

#if defined(__AVX512F__) || (defined(__AVX2__) && defined(__FMA__))
#include <immintrin.h>
#endif

#include "knnre/error.hpp"
#include "knnre/parallel.hpp"

namespace knnre {

std::string_view to_string(DistanceKind kind) {
  return kind == DistanceKind::l2 ? "l2" : "sq_l2";
}

DistanceKind parse_distance(std::string_view name) {
  if (name == "l2") return DistanceKind::l2;
  if (name == "sq_l2") return DistanceKind::sq_l2;
  throw ValidationError("unknown distance \"" + std::string(name) + "\" (expected l2 or sq_l2)");
}

namespace {

// Every (query, key) dot product is accumulated the same way no matter which
// tile computes it: one lane-vector accumulator over full lane strides, a
// fixed pairwise lane reduction, then the scalar tail in order.
#if defined(__AVX512F__)
constexpr std::size_t kLanes = 8;
using Vec = __m512d;
inline Vec vzero() { return _mm512_setzero_pd(); }
inline Vec vload(const double* p) { return _mm512_loadu_pd(p); }
inline Vec vfma(Vec a, Vec b, Vec c) { return _mm512_fmadd_pd(a, b, c); }
#elif defined(__AVX2__) && defined(__FMA__)
constexpr std::size_t kLanes = 4;
using Vec = __m256d;
inline Vec vzero() { return _mm256_setzero_pd(); }
inline Vec vload(const double* p) { return _mm256_loadu_pd(p); }
inline Vec vfma(Vec a, Vec b, Vec c) { return _mm256_fmadd_pd(a, b, c); }
#else
constexpr std::size_t kLanes = 4;
struct Vec {
  double v[4];
};
inline Vec vzero() { return Vec{{0.0, 0.0, 0.0, 0.0}}; }
inline Vec vload(const double* p) { return Vec{{p[0], p[1], p[2], p[3]}}; }
inline Vec vfma(Vec a, Vec b, Vec c) {
  for (int i = 0; i < 4; ++i) c.v[i] = a.v[i] * b.v[i] + c.v[i];
  return c;
}
#endif

inline double reduce(Vec acc) {
  alignas(64) double lanes[kLanes];
  std::memcpy(lanes, &acc, sizeof(lanes));
  for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
    for (std::size_t i = 0; i < width; ++i) lanes[i] = lanes[2 * i] + lanes[2 * i + 1];
  }
  return lanes[0];
}

template <std::size_t QT, std::size_t RT>
void dot_tile(const double* const* q, const double* const* m, std::size_t dim, double* out, std::size_t stride) {
  Vec acc[QT][RT];
  for (std::size_t a = 0; a < QT; ++a)
    for (std::size_t b = 0; b < RT; ++b) acc[a][b] = vzero();
  std::size_t j = 0;
  for (; j + kLanes <= dim; j += kLanes) {
    Vec mv[RT];
    for (std::size_t b = 0; b < RT; ++b) mv[b] = vload(m[b] + j);
    for (std::size_t a = 0; a < QT; ++a) {
      const Vec qv = vload(q[a] + j);
      for (std::size_t b = 0; b < RT; ++b) acc[a][b] = vfma(qv, mv[b], acc[a][b]);
    }
  }
  for (std::size_t a = 0; a < QT; ++a) {
    for (std::size_t b = 0; b < RT; ++b) {
      double s = reduce(acc[a][b]);
      for (std::size_t t = j; t < dim; ++t) s += q[a][t] * m[b][t];
      out[a * stride + b] = s;
    }
  }
}

constexpr std::size_t kQueryTile = 4;
constexpr std::size_t kRowTile = 4;
constexpr std::size_t kRowBlock = 128;
constexpr std::size_t kQueryChunk = 32;

using DotFn = void (*)(const double* const*, const double* const*, std::size_t, double*, std::size_t);

template <std::size_t... Q, std::size_t... R>
constexpr auto make_table(std::index_sequence<Q...>, std::index_sequence<R...>) {
  std::array<std::array<DotFn, kRowTile>, kQueryTile> table{};
  auto fill_row = [&table]<std::size_t QI>(std::integral_constant<std::size_t, QI>) {
    ((table[QI][R] = &dot_tile<QI + 1, R + 1>), ...);
  };
  (fill_row(std::integral_constant<std::size_t, Q>{}), ...);
  return table;
}

const auto kDotTable = make_table(std::make_index_sequence<kQueryTile>{}, std::make_index_sequence<kRowTile>{});

struct Candidate {
  double distance;
  std::size_t row;
  bool operator<(const Candidate& o) const {
    return distance < o.distance || (distance == o.distance && row < o.row);
  }
};

// Bounded max-heap holding the k best (distance, row) pairs seen so far.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

  void offer(double distance, std::size_t row) {
    const Candidate c{distance, row};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  std::vector<Candidate> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end());
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

double squared_norm(std::span<const double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  return n;
}

struct QueryRef {
  const double* data;
  double norm;
  std::vector<std::size_t> excluded;  // sorted memory rows
};

// Scans the whole memory for a group of queries, blocking over rows so each
// key block is reused by every query in the group.
void scan(const MemoryStore& memory, std::span<const QueryRef> queries, std::span<TopK> heaps) {
  const std::size_t dim = memory.dim();
  const std::size_t rows = memory.size();
  const auto& norms = memory.squared_norms();
  const double* keys = memory.keys().data();
  const std::size_t nq = queries.size();

  std::vector<double> dots(nq * kRowBlock);
  std::vector<std::size_t> cursor(nq, 0);

  for (std::size_t r0 = 0; r0 < rows; r0 += kRowBlock) {
    const std::size_t rb = std::min(kRowBlock, rows - r0);
    for (std::size_t qa = 0; qa < nq; qa += kQueryTile) {
      const std::size_t qt = std::min(kQueryTile, nq - qa);
      const double* qptr[kQueryTile];
      for (std::size_t a = 0; a < qt; ++a) qptr[a] = queries[qa + a].data;
      for (std::size_t rr = 0; rr < rb; rr += kRowTile) {
        const std::size_t rt = std::min(kRowTile, rb - rr);
        const double* mptr[kRowTile];
        for (std::size_t b = 0; b < rt; ++b) mptr[b] = keys + (r0 + rr + b) * dim;
        kDotTable[qt - 1][rt - 1](qptr, mptr, dim, dots.data() + qa * kRowBlock + rr, kRowBlock);
      }
    }
    for (std::size_t a = 0; a < nq; ++a) {
      const QueryRef& q = queries[a];
      const double* d = dots.data() + a * kRowBlock;
      std::size_t& cur = cursor[a];
      for (std::size_t i = 0; i < rb; ++i) {
        const std::size_t row = r0 + i;
        if (cur < q.excluded.size() && q.excluded[cur] == row) {
          ++cur;
          continue;
        }
        const double dist = std::max(0.0, (q.norm - 2.0 * d[i]) + norms[row]);
        heaps[a].offer(dist, row);
      }
    }
  }
}

NeighborList finish(const MemoryStore& memory, TopK&& heap, DistanceKind kind) {
  std::vector<Candidate> best = std::move(heap).sorted();
  if (kind == DistanceKind::l2) {
    for (auto& c : best) c.distance = std::sqrt(c.distance);
    std::sort(best.begin(), best.end());
  }
  NeighborList out;
  out.reserve(best.size());
  for (const auto& c : best) {
    out.push_back(Neighbor{c.row, memory.id(c.row), c.distance, memory.value(c.row)});
  }
  return out;
}

void check_args(const MemoryStore& memory, std::size_t query_dim, int k) {
  if (k <= 0) {
    throw ValidationError("k must be positive, got " + std::to_string(k));
  }
  if (query_dim != memory.dim()) {
    throw ValidationError("dimension mismatch: query has dim " + std::to_string(query_dim) + ", memory has dim " +
                          std::to_string(memory.dim()));
  }
}

std::size_t usable_k(const MemoryStore& memory, const QueryRef& q, int k) {
  const std::size_t usable = memory.size() - q.excluded.size();
  if (usable == 0) {
    throw ComputationError("memory empty after exclusion");
  }
  return std::min<std::size_t>(static_cast<std::size_t>(k), usable);
}

}  // namespace

NeighborList search(const MemoryStore& memory, std::span<const double> query, int k, DistanceKind distance,
                    const std::unordered_set<std::string>& exclude) {
  check_args(memory, query.size(), k);
  QueryRef q{query.data(), squared_norm(query), {}};
  for (const auto& id : exclude) {
    if (auto row = memory.find(id)) q.excluded.push_back(*row);
  }
  std::sort(q.excluded.begin(), q.excluded.end());
  TopK heap(usable_k(memory, q, k));
  scan(memory, std::span(&q, 1), std::span(&heap, 1));
  return finish(memory, std::move(heap), distance);
}

std::vector<NeighborList> batch_search(const MemoryStore& memory, const EmbeddingSet& queries, int k,
                                       DistanceKind distance, bool exclude_self, std::size_t workers) {
  std::vector<NeighborList> results(queries.size());
  if (queries.empty()) {
    if (k <= 0) check_args(memory, memory.dim(), k);
    return results;
  }
  check_args(memory, queries.dim(), k);
  parallel_for(queries.size(), workers, kQueryChunk, [&](std::size_t begin, std::size_t end) {
    std::vector<QueryRef> refs;
    std::vector<TopK> heaps;
    refs.reserve(end - begin);
    heaps.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      auto row = queries.row(i);
      QueryRef q{row.data(), squared_norm(row), {}};
      if (exclude_self) {
        if (auto self = memory.find(queries.id(i))) q.excluded.push_back(*self);
      }
      heaps.emplace_back(usable_k(memory, q, k));
      refs.push_back(std::move(q));
    }
    scan(memory, refs, heaps);
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = finish(memory, std::move(heaps[i - begin]), distance);
    }
  });
  return results;
}

}  // namespace knnre
