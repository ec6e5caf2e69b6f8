#include <gtest/gtest.h>

#include <cmath>

#include "knnre/error.hpp"
#include "knnre/search.hpp"
#include "oracle/oracle.hpp"
#include "oracle/test_util.hpp"

using namespace knnre;

namespace {

MemoryStore line_memory() {
  LabeledSet set{EmbeddingSet(1, {"m0", "m1", "m2"}, {0, 1, 3}), {0, 1, 1}, LabelVocab({"A", "B"})};
  return build_memory(set, SourceTag::train());
}

void expect_matches_oracle(const NeighborList& got, const std::vector<oracle::RefNeighbor>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].memory_row, want[i].row) << "position " << i;
    EXPECT_EQ(got[i].label, want[i].label);
    EXPECT_NEAR(got[i].distance, want[i].distance, 1e-9 * (1.0 + want[i].distance));
  }
}

}  // namespace

TEST(Search, OneDimensionalExample) {
  auto m = line_memory();
  std::vector<double> q{0.9};
  auto nn = search(m, q, 2);
  ASSERT_EQ(nn.size(), 2u);
  EXPECT_EQ(nn[0].memory_row, 1u);
  EXPECT_EQ(nn[0].label, 1u);
  EXPECT_EQ(nn[0].record_id, "m1");
  EXPECT_NEAR(nn[0].distance, 0.01, 1e-12);
  EXPECT_EQ(nn[1].memory_row, 0u);
  EXPECT_EQ(nn[1].label, 0u);
  EXPECT_NEAR(nn[1].distance, 0.81, 1e-12);
}

TEST(Search, EuclideanTakesSquareRoot) {
  auto m = line_memory();
  std::vector<double> q{0.9};
  auto nn = search(m, q, 3, DistanceKind::l2);
  ASSERT_EQ(nn.size(), 3u);
  EXPECT_NEAR(nn[0].distance, 0.1, 1e-12);
  EXPECT_NEAR(nn[1].distance, 0.9, 1e-12);
  EXPECT_NEAR(nn[2].distance, 2.1, 1e-12);
}

TEST(Search, TiesGoToLowerRow) {
  LabeledSet set{EmbeddingSet(1, {"a", "b", "c"}, {2, 0, 1}), {0, 1, 0}, LabelVocab({"A", "B"})};
  auto m = build_memory(set, SourceTag::train());
  std::vector<double> q{1.0};
  auto nn = search(m, q, 3);
  ASSERT_EQ(nn.size(), 3u);
  EXPECT_EQ(nn[0].memory_row, 2u);
  EXPECT_EQ(nn[1].memory_row, 0u);
  EXPECT_EQ(nn[2].memory_row, 1u);
  EXPECT_EQ(nn[1].distance, nn[2].distance);
}

TEST(Search, KClampedToMemorySize) {
  auto m = line_memory();
  std::vector<double> q{5.0};
  EXPECT_EQ(search(m, q, 10).size(), 3u);
}

TEST(Search, RejectsBadArguments) {
  auto m = line_memory();
  std::vector<double> q{0.0};
  EXPECT_THROW(search(m, q, 0), ValidationError);
  std::vector<double> q2{0.0, 1.0};
  EXPECT_THROW(search(m, q2, 1), ValidationError);
  EXPECT_THROW(search(m, q, 1, DistanceKind::sq_l2, {"m0", "m1", "m2"}), ComputationError);
  EXPECT_THROW(parse_distance("cosine"), ValidationError);
  EXPECT_EQ(parse_distance("l2"), DistanceKind::l2);
}

TEST(Search, ExcludedIdsAreSkipped) {
  auto m = line_memory();
  std::vector<double> q{0.9};
  auto nn = search(m, q, 2, DistanceKind::sq_l2, {"m1"});
  ASSERT_EQ(nn.size(), 2u);
  EXPECT_EQ(nn[0].memory_row, 0u);
  EXPECT_EQ(nn[1].memory_row, 2u);
}

TEST(Search, MatchesNaiveReferenceOnRandomInputs) {
  std::mt19937_64 gen(42);
  auto vocab = knnre::testing::letters(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + trial % 13;
    const bool grid = trial % 2 == 0;
    auto set = knnre::testing::random_set(gen, vocab, 20 + trial * 7, dim, "m", grid);
    auto m = build_memory(set, SourceTag::train());
    auto rawm = knnre::testing::raw(m);
    auto queries = knnre::testing::random_set(gen, vocab, 5, dim, "q", grid);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      auto q = knnre::testing::row_vector(queries.embeddings, i);
      const int k = 1 + static_cast<int>(gen() % 40);
      for (auto kind : {DistanceKind::sq_l2, DistanceKind::l2}) {
        auto got = search(m, q, k, kind);
        auto want = oracle::naive_search(rawm.keys, rawm.labels, q, k, kind == DistanceKind::l2);
        expect_matches_oracle(got, want);
      }
    }
  }
}

TEST(BatchSearch, SingletonEqualsSearch) {
  auto m = line_memory();
  EmbeddingSet qs(1, {"q"}, {0.9});
  auto batch = batch_search(m, qs, 2);
  ASSERT_EQ(batch.size(), 1u);
  std::vector<double> q{0.9};
  EXPECT_EQ(batch[0], search(m, q, 2));
}

TEST(BatchSearch, ExcludeSelfDropsOwnRow) {
  std::mt19937_64 gen(3);
  auto set = knnre::testing::random_set(gen, knnre::testing::letters(3), 64, 5, "r");
  auto m = build_memory(set, SourceTag::train());
  auto batch = batch_search(m, set.embeddings, 4, DistanceKind::sq_l2, true);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (const auto& n : batch[i]) EXPECT_NE(n.memory_row, i);
    std::vector<double> q = knnre::testing::row_vector(set.embeddings, i);
    EXPECT_EQ(batch[i], search(m, q, 4, DistanceKind::sq_l2, {set.embeddings.id(i)}));
  }
  auto with_self = batch_search(m, set.embeddings, 1, DistanceKind::sq_l2, false);
  for (std::size_t i = 0; i < with_self.size(); ++i) EXPECT_EQ(with_self[i][0].memory_row, i);
}

TEST(BatchSearch, WorkerCountDoesNotChangeOutput) {
  std::mt19937_64 gen(8);
  auto vocab = knnre::testing::letters(5);
  auto set = knnre::testing::random_set(gen, vocab, 700, 37, "m");
  auto qs = knnre::testing::random_set(gen, vocab, 150, 37, "q");
  auto m = build_memory(set, SourceTag::train());
  for (auto kind : {DistanceKind::sq_l2, DistanceKind::l2}) {
    auto one = batch_search(m, qs.embeddings, 33, kind, false, 1);
    auto eight = batch_search(m, qs.embeddings, 33, kind, false, 8);
    EXPECT_EQ(one, eight);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      EXPECT_EQ(one[i], search(m, knnre::testing::row_vector(qs.embeddings, i), 33, kind));
    }
  }
}
