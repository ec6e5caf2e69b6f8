#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "knnre/dataset_io.hpp"
#include "knnre/error.hpp"
#include "knnre/metrics.hpp"
#include "knnre/synth.hpp"
#include "knnre/tune.hpp"
#include "oracle/test_util.hpp"

using namespace knnre;
using knnre::testing::TempDir;

namespace {

SynthSpec load_spec(const std::string& name) {
  std::ifstream in(std::string(KNNRE_CONFIG_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return SynthSpec::from_json(ss.str());
}

SynthSpec tiny_spec(std::uint64_t seed) {
  SynthSpec s;
  s.dim = 3;
  s.seed = seed;
  s.classes = {{"A", 20, 5, 5, 10, 0.5, std::nullopt}, {"B", 8, 5, 5, 10, 0.5, std::nullopt}};
  s.base.bias_strength = 1.0;
  s.base.label_noise = 0.2;
  s.ds_label_noise = 0.1;
  return s;
}

double accuracy_of(const LabeledSet& set, const std::vector<LabelId>& pred) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < set.size(); ++i) ok += set.labels[i] == pred[i];
  return static_cast<double>(ok) / static_cast<double>(set.size());
}

}  // namespace

TEST(Rng, EngineMatchesStandardSequence) {
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Rng, UniformUsesTopBits) {
  Rng a(99), b(99);
  const std::uint64_t raw = a.next();
  EXPECT_EQ(b.uniform(), static_cast<double>(raw >> 11) / 9007199254740992.0);
}

TEST(Rng, BoxMullerPairsInOrder) {
  Rng a(7), b(7);
  const double u1 = 1.0 - static_cast<double>(a.next() >> 11) / 9007199254740992.0;
  const double u2 = static_cast<double>(a.next() >> 11) / 9007199254740992.0;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double pi = 3.14159265358979323846;
  EXPECT_EQ(b.normal(), r * std::cos(2.0 * pi * u2));
  EXPECT_EQ(b.normal(), r * std::sin(2.0 * pi * u2));
}

TEST(Rng, NormalMoments) {
  Rng rng(1);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Generate, SplitSizesAndDistributions) {
  auto d = generate(tiny_spec(3));
  EXPECT_EQ(d.train.size(), 28u);
  EXPECT_EQ(d.dev.size(), 10u);
  EXPECT_EQ(d.ds.size(), 20u);
  EXPECT_EQ(d.train_base.size(), 28u);
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    EXPECT_TRUE(d.test_base.distribution(d.test.embeddings.id(i)).is_valid(1e-12));
  }
  EXPECT_EQ(d.train.embeddings.id(0), "train-000000");
}

TEST(Generate, SameSeedWritesIdenticalFiles) {
  TempDir a, b;
  write_synth(generate(tiny_spec(7)), a.path());
  write_synth(generate(tiny_spec(7)), b.path());
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(knnre::testing::slurp(entry.path()), knnre::testing::slurp(b / name)) << name;
    ++files;
  }
  EXPECT_GE(files, 10u);
  auto m = load_manifest(a / "manifest.json");
  EXPECT_EQ(load_split(m, "train", true).data.size(), 28u);
}

TEST(Generate, DifferentSeedsDiffer) {
  EXPECT_NE(generate(tiny_spec(1)).train.embeddings, generate(tiny_spec(2)).train.embeddings);
}

TEST(Generate, LongTailHistogramMatchesSpec) {
  auto spec = load_spec("synth_longtail.json");
  auto d = generate(spec);
  auto hist = label_histogram(d.train);
  EXPECT_EQ(hist[0], 3862u);
  std::size_t under_300 = 0;
  for (LabelId c = 0; c < spec.classes.size(); ++c) {
    EXPECT_EQ(hist[c], spec.classes[c].train) << spec.classes[c].name;
    under_300 += hist[c] < 300;
  }
  EXPECT_EQ(under_300, spec.classes.size() - 1);
}

TEST(Generate, SeparableLimitIsNotDegraded) {
  SynthSpec s;
  s.dim = 4;
  s.seed = 5;
  s.mean_scale = 3.0;
  for (int c = 0; c < 4; ++c) s.classes.push_back({"c" + std::to_string(c), 50, 40, 40, 0, 1e-3, std::nullopt});
  auto d = generate(s);
  std::vector<LabelId> base_pred;
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    base_pred.push_back(d.test_base.distribution(d.test.embeddings.id(i)).argmax());
  }
  const double base_acc = accuracy_of(d.test, base_pred);
  EXPECT_GE(base_acc, 0.99);
  auto memory = build_memory(d.train, SourceTag::train());
  auto tuned = greedy_search(memory, d.dev, d.dev_base, SearchSpace::defaults());
  auto preds = predict_all(d.test.embeddings, MemoryRoute{&memory, tuned.best}, d.test_base);
  std::vector<LabelId> knn_pred;
  for (const auto& p : preds) knn_pred.push_back(p.label);
  EXPECT_GE(accuracy_of(d.test, knn_pred), base_acc);
}

TEST(SynthSpec, JsonRoundTripAndValidation) {
  auto s = tiny_spec(11);
  s.negative_label = "B";
  auto back = SynthSpec::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_THROW(SynthSpec::from_json("{\"seed\": 1, \"dim\": 0, \"classes\": []}"), ValidationError);
  auto bad = tiny_spec(1);
  bad.base.label_noise = 2.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Subsample, FullFractionIsIdentity) {
  auto d = generate(tiny_spec(4));
  auto s = subsample(d.train, 1.0, 9);
  EXPECT_EQ(s.embeddings, d.train.embeddings);
  EXPECT_EQ(s.labels, d.train.labels);
  EXPECT_THROW(subsample(d.train, 0.0, 9), ValidationError);
  EXPECT_THROW(subsample(d.train, 1.5, 9), ValidationError);
}

TEST(Subsample, HalfOfBalancedSet) {
  auto vocab = knnre::testing::letters(3);
  LabeledSet set{EmbeddingSet(1), {}, vocab};
  for (int i = 0; i < 12; ++i) {
    set.embeddings.append("r" + std::to_string(i), std::vector<double>{static_cast<double>(i)});
    set.labels.push_back(static_cast<LabelId>(i % 3));
  }
  auto s = subsample(set, 0.5, 1);
  EXPECT_EQ(label_histogram(s), (std::map<LabelId, std::size_t>{{0, 2}, {1, 2}, {2, 2}}));
  for (std::size_t i = 1; i < s.size(); ++i) {
    EXPECT_LT(*set.embeddings.find(s.embeddings.id(i - 1)), *set.embeddings.find(s.embeddings.id(i)));
  }
  EXPECT_EQ(subsample(set, 0.5, 1).embeddings, s.embeddings);
}

TEST(Subsample, OnePercentOfWiki80ScaleTrain) {
  // 45,330 training examples over 80 relation types.
  std::vector<std::string> names;
  for (int c = 0; c < 80; ++c) names.push_back("rel" + std::to_string(c));
  LabeledSet set{EmbeddingSet(1), {}, LabelVocab(names)};
  std::size_t row = 0;
  for (LabelId c = 0; c < 80; ++c) {
    const std::size_t n = c < 50 ? 567 : 566;
    for (std::size_t i = 0; i < n; ++i, ++row) {
      set.embeddings.append("r" + std::to_string(row), std::vector<double>{0.0});
      set.labels.push_back(c);
    }
  }
  ASSERT_EQ(set.size(), 45330u);
  auto s = subsample(set, 0.01, 3);
  EXPECT_EQ(s.size(), 453u);
  for (const auto& [label, count] : label_histogram(s)) {
    EXPECT_GE(count, 5u);
    EXPECT_LE(count, 6u);
  }
}

TEST(CentroidBase, AbsentClassesGetZero) {
  auto d = generate(tiny_spec(6));
  LabeledSet only_a = d.train;
  LabeledSet filtered{EmbeddingSet(only_a.embeddings.dim()), {}, only_a.vocab};
  for (std::size_t i = 0; i < only_a.size(); ++i) {
    if (only_a.labels[i] == 0) {
      filtered.embeddings.append(only_a.embeddings.id(i), only_a.embeddings.row(i));
      filtered.labels.push_back(0);
    }
  }
  Rng rng(2);
  auto base = centroid_base_probs(filtered, d.test, CentroidModel{}, rng);
  for (std::size_t i = 0; i < d.test.size(); ++i) {
    auto row = base.row(d.test.embeddings.id(i));
    EXPECT_EQ(row[0], 1.0);
    EXPECT_EQ(row[1], 0.0);
  }
}
