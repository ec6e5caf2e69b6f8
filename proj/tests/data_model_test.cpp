#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <limits>

#include "knnre/data_model.hpp"
#include "knnre/dataset_io.hpp"
#include "knnre/error.hpp"
#include "oracle/test_util.hpp"

using namespace knnre;
using knnre::testing::TempDir;

namespace {

std::vector<unsigned char> emb_bytes(std::uint32_t rows, std::uint32_t dim,
                                     const std::vector<std::pair<std::string, std::vector<float>>>& payload) {
  std::vector<unsigned char> out = {'E', 'M', 'B', '1'};
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  put32(rows);
  put32(dim);
  for (const auto& [id, vec] : payload) {
    out.push_back(static_cast<unsigned char>(id.size()));
    out.push_back(static_cast<unsigned char>(id.size() >> 8));
    out.insert(out.end(), id.begin(), id.end());
    for (float f : vec) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put32(bits);
    }
  }
  return out;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

// Three records with two classes, written as a manifest with one split.
DatasetManifest three_record_manifest(const TempDir& dir) {
  LabelVocab vocab({"A", "B"});
  LabeledSet set{EmbeddingSet(2, {"r0", "r1", "r2"}, {0, 0, 1, 0, 0, 1}), {0, 1, 1}, vocab};
  EmbeddingSet probs(2, {"r0", "r1", "r2"}, {0.9, 0.1, 0.3, 0.7, 0.5, 0.5});
  BaseProbSet base(vocab, probs);
  DatasetManifest m;
  m.dim = 2;
  m.vocab = vocab;
  m.splits["train"] = write_split(set, &base, dir.path(), "train");
  write_manifest(m, dir / "manifest.json");
  return load_manifest(dir / "manifest.json");
}

}  // namespace

TEST(LabelVocab, LooksUpNamesAndNegative) {
  LabelVocab v({"A", "B", "no_relation"}, "no_relation");
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.id_of("B"), 1u);
  EXPECT_EQ(v.name(2), "no_relation");
  EXPECT_EQ(v.negative_label(), 2u);
  EXPECT_FALSE(v.find("C").has_value());
  EXPECT_THROW(v.id_of("C"), ValidationError);
}

TEST(LabelVocab, RejectsBadInput) {
  EXPECT_THROW(LabelVocab({"A", "A"}), ValidationError);
  EXPECT_THROW(LabelVocab({"A", ""}), ValidationError);
  EXPECT_THROW(LabelVocab({"A"}, "N"), ValidationError);
}

TEST(EmbeddingSet, ValidatesRows) {
  EXPECT_THROW(EmbeddingSet(2, {"a"}, {1.0}), ValidationError);
  EXPECT_THROW(EmbeddingSet(1, {"a", "a"}, {1.0, 2.0}), ValidationError);
  EXPECT_THROW(EmbeddingSet(1, {"a"}, {std::numeric_limits<double>::quiet_NaN()}), ValidationError);
  EmbeddingSet s(2);
  s.append("x", std::vector<double>{1.0, 2.0});
  EXPECT_EQ(s.find("x"), 0u);
  EXPECT_THROW(s.append("y", std::vector<double>{1.0}), ValidationError);
}

TEST(LabelDistribution, ArgmaxBreaksTiesLow) {
  LabelDistribution d(std::vector<double>{0.4, 0.4, 0.2});
  EXPECT_EQ(d.argmax(), 0u);
  EXPECT_TRUE(d.is_valid());
  EXPECT_FALSE(LabelDistribution(std::vector<double>{0.5, 0.6}).is_valid());
}

TEST(LoadEmbeddings, EmptySet) {
  TempDir dir;
  write_bytes(dir / "e.emb", emb_bytes(0, 4, {}));
  auto s = load_embeddings(dir / "e.emb");
  EXPECT_EQ(s.dim(), 4u);
  EXPECT_EQ(s.size(), 0u);
}

TEST(LoadEmbeddings, TwoUnitVectorsInOrder) {
  TempDir dir;
  write_bytes(dir / "e.emb", emb_bytes(2, 3, {{"a", {1, 0, 0}}, {"b", {0, 1, 0}}}));
  auto s = load_embeddings(dir / "e.emb");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.id(0), "a");
  EXPECT_EQ(s.id(1), "b");
  EXPECT_EQ(s.values(), (std::vector<double>{1, 0, 0, 0, 1, 0}));
}

TEST(LoadEmbeddings, TruncationNamesExpectedAndActualBytes) {
  TempDir dir;
  std::vector<std::pair<std::string, std::vector<float>>> rows;
  for (int i = 0; i < 4; ++i) rows.push_back({"r" + std::to_string(i), {1, 2}});
  auto bytes = emb_bytes(5, 2, rows);
  write_bytes(dir / "e.emb", bytes);
  const std::string msg = error_of([&] { load_embeddings(dir / "e.emb"); });
  // Row 4 would start at the end of the file: 2 bytes of id length expected.
  EXPECT_NE(msg.find("expected " + std::to_string(bytes.size() + 2) + " bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("file has " + std::to_string(bytes.size())), std::string::npos) << msg;
}

TEST(LoadEmbeddings, RejectsCorruptContent) {
  TempDir dir;
  write_bytes(dir / "dup.emb", emb_bytes(2, 1, {{"a", {1}}, {"a", {2}}}));
  EXPECT_NE(error_of([&] { load_embeddings(dir / "dup.emb"); }).find("duplicate"), std::string::npos);
  write_bytes(dir / "nan.emb", emb_bytes(1, 1, {{"a", {std::numeric_limits<float>::infinity()}}}));
  EXPECT_NE(error_of([&] { load_embeddings(dir / "nan.emb"); }).find("non-finite"), std::string::npos);
  auto extra = emb_bytes(1, 1, {{"a", {1}}});
  extra.push_back(0);
  write_bytes(dir / "extra.emb", extra);
  EXPECT_NE(error_of([&] { load_embeddings(dir / "extra.emb"); }).find("trailing"), std::string::npos);
  auto magic = emb_bytes(0, 1, {});
  magic[3] = '2';
  write_bytes(dir / "magic.emb", magic);
  EXPECT_NE(error_of([&] { load_embeddings(dir / "magic.emb"); }).find("bad magic"), std::string::npos);
}

TEST(LoadEmbeddings, RoundTripIsByteIdentical) {
  TempDir dir;
  EmbeddingSet s(3, {"x", "yy", "zzz"}, {0.5, -1.25, 3, 0, 0, 1, 2, 4, 8});
  write_embeddings(s, dir / "a.emb");
  auto loaded = load_embeddings(dir / "a.emb");
  EXPECT_EQ(loaded, s);
  write_embeddings(loaded, dir / "b.emb");
  EXPECT_EQ(knnre::testing::slurp(dir / "a.emb"), knnre::testing::slurp(dir / "b.emb"));
}

TEST(LoadLabeledSet, ConsistentSplit) {
  TempDir dir;
  auto m = three_record_manifest(dir);
  auto set = load_labeled_set(m, "train");
  EXPECT_EQ(set.size(), 3u);
  EXPECT_EQ(set.label_of("r1"), 1u);
  auto split = load_split(m, "train", true);
  ASSERT_TRUE(split.base.has_value());
  EXPECT_NEAR(split.base->row("r0")[0], 0.9, 1e-7);
}

TEST(LoadLabeledSet, UnknownLabelIsNamed) {
  TempDir dir;
  auto m = three_record_manifest(dir);
  write_text(m.split("train").labels, "r0\tA\nr1\tpart_of\nr2\tB\n");
  const auto msg = error_of([&] { load_labeled_set(m, "train"); });
  EXPECT_NE(msg.find("unknown label \"part_of\""), std::string::npos) << msg;
}

TEST(LoadLabeledSet, OrphanLabelIsListed) {
  TempDir dir;
  auto m = three_record_manifest(dir);
  write_text(m.split("train").labels, "r0\tA\nr1\tB\nr2\tB\nr3\tA\n");
  const auto msg = error_of([&] { load_labeled_set(m, "train"); });
  EXPECT_NE(msg.find("\"r3\""), std::string::npos) << msg;
}

TEST(LoadLabeledSet, MissingLabelsFileNamesPath) {
  TempDir dir;
  auto m = three_record_manifest(dir);
  std::filesystem::remove(m.split("train").labels);
  const auto msg = error_of([&] { load_labeled_set(m, "train"); });
  EXPECT_NE(msg.find(m.split("train").labels), std::string::npos) << msg;
}

TEST(BaseProbs, NormalizedRowAccepted) {
  LabelVocab v({"A", "B"});
  auto b = make_base_probs(v, EmbeddingSet(2, {"a"}, {0.2, 0.8}), "t");
  EXPECT_EQ(b.row("a")[0], 0.2);
  EXPECT_EQ(b.row("a")[1], 0.8);
}

TEST(BaseProbs, NearlyNormalizedRowIsRenormalized) {
  LabelVocab v({"A", "B"});
  auto b = make_base_probs(v, EmbeddingSet(2, {"a"}, {0.2, 0.80005}), "t");
  EXPECT_NEAR(b.row("a")[0] + b.row("a")[1], 1.0, 1e-15);
  EXPECT_NEAR(b.row("a")[0], 0.2 / 1.00005, 1e-15);
}

TEST(BaseProbs, BadSumReported) {
  LabelVocab v({"A", "B"});
  const auto msg = error_of([&] { make_base_probs(v, EmbeddingSet(2, {"a"}, {0.5, 0.6}), "t"); });
  EXPECT_NE(msg.find("sums to 1.1"), std::string::npos) << msg;
  EXPECT_THROW(make_base_probs(v, EmbeddingSet(2, {"a"}, {-0.1, 1.1}), "t"), ValidationError);
}

TEST(BaseProbs, MissingRowIsComputationError) {
  LabelVocab v({"A", "B"});
  BaseProbSet b(v, EmbeddingSet(2, {"a"}, {0.5, 0.5}));
  EXPECT_THROW(b.row("zz"), ComputationError);
}

TEST(Manifest, RoundTripsRelativePaths) {
  TempDir dir;
  auto m = three_record_manifest(dir);
  EXPECT_EQ(m.dim, 2u);
  EXPECT_EQ(m.vocab, LabelVocab({"A", "B"}));
  EXPECT_EQ(m.split("train").count, 3u);
  const auto text = knnre::testing::slurp(dir / "manifest.json");
  EXPECT_NE(text.find("\"train.emb\""), std::string::npos) << text;
  EXPECT_THROW(m.split("dev"), ValidationError);
}
