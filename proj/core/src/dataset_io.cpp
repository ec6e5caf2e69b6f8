#include "knnre/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "binary_io.hpp"
#include "knnre/error.hpp"

namespace knnre {

namespace fs = std::filesystem;
using json = nlohmann::json;

EmbeddingSet decode_embeddings(const std::vector<unsigned char>& bytes, const char (&magic)[4],
                               const std::string& source) {
  detail::ByteReader in(bytes, source);
  in.magic(magic);
  const std::uint32_t rows = in.u32("row count");
  const std::uint32_t dim = in.u32("dim");
  if (dim == 0) {
    throw ValidationError(source + ": dim must be positive (byte offset 8)");
  }

  std::vector<std::string> ids;
  std::vector<double> values;
  ids.reserve(rows);
  values.reserve(static_cast<std::size_t>(rows) * dim);
  std::unordered_set<std::string> seen;
  seen.reserve(rows);
  for (std::uint32_t r = 0; r < rows; ++r) {
    const std::size_t row_offset = in.offset();
    std::string id = in.short_string("record id of row " + std::to_string(r));
    if (id.empty()) {
      throw ValidationError(source + ": empty record_id at row " + std::to_string(r) + " (byte offset " +
                            std::to_string(row_offset) + ")");
    }
    if (!seen.insert(id).second) {
      throw ValidationError(source + ": duplicate record_id \"" + id + "\" at row " + std::to_string(r) +
                            " (byte offset " + std::to_string(row_offset) + ")");
    }
    in.need(static_cast<std::size_t>(dim) * 4, "vector of row " + std::to_string(r));
    for (std::uint32_t j = 0; j < dim; ++j) {
      const std::size_t value_offset = in.offset();
      const float v = in.f32("value");
      if (!std::isfinite(v)) {
        throw ValidationError(source + ": non-finite value at row " + std::to_string(r) + ", column " +
                              std::to_string(j) + " (byte offset " + std::to_string(value_offset) + ")");
      }
      values.push_back(static_cast<double>(v));
    }
    ids.push_back(std::move(id));
  }
  if (in.remaining() != 0) {
    throw ValidationError(source + ": " + std::to_string(in.remaining()) + " trailing bytes after " +
                          std::to_string(rows) + " declared rows (byte offset " + std::to_string(in.offset()) +
                          ")");
  }
  return EmbeddingSet(dim, std::move(ids), std::move(values));
}

std::vector<unsigned char> encode_embeddings(const EmbeddingSet& set, const char (&magic)[4]) {
  detail::ByteWriter out;
  out.raw(magic, 4);
  out.u32(static_cast<std::uint32_t>(set.size()));
  out.u32(static_cast<std::uint32_t>(set.dim()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.short_string(set.id(i));
    for (double v : set.row(i)) out.f32(static_cast<float>(v));
  }
  return std::move(out.bytes());
}

EmbeddingSet load_embeddings(const fs::path& path) {
  return decode_embeddings(detail::read_file(path), kEmbeddingMagic, path.string());
}

void write_embeddings(const EmbeddingSet& set, const fs::path& path) {
  detail::write_file(path, encode_embeddings(set, kEmbeddingMagic));
}

EmbeddingSet load_prob_table(const fs::path& path) {
  return decode_embeddings(detail::read_file(path), kProbsMagic, path.string());
}

void write_base_probs(const BaseProbSet& probs, const fs::path& path) {
  detail::write_file(path, encode_embeddings(probs.table(), kProbsMagic));
}

std::vector<std::pair<std::string, std::string>> load_label_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open labels file: " + path.string());
  }
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected `record_id<TAB>label_name`");
    }
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

void write_labels(const LabeledSet& set, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot open file for writing: " + path.string());
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.embeddings.id(i) << '\t' << set.vocab.name(set.labels[i]) << '\n';
  }
}

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal().string();
}

std::string relativize(const fs::path& base, const std::string& p) {
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(base).lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.string();
  return abs.string();
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open manifest: " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }

  DatasetManifest m;
  m.base_dir = path.parent_path().string();
  try {
    const auto dim = doc.at("dim").get<long long>();
    if (dim <= 0) throw ValidationError("manifest " + path.string() + ": dim must be positive");
    m.dim = static_cast<std::size_t>(dim);
    std::optional<std::string> negative;
    if (doc.contains("negative_label") && !doc["negative_label"].is_null()) {
      negative = doc["negative_label"].get<std::string>();
    }
    m.vocab = LabelVocab(doc.at("labels").get<std::vector<std::string>>(), negative);
    if (m.vocab.size() == 0) throw ValidationError("manifest " + path.string() + ": empty label list");
    for (const auto& [name, entry] : doc.at("splits").items()) {
      SplitFiles files;
      files.embeddings = resolve(m.base_dir, entry.at("embeddings").get<std::string>());
      files.labels = resolve(m.base_dir, entry.at("labels").get<std::string>());
      if (entry.contains("base_probs") && !entry["base_probs"].is_null()) {
        files.base_probs = resolve(m.base_dir, entry["base_probs"].get<std::string>());
      }
      const auto count = entry.at("count").get<long long>();
      if (count < 0) throw ValidationError("manifest " + path.string() + ": negative count for split " + name);
      files.count = static_cast<std::size_t>(count);
      m.splits.emplace(name, std::move(files));
    }
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  json doc;
  doc["dim"] = manifest.dim;
  doc["labels"] = manifest.vocab.names();
  if (auto neg = manifest.vocab.negative_label()) {
    doc["negative_label"] = manifest.vocab.name(*neg);
  }
  doc["splits"] = json::object();
  for (const auto& [name, files] : manifest.splits) {
    json entry;
    entry["embeddings"] = relativize(base, files.embeddings);
    entry["labels"] = relativize(base, files.labels);
    if (files.base_probs) entry["base_probs"] = relativize(base, *files.base_probs);
    entry["count"] = files.count;
    doc["splits"][name] = std::move(entry);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot open file for writing: " + path.string());
  }
  out << doc.dump(2) << '\n';
}

LabeledSet load_labeled_set(const DatasetManifest& manifest, const std::string& split) {
  const SplitFiles& files = manifest.split(split);
  LabeledSet out;
  out.vocab = manifest.vocab;
  out.embeddings = load_embeddings(files.embeddings);
  if (out.embeddings.dim() != manifest.dim) {
    throw ValidationError(files.embeddings + ": dim " + std::to_string(out.embeddings.dim()) +
                          " does not match manifest dim " + std::to_string(manifest.dim));
  }
  if (out.embeddings.size() != files.count) {
    throw ValidationError(files.embeddings + ": " + std::to_string(out.embeddings.size()) +
                          " rows but manifest declares " + std::to_string(files.count) + " for split " + split);
  }

  const auto lines = load_label_lines(files.labels);
  std::unordered_map<std::string, LabelId> by_id;
  by_id.reserve(lines.size());
  for (const auto& [id, name] : lines) {
    auto label = manifest.vocab.find(name);
    if (!label) {
      throw ValidationError(files.labels + ": unknown label \"" + name + "\" for record \"" + id + "\"");
    }
    if (!by_id.emplace(id, *label).second) {
      throw ValidationError(files.labels + ": record \"" + id + "\" labeled more than once");
    }
  }
  for (const auto& [id, name] : lines) {
    if (!out.embeddings.find(id)) {
      throw ValidationError("split " + split + ": record \"" + id + "\" in " + files.labels +
                            " has no embedding in " + files.embeddings);
    }
  }
  out.labels.reserve(out.embeddings.size());
  for (const auto& id : out.embeddings.ids()) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ValidationError("split " + split + ": record \"" + id + "\" in " + files.embeddings +
                            " has no label in " + files.labels);
    }
    out.labels.push_back(it->second);
  }
  return out;
}

BaseProbSet make_base_probs(const LabelVocab& vocab, EmbeddingSet rows, const std::string& source) {
  if (rows.empty()) return BaseProbSet(vocab, EmbeddingSet(vocab.size()));
  if (rows.dim() != vocab.size()) {
    throw ValidationError(source + ": row width " + std::to_string(rows.dim()) + " != vocab size " +
                          std::to_string(vocab.size()));
  }
  std::vector<double> values = rows.values();
  const std::size_t width = rows.dim();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double* row = values.data() + i * width;
    double sum = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      if (row[j] < 0.0) {
        throw ValidationError(source + ": negative probability " + std::to_string(row[j]) + " at row " +
                              std::to_string(i) + " (\"" + rows.id(i) + "\"), column " + std::to_string(j));
      }
      sum += row[j];
    }
    if (std::abs(sum - 1.0) > kBaseProbSumTolerance) {
      std::ostringstream msg;
      msg << source << ": row " << i << " (\"" << rows.id(i) << "\") sums to " << sum
          << ", outside 1 +/- " << kBaseProbSumTolerance;
      throw ValidationError(msg.str());
    }
    if (sum != 1.0) {
      for (std::size_t j = 0; j < width; ++j) row[j] /= sum;
    }
  }
  return BaseProbSet(vocab, EmbeddingSet(width, rows.ids(), std::move(values)));
}

BaseProbSet load_base_probs(const DatasetManifest& manifest, const std::string& split) {
  const SplitFiles& files = manifest.split(split);
  if (!files.base_probs) {
    throw ValidationError("manifest split " + split + " has no base_probs file");
  }
  EmbeddingSet table = load_prob_table(*files.base_probs);
  if (table.size() != files.count) {
    throw ValidationError(*files.base_probs + ": " + std::to_string(table.size()) +
                          " rows but manifest declares " + std::to_string(files.count) + " for split " + split);
  }
  return make_base_probs(manifest.vocab, std::move(table), *files.base_probs);
}

Split load_split(const DatasetManifest& manifest, const std::string& split, bool require_base) {
  Split out;
  out.data = load_labeled_set(manifest, split);
  const SplitFiles& files = manifest.split(split);
  if (files.base_probs) {
    out.base = load_base_probs(manifest, split);
    for (const auto& id : out.data.embeddings.ids()) {
      if (!out.base->contains(id)) {
        throw ValidationError("split " + split + ": record \"" + id + "\" has no row in " + *files.base_probs);
      }
    }
    if (out.base->size() != out.data.size()) {
      throw ValidationError("split " + split + ": " + *files.base_probs + " has rows for unknown records");
    }
  } else if (require_base) {
    throw ValidationError("split " + split + " needs base probabilities but the manifest lists none");
  }
  return out;
}

SplitFiles write_split(const LabeledSet& data, const BaseProbSet* base, const fs::path& dir,
                       const std::string& stem) {
  SplitFiles files;
  files.embeddings = (dir / (stem + ".emb")).string();
  files.labels = (dir / (stem + ".tsv")).string();
  files.count = data.size();
  write_embeddings(data.embeddings, files.embeddings);
  write_labels(data, files.labels);
  if (base) {
    files.base_probs = (dir / (stem + ".prb")).string();
    write_base_probs(*base, *files.base_probs);
  }
  return files;
}

}  // namespace knnre
