#include "knnre/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "knnre/dataset_io.hpp"
#include "knnre/error.hpp"

namespace knnre {

namespace fs = std::filesystem;
using json = nlohmann::json;

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

void SynthSpec::validate() const {
  if (dim == 0) throw ValidationError("synth spec: dim must be positive");
  if (classes.empty()) throw ValidationError("synth spec: no classes");
  std::size_t total = 0;
  for (const auto& c : classes) {
    if (!(c.spread > 0.0)) throw ValidationError("synth spec: spread of class \"" + c.name + "\" must be positive");
    if (c.mean && c.mean->size() != dim) {
      throw ValidationError("synth spec: mean of class \"" + c.name + "\" has wrong dimension");
    }
    total += c.train + c.dev + c.test + c.ds;
  }
  if (total == 0) throw ValidationError("synth spec: degenerate spec, all counts are zero");
  if (base.majority_class >= classes.size()) throw ValidationError("synth spec: majority_class out of range");
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("synth spec: ") + name + " must lie in [0, 1]");
  };
  rate(base.label_noise, "label_noise");
  rate(ds_label_noise, "ds_label_noise");
  if (!(base.temperature > 0.0)) throw ValidationError("synth spec: base temperature must be positive");
  if (!(mean_scale >= 0.0)) throw ValidationError("synth spec: mean_scale must be nonnegative");
}

SynthSpec SynthSpec::from_json(const std::string& text) {
  SynthSpec s;
  try {
    const json doc = json::parse(text);
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.dim = doc.at("dim").get<std::size_t>();
    s.mean_scale = doc.value("mean_scale", 1.0);
    s.ds_label_noise = doc.value("ds_label_noise", 0.0);
    if (doc.contains("negative_label") && !doc["negative_label"].is_null()) {
      s.negative_label = doc["negative_label"].get<std::string>();
    }
    for (const auto& c : doc.at("classes")) {
      SynthClass sc;
      sc.name = c.at("name").get<std::string>();
      sc.train = c.value("train", std::size_t{0});
      sc.dev = c.value("dev", std::size_t{0});
      sc.test = c.value("test", std::size_t{0});
      sc.ds = c.value("ds", std::size_t{0});
      sc.spread = c.value("spread", 1.0);
      if (c.contains("mean")) sc.mean = c["mean"].get<std::vector<double>>();
      s.classes.push_back(std::move(sc));
    }
    if (doc.contains("num_classes") && doc["num_classes"].get<std::size_t>() != s.classes.size()) {
      throw ValidationError("synth spec: num_classes does not match the class list");
    }
    if (doc.contains("base")) {
      const auto& b = doc["base"];
      s.base.majority_class = b.value("majority_class", LabelId{0});
      s.base.bias_strength = b.value("bias_strength", 0.0);
      s.base.label_noise = b.value("label_noise", 0.0);
      s.base.temperature = b.value("temperature", 1.0);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string SynthSpec::to_json() const {
  json doc;
  doc["seed"] = seed;
  doc["dim"] = dim;
  doc["num_classes"] = classes.size();
  doc["mean_scale"] = mean_scale;
  doc["ds_label_noise"] = ds_label_noise;
  if (negative_label) doc["negative_label"] = *negative_label;
  doc["base"] = {{"majority_class", base.majority_class},
                 {"bias_strength", base.bias_strength},
                 {"label_noise", base.label_noise},
                 {"temperature", base.temperature}};
  json cls = json::array();
  for (const auto& c : classes) {
    json e{{"name", c.name}, {"train", c.train}, {"dev", c.dev}, {"test", c.test}, {"ds", c.ds},
           {"spread", c.spread}};
    if (c.mean) e["mean"] = *c.mean;
    cls.push_back(std::move(e));
  }
  doc["classes"] = std::move(cls);
  return doc.dump(2);
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.index(i)]);
  }
}

std::string record_id(const char* split, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%06zu", split, i);
  return buf;
}

LabeledSet draw_split(const SynthSpec& spec, const LabelVocab& vocab, const std::vector<std::vector<double>>& means,
                      const char* split, std::size_t SynthClass::*count, Rng& rng) {
  std::vector<float> rows;
  std::vector<LabelId> labels;
  for (LabelId c = 0; c < spec.classes.size(); ++c) {
    const auto& cls = spec.classes[c];
    for (std::size_t n = 0; n < cls.*count; ++n) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        rows.push_back(static_cast<float>(means[c][j] + cls.spread * rng.normal()));
      }
      labels.push_back(c);
    }
  }
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);

  LabeledSet out;
  out.vocab = vocab;
  std::vector<std::string> ids;
  std::vector<double> values;
  values.reserve(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    ids.push_back(record_id(split, i));
    const float* src = rows.data() + order[i] * spec.dim;
    values.insert(values.end(), src, src + spec.dim);
    out.labels.push_back(labels[order[i]]);
  }
  out.embeddings = EmbeddingSet(spec.dim, std::move(ids), std::move(values));
  return out;
}

}  // namespace

BaseProbSet centroid_base_probs(const LabeledSet& fit, const LabeledSet& queries, const CentroidModel& model,
                                Rng& rng) {
  const std::size_t C = fit.vocab.size();
  const std::size_t dim = fit.embeddings.dim();
  if (queries.size() > 0 && queries.embeddings.dim() != dim) {
    throw ValidationError("centroid_base_probs: query dim differs from the fitted set");
  }
  std::vector<double> centroids(C * dim, 0.0);
  std::vector<std::size_t> counts(C, 0);
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const LabelId c = fit.labels[i];
    ++counts[c];
    auto row = fit.embeddings.row(i);
    for (std::size_t j = 0; j < dim; ++j) centroids[c * dim + j] += row[j];
  }
  for (std::size_t c = 0; c < C; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < dim; ++j) centroids[c * dim + j] /= static_cast<double>(counts[c]);
  }

  std::vector<double> values;
  values.reserve(queries.size() * C);
  std::vector<double> logits(C);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto x = queries.embeddings.row(i);
    for (std::size_t c = 0; c < C; ++c) {
      if (counts[c] == 0) {
        logits[c] = -std::numeric_limits<double>::infinity();
        continue;
      }
      double d = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = x[j] - centroids[c * dim + j];
        d += diff * diff;
      }
      logits[c] = -d / model.temperature;
    }
    if (C > 1 && counts[model.majority_class] > 0) logits[model.majority_class] += model.bias_strength;
    if (C > 1 && model.label_noise > 0.0 && rng.uniform() < model.label_noise) {
      const LabelId truth = queries.labels[i];
      LabelId other = static_cast<LabelId>(rng.index(C - 1));
      if (other >= truth) ++other;
      std::swap(logits[truth], logits[other]);
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    std::vector<double> p(C);
    for (std::size_t c = 0; c < C; ++c) {
      p[c] = std::isinf(logits[c]) ? 0.0 : std::exp(logits[c] - top);
      total += p[c];
    }
    for (std::size_t c = 0; c < C; ++c) values.push_back(static_cast<float>(p[c] / total));
  }
  return make_base_probs(fit.vocab, EmbeddingSet(C, queries.embeddings.ids(), std::move(values)),
                         "centroid base model");
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<std::string> names;
  for (const auto& c : spec.classes) names.push_back(c.name);

  SynthData out;
  out.vocab = LabelVocab(names, spec.negative_label);
  Rng rng(spec.seed);

  for (const auto& c : spec.classes) {
    if (c.mean) {
      out.means.push_back(*c.mean);
    } else {
      std::vector<double> m(spec.dim);
      for (auto& v : m) v = spec.mean_scale * rng.normal();
      out.means.push_back(std::move(m));
    }
  }

  out.train = draw_split(spec, out.vocab, out.means, "train", &SynthClass::train, rng);
  out.dev = draw_split(spec, out.vocab, out.means, "dev", &SynthClass::dev, rng);
  out.test = draw_split(spec, out.vocab, out.means, "test", &SynthClass::test, rng);
  out.ds = draw_split(spec, out.vocab, out.means, "ds", &SynthClass::ds, rng);

  const std::size_t C = spec.classes.size();
  if (spec.ds_label_noise > 0.0 && C > 1) {
    for (auto& label : out.ds.labels) {
      if (rng.uniform() < spec.ds_label_noise) {
        LabelId other = static_cast<LabelId>(rng.index(C - 1));
        if (other >= label) ++other;
        label = other;
      }
    }
  }

  out.train_base = centroid_base_probs(out.train, out.train, spec.base, rng);
  out.dev_base = centroid_base_probs(out.train, out.dev, spec.base, rng);
  out.test_base = centroid_base_probs(out.train, out.test, spec.base, rng);
  return out;
}

fs::path write_synth(const SynthData& data, const fs::path& dir) {
  fs::create_directories(dir);
  DatasetManifest m;
  m.dim = data.train.embeddings.dim();
  m.vocab = data.vocab;
  m.base_dir = dir.string();
  m.splits["train"] = write_split(data.train, &data.train_base, dir, "train");
  m.splits["dev"] = write_split(data.dev, &data.dev_base, dir, "dev");
  m.splits["test"] = write_split(data.test, &data.test_base, dir, "test");
  if (data.ds.size() > 0) m.splits["ds"] = write_split(data.ds, nullptr, dir, "ds");
  const fs::path manifest = dir / "manifest.json";
  write_manifest(m, manifest);
  return manifest;
}

LabeledSet subsample(const LabeledSet& set, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ValidationError("subsample: fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  if (fraction == 1.0) return set;

  const std::size_t C = set.vocab.size();
  std::vector<std::vector<std::size_t>> by_class(C);
  for (std::size_t i = 0; i < set.size(); ++i) by_class[set.labels[i]].push_back(i);

  // Largest-remainder allocation: floor(f * n_c) each, the leftover of
  // round(f * N) to the largest fractional parts (lower label id on ties),
  // then at least one per present class.
  std::vector<std::size_t> take(C, 0);
  std::vector<double> frac(C, 0.0);
  std::size_t allotted = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const double quota = fraction * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(quota));
    frac[c] = quota - static_cast<double>(take[c]);
    allotted += take[c];
  }
  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(set.size())));
  std::vector<std::size_t> order(C);
  for (std::size_t c = 0; c < C; ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; i < order.size() && allotted < target; ++i) {
    if (frac[order[i]] > 0.0) {
      ++take[order[i]];
      ++allotted;
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < C; ++c) {
    auto& members = by_class[c];
    const std::size_t n = members.size();
    if (n == 0) continue;
    const std::size_t t = std::clamp<std::size_t>(take[c], 1, n);
    for (std::size_t i = 0; i < t; ++i) {
      std::swap(members[i], members[i + rng.index(n - i)]);
    }
    keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(t));
  }
  std::sort(keep.begin(), keep.end());

  LabeledSet out;
  out.vocab = set.vocab;
  out.embeddings = EmbeddingSet(set.embeddings.dim());
  for (std::size_t i : keep) {
    out.embeddings.append(set.embeddings.id(i), set.embeddings.row(i));
    out.labels.push_back(set.labels[i]);
  }
  return out;
}

}  // namespace knnre
