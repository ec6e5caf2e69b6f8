#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "knnre/aggregate.hpp"
#include "knnre/dataset_io.hpp"
#include "knnre/error.hpp"
#include "knnre/memory.hpp"
#include "knnre/metrics.hpp"
#include "knnre/parallel.hpp"
#include "knnre/search.hpp"
#include "knnre/synth.hpp"
#include "knnre/tune.hpp"

namespace knnre::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Common {
  std::size_t workers = 0;
  std::string out_dir;

  std::size_t resolved_workers() const { return resolve_workers(workers); }

  fs::path output_dir() const {
    std::string dir = out_dir;
    if (dir.empty()) {
      const char* env = std::getenv("KNNRE_OUT_DIR");
      dir = env && *env ? env : ".";
    }
    fs::create_directories(dir);
    return dir;
  }

  // Relative output paths land under the output directory.
  fs::path output_path(const std::string& p) const {
    fs::path path(p);
    if (path.is_relative()) path = output_dir() / path;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    return path;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot open file for writing: " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, int>) {
        out.push_back(std::stoi(item, &used));
      } else {
        out.push_back(std::stod(item, &used));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string("bad value \"") + item + "\" in " + what + " list");
    }
  }
  if (out.empty()) throw ValidationError(std::string("empty ") + what + " list");
  return out;
}

std::string fmt(double v, int precision = 2) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

std::string pretty(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

// "(k, λ)" notation used when reporting tuned settings.
std::string k_lambda(const HyperParams& p) {
  return "(" + std::to_string(p.k) + ", " + pretty(p.lambda) + ")";
}

std::map<std::string, LabelId> gold_map(const LabeledSet& set) {
  std::map<std::string, LabelId> gold;
  for (std::size_t i = 0; i < set.size(); ++i) gold.emplace(set.embeddings.id(i), set.labels[i]);
  return gold;
}

std::map<std::string, LabelId> prediction_map(const LabeledSet& set, const std::vector<Prediction>& preds) {
  std::map<std::string, LabelId> out;
  for (std::size_t i = 0; i < set.size(); ++i) out.emplace(set.embeddings.id(i), preds[i].label);
  return out;
}

std::map<std::string, LabelId> base_prediction_map(const LabeledSet& set, const BaseProbSet& base) {
  std::map<std::string, LabelId> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.emplace(set.embeddings.id(i), base.distribution(set.embeddings.id(i)).argmax());
  }
  return out;
}

std::map<LabelId, std::size_t> memory_histogram(const MemoryStore& m) {
  std::map<LabelId, std::size_t> counts;
  for (LabelId c = 0; c < m.vocab().size(); ++c) counts[c] = 0;
  for (LabelId v : m.values()) ++counts[v];
  return counts;
}

void check_vocab(const MemoryStore& memory, const LabelVocab& vocab, const std::string& path) {
  if (!(memory.vocab() == vocab)) {
    throw ValidationError(path + ": memory vocab differs from the manifest vocab");
  }
}

double score(const LabeledSet& set, const std::map<std::string, LabelId>& predicted) {
  const bool excl = set.vocab.negative_label().has_value();
  return evaluate(gold_map(set), predicted, set.vocab, excl).micro_f1;
}

// ---------------------------------------------------------------- build-memory

struct BuildMemoryArgs {
  std::string manifest;
  std::string split = "train";
  std::string out;
  std::string tag;
};

int build_memory_cmd(const BuildMemoryArgs& a, const Common& common, std::ostream& out) {
  const auto manifest = load_manifest(a.manifest);
  const auto data = load_labeled_set(manifest, a.split);
  const auto memory = build_memory(data, SourceTag::parse(a.tag.empty() ? a.split : a.tag));
  const auto path = common.output_path(a.out);
  save_memory(memory, path);
  out << "wrote memory " << path.string() << ": " << memory.size() << " rows, dim " << memory.dim() << ", tag "
      << memory.tag().str() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- tune

struct GridArgs {
  std::string k_grid;
  std::string t_grid;
  std::string lambda_grid;
  std::string alpha_grid;

  SearchSpace space() const {
    SearchSpace s = SearchSpace::defaults();
    if (!k_grid.empty()) s.k_grid = parse_list<int>(k_grid, "k");
    if (!t_grid.empty()) s.temperature_grid = parse_list<double>(t_grid, "temperature");
    if (!lambda_grid.empty()) s.lambda_grid = parse_list<double>(lambda_grid, "lambda");
    if (!alpha_grid.empty()) s.alpha_grid = parse_list<double>(alpha_grid, "alpha");
    s.validate();
    return s;
  }
};

struct TuneArgs {
  std::string manifest;
  std::string split = "dev";
  std::string memory;
  std::string ds_memory;
  std::string distance = "sq_l2";
  std::string out = "tune.json";
  GridArgs grid;
};

struct TuneOutcome {
  TuneResult train;
  std::optional<TuneResult> ds;
  std::optional<AlphaResult> alpha;
};

std::map<std::string, LabelDistribution> dev_distributions(const MemoryStore& memory, const Split& dev,
                                                           const HyperParams& p, std::size_t workers) {
  const auto preds = predict_all(dev.data.embeddings, MemoryRoute{&memory, p}, *dev.base, true, workers);
  std::map<std::string, LabelDistribution> out;
  for (std::size_t i = 0; i < preds.size(); ++i) out.emplace(dev.data.embeddings.id(i), preds[i].distribution);
  return out;
}

TuneOutcome tune_memories(const MemoryStore& train, const MemoryStore* ds, const Split& dev, const SearchSpace& space,
                          DistanceKind distance, std::size_t workers) {
  TuneOptions options;
  options.distance = distance;
  options.workers = workers;
  TuneOutcome outcome;
  outcome.train = greedy_search(train, dev.data, *dev.base, space, options);
  if (ds) {
    outcome.ds = greedy_search(*ds, dev.data, *dev.base, space, options);
    outcome.alpha =
        tune_alpha(dev_distributions(train, dev, outcome.train.best, workers),
                   dev_distributions(*ds, dev, outcome.ds->best, workers), gold_map(dev.data), dev.data.vocab,
                   space.alpha_grid);
  }
  return outcome;
}

int tune_cmd(const TuneArgs& a, const Common& common, std::ostream& out) {
  const auto manifest = load_manifest(a.manifest);
  const Split dev = load_split(manifest, a.split, true);
  const auto space = a.grid.space();
  const auto train = load_memory(a.memory);
  check_vocab(train, manifest.vocab, a.memory);
  std::optional<MemoryStore> ds;
  if (!a.ds_memory.empty()) {
    ds = load_memory(a.ds_memory);
    check_vocab(*ds, manifest.vocab, a.ds_memory);
  }
  const auto outcome =
      tune_memories(train, ds ? &*ds : nullptr, dev, space, parse_distance(a.distance), common.resolved_workers());

  json doc;
  doc["train"] = json::parse(to_json(outcome.train));
  if (outcome.ds) doc["ds"] = json::parse(to_json(*outcome.ds));
  if (outcome.alpha) doc["alpha"] = json::parse(to_json(*outcome.alpha));
  const auto path = common.output_path(a.out);
  write_text(path, doc.dump(2));

  out << "train memory: best (k, λ) = " << k_lambda(outcome.train.best)
      << ", T = " << pretty(outcome.train.best.temperature) << ", dev F1 = " << fmt(100.0 * outcome.train.dev_f1)
      << " (" << outcome.train.trace.size() << " trace points)\n";
  if (outcome.ds) {
    out << "ds memory: best (k, λ) = " << k_lambda(outcome.ds->best) << ", T = " << pretty(outcome.ds->best.temperature)
        << ", dev F1 = " << fmt(100.0 * outcome.ds->dev_f1) << " (" << outcome.ds->trace.size()
        << " trace points)\n";
    out << "combined: best α = " << pretty(outcome.alpha->alpha) << ", dev F1 = " << fmt(100.0 * outcome.alpha->dev_f1)
        << " (" << outcome.alpha->trace.size() << " trace points)\n";
  }
  out << "wrote " << path.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string manifest;
  std::string split = "test";
  std::string memory;
  std::string ds_memory;
  std::string params;
  int k = 8;
  double temperature = 1.0;
  double lambda = 0.5;
  std::string distance = "sq_l2";
  int ds_k = 0;
  double ds_temperature = 0.0;
  double ds_lambda = -1.0;
  double alpha = -1.0;
  std::size_t dump_neighbors = 0;
  long longtail_threshold = -1;
};

struct ResolvedParams {
  HyperParams train;
  std::optional<HyperParams> ds;
  double alpha = 0.5;
};

ResolvedParams resolve_params(const EvaluateArgs& a) {
  ResolvedParams r;
  const DistanceKind distance = parse_distance(a.distance);
  if (!a.params.empty()) {
    const json doc = json::parse(read_text(a.params));
    r.train = hyper_params_from_json(doc.at("train").at("best").dump());
    if (doc.contains("ds")) r.ds = hyper_params_from_json(doc["ds"].at("best").dump());
    if (doc.contains("alpha")) r.alpha = doc["alpha"].at("alpha").get<double>();
  } else {
    r.train = HyperParams{a.k, a.temperature, a.lambda, 1.0, distance};
  }
  if (!a.ds_memory.empty() && !r.ds) r.ds = r.train;
  if (r.ds) {
    if (a.ds_k > 0) r.ds->k = a.ds_k;
    if (a.ds_temperature > 0.0) r.ds->temperature = a.ds_temperature;
    if (a.ds_lambda >= 0.0) r.ds->lambda = a.ds_lambda;
  }
  if (a.alpha >= 0.0) r.alpha = a.alpha;
  r.train.validate();
  if (r.ds) r.ds->validate();
  if (!(r.alpha >= 0.0 && r.alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  return r;
}

void write_report(const Common& common, const std::string& stem, EvalReport report,
                  const std::map<LabelId, std::size_t>& train_counts) {
  attach_train_counts(report, train_counts);
  write_text(common.output_path(stem + ".json"), to_json(report));
  write_text(common.output_path(stem + ".txt"), to_text(report));
}

void dump_neighbors(const fs::path& path, const LabeledSet& queries, const std::vector<Prediction>& preds,
                    std::size_t memory_index, const MemoryStore& memory, std::size_t n) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot open file for writing: " + path.string());
  out << "query_id\tgold\tpredicted\trank\tneighbor_id\tneighbor_label\tdistance\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& list = preds[i].neighbors[memory_index];
    for (std::size_t r = 0; r < std::min(n, list.size()); ++r) {
      out << queries.embeddings.id(i) << '\t' << queries.vocab.name(queries.labels[i]) << '\t'
          << queries.vocab.name(preds[i].label) << '\t' << r + 1 << '\t' << list[r].record_id << '\t'
          << memory.vocab().name(list[r].label) << '\t' << list[r].distance << '\n';
    }
  }
}

int evaluate_cmd(const EvaluateArgs& a, const Common& common, std::ostream& out) {
  const auto manifest = load_manifest(a.manifest);
  const Split split = load_split(manifest, a.split, true);
  const auto params = resolve_params(a);
  const auto train = load_memory(a.memory);
  check_vocab(train, manifest.vocab, a.memory);
  std::optional<MemoryStore> ds;
  if (!a.ds_memory.empty()) {
    ds = load_memory(a.ds_memory);
    check_vocab(*ds, manifest.vocab, a.ds_memory);
  }
  const std::size_t workers = common.resolved_workers();
  const bool excl = manifest.vocab.negative_label().has_value();
  const auto gold = gold_map(split.data);
  const auto train_counts = memory_histogram(train);
  const auto& queries = split.data.embeddings;

  const EvalReport base_report = evaluate(gold, base_prediction_map(split.data, *split.base), manifest.vocab, excl);
  write_report(common, "base", base_report, train_counts);
  out << "base model           F1 = " << fmt(100.0 * base_report.micro_f1) << '\n';

  HyperParams knn_only = params.train;
  knn_only.lambda = 1.0;
  const auto knn_only_preds = predict_all(queries, MemoryRoute{&train, knn_only}, *split.base, false, workers);
  const EvalReport knn_only_report = evaluate(gold, prediction_map(split.data, knn_only_preds), manifest.vocab, excl);
  write_report(common, "knn_only", knn_only_report, train_counts);
  out << "kNN only " << k_lambda(knn_only) << "   F1 = " << fmt(100.0 * knn_only_report.micro_f1) << '\n';

  const auto knn_re_preds = predict_all(queries, MemoryRoute{&train, params.train}, *split.base, false, workers);
  const EvalReport knn_re_report = evaluate(gold, prediction_map(split.data, knn_re_preds), manifest.vocab, excl);
  write_report(common, "knn_re", knn_re_report, train_counts);
  out << "kNN-RE " << k_lambda(params.train) << "     F1 = " << fmt(100.0 * knn_re_report.micro_f1) << '\n';

  if (ds) {
    const auto combined_preds = predict_all_combined(queries, MemoryRoute{&train, params.train},
                                                     MemoryRoute{&*ds, *params.ds}, params.alpha, *split.base,
                                                     false, workers);
    const EvalReport combined_report =
        evaluate(gold, prediction_map(split.data, combined_preds), manifest.vocab, excl);
    write_report(common, "combined", combined_report, train_counts);
    out << "combined (α=" << pretty(params.alpha) << ")     F1 = " << fmt(100.0 * combined_report.micro_f1) << '\n';
    if (a.dump_neighbors > 0) {
      dump_neighbors(common.output_path("neighbors_ds.tsv"), split.data, combined_preds, 1, *ds, a.dump_neighbors);
    }
  }
  if (a.dump_neighbors > 0) {
    dump_neighbors(common.output_path("neighbors.tsv"), split.data, knn_re_preds, 0, train, a.dump_neighbors);
  }
  if (a.longtail_threshold >= 0) {
    const auto rows =
        longtail_report(knn_re_report, base_report, train_counts, static_cast<std::size_t>(a.longtail_threshold));
    write_text(common.output_path("longtail.json"), to_json(rows));
    write_text(common.output_path("longtail.txt"), to_text(rows));
  }
  out << "reports written to " << common.output_dir().string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- low-resource

struct LowResourceArgs {
  std::string manifest;
  std::string fractions = "0.01,0.1,0.5,1.0";
  std::uint64_t seed = 0;
  std::string ds_memory;
  std::string base_mode = "centroid";
  std::string distance = "sq_l2";
  double bias = 0.0;
  double label_noise = 0.0;
  double base_temperature = 1.0;
  std::string out = "lowresource";
  GridArgs grid;
};

int low_resource_cmd(const LowResourceArgs& a, const Common& common, std::ostream& out) {
  const auto manifest = load_manifest(a.manifest);
  const auto fractions = parse_list<double>(a.fractions, "fraction");
  if (a.base_mode != "centroid" && a.base_mode != "manifest") {
    throw ValidationError("--base-mode must be centroid or manifest");
  }
  const bool centroid = a.base_mode == "centroid";
  const LabeledSet train = load_labeled_set(manifest, "train");
  Split dev = load_split(manifest, "dev", !centroid);
  Split test = load_split(manifest, "test", !centroid);
  const auto space = a.grid.space();
  const DistanceKind distance = parse_distance(a.distance);
  const std::size_t workers = common.resolved_workers();
  std::optional<MemoryStore> ds;
  if (!a.ds_memory.empty()) {
    ds = load_memory(a.ds_memory);
    check_vocab(*ds, manifest.vocab, a.ds_memory);
  }

  TuneOptions options;
  options.distance = distance;
  options.workers = workers;
  auto test_f1 = [&](const MemoryStore& memory, const Split& dev_split, const Split& test_split) {
    const auto tuned = greedy_search(memory, dev_split.data, *dev_split.base, space, options);
    const auto preds =
        predict_all(test_split.data.embeddings, MemoryRoute{&memory, tuned.best}, *test_split.base, false, workers);
    return std::make_pair(score(test_split.data, prediction_map(test_split.data, preds)), tuned.best);
  };

  json rows = json::array();
  std::ostringstream table;
  table << "fraction\ttrain_rows\tbase_f1\tknn_re_train_f1\tknn_re_ds_f1\n";
  for (double f : fractions) {
    const LabeledSet sub = subsample(train, f, a.seed);
    const MemoryStore memory = build_memory(sub, SourceTag::train());
    if (centroid) {
      Rng rng(a.seed);
      const CentroidModel model{0, a.bias, a.label_noise, a.base_temperature};
      dev.base = centroid_base_probs(sub, dev.data, model, rng);
      test.base = centroid_base_probs(sub, test.data, model, rng);
    }
    const double base_f1 = score(test.data, base_prediction_map(test.data, *test.base));
    const auto [train_f1, train_best] = test_f1(memory, dev, test);
    json row{{"fraction", f},
             {"train_rows", sub.size()},
             {"base_f1", base_f1},
             {"knn_re_train_f1", train_f1},
             {"train_best", json::parse(to_json(train_best))}};
    table << f << '\t' << sub.size() << '\t' << fmt(100.0 * base_f1) << '\t' << fmt(100.0 * train_f1) << '\t';
    if (ds) {
      const auto [ds_f1, ds_best] = test_f1(*ds, dev, test);
      row["knn_re_ds_f1"] = ds_f1;
      row["ds_best"] = json::parse(to_json(ds_best));
      table << fmt(100.0 * ds_f1) << '\n';
    } else {
      row["knn_re_ds_f1"] = nullptr;
      table << "-\n";
    }
    rows.push_back(std::move(row));
  }
  json doc{{"base_mode", a.base_mode}, {"seed", a.seed}, {"rows", rows}};
  if (!ds) doc["note"] = "no DS memory given; knn_re_ds series omitted";
  write_text(common.output_path(a.out + ".json"), doc.dump(2));
  write_text(common.output_path(a.out + ".tsv"), table.str());
  out << table.str();
  if (!ds) out << "note: no DS memory given; kNN-RE (ds) series omitted\n";
  return kOk;
}

// ---------------------------------------------------------------- neighbors

struct NeighborsArgs {
  std::string manifest;
  std::string split = "test";
  std::string memory;
  int k = 8;
  std::string distance = "sq_l2";
  bool exclude_self = false;
  std::string out = "neighbors.tsv";
};

int neighbors_cmd(const NeighborsArgs& a, const Common& common, std::ostream& out) {
  const auto manifest = load_manifest(a.manifest);
  const auto data = load_labeled_set(manifest, a.split);
  const auto memory = load_memory(a.memory);
  check_vocab(memory, manifest.vocab, a.memory);
  const auto lists = batch_search(memory, data.embeddings, a.k, parse_distance(a.distance), a.exclude_self,
                                  common.resolved_workers());
  const auto path = common.output_path(a.out);
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw ValidationError("cannot open file for writing: " + path.string());
  file << "query_id\tgold\trank\tneighbor_id\tneighbor_label\tdistance\n" << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t r = 0; r < lists[i].size(); ++r) {
      file << data.embeddings.id(i) << '\t' << data.vocab.name(data.labels[i]) << '\t' << r + 1 << '\t'
           << lists[i][r].record_id << '\t' << memory.vocab().name(lists[i][r].label) << '\t'
           << lists[i][r].distance << '\n';
    }
  }
  out << "wrote " << path.string() << " (" << data.size() << " queries, k=" << a.k << ")\n";
  return kOk;
}

// ---------------------------------------------------------------- synth-generate

struct SynthArgs {
  std::string spec;
};

int synth_cmd(const SynthArgs& a, const Common& common, std::ostream& out) {
  const auto spec = SynthSpec::from_json(read_text(a.spec));
  const auto data = generate(spec);
  const auto manifest = write_synth(data, common.output_dir());
  out << "wrote " << manifest.string() << ": train " << data.train.size() << ", dev " << data.dev.size()
      << ", test " << data.test.size() << ", ds " << data.ds.size() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- subsample

struct SubsampleArgs {
  std::string manifest;
  std::string split = "train";
  double fraction = 1.0;
  std::uint64_t seed = 0;
};

int subsample_cmd(const SubsampleArgs& a, const Common& common, std::ostream& out) {
  DatasetManifest manifest = load_manifest(a.manifest);
  const Split split = load_split(manifest, a.split, false);
  const LabeledSet sub = subsample(split.data, a.fraction, a.seed);
  std::optional<BaseProbSet> base;
  if (split.base) {
    EmbeddingSet rows(manifest.vocab.size());
    for (const auto& id : sub.embeddings.ids()) rows.append(id, split.base->row(id));
    base = BaseProbSet(manifest.vocab, std::move(rows));
  }
  const fs::path dir = common.output_dir();
  manifest.splits[a.split] = write_split(sub, base ? &*base : nullptr, dir, a.split);
  for (auto& [name, files] : manifest.splits) {
    files.embeddings = fs::absolute(files.embeddings).string();
    files.labels = fs::absolute(files.labels).string();
    if (files.base_probs) files.base_probs = fs::absolute(*files.base_probs).string();
  }
  const fs::path path = dir / "manifest.json";
  write_manifest(manifest, path);
  out << "wrote " << path.string() << ": split " << a.split << " has " << sub.size() << " of " << split.data.size()
      << " rows\n";
  return kOk;
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--workers", common.workers, "Worker threads (default: $KNNRE_WORKERS or 1)");
  cmd->add_option("--out-dir", common.out_dir, "Output directory (default: $KNNRE_OUT_DIR or .)");
}

void add_grid(CLI::App* cmd, GridArgs& grid) {
  cmd->add_option("--k-grid", grid.k_grid, "Comma-separated k values (default 2,4,...,256)");
  cmd->add_option("--t-grid", grid.t_grid, "Comma-separated temperatures (default 0.05,0.1,...,0.9)");
  cmd->add_option("--lambda-grid", grid.lambda_grid, "Comma-separated λ values (default 0,0.1,...,1)");
  cmd->add_option("--alpha-grid", grid.alpha_grid, "Comma-separated α values (default 0,0.1,...,1)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"knnre: nearest-neighbor memories for relation classification", "knnre"};
  app.require_subcommand(1);
  Common common;
  std::function<int()> action;

  BuildMemoryArgs build;
  auto* build_cmd = app.add_subcommand("build-memory", "Build a key-value memory from a labeled split");
  build_cmd->add_option("--manifest", build.manifest)->required();
  build_cmd->add_option("--split", build.split);
  build_cmd->add_option("--out", build.out)->required();
  build_cmd->add_option("--tag", build.tag, "Source tag (train, ds or any name; default: split name)");
  add_common(build_cmd, common);
  build_cmd->callback([&] { action = [&] { return build_memory_cmd(build, common, out); }; });

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score base, kNN-only, kNN-RE and combined predictions");
  eval_cmd->add_option("--manifest", eval.manifest)->required();
  eval_cmd->add_option("--split", eval.split);
  eval_cmd->add_option("--memory", eval.memory)->required();
  eval_cmd->add_option("--ds-memory", eval.ds_memory);
  eval_cmd->add_option("--params", eval.params, "tune.json written by `knnre tune`");
  eval_cmd->add_option("--k", eval.k);
  eval_cmd->add_option("--temperature", eval.temperature);
  eval_cmd->add_option("--lambda", eval.lambda);
  eval_cmd->add_option("--distance", eval.distance);
  eval_cmd->add_option("--ds-k", eval.ds_k);
  eval_cmd->add_option("--ds-temperature", eval.ds_temperature);
  eval_cmd->add_option("--ds-lambda", eval.ds_lambda);
  eval_cmd->add_option("--alpha", eval.alpha);
  eval_cmd->add_option("--dump-neighbors", eval.dump_neighbors, "Write the top-n neighbors of every query");
  eval_cmd->add_option("--longtail-threshold", eval.longtail_threshold,
                       "Write a long-tail table for classes with at most this many memory rows");
  add_common(eval_cmd, common);
  eval_cmd->callback([&] { action = [&] { return evaluate_cmd(eval, common, out); }; });

  TuneArgs tune;
  auto* tune_cmd_app = app.add_subcommand("tune", "Greedy (k, T) then λ search on the dev split");
  tune_cmd_app->add_option("--manifest", tune.manifest)->required();
  tune_cmd_app->add_option("--split", tune.split);
  tune_cmd_app->add_option("--memory", tune.memory)->required();
  tune_cmd_app->add_option("--ds-memory", tune.ds_memory);
  tune_cmd_app->add_option("--distance", tune.distance);
  tune_cmd_app->add_option("--out", tune.out);
  add_grid(tune_cmd_app, tune.grid);
  add_common(tune_cmd_app, common);
  tune_cmd_app->callback([&] { action = [&] { return tune_cmd(tune, common, out); }; });

  LowResourceArgs low;
  auto* low_cmd = app.add_subcommand("low-resource", "Test F1 as a function of the training fraction");
  low_cmd->add_option("--manifest", low.manifest)->required();
  low_cmd->add_option("--fractions", low.fractions);
  low_cmd->add_option("--seed", low.seed);
  low_cmd->add_option("--ds-memory", low.ds_memory);
  low_cmd->add_option("--base-mode", low.base_mode,
                      "centroid: refit a centroid classifier on each subsample; manifest: use the split's base_probs");
  low_cmd->add_option("--bias", low.bias, "Majority-class logit bias of the centroid base model");
  low_cmd->add_option("--label-noise", low.label_noise, "Logit-swap rate of the centroid base model");
  low_cmd->add_option("--base-temperature", low.base_temperature);
  low_cmd->add_option("--distance", low.distance);
  low_cmd->add_option("--out", low.out, "Output stem");
  add_grid(low_cmd, low.grid);
  add_common(low_cmd, common);
  low_cmd->callback([&] { action = [&] { return low_resource_cmd(low, common, out); }; });

  NeighborsArgs nb;
  auto* nb_cmd = app.add_subcommand("neighbors", "Dump the k nearest memory rows of every query");
  nb_cmd->add_option("--manifest", nb.manifest)->required();
  nb_cmd->add_option("--split", nb.split);
  nb_cmd->add_option("--memory", nb.memory)->required();
  nb_cmd->add_option("--k", nb.k);
  nb_cmd->add_option("--distance", nb.distance);
  nb_cmd->add_flag("--exclude-self", nb.exclude_self);
  nb_cmd->add_option("--out", nb.out);
  add_common(nb_cmd, common);
  nb_cmd->callback([&] { action = [&] { return neighbors_cmd(nb, common, out); }; });

  SynthArgs synth;
  auto* synth_cmd_app = app.add_subcommand("synth-generate", "Generate a synthetic dataset from a JSON spec");
  synth_cmd_app->add_option("--spec", synth.spec)->required();
  add_common(synth_cmd_app, common);
  synth_cmd_app->callback([&] { action = [&] { return synth_cmd(synth, common, out); }; });

  SubsampleArgs sub;
  auto* sub_cmd = app.add_subcommand("subsample", "Stratified subsample of one split");
  sub_cmd->add_option("--manifest", sub.manifest)->required();
  sub_cmd->add_option("--split", sub.split);
  sub_cmd->add_option("--fraction", sub.fraction)->required();
  sub_cmd->add_option("--seed", sub.seed);
  add_common(sub_cmd, common);
  sub_cmd->callback([&] { action = [&] { return subsample_cmd(sub, common, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidationError;
  }

  try {
    return action ? action() : kValidationError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ComputationError& e) {
    err << "error: " << e.what() << '\n';
    return kComputationError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kComputationError;
  }
}

}  // namespace knnre::cli
