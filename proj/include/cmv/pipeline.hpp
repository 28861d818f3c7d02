#ifndef CMV_PIPELINE_HPP
#define CMV_PIPELINE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmv/clustering.hpp"
#include "cmv/cmd.hpp"
#include "cmv/config.hpp"
#include "cmv/corpus.hpp"
#include "cmv/embeddings.hpp"
#include "cmv/estimates.hpp"
#include "cmv/evaluation.hpp"
#include "cmv/parallel.hpp"
#include "cmv/ppmi.hpp"

namespace cmv::pipeline {

/// Throws IoError naming the stage that produces a missing input.
inline void require_input(const std::string& path, std::string_view what, std::string_view stage) {
  if (path.empty()) {
    throw BadParameter(std::string("no ") + std::string(what) + " path configured (--" + std::string(what) + ")");
  }
  if (!std::filesystem::exists(path)) {
    throw IoError("missing " + std::string(what) + " file '" + path + "'; produce it with the '" + std::string(stage) +
                  "' stage first");
  }
}

inline void require_output(const std::string& path, std::string_view what) {
  if (path.empty()) throw BadParameter(std::string("no output path configured (--") + std::string(what) + ")");
}

/// Writes the resolved config next to an output file.
inline void echo_config(const RunConfig& cfg, const std::string& output) { cfg.save(output + ".config"); }

inline void apply_runtime(const RunConfig& cfg) { set_max_threads(cfg.threads); }

inline Vocabulary run_vocab(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw BadParameter("no corpus path configured (--corpus)");
  if (!std::filesystem::exists(cfg.corpus)) throw IoError("missing corpus file '" + cfg.corpus + "'");
  require_output(cfg.vocab, "vocab");
  const auto vocab = build_vocabulary(read_corpus(std::filesystem::path(cfg.corpus)), cfg.min_count);
  save_vocabulary(vocab, cfg.vocab);
  echo_config(cfg, cfg.vocab);
  return vocab;
}

inline SparseCoocMatrix run_cooc(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw BadParameter("no corpus path configured (--corpus)");
  if (!std::filesystem::exists(cfg.corpus)) throw IoError("missing corpus file '" + cfg.corpus + "'");
  require_input(cfg.vocab, "vocab", "vocab");
  require_output(cfg.cooc, "cooc");
  const auto vocab = load_vocabulary(cfg.vocab);
  const auto m = accumulate_cooccurrences(read_corpus(std::filesystem::path(cfg.corpus)), vocab,
                                          CoocOptions{cfg.window, cfg.distance_weighting});
  save_cooc(m, cfg.cooc);
  echo_config(cfg, cfg.cooc);
  return m;
}

inline SppmiMatrix run_sppmi(const RunConfig& cfg) {
  require_input(cfg.cooc, "cooc", "cooc");
  require_output(cfg.sppmi, "sppmi");
  const auto m = compute_sppmi(load_cooc(cfg.cooc), cfg.alpha, cfg.shift);
  save_sppmi(m, cfg.sppmi);
  echo_config(cfg, cfg.sppmi);
  return m;
}

/// Point-estimate vectors: entailment vectors under the entailment metric
/// (when configured), word embeddings otherwise.
inline const std::string& point_vectors_path(const RunConfig& cfg) {
  if (cfg.metric == Metric::entailment && !cfg.entailment_vectors.empty()) return cfg.entailment_vectors;
  return cfg.embeddings;
}

inline ContextClustering run_cluster(const RunConfig& cfg) {
  require_input(cfg.vocab, "vocab", "vocab");
  const std::string& src = cfg.context_embeddings.empty() ? point_vectors_path(cfg) : cfg.context_embeddings;
  if (src.empty()) throw BadParameter("no embeddings path configured (--embeddings)");
  if (!std::filesystem::exists(src)) throw IoError("missing embeddings file '" + src + "'");
  require_output(cfg.clusters, "clusters");
  const auto vocab = load_vocabulary(cfg.vocab);
  const auto emb = load_embeddings(src, vocab);
  KMeansOptions opt;
  opt.K = cfg.K;
  opt.seed = cfg.seed;
  opt.max_iters = cfg.kmeans_iters;
  opt.metric = cfg.metric;
  const auto c = kmeans(emb, opt);
  save_clustering(c, cfg.clusters);
  echo_config(cfg, cfg.clusters);
  return c;
}

inline EstimateStore run_histograms(const RunConfig& cfg) {
  require_input(cfg.sppmi, "sppmi", "sppmi");
  require_input(cfg.clusters, "clusters", "cluster");
  require_output(cfg.histograms, "histograms");
  const auto sppmi = load_sppmi(cfg.sppmi);
  auto clustering = load_clustering(cfg.clusters);
  clustering.metric = cfg.metric;
  const auto clustered = column_normalize(aggregate_sppmi(sppmi, clustering), cfg.beta);
  if (!cfg.clustered.empty()) {
    save_clustered(clustered, cfg.clustered);
    echo_config(cfg, cfg.clustered);
  }
  const auto store = build_store(clustered);
  save_store(store, cfg.histograms);
  echo_config(cfg, cfg.histograms);
  return store;
}

// ---------------------------------------------------------------------------

/// Everything needed to score words and sentences.
struct Model {
  Vocabulary vocab;
  ContextMover mover;

  std::optional<WordId> find(const std::string& token) const { return vocab.find(token); }

  /// In-vocabulary ids of a whitespace-tokenized sentence.
  std::vector<WordId> sentence_ids(std::string_view text) const {
    std::vector<WordId> ids;
    for (const auto& tok : split_tokens(text)) {
      if (auto id = vocab.find(tok)) ids.push_back(*id);
    }
    return ids;
  }
};

inline CmdOptions cmd_options(const RunConfig& cfg) {
  CmdOptions opt;
  opt.sinkhorn = ot::SinkhornOptions{cfg.lambda, cfg.iters, cfg.tol};
  opt.preprocessing = ot::CostPreprocessing{cfg.cost_norm, cfg.clip};
  opt.m = cfg.m;
  opt.hyponym_is_source = cfg.hyponym_source;
  return opt;
}

inline Model build_model(Vocabulary vocab, EstimateStore store, const ContextClustering& clustering,
                         RowMatrix points, const RunConfig& cfg) {
  if (store.vocab_size() != vocab.size()) throw ShapeError("histogram file and vocabulary disagree on size");
  if (cfg.pc_removal) {
    PowerIterationOptions pio;
    pio.seed = cfg.seed;
    points = remove_pc(PointEstimateTable{std::move(points), std::nullopt}, pio).vectors;
  }
  auto space = make_ground_space(clustering.centroids, points, cfg.metric, cfg.p);
  auto opt = cmd_options(cfg);
  if (cfg.sif_a > 0.0) {
    double total = 0.0;
    for (auto c : vocab.counts()) total += static_cast<double>(c);
    for (auto c : vocab.counts()) opt.word_weights.push_back(cfg.sif_a / (cfg.sif_a + static_cast<double>(c) / total));
  }
  return Model{std::move(vocab), ContextMover(std::move(store), std::move(space), std::move(opt))};
}

inline Model load_model(const RunConfig& cfg) {
  require_input(cfg.vocab, "vocab", "vocab");
  require_input(cfg.histograms, "histograms", "histograms");
  require_input(cfg.clusters, "clusters", "cluster");
  const std::string& pts = point_vectors_path(cfg);
  if (pts.empty()) throw BadParameter("no embeddings path configured (--embeddings)");
  if (!std::filesystem::exists(pts)) throw IoError("missing embeddings file '" + pts + "'");
  auto vocab = load_vocabulary(cfg.vocab);
  auto store = load_store(cfg.histograms);
  const auto clustering = load_clustering(cfg.clusters);
  auto emb = load_embeddings(pts, vocab);
  return build_model(std::move(vocab), std::move(store), clustering, std::move(emb.vectors), cfg);
}

// ---------------------------------------------------------------------------
// Scorers for the evaluation harnesses

inline eval::PairScorer word_distance_scorer(const Model& model) {
  return [&model](const eval::PairRecord& r) -> std::optional<double> {
    const auto a = model.find(r.item1);
    const auto b = model.find(r.item2);
    if (!a || !b) return std::nullopt;
    return model.mover.cmd(*a, *b);
  };
}

inline eval::PairScorer sentence_distance_scorer(const Model& model) {
  return [&model](const eval::PairRecord& r) -> std::optional<double> {
    const auto a = model.sentence_ids(r.item1);
    const auto b = model.sentence_ids(r.item2);
    if (a.empty() || b.empty()) return std::nullopt;
    return model.mover.sentence_cmd(a, b);
  };
}

/// Entailment score of (hyponym, hypernym) pairs.
inline eval::PairScorer hypernymy_scorer(const Model& model) {
  return [&model](const eval::PairRecord& r) -> std::optional<double> {
    const auto a = model.find(r.item1);
    const auto b = model.find(r.item2);
    if (!a || !b) return std::nullopt;
    return model.mover.hypernymy_score(*a, *b);
  };
}

}  // namespace cmv::pipeline

#endif  // CMV_PIPELINE_HPP
