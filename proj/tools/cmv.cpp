// cmv: command-line front end for the context mover's distance pipeline.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmv/cmv.hpp"
#include "criteria.hpp"

namespace {

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> help{
      {"corpus", "tokenized text, one sentence per line"},
      {"vocab", "vocabulary TSV"},
      {"cooc", "co-occurrence matrix"},
      {"sppmi", "SPPMI matrix"},
      {"clusters", "k-means clustering of contexts"},
      {"clustered", "optional word x cluster SPPMI table"},
      {"histograms", "per-word distributional estimates"},
      {"embeddings", "GloVe-format word vectors"},
      {"context_embeddings", "GloVe-format vectors to cluster instead of --embeddings"},
      {"entailment_vectors", "GloVe-format entailment vectors (entailment metric)"},
      {"report", "evaluation report path"},
      {"min_count", "minimum token frequency"},
      {"window", "symmetric co-occurrence window L"},
      {"distance_weighting", "weight co-occurrences by 1/distance"},
      {"alpha", "context-distribution smoothing exponent"},
      {"shift", "PMI shift s"},
      {"beta", "column-normalization exponent"},
      {"K", "number of clusters"},
      {"seed", "seed for k-means++ and power iteration"},
      {"kmeans_iters", "maximum Lloyd iterations"},
      {"lambda", "entropic regularization"},
      {"p", "ground-cost exponent (1 or 2)"},
      {"iters", "Sinkhorn / barycenter iterations"},
      {"tol", "early-stop marginal tolerance (0 disables)"},
      {"m", "mass on each word's own point estimate"},
      {"clip", "ground-cost clipping threshold or none"},
      {"cost_norm", "none, median or log"},
      {"pc_removal", "remove the first principal component from point estimates"},
      {"metric", "euclidean, angular or entailment"},
      {"hyponym_source", "transport from the first word under the entailment metric"},
      {"sif_a", "SIF word-weight constant for sentence barycenters (0 = uniform)"},
      {"threads", "cap on worker threads (0 = all cores)"},
      {"precision", "digits after the decimal point in printed values"},
  };
  return help;
}

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

int exit_code(cmv::Errc kind) {
  switch (kind) {
    case cmv::Errc::BadParameter:
      return 1;
    case cmv::Errc::IoError:
    case cmv::Errc::FormatError:
    case cmv::Errc::OovError:
    case cmv::Errc::EmptyCorpus:
    case cmv::Errc::BadInput:
    case cmv::Errc::ShapeError:
    case cmv::Errc::IndexError:
    case cmv::Errc::EmptySentence:
    case cmv::Errc::BadClustering:
      return 2;
    default:
      return 3;
  }
}

cmv::WordId lookup(const cmv::pipeline::Model& model, const std::string& token) {
  if (auto id = model.find(token)) return *id;
  throw cmv::OovError("unknown word '" + token + "'");
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw cmv::IoError("cannot write '" + path + "'");
  out << text;
}

/// Prints the TSV and summary, or writes them under --report.
void emit_report(const cmv::RunConfig& cfg, const std::string& tsv, const std::string& summary) {
  if (cfg.report.empty()) {
    std::cout << tsv << summary;
    return;
  }
  write_text(cfg.report, tsv);
  write_text(cfg.report + ".summary", summary);
  cmv::pipeline::echo_config(cfg, cfg.report);
  std::cout << summary;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context mover's distance: distributional estimates, CMD and CoMB"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "key=value config file; command-line flags override it");
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& key : cmv::RunConfig::keys()) {
    app.add_option_function<std::string>(
        "--" + dashed(key), [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
        key_help().at(key));
  }

  auto* vocab = app.add_subcommand("vocab", "build the vocabulary from --corpus");
  auto* cooc = app.add_subcommand("cooc", "count windowed co-occurrences");
  auto* sppmi = app.add_subcommand("sppmi", "compute shifted smoothed PPMI");
  auto* cluster = app.add_subcommand("cluster", "k-means over context embeddings");
  auto* histograms = app.add_subcommand("histograms", "aggregate SPPMI into per-word histograms");

  std::vector<std::string> words;
  auto* dist = app.add_subcommand("dist", "print CMD between two words");
  dist->add_option("words", words, "two words")->expected(2)->required();

  std::vector<std::string> sentence;
  auto* comb = app.add_subcommand("comb", "print the barycenter histogram of a sentence");
  comb->add_option("tokens", sentence, "sentence tokens")->required();

  std::string query, candidates_path;
  std::size_t k = 10;
  auto* neighbors = app.add_subcommand("neighbors", "nearest words by CMD");
  neighbors->add_option("query", query, "query word")->required();
  neighbors->add_option("-k,--k", k, "number of neighbors");
  neighbors->add_option("--candidates", candidates_path, "file with one candidate word per line (default: vocabulary)");

  std::vector<std::string> sts_files;
  auto* eval_sts = app.add_subcommand("eval-sts", "STS Pearson correlation; files as [group=]path");
  eval_sts->add_option("files", sts_files, "STS TSV files")->required();

  std::vector<std::string> ws_files;
  auto* eval_ws = app.add_subcommand("eval-ws", "word-similarity Spearman correlation");
  eval_ws->add_option("files", ws_files, "word-similarity TSV files")->required();

  std::vector<std::string> hyp_files, acc_files;
  std::string validation_path;
  auto* eval_hyp = app.add_subcommand("eval-hyp", "hypernymy AP@all (or detection accuracy)");
  eval_hyp->add_option("files", hyp_files, "datasets scored by AP@all");
  eval_hyp->add_option("--accuracy", acc_files, "datasets scored by detection accuracy");
  eval_hyp->add_option("--validation", validation_path, "threshold-tuning split for --accuracy datasets");

  auto* selftest = app.add_subcommand("selftest", "run the oracle and acceptance checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    cmv::RunConfig cfg = config_path.empty() ? cmv::RunConfig{} : cmv::RunConfig::load(config_path);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    cfg.validate();
    cmv::pipeline::apply_runtime(cfg);
    namespace pl = cmv::pipeline;

    if (vocab->parsed()) {
      const auto v = pl::run_vocab(cfg);
      std::cerr << "vocabulary: " << v.size() << " tokens -> " << cfg.vocab << '\n';
    } else if (cooc->parsed()) {
      const auto m = pl::run_cooc(cfg);
      std::cerr << "co-occurrences: " << m.nnz() << " entries -> " << cfg.cooc << '\n';
    } else if (sppmi->parsed()) {
      const auto m = pl::run_sppmi(cfg);
      std::cerr << "sppmi: " << m.entries.size() << " positive entries -> " << cfg.sppmi << '\n';
    } else if (cluster->parsed()) {
      const auto c = pl::run_cluster(cfg);
      std::cerr << "clusters: K=" << c.K() << ", inertia " << c.inertia() << " -> " << cfg.clusters << '\n';
    } else if (histograms->parsed()) {
      const auto s = pl::run_histograms(cfg);
      std::cerr << "histograms: " << s.vocab_size() << " words over K=" << s.K() << " -> " << cfg.histograms << '\n';
    } else if (dist->parsed()) {
      const auto model = pl::load_model(cfg);
      std::cout << fixed(model.mover.cmd(lookup(model, words[0]), lookup(model, words[1])), cfg.precision) << '\n';
    } else if (comb->parsed()) {
      const auto model = pl::load_model(cfg);
      std::vector<cmv::WordId> ids;
      for (const auto& t : sentence) {
        if (auto id = model.find(t)) ids.push_back(*id);
      }
      const auto s = model.mover.comb(ids);
      for (std::size_t i = 0; i < s.estimate.size(); ++i) {
        std::cout << s.estimate.support[i] << '\t' << fixed(s.estimate.weights[i], cfg.precision) << '\n';
      }
    } else if (neighbors->parsed()) {
      const auto model = pl::load_model(cfg);
      const auto q = lookup(model, query);
      std::vector<cmv::WordId> cands;
      if (candidates_path.empty()) {
        for (cmv::WordId w = 0; w < model.vocab.size(); ++w) {
          if (w != q) cands.push_back(w);
        }
      } else {
        std::ifstream in(candidates_path);
        if (!in) throw cmv::IoError("cannot open candidates '" + candidates_path + "'");
        std::string line;
        while (std::getline(in, line)) {
          for (const auto& t : cmv::split_tokens(line)) cands.push_back(lookup(model, t));
        }
      }
      for (const auto& n : model.mover.nearest_neighbors(q, cands, std::min(k, cands.size()))) {
        std::cout << model.vocab.token(n.word) << '\t' << fixed(n.distance, cfg.precision) << '\n';
      }
    } else if (eval_sts->parsed()) {
      const auto model = pl::load_model(cfg);
      std::vector<cmv::eval::StsInput> inputs;
      for (const auto& arg : sts_files) {
        const auto eq = arg.find('=');
        const std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
        std::string group = eq == std::string::npos ? std::filesystem::path(path).parent_path().filename().string()
                                                    : arg.substr(0, eq);
        inputs.push_back({group, cmv::eval::load_pair_dataset(path, cmv::eval::Task::sts)});
      }
      const auto rep = cmv::eval::run_sts(inputs, pl::sentence_distance_scorer(model));
      std::ostringstream summary;
      for (const auto& [g, v] : rep.group_means) summary << "group." << (g.empty() ? "-" : g) << '=' << v << '\n';
      summary << "average=" << cmv::eval::format_value(rep.average) << '\n';
      emit_report(cfg, cmv::eval::results_tsv(rep.files), summary.str());
    } else if (eval_ws->parsed()) {
      const auto model = pl::load_model(cfg);
      std::vector<cmv::eval::PairDataset> sets;
      for (const auto& f : ws_files) sets.push_back(cmv::eval::load_pair_dataset(f, cmv::eval::Task::wordsim));
      const auto rep = cmv::eval::run_wordsim(sets, pl::word_distance_scorer(model));
      std::ostringstream summary;
      summary << "weighted_average=" << cmv::eval::format_value(rep.weighted_average) << '\n';
      emit_report(cfg, cmv::eval::results_tsv(rep.files), summary.str());
    } else if (eval_hyp->parsed()) {
      if (hyp_files.empty() && acc_files.empty()) throw cmv::BadParameter("eval-hyp needs at least one dataset");
      const auto model = pl::load_model(cfg);
      std::optional<cmv::eval::PairDataset> validation;
      if (!validation_path.empty()) validation = cmv::eval::load_pair_dataset(validation_path, cmv::eval::Task::hypernymy);
      std::vector<cmv::eval::HypernymyInput> inputs;
      for (const auto& f : hyp_files) {
        inputs.push_back({cmv::eval::load_pair_dataset(f, cmv::eval::Task::hypernymy),
                          cmv::eval::HypernymyMetric::average_precision, std::nullopt});
      }
      for (const auto& f : acc_files) {
        inputs.push_back({cmv::eval::load_pair_dataset(f, cmv::eval::Task::hypernymy),
                          cmv::eval::HypernymyMetric::accuracy, validation});
      }
      const auto rep = cmv::eval::run_hypernymy(inputs, pl::hypernymy_scorer(model));
      std::ostringstream summary;
      for (const auto& f : rep.files) summary << f.name << '=' << cmv::eval::format_value(f.value) << '\n';
      emit_report(cfg, cmv::eval::results_tsv(rep.files), summary.str());
    } else if (selftest->parsed()) {
      const int failures = cmv::acceptance::run_and_report(stdout);
      std::printf("%d hard criteria failed\n", failures);
      return failures == 0 ? 0 : 3;
    }
  } catch (const cmv::Error& e) {
    std::cerr << "cmv: " << e.name() << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "cmv: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
