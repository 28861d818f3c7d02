#ifndef CMV_EVALUATION_HPP
#define CMV_EVALUATION_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cmv/corpus.hpp"
#include "cmv/error.hpp"

namespace cmv::eval {

// ---------------------------------------------------------------------------
// Metrics

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw BadParameter("pearson: length mismatch");
  if (xs.size() < 2) throw DegenerateMetric("pearson needs at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateMetric("zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of their ranks.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw BadParameter("spearman: length mismatch");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

/// AP over the full ranking. Scored items are sorted by descending score
/// (stable); out-of-vocabulary items follow in input order. Positives among
/// them still count, at their bottom ranks.
inline double average_precision_at_all(std::span<const double> scores, const std::vector<bool>& labels,
                                       const std::vector<bool>& oov) {
  if (scores.size() != labels.size() || scores.size() != oov.size()) throw BadParameter("AP: length mismatch");
  std::vector<std::size_t> ranked, bottom;
  for (std::size_t i = 0; i < scores.size(); ++i) (oov[i] ? bottom : ranked).push_back(i);
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  ranked.insert(ranked.end(), bottom.begin(), bottom.end());
  double hits = 0.0, sum = 0.0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (labels[ranked[r]]) {
      hits += 1.0;
      sum += hits / static_cast<double>(r + 1);
    }
  }
  if (hits == 0.0) throw DegenerateMetric("AP needs at least one positive label");
  return sum / hits;
}

inline double average_precision_at_all(std::span<const double> scores, const std::vector<bool>& labels) {
  return average_precision_at_all(scores, labels, std::vector<bool>(scores.size(), false));
}

struct ThresholdResult {
  double threshold;
  double validation_accuracy;
  double accuracy;
};

namespace detail {

inline double accuracy_at(std::span<const double> scores, const std::vector<bool>& labels,
                          const std::vector<bool>& oov, double threshold) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = !oov[i] && scores[i] > threshold;
    if (predicted == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

}  // namespace detail

/// Predicts "positive" when score > threshold (OOV items are negative). The
/// threshold maximizes validation accuracy over -inf, midpoints between
/// consecutive distinct validation scores, and +inf; ties pick the lowest.
inline ThresholdResult detection_accuracy(std::span<const double> scores, const std::vector<bool>& labels,
                                          const std::vector<bool>& oov, std::span<const double> val_scores,
                                          const std::vector<bool>& val_labels, const std::vector<bool>& val_oov) {
  if (val_scores.empty()) throw DegenerateMetric("validation set is empty");
  if (scores.empty()) throw DegenerateMetric("test set is empty");
  if (scores.size() != labels.size() || scores.size() != oov.size() || val_scores.size() != val_labels.size() ||
      val_scores.size() != val_oov.size()) {
    throw BadParameter("detection accuracy: length mismatch");
  }
  std::vector<double> distinct;
  for (std::size_t i = 0; i < val_scores.size(); ++i) {
    if (!val_oov[i]) distinct.push_back(val_scores[i]);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> candidates{-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
  candidates.push_back(std::numeric_limits<double>::infinity());

  ThresholdResult best{candidates.front(), -1.0, 0.0};
  for (double t : candidates) {
    const double acc = detail::accuracy_at(val_scores, val_labels, val_oov, t);
    if (acc > best.validation_accuracy) {
      best.validation_accuracy = acc;
      best.threshold = t;
    }
  }
  best.accuracy = detail::accuracy_at(scores, labels, oov, best.threshold);
  return best;
}

// ---------------------------------------------------------------------------
// Datasets

enum class Task { sts, wordsim, hypernymy };

struct PairRecord {
  std::string item1;
  std::string item2;
  double gold = 0.0;
};

struct PairDataset {
  std::string name;
  Task task = Task::sts;
  std::vector<PairRecord> records;

  std::vector<double> golds() const {
    std::vector<double> g;
    g.reserve(records.size());
    for (const auto& r : records) g.push_back(r.gold);
    return g;
  }
};

inline double parse_hypernymy_label(const std::string& s) {
  std::string t;
  for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "true" || t == "hyper" || t == "1") return 1.0;
  if (t == "false" || t == "other" || t == "0") return 0.0;
  throw FormatError("unknown hypernymy label '" + s + "'");
}

/// TSV `item1<TAB>item2<TAB>gold`.
inline PairDataset load_pair_dataset(const std::filesystem::path& path, Task task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  PairDataset ds;
  ds.name = path.stem().string();
  ds.task = task;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) cols.push_back(field);
    if (cols.size() < 3) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    PairRecord r{cols[0], cols[1], 0.0};
    if (task == Task::hypernymy) {
      r.gold = parse_hypernymy_label(cols[2]);
    } else {
      try {
        r.gold = std::stod(cols[2]);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad score '" + cols[2] + "'");
      }
      if (!std::isfinite(r.gold)) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": non-finite score");
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Harnesses

/// Distance between two items; std::nullopt when an item is out of vocabulary.
using PairScorer = std::function<std::optional<double>(const PairRecord&)>;

struct FileResult {
  std::string group;
  std::string name;
  std::size_t pairs = 0;
  std::size_t oov = 0;
  std::optional<double> value;
  std::string error;
};

struct StsInput {
  std::string group;  // typically the STS year
  PairDataset dataset;
};

struct StsReport {
  std::vector<FileResult> files;
  std::map<std::string, double> group_means;
  std::optional<double> average;
};

/// Similarity is the negated distance. Pairs the scorer cannot represent get
/// the mean similarity of the rest of their file.
inline StsReport run_sts(const std::vector<StsInput>& inputs, const PairScorer& scorer) {
  StsReport rep;
  std::map<std::string, std::vector<double>> per_group;
  for (const auto& in : inputs) {
    FileResult fr{in.group, in.dataset.name, in.dataset.records.size(), 0, std::nullopt, {}};
    std::vector<std::optional<double>> sims;
    double sum = 0.0;
    std::size_t scored = 0;
    for (const auto& r : in.dataset.records) {
      auto d = scorer(r);
      if (d) {
        sims.push_back(-*d);
        sum += -*d;
        ++scored;
      } else {
        sims.push_back(std::nullopt);
        ++fr.oov;
      }
    }
    const double fill = scored > 0 ? sum / static_cast<double>(scored) : 0.0;
    std::vector<double> xs;
    xs.reserve(sims.size());
    for (const auto& s : sims) xs.push_back(s.value_or(fill));
    try {
      fr.value = pearson(xs, in.dataset.golds());
      per_group[in.group].push_back(*fr.value);
    } catch (const Error& e) {
      fr.error = std::string(e.name());
    }
    rep.files.push_back(std::move(fr));
  }
  double total = 0.0;
  for (const auto& [g, vals] : per_group) {
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    rep.group_means[g] = mean;
    total += mean;
  }
  if (!rep.group_means.empty()) rep.average = total / static_cast<double>(rep.group_means.size());
  return rep;
}

struct WordsimReport {
  std::vector<FileResult> files;
  /// Mean of per-dataset Spearman weighted by in-vocabulary pair counts.
  std::optional<double> weighted_average;
};

/// OOV pairs are dropped from the correlation and from the weights.
inline WordsimReport run_wordsim(const std::vector<PairDataset>& datasets, const PairScorer& scorer) {
  WordsimReport rep;
  double wsum = 0.0, acc = 0.0;
  for (const auto& ds : datasets) {
    FileResult fr{"", ds.name, ds.records.size(), 0, std::nullopt, {}};
    std::vector<double> sims, golds;
    for (const auto& r : ds.records) {
      auto d = scorer(r);
      if (!d) {
        ++fr.oov;
        continue;
      }
      sims.push_back(-*d);
      golds.push_back(r.gold);
    }
    try {
      fr.value = spearman(sims, golds);
      const double w = static_cast<double>(sims.size());
      acc += w * *fr.value;
      wsum += w;
    } catch (const Error& e) {
      fr.error = std::string(e.name());
    }
    rep.files.push_back(std::move(fr));
  }
  if (wsum > 0.0) rep.weighted_average = acc / wsum;
  return rep;
}

enum class HypernymyMetric { average_precision, accuracy };

struct HypernymyInput {
  PairDataset dataset;
  HypernymyMetric metric = HypernymyMetric::average_precision;
  /// Threshold source for the accuracy metric; the test set itself when absent.
  std::optional<PairDataset> validation;
};

struct HypernymyReport {
  std::vector<FileResult> files;
};

/// `scorer` returns an entailment score (higher = more likely hypernymy).
inline HypernymyReport run_hypernymy(const std::vector<HypernymyInput>& inputs, const PairScorer& scorer) {
  HypernymyReport rep;
  auto score_all = [&](const PairDataset& ds, std::vector<double>& scores, std::vector<bool>& labels,
                       std::vector<bool>& oov) {
    for (const auto& r : ds.records) {
      auto s = scorer(r);
      scores.push_back(s.value_or(0.0));
      oov.push_back(!s.has_value());
      labels.push_back(r.gold > 0.5);
    }
  };
  for (const auto& in : inputs) {
    FileResult fr{"", in.dataset.name, in.dataset.records.size(), 0, std::nullopt, {}};
    std::vector<double> scores;
    std::vector<bool> labels, oov;
    score_all(in.dataset, scores, labels, oov);
    fr.oov = static_cast<std::size_t>(std::count(oov.begin(), oov.end(), true));
    try {
      if (in.metric == HypernymyMetric::average_precision) {
        fr.value = average_precision_at_all(scores, labels, oov);
      } else if (in.validation) {
        std::vector<double> vs;
        std::vector<bool> vl, vo;
        score_all(*in.validation, vs, vl, vo);
        fr.value = detection_accuracy(scores, labels, oov, vs, vl, vo).accuracy;
      } else {
        fr.value = detection_accuracy(scores, labels, oov, scores, labels, oov).accuracy;
      }
    } catch (const Error& e) {
      fr.error = std::string(e.name());
    }
    rep.files.push_back(std::move(fr));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string format_value(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream os;
  os.precision(10);
  os << *v;
  return os.str();
}

/// TSV: group, dataset, pairs, oov, value, error.
inline std::string results_tsv(const std::vector<FileResult>& files) {
  std::ostringstream os;
  os << "group\tdataset\tpairs\toov\tvalue\terror\n";
  for (const auto& f : files) {
    os << (f.group.empty() ? "-" : f.group) << '\t' << f.name << '\t' << f.pairs << '\t' << f.oov << '\t'
       << format_value(f.value) << '\t' << (f.error.empty() ? "-" : f.error) << '\n';
  }
  return os.str();
}

}  // namespace cmv::eval

#endif  // CMV_EVALUATION_HPP
