#ifndef CMV_CONFIG_HPP
#define CMV_CONFIG_HPP

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cmv/error.hpp"
#include "cmv/linalg.hpp"
#include "cmv/ot.hpp"

namespace cmv {

/// Every path and hyperparameter of a run. Defaults follow the best
/// sentence-similarity configuration (alpha=0.55, beta=1, s=5, K=300, m=0.4).
struct RunConfig {
  // paths
  std::string corpus;
  std::string vocab;
  std::string cooc;
  std::string sppmi;
  std::string clusters;
  std::string clustered;
  std::string histograms;
  std::string embeddings;
  std::string context_embeddings;
  std::string entailment_vectors;
  std::string report;

  // corpus / statistics
  std::uint64_t min_count = 10;
  std::uint32_t window = 10;
  bool distance_weighting = true;
  double alpha = 0.55;
  double shift = 5.0;
  double beta = 1.0;

  // clustering
  std::uint32_t K = 300;
  std::uint64_t seed = 0;
  std::uint32_t kmeans_iters = 100;

  // transport
  double lambda = 0.1;
  int p = 1;
  std::uint32_t iters = 100;
  double tol = 0.0;
  double m = 0.4;
  std::optional<double> clip;
  ot::CostNorm cost_norm = ot::CostNorm::median;
  bool pc_removal = false;
  Metric metric = Metric::euclidean;
  bool hyponym_source = true;
  /// SIF weight a/(a + p(w)) for barycenter inputs; 0 keeps uniform weights.
  double sif_a = 0.0;

  // runtime
  unsigned threads = 0;
  int precision = 6;

  /// Keys in serialization order.
  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k{
        "corpus", "vocab", "cooc", "sppmi", "clusters", "clustered", "histograms", "embeddings",
        "context_embeddings", "entailment_vectors", "report", "min_count", "window", "distance_weighting",
        "alpha", "shift", "beta", "K", "seed", "kmeans_iters", "lambda", "p", "iters", "tol", "m", "clip",
        "cost_norm", "pc_removal", "metric", "hyponym_source", "sif_a", "threads", "precision"};
    return k;
  }

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  void validate() const {
    if (min_count < 1) throw BadParameter("min_count must be >= 1");
    if (window < 1) throw BadParameter("window must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw BadParameter("alpha must lie in [0,1]");
    if (!(shift >= 1.0)) throw BadParameter("shift must be >= 1");
    if (!(beta >= 0.0 && beta <= 1.0)) throw BadParameter("beta must lie in [0,1]");
    if (K < 1) throw BadParameter("K must be >= 1");
    if (kmeans_iters < 1) throw BadParameter("kmeans_iters must be >= 1");
    if (!(lambda > 0.0)) throw BadParameter("lambda must be > 0");
    if (p != 1 && p != 2) throw BadParameter("p must be 1 or 2");
    if (iters < 1) throw BadParameter("iters must be >= 1");
    if (!(tol >= 0.0)) throw BadParameter("tol must be >= 0");
    if (!(m >= 0.0 && m <= 1.0)) throw BadParameter("m must lie in [0,1]");
    if (clip && !(*clip > 0.0)) throw BadParameter("clip must be > 0");
    if (!(sif_a >= 0.0)) throw BadParameter("sif_a must be >= 0");
    if (precision < 1 || precision > 17) throw BadParameter("precision must lie in [1,17]");
  }

  std::string serialize() const {
    std::ostringstream os;
    for (const auto& k : keys()) os << k << '=' << get(k) << '\n';
    return os.str();
  }

  static RunConfig parse(std::string_view text) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw BadParameter("config line " + std::to_string(lineno) + ": expected key=value");
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write config '" + path.string() + "'");
    out << serialize();
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw BadParameter("bad value '" + v + "' for " + key);
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || (errno == ERANGE && std::isinf(d))) {
    throw BadParameter("bad value '" + v + "' for " + key);
  }
  return d;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw BadParameter("bad boolean '" + v + "' for " + key);
}

/// Shortest text that parses back to the same double.
inline std::string format_real(double d) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, d);
    if (std::strtod(buf, nullptr) == d) break;
  }
  return buf;
}

inline std::string_view cost_norm_name(ot::CostNorm n) {
  switch (n) {
    case ot::CostNorm::none: return "none";
    case ot::CostNorm::median: return "median";
    case ot::CostNorm::log: return "log";
  }
  return "none";
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "corpus") corpus = v;
  else if (key == "vocab") vocab = v;
  else if (key == "cooc") cooc = v;
  else if (key == "sppmi") sppmi = v;
  else if (key == "clusters") clusters = v;
  else if (key == "clustered") clustered = v;
  else if (key == "histograms") histograms = v;
  else if (key == "embeddings") embeddings = v;
  else if (key == "context_embeddings") context_embeddings = v;
  else if (key == "entailment_vectors") entailment_vectors = v;
  else if (key == "report") report = v;
  else if (key == "min_count") min_count = parse_number<std::uint64_t>(key, v);
  else if (key == "window") window = parse_number<std::uint32_t>(key, v);
  else if (key == "distance_weighting") distance_weighting = parse_bool(key, v);
  else if (key == "alpha") alpha = parse_real(key, v);
  else if (key == "shift") shift = parse_real(key, v);
  else if (key == "beta") beta = parse_real(key, v);
  else if (key == "K") K = parse_number<std::uint32_t>(key, v);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "kmeans_iters") kmeans_iters = parse_number<std::uint32_t>(key, v);
  else if (key == "lambda") lambda = parse_real(key, v);
  else if (key == "p") p = parse_number<int>(key, v);
  else if (key == "iters") iters = parse_number<std::uint32_t>(key, v);
  else if (key == "tol") tol = parse_real(key, v);
  else if (key == "m") m = parse_real(key, v);
  else if (key == "clip") clip = (v.empty() || v == "none") ? std::nullopt : std::optional<double>(parse_real(key, v));
  else if (key == "cost_norm") {
    if (v == "none") cost_norm = ot::CostNorm::none;
    else if (v == "median") cost_norm = ot::CostNorm::median;
    else if (v == "log") cost_norm = ot::CostNorm::log;
    else throw BadParameter("cost_norm must be none, median or log");
  }
  else if (key == "pc_removal") pc_removal = parse_bool(key, v);
  else if (key == "metric") metric = parse_metric(v);
  else if (key == "hyponym_source") hyponym_source = parse_bool(key, v);
  else if (key == "sif_a") sif_a = parse_real(key, v);
  else if (key == "threads") threads = parse_number<unsigned>(key, v);
  else if (key == "precision") precision = parse_number<int>(key, v);
  else throw BadParameter("unknown config key '" + key + "'");
}

inline std::string RunConfig::get(const std::string& key) const {
  using namespace detail;
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  if (key == "corpus") return corpus;
  if (key == "vocab") return vocab;
  if (key == "cooc") return cooc;
  if (key == "sppmi") return sppmi;
  if (key == "clusters") return clusters;
  if (key == "clustered") return clustered;
  if (key == "histograms") return histograms;
  if (key == "embeddings") return embeddings;
  if (key == "context_embeddings") return context_embeddings;
  if (key == "entailment_vectors") return entailment_vectors;
  if (key == "report") return report;
  if (key == "min_count") return std::to_string(min_count);
  if (key == "window") return std::to_string(window);
  if (key == "distance_weighting") return b(distance_weighting);
  if (key == "alpha") return format_real(alpha);
  if (key == "shift") return format_real(shift);
  if (key == "beta") return format_real(beta);
  if (key == "K") return std::to_string(K);
  if (key == "seed") return std::to_string(seed);
  if (key == "kmeans_iters") return std::to_string(kmeans_iters);
  if (key == "lambda") return format_real(lambda);
  if (key == "p") return std::to_string(p);
  if (key == "iters") return std::to_string(iters);
  if (key == "tol") return format_real(tol);
  if (key == "m") return format_real(m);
  if (key == "clip") return clip ? format_real(*clip) : std::string("none");
  if (key == "cost_norm") return std::string(cost_norm_name(cost_norm));
  if (key == "pc_removal") return b(pc_removal);
  if (key == "metric") return std::string(to_string(metric));
  if (key == "hyponym_source") return b(hyponym_source);
  if (key == "sif_a") return format_real(sif_a);
  if (key == "threads") return std::to_string(threads);
  if (key == "precision") return std::to_string(precision);
  throw BadParameter("unknown config key '" + key + "'");
}

}  // namespace cmv

#endif  // CMV_CONFIG_HPP
