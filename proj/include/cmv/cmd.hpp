#ifndef CMV_CMD_HPP
#define CMV_CMD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cmv/error.hpp"
#include "cmv/estimates.hpp"
#include "cmv/linalg.hpp"
#include "cmv/ot.hpp"

namespace cmv {

/// Atom vectors: K centroids followed by one point estimate per word.
struct GroundSpace {
  RowMatrix atoms;
  std::uint32_t K = 0;
  Metric metric = Metric::euclidean;
  int p = 1;

  Eigen::Index atom_count() const noexcept { return atoms.rows(); }
};

inline GroundSpace make_ground_space(const RowMatrix& centroids, const RowMatrix& points, Metric metric, int p = 1) {
  if (centroids.rows() > 0 && points.rows() > 0 && centroids.cols() != points.cols()) {
    throw ShapeError("centroid and point-estimate dimensions differ");
  }
  if (p != 1 && p != 2) throw BadParameter("p must be 1 or 2");
  GroundSpace g;
  g.K = static_cast<std::uint32_t>(centroids.rows());
  g.metric = metric;
  g.p = p;
  g.atoms.resize(centroids.rows() + points.rows(), std::max(centroids.cols(), points.cols()));
  if (centroids.rows() > 0) g.atoms.topRows(centroids.rows()) = centroids;
  if (points.rows() > 0) g.atoms.bottomRows(points.rows()) = points;
  if (!g.atoms.allFinite()) throw BadInput("ground space has non-finite atom vectors");
  return g;
}

namespace detail {

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// sigma(-x) without overflow.
inline double sigmoid_neg(double x) noexcept {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

}  // namespace detail

/// Henderson entailment cost -sum_t sigma(-v_i[t]) * log sigma(-v_j[t]),
/// evaluated as sum_t sigma(-v_i[t]) * softplus(v_j[t]). Asymmetric, >= 0.
template <typename A, typename B>
double entailment_cost(const Eigen::MatrixBase<A>& vi, const Eigen::MatrixBase<B>& vj) {
  if (vi.size() != vj.size()) throw ShapeError("entailment vectors differ in dimension");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < vi.size(); ++t) acc += detail::sigmoid_neg(vi(t)) * detail::softplus(vj(t));
  return acc;
}

/// Raw ground costs between two atom lists (exponent applied, no
/// preprocessing). The entailment metric ignores p.
inline ot::CostMatrix ground_cost(const GroundSpace& space, std::span<const AtomId> source,
                                  std::span<const AtomId> target) {
  const auto n = static_cast<Eigen::Index>(source.size());
  const auto m = static_cast<Eigen::Index>(target.size());
  for (auto id : source) {
    if (id >= space.atom_count()) throw IndexError("atom id " + std::to_string(id) + " out of range");
  }
  for (auto id : target) {
    if (id >= space.atom_count()) throw IndexError("atom id " + std::to_string(id) + " out of range");
  }
  Eigen::MatrixXd M(n, m);
  if (space.metric == Metric::angular) {
    Vector inv_norm_t(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const double nrm = space.atoms.row(target[static_cast<std::size_t>(j)]).norm();
      if (nrm == 0.0) throw BadInput("angular metric on a zero vector (atom " + std::to_string(target[static_cast<std::size_t>(j)]) + ")");
      inv_norm_t(j) = 1.0 / nrm;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto x = space.atoms.row(source[static_cast<std::size_t>(i)]);
      const double nx = x.norm();
      if (nx == 0.0) throw BadInput("angular metric on a zero vector (atom " + std::to_string(source[static_cast<std::size_t>(i)]) + ")");
      for (Eigen::Index j = 0; j < m; ++j) {
        const double cosine = std::clamp(x.dot(space.atoms.row(target[static_cast<std::size_t>(j)])) / nx * inv_norm_t(j), -1.0, 1.0);
        const double angle = std::acos(cosine);
        M(i, j) = space.p == 2 ? angle * angle : angle;
      }
    }
  } else if (space.metric == Metric::euclidean) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto x = space.atoms.row(source[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < m; ++j) {
        const double d2 = (x - space.atoms.row(target[static_cast<std::size_t>(j)])).squaredNorm();
        M(i, j) = space.p == 2 ? d2 : std::sqrt(d2);
      }
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto x = space.atoms.row(source[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < m; ++j) M(i, j) = entailment_cost(x, space.atoms.row(target[static_cast<std::size_t>(j)]));
    }
  }
  return ot::CostMatrix(std::move(M), space.metric == Metric::entailment ? 1 : space.p);
}

// ---------------------------------------------------------------------------

struct CmdOptions {
  ot::SinkhornOptions sinkhorn{0.1, 100, 0.0};
  ot::CostPreprocessing preprocessing{ot::CostNorm::median, std::nullopt};
  /// Mass placed on each word's own point-estimate atom.
  double m = 0.0;
  /// Under the entailment metric, transport from the first word (hyponym
  /// candidate) to the second; false reverses the direction.
  bool hyponym_is_source = true;
  /// Optional per-word barycenter weights (indexed by word id); uniform when empty.
  std::vector<double> word_weights;
};

/// Sentence representation: the barycenter of its words' estimates.
struct SentenceEstimate {
  DistributionalEstimate estimate;
  std::vector<WordId> words;
};

struct Neighbor {
  WordId word;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

inline constexpr WordId kNoOwner = std::numeric_limits<WordId>::max();

/// Scores words and sentences by Context Mover's Distance over a fixed store
/// and ground space. Median normalization uses one scale computed over the
/// centroid-by-centroid cost matrix so distances are comparable across pairs.
class ContextMover {
 public:
  ContextMover(EstimateStore store, GroundSpace space, CmdOptions opt)
      : store_(std::move(store)), space_(std::move(space)), opt_(std::move(opt)) {
    if (store_.K() != space_.K) throw ShapeError("store and ground space disagree on K");
    if (static_cast<Eigen::Index>(store_.K() + store_.vocab_size()) > space_.atom_count()) {
      throw ShapeError("ground space lacks point-estimate atoms for the store");
    }
    if (!(opt_.m >= 0.0 && opt_.m <= 1.0)) throw BadParameter("mixing weight must lie in [0,1]");
    if (opt_.preprocessing.norm == ot::CostNorm::median) {
      std::vector<AtomId> centres(space_.K);
      for (std::uint32_t k = 0; k < space_.K; ++k) centres[k] = k;
      auto full = ground_cost(space_, centres, centres).costs;
      if (opt_.preprocessing.clip) full = full.cwiseMin(*opt_.preprocessing.clip);
      median_scale_ = full.size() > 0 ? ot::matrix_median(full) : 0.0;
      if (!(median_scale_ > 0.0)) throw DegenerateCost("median of the centroid cost matrix is zero");
    }
  }

  const EstimateStore& store() const noexcept { return store_; }
  const GroundSpace& space() const noexcept { return space_; }
  const CmdOptions& options() const noexcept { return opt_; }
  double median_scale() const noexcept { return median_scale_; }

  DistributionalEstimate estimate(WordId w) const { return store_.get(w, opt_.m); }

  /// Preprocessed cost between two atom lists.
  ot::CostMatrix cost(std::span<const AtomId> source, std::span<const AtomId> target) const {
    auto M = ground_cost(space_, source, target);
    if (opt_.preprocessing.clip) M.costs = M.costs.cwiseMin(*opt_.preprocessing.clip);
    switch (opt_.preprocessing.norm) {
      case ot::CostNorm::none: break;
      case ot::CostNorm::median: M.costs /= median_scale_; break;
      case ot::CostNorm::log: M.costs = M.costs.array().log1p().matrix(); break;
    }
    M.preprocessing = opt_.preprocessing;
    return M;
  }

  ot::TransportPlan transport(const DistributionalEstimate& source, const DistributionalEstimate& target) const {
    const auto M = cost(source.support, target.support);
    return ot::sinkhorn(as_histogram(source), as_histogram(target), M, opt_.sinkhorn);
  }

  /// Symmetric metrics solve each unordered pair in one canonical orientation.
  double distance(const DistributionalEstimate& a, const DistributionalEstimate& b) const {
    if (space_.metric != Metric::entailment && std::tie(b.support, b.weights) < std::tie(a.support, a.weights)) {
      return transport(b, a).cost;
    }
    return transport(a, b).cost;
  }

  double cmd(WordId w1, WordId w2) const {
    check_word(w1);
    check_word(w2);
    if (space_.metric == Metric::entailment && !opt_.hyponym_is_source) std::swap(w1, w2);
    return distance(estimate(w1), estimate(w2));
  }

  /// Entailment score: larger means `hyponym` is more likely entailed by `hypernym`.
  double hypernymy_score(WordId hyponym, WordId hypernym) const { return -cmd(hyponym, hypernym); }

  SentenceEstimate comb(std::span<const WordId> words, std::span<const double> eta = {}) const {
    if (words.empty()) throw EmptySentence("sentence has no in-vocabulary words");
    std::vector<DistributionalEstimate> ests;
    ests.reserve(words.size());
    std::vector<AtomId> support;
    for (auto w : words) {
      check_word(w);
      ests.push_back(estimate(w));
      support.insert(support.end(), ests.back().support.begin(), ests.back().support.end());
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());

    std::vector<ot::Histogram> hs;
    hs.reserve(ests.size());
    for (const auto& e : ests) hs.push_back(embed(e, support));

    std::vector<double> weights(eta.begin(), eta.end());
    if (weights.empty() && !opt_.word_weights.empty()) {
      double total = 0.0;
      for (auto w : words) {
        const double x = w < opt_.word_weights.size() ? opt_.word_weights[w] : 0.0;
        weights.push_back(x);
        total += x;
      }
      if (total > 0.0) {
        for (double& x : weights) x /= total;
      } else {
        weights.clear();
      }
    }
    if (weights.empty()) weights.assign(words.size(), 1.0 / static_cast<double>(words.size()));

    const auto M = cost(support, support);
    const auto bary = ot::barycenter(hs, weights, M, opt_.sinkhorn);

    SentenceEstimate out;
    out.words.assign(words.begin(), words.end());
    out.estimate.owner = kNoOwner;
    for (std::size_t i = 0; i < support.size(); ++i) {
      const double w = bary.weights(static_cast<Eigen::Index>(i));
      if (w > 0.0) {
        out.estimate.support.push_back(support[i]);
        out.estimate.weights.push_back(w);
      }
    }
    return out;
  }

  double sentence_cmd(std::span<const WordId> s1, std::span<const WordId> s2) const {
    return distance(comb(s1).estimate, comb(s2).estimate);
  }

  /// Candidates sorted by ascending distance from the query, ties by word id.
  std::vector<Neighbor> nearest_neighbors(const DistributionalEstimate& query, std::span<const WordId> candidates,
                                          std::size_t k) const {
    if (candidates.empty()) throw BadParameter("empty candidate set");
    if (k > candidates.size()) throw BadParameter("k exceeds the number of candidates");
    std::vector<Neighbor> all;
    all.reserve(candidates.size());
    for (auto c : candidates) {
      check_word(c);
      all.push_back({c, distance(query, estimate(c))});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.word < b.word;
    });
    all.resize(k);
    return all;
  }

  std::vector<Neighbor> nearest_neighbors(WordId query, std::span<const WordId> candidates, std::size_t k) const {
    check_word(query);
    return nearest_neighbors(estimate(query), candidates, k);
  }

  static ot::Histogram as_histogram(const DistributionalEstimate& e) {
    ot::Histogram h(Vector(static_cast<Eigen::Index>(e.size())));
    for (std::size_t i = 0; i < e.size(); ++i) h.weights(static_cast<Eigen::Index>(i)) = e.weights[i];
    return h;
  }

 private:
  void check_word(WordId w) const {
    if (w >= store_.vocab_size()) throw OovError("word id " + std::to_string(w) + " is out of vocabulary");
  }

  static ot::Histogram embed(const DistributionalEstimate& e, const std::vector<AtomId>& support) {
    ot::Histogram h(Vector::Zero(static_cast<Eigen::Index>(support.size())));
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto it = std::lower_bound(support.begin(), support.end(), e.support[i]);
      h.weights(static_cast<Eigen::Index>(it - support.begin())) += e.weights[i];
    }
    return h;
  }

  EstimateStore store_;
  GroundSpace space_;
  CmdOptions opt_;
  double median_scale_ = 1.0;
};

}  // namespace cmv

#endif  // CMV_CMD_HPP
