#ifndef CMV_ESTIMATES_HPP
#define CMV_ESTIMATES_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "cmv/binary_io.hpp"
#include "cmv/clustering.hpp"
#include "cmv/error.hpp"
#include "cmv/linalg.hpp"

namespace cmv {

/// Atoms 0..K-1 are cluster centroids; atom K+w is word w's own point estimate.
using AtomId = std::uint32_t;

inline AtomId own_atom(WordId w, std::uint32_t K) noexcept { return K + w; }

/// Histogram over ground-space atoms; weights lie on the simplex.
struct DistributionalEstimate {
  WordId owner = 0;
  std::vector<AtomId> support;
  std::vector<double> weights;

  std::size_t size() const noexcept { return support.size(); }

  double mass() const noexcept {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  friend bool operator==(const DistributionalEstimate&, const DistributionalEstimate&) = default;
};

/// Normalizes the w-th row of the clustered table over its nonzero bins.
inline DistributionalEstimate build_estimate(WordId w, const ClusteredSppmi& clustered) {
  if (w >= clustered.table.rows()) throw IndexError("word id " + std::to_string(w) + " out of range");
  const auto row = clustered.table.row(w);
  double total = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) total += row(k);
  if (!(total > 0.0)) throw ZeroMassWord("word " + std::to_string(w) + " has no SPPMI mass");
  DistributionalEstimate est;
  est.owner = w;
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    if (row(k) > 0.0) {
      est.support.push_back(static_cast<AtomId>(k));
      est.weights.push_back(row(k) / total);
    }
  }
  return est;
}

/// Unit mass on the word's own point-estimate atom.
inline DistributionalEstimate dirac_estimate(WordId w, std::uint32_t K) {
  return DistributionalEstimate{w, {own_atom(w, K)}, {1.0}};
}

/// Adds the own atom with weight m and rescales the others by (1-m).
inline DistributionalEstimate mix_estimate(const DistributionalEstimate& est, double m, std::uint32_t K) {
  if (!(m >= 0.0 && m <= 1.0)) throw BadParameter("mixing weight must lie in [0,1]");
  if (m == 0.0) return est;
  const AtomId own = own_atom(est.owner, K);
  DistributionalEstimate out;
  out.owner = est.owner;
  if (m == 1.0) {
    out.support = {own};
    out.weights = {1.0};
    return out;
  }
  bool merged = false;
  for (std::size_t i = 0; i < est.size(); ++i) {
    out.support.push_back(est.support[i]);
    double w = (1.0 - m) * est.weights[i];
    if (est.support[i] == own) {
      w += m;
      merged = true;
    }
    out.weights.push_back(w);
  }
  if (!merged) {
    out.support.push_back(own);
    out.weights.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Word point embeddings, optionally with the removed principal component.
struct PointEstimateTable {
  RowMatrix vectors;
  std::optional<Vector> pc;
};

struct PowerIterationOptions {
  std::uint64_t seed = 0;
  double eigen_tol = 1e-9;
  std::uint32_t max_iters = 100000;
};

/// Top eigenvector of the (uncentred) second-moment matrix X^T X.
inline Vector first_principal_component(const RowMatrix& X, const PowerIterationOptions& opt = {}) {
  const Eigen::MatrixXd gram = X.transpose() * X;
  if (gram.cwiseAbs().maxCoeff() == 0.0) throw DegenerateInput("point estimates have rank 0");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Vector v(gram.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  v.normalize();

  double eig = v.dot(gram * v);
  for (std::uint32_t it = 0; it < opt.max_iters; ++it) {
    Vector next = gram * v;
    const double norm = next.norm();
    if (norm == 0.0) {
      // Start vector fell in the null space; restart along a random axis.
      v = Vector::Unit(v.size(), static_cast<Eigen::Index>(it % static_cast<std::uint32_t>(v.size())));
      continue;
    }
    next /= norm;
    const double next_eig = next.dot(gram * next);
    const double step = (next - v).norm();
    v = next;
    const bool eig_done = std::abs(next_eig - eig) <= opt.eigen_tol * std::abs(next_eig);
    eig = next_eig;
    // The eigenvalue converges at twice the rate of the vector, so the
    // direction is also required to have settled.
    if (eig_done && step <= 1e-12) break;
  }
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
  return v / v.norm();
}

/// v <- v - (u.v) u for every row, where u is the first principal component.
inline PointEstimateTable remove_pc(const PointEstimateTable& points, const PowerIterationOptions& opt = {}) {
  if (points.vectors.rows() < 1) throw DegenerateInput("empty point table");
  PointEstimateTable out;
  const Vector u = first_principal_component(points.vectors, opt);
  const Vector proj = points.vectors * u;
  out.vectors = points.vectors - proj * u.transpose();
  out.pc = u;
  return out;
}

// ---------------------------------------------------------------------------

/// Read-only per-word estimates over K centroid atoms. Words without SPPMI
/// mass hold a Dirac on their own atom.
class EstimateStore {
 public:
  EstimateStore() = default;
  EstimateStore(std::uint32_t K, std::vector<DistributionalEstimate> estimates)
      : K_(K), estimates_(std::move(estimates)) {
    for (std::size_t w = 0; w < estimates_.size(); ++w) {
      if (estimates_[w].owner != w) throw FormatError("estimate owner does not match its index");
    }
  }

  std::uint32_t K() const noexcept { return K_; }
  std::size_t vocab_size() const noexcept { return estimates_.size(); }

  const DistributionalEstimate& base(WordId w) const {
    if (w >= estimates_.size()) throw OovError("word id " + std::to_string(w) + " has no estimate");
    return estimates_[w];
  }

  DistributionalEstimate get(WordId w, double m = 0.0) const { return mix_estimate(base(w), m, K_); }

  const std::vector<DistributionalEstimate>& all() const noexcept { return estimates_; }

  friend bool operator==(const EstimateStore&, const EstimateStore&) = default;

 private:
  std::uint32_t K_ = 0;
  std::vector<DistributionalEstimate> estimates_;
};

inline EstimateStore build_store(const ClusteredSppmi& clustered) {
  const auto K = static_cast<std::uint32_t>(clustered.table.cols());
  std::vector<DistributionalEstimate> ests;
  ests.reserve(static_cast<std::size_t>(clustered.table.rows()));
  for (Eigen::Index w = 0; w < clustered.table.rows(); ++w) {
    try {
      ests.push_back(build_estimate(static_cast<WordId>(w), clustered));
    } catch (const ZeroMassWord&) {
      ests.push_back(dirac_estimate(static_cast<WordId>(w), K));
    }
  }
  return EstimateStore(K, std::move(ests));
}

inline constexpr std::string_view kHistogramMagic = "CMVHIST1";

inline std::string encode_store(const EstimateStore& store) {
  io::ByteWriter w;
  w.magic(kHistogramMagic);
  w.u32(static_cast<std::uint32_t>(store.vocab_size()));
  w.u32(store.K());
  for (const auto& e : store.all()) {
    w.u32(e.owner);
    w.u32(static_cast<std::uint32_t>(e.size()));
    for (std::size_t i = 0; i < e.size(); ++i) {
      w.u32(e.support[i]);
      w.f32(static_cast<float>(e.weights[i]));
    }
  }
  return w.bytes();
}

/// Weights are stored as f32 and renormalized to unit mass on load.
inline EstimateStore decode_store(io::ByteReader r) {
  r.expect_magic(kHistogramMagic);
  const std::uint32_t V = r.u32();
  const std::uint32_t K = r.u32();
  std::vector<DistributionalEstimate> ests;
  ests.reserve(V);
  for (std::uint32_t i = 0; i < V; ++i) {
    DistributionalEstimate e;
    e.owner = r.u32();
    const std::uint32_t nnz = r.u32();
    if (static_cast<std::uint64_t>(nnz) * 8 > r.remaining()) throw FormatError("truncated file '" + r.source() + "'");
    double total = 0.0;
    for (std::uint32_t j = 0; j < nnz; ++j) {
      const AtomId atom = r.u32();
      const double w = r.f32();
      if (atom >= K + V) throw FormatError("atom id out of range in '" + r.source() + "'");
      if (!(w >= 0.0)) throw FormatError("negative weight in '" + r.source() + "'");
      e.support.push_back(atom);
      e.weights.push_back(w);
      total += w;
    }
    if (!(total > 0.0)) throw FormatError("histogram with zero mass in '" + r.source() + "'");
    for (double& w : e.weights) w /= total;
    ests.push_back(std::move(e));
  }
  r.expect_end();
  return EstimateStore(K, std::move(ests));
}

inline void save_store(const EstimateStore& store, const std::filesystem::path& path) {
  io::write_file(path, encode_store(store));
}

inline EstimateStore load_store(const std::filesystem::path& path) { return decode_store(io::open_reader(path)); }

}  // namespace cmv

#endif  // CMV_ESTIMATES_HPP
