#ifndef CMV_CLUSTERING_HPP
#define CMV_CLUSTERING_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "cmv/binary_io.hpp"
#include "cmv/embeddings.hpp"
#include "cmv/error.hpp"
#include "cmv/linalg.hpp"
#include "cmv/parallel.hpp"
#include "cmv/ppmi.hpp"

namespace cmv {

using ClusterId = std::uint32_t;

/// K representative contexts: centroids plus a context -> cluster map.
struct ContextClustering {
  RowMatrix centroids;                // K x d
  std::vector<ClusterId> assignment;  // one entry per context id
  Metric metric = Metric::euclidean;
  /// k-means objective after every assignment step.
  std::vector<double> inertia_history;

  std::uint32_t K() const noexcept { return static_cast<std::uint32_t>(centroids.rows()); }

  double inertia() const noexcept {
    return inertia_history.empty() ? 0.0 : inertia_history.back();
  }
};

struct KMeansOptions {
  std::uint32_t K = 300;
  std::uint64_t seed = 0;
  std::uint32_t max_iters = 100;
  /// With Metric::angular the rows are scaled to unit norm before clustering.
  Metric metric = Metric::euclidean;
};

namespace detail {

inline RowMatrix clustering_points(const EmbeddingTable& emb, Metric metric) {
  RowMatrix pts = emb.vectors;
  if (metric == Metric::angular) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const double n = pts.row(i).norm();
      if (n == 0.0) throw BadInput("zero embedding row " + std::to_string(i) + " under angular metric");
      pts.row(i) /= n;
    }
  }
  return pts;
}

inline RowMatrix kmeanspp_seed(const RowMatrix& pts, std::uint32_t K, std::mt19937_64& rng) {
  const Eigen::Index n = pts.rows();
  RowMatrix centers(K, pts.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  auto take = [&](Eigen::Index idx, std::uint32_t k) {
    centers.row(k) = pts.row(idx);
    chosen[static_cast<std::size_t>(idx)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (pts.row(i) - pts.row(idx)).squaredNorm());
    }
  };

  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  take(first(rng), 0);
  for (std::uint32_t k = 1; k < K; ++k) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double r = u(rng);
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = d2[static_cast<std::size_t>(i)];
        if (w <= 0.0) continue;
        cum += w;
        pick = i;
        if (cum > r) break;
      }
    }
    if (pick < 0) {
      // Every point coincides with a centre already: take the lowest unused index.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    take(pick, k);
  }
  return centers;
}

}  // namespace detail

/// Lloyd iterations from a seeded k-means++ start. Nearest-centroid ties go
/// to the lowest cluster index; empty clusters are reseeded with the point
/// farthest from its centroid.
inline ContextClustering kmeans(const EmbeddingTable& emb, const KMeansOptions& opt) {
  emb.validate();
  const Eigen::Index n = emb.rows();
  if (opt.K == 0) throw BadParameter("K must be positive");
  if (opt.K > n) throw BadParameter("K=" + std::to_string(opt.K) + " exceeds number of points " + std::to_string(n));
  if (opt.max_iters == 0) throw BadParameter("max_iters must be positive");

  const RowMatrix pts = detail::clustering_points(emb, opt.metric);
  std::mt19937_64 rng(opt.seed);

  ContextClustering out;
  out.metric = opt.metric;
  out.centroids = detail::kmeanspp_seed(pts, opt.K, rng);
  out.assignment.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  const Eigen::Index K = opt.K;

  for (std::uint32_t iter = 0; iter < opt.max_iters; ++iter) {
    std::vector<char> changed_chunk((static_cast<std::size_t>(n) + 1023) / 1024, 0);
    parallel_chunks(static_cast<std::size_t>(n), 1024, [&](std::size_t begin, std::size_t end) {
      bool changed = false;
      for (std::size_t i = begin; i < end; ++i) {
        const auto row = pts.row(static_cast<Eigen::Index>(i));
        ClusterId best = 0;
        double best_d = (row - out.centroids.row(0)).squaredNorm();
        for (Eigen::Index k = 1; k < K; ++k) {
          const double d = (row - out.centroids.row(k)).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = static_cast<ClusterId>(k);
          }
        }
        if (iter == 0 || out.assignment[i] != best) changed = true;
        out.assignment[i] = best;
        dist[i] = best_d;
      }
      changed_chunk[begin / 1024] = changed ? 1 : 0;
    });
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    out.inertia_history.push_back(inertia);

    bool changed = false;
    for (char c : changed_chunk) changed = changed || c != 0;
    if (!changed) break;

    RowMatrix sums = RowMatrix::Zero(K, pts.cols());
    std::vector<std::size_t> sizes(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = out.assignment[static_cast<std::size_t>(i)];
      sums.row(k) += pts.row(i);
      ++sizes[k];
    }
    std::vector<bool> used_for_reseed(static_cast<std::size_t>(n), false);
    for (Eigen::Index k = 0; k < K; ++k) {
      if (sizes[static_cast<std::size_t>(k)] > 0) {
        out.centroids.row(k) = sums.row(k) / static_cast<double>(sizes[static_cast<std::size_t>(k)]);
        continue;
      }
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!used_for_reseed[static_cast<std::size_t>(i)] && dist[static_cast<std::size_t>(i)] > far_d) {
          far_d = dist[static_cast<std::size_t>(i)];
          far = i;
        }
      }
      used_for_reseed[static_cast<std::size_t>(far)] = true;
      out.centroids.row(k) = pts.row(far);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Word x cluster SPPMI mass.
struct ClusteredSppmi {
  RowMatrix table;  // V x K
  /// Column-normalization exponent applied so far (0 = none).
  double beta = 0.0;
};

/// table[w][k] = sum over contexts c in cluster k of SPPMI(w, c).
inline ClusteredSppmi aggregate_sppmi(const SppmiMatrix& sppmi, const ContextClustering& clustering) {
  ClusteredSppmi out;
  out.table = RowMatrix::Zero(sppmi.vocab_size, clustering.K());
  for (const auto& e : sppmi.entries) {
    if (e.context >= clustering.assignment.size()) {
      throw BadClustering("context id " + std::to_string(e.context) + " has no cluster assignment");
    }
    const auto k = clustering.assignment[e.context];
    if (k >= clustering.K()) throw BadClustering("assignment refers to cluster " + std::to_string(k));
    out.table(e.word, k) += e.weight;
  }
  return out;
}

/// entry(w,k) / (sum_w entry(w,k))^beta; zero columns stay zero.
inline ClusteredSppmi column_normalize(const ClusteredSppmi& in, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw BadParameter("beta must lie in [0,1]");
  ClusteredSppmi out = in;
  out.beta = beta;
  if (beta == 0.0) return out;
  for (Eigen::Index k = 0; k < out.table.cols(); ++k) {
    const double mass = out.table.col(k).sum();
    if (mass > 0.0) out.table.col(k) /= std::pow(mass, beta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::string_view kClusteringMagic = "CMVCLUS1";
inline constexpr std::string_view kClusteredMagic = "CMVCSPM1";

inline std::string encode_clustering(const ContextClustering& c) {
  io::ByteWriter w;
  w.magic(kClusteringMagic);
  w.u32(c.K());
  w.u32(static_cast<std::uint32_t>(c.centroids.cols()));
  for (Eigen::Index k = 0; k < c.centroids.rows(); ++k) {
    for (Eigen::Index j = 0; j < c.centroids.cols(); ++j) w.f32(static_cast<float>(c.centroids(k, j)));
  }
  for (auto a : c.assignment) w.u32(a);
  return w.bytes();
}

inline ContextClustering decode_clustering(io::ByteReader r) {
  r.expect_magic(kClusteringMagic);
  const std::uint32_t K = r.u32();
  const std::uint32_t d = r.u32();
  if (static_cast<std::uint64_t>(K) * d * 4 > r.remaining()) throw FormatError("truncated file '" + r.source() + "'");
  ContextClustering c;
  c.centroids.resize(K, d);
  for (std::uint32_t k = 0; k < K; ++k) {
    for (std::uint32_t j = 0; j < d; ++j) c.centroids(k, j) = r.f32();
  }
  if (r.remaining() % 4 != 0) throw FormatError("truncated assignment block in '" + r.source() + "'");
  const std::size_t V = r.remaining() / 4;
  c.assignment.resize(V);
  for (std::size_t i = 0; i < V; ++i) {
    c.assignment[i] = r.u32();
    if (c.assignment[i] >= K) throw FormatError("assignment out of range in '" + r.source() + "'");
  }
  return c;
}

inline void save_clustering(const ContextClustering& c, const std::filesystem::path& path) {
  io::write_file(path, encode_clustering(c));
}

inline ContextClustering load_clustering(const std::filesystem::path& path) {
  return decode_clustering(io::open_reader(path));
}

inline std::string encode_clustered(const ClusteredSppmi& c) {
  io::ByteWriter w;
  w.magic(kClusteredMagic);
  w.u32(static_cast<std::uint32_t>(c.table.rows()));
  w.u32(static_cast<std::uint32_t>(c.table.cols()));
  w.f64(c.beta);
  for (Eigen::Index i = 0; i < c.table.rows(); ++i) {
    for (Eigen::Index k = 0; k < c.table.cols(); ++k) w.f32(static_cast<float>(c.table(i, k)));
  }
  return w.bytes();
}

inline ClusteredSppmi decode_clustered(io::ByteReader r) {
  r.expect_magic(kClusteredMagic);
  const std::uint32_t V = r.u32();
  const std::uint32_t K = r.u32();
  ClusteredSppmi c;
  c.beta = r.f64();
  if (static_cast<std::uint64_t>(V) * K * 4 != r.remaining()) throw FormatError("truncated file '" + r.source() + "'");
  c.table.resize(V, K);
  for (std::uint32_t i = 0; i < V; ++i) {
    for (std::uint32_t k = 0; k < K; ++k) c.table(i, k) = r.f32();
  }
  return c;
}

inline void save_clustered(const ClusteredSppmi& c, const std::filesystem::path& path) {
  io::write_file(path, encode_clustered(c));
}

inline ClusteredSppmi load_clustered(const std::filesystem::path& path) {
  return decode_clustered(io::open_reader(path));
}

}  // namespace cmv

#endif  // CMV_CLUSTERING_HPP
