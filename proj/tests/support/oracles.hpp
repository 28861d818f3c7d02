#ifndef CMV_TESTS_ORACLES_HPP
#define CMV_TESTS_ORACLES_HPP

// Independent reference implementations used only by the test suites.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cmv::oracle {

// ---------------------------------------------------------------------------
// Dense two-phase simplex with Bland's rule:  min c.x  s.t.  A x = b, x >= 0.

struct LpResult {
  double objective = 0.0;
  Eigen::VectorXd x;
};

namespace detail {

inline void pivot(Eigen::MatrixXd& t, std::vector<int>& basis, Eigen::Index row, Eigen::Index col) {
  t.row(row) /= t(row, col);
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    if (r != row && t(r, col) != 0.0) t.row(r) -= t(r, col) * t.row(row);
  }
  basis[static_cast<std::size_t>(row)] = static_cast<int>(col);
}

/// Objective row is the last row; only columns < allowed may enter.
inline void run_simplex(Eigen::MatrixXd& t, std::vector<int>& basis, Eigen::Index allowed) {
  const double eps = 1e-12;
  const Eigen::Index obj = t.rows() - 1, rhs = t.cols() - 1;
  for (int guard = 0; guard < 100000; ++guard) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < allowed; ++j) {
      if (t(obj, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < obj; ++r) {
      if (t(r, enter) > eps) {
        const double ratio = t(r, rhs) / t(r, enter);
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0) throw std::runtime_error("LP unbounded");
    pivot(t, basis, leave, enter);
  }
  throw std::runtime_error("simplex did not terminate");
}

}  // namespace detail

inline LpResult lp_minimize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
  const Eigen::Index r = A.rows(), n = A.cols();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(r + 1, n + r + 1);
  std::vector<int> basis(static_cast<std::size_t>(r));
  for (Eigen::Index i = 0; i < r; ++i) {
    const double sgn = b(i) < 0.0 ? -1.0 : 1.0;
    t.row(i).head(n) = sgn * A.row(i);
    t(i, n + i) = 1.0;
    t(i, n + r) = sgn * b(i);
    basis[static_cast<std::size_t>(i)] = static_cast<int>(n + i);
  }
  for (Eigen::Index i = 0; i < r; ++i) {
    t.row(r).head(n) -= t.row(i).head(n);
    t(r, n + r) -= t(i, n + r);
  }
  detail::run_simplex(t, basis, n + r);
  if (-t(r, n + r) > 1e-9) throw std::runtime_error("LP infeasible");

  for (Eigen::Index i = 0; i < r; ++i) {
    if (basis[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(t(i, j)) > 1e-9) {
        detail::pivot(t, basis, i, j);
        break;
      }
    }
  }

  t.row(r).setZero();
  t.row(r).head(n) = c.transpose();
  for (Eigen::Index i = 0; i < r; ++i) {
    const int bv = basis[static_cast<std::size_t>(i)];
    if (bv < n) t.row(r) -= c(bv) * t.row(i);
  }
  detail::run_simplex(t, basis, n);

  LpResult res;
  res.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < r; ++i) {
    const int bv = basis[static_cast<std::size_t>(i)];
    if (bv < n) res.x(bv) = t(i, n + r);
  }
  res.objective = c.dot(res.x);
  return res;
}

/// Exact OT cost through the generic LP.
inline double transport_lp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& M) {
  const Eigen::Index n = a.size(), m = b.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n * m);
  Eigen::VectorXd rhs(n + m), c(n * m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      A(i, i * m + j) = 1.0;
      A(n + j, i * m + j) = 1.0;
      c(i * m + j) = M(i, j);
    }
  }
  rhs << a, b;
  return lp_minimize(A, rhs, c).objective;
}

// ---------------------------------------------------------------------------
// Corpus statistics

using Lines = std::vector<std::vector<std::string>>;

/// Plain double loop over positions; OOV tokens occupy positions but add nothing.
inline std::map<std::pair<std::uint32_t, std::uint32_t>, double> naive_cooc(
    const Lines& lines, const std::map<std::string, std::uint32_t>& ids, std::size_t window, bool weighted) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> out;
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      for (std::size_t j = 0; j < line.size(); ++j) {
        if (i == j) continue;
        const std::size_t d = i > j ? i - j : j - i;
        if (d > window) continue;
        auto a = ids.find(line[i]);
        auto b = ids.find(line[j]);
        if (a == ids.end() || b == ids.end()) continue;
        out[{a->second, b->second}] += weighted ? 1.0 / static_cast<double>(d) : 1.0;
      }
    }
  }
  return out;
}

/// Dense SPPMI straight from the definition.
inline Eigen::MatrixXd dense_sppmi(const Eigen::MatrixXd& C, double alpha, double shift) {
  const Eigen::VectorXd nw = C.rowwise().sum();
  const Eigen::VectorXd nc = C.colwise().sum().transpose();
  double z = 0.0;
  for (Eigen::Index c = 0; c < nc.size(); ++c) {
    if (nc(c) > 0.0) z += std::pow(nc(c), alpha);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(C.rows(), C.cols());
  for (Eigen::Index w = 0; w < C.rows(); ++w) {
    for (Eigen::Index c = 0; c < C.cols(); ++c) {
      if (C(w, c) <= 0.0) continue;
      const double v = std::log((C(w, c) * z) / (nw(w) * std::pow(nc(c), alpha) * shift));
      out(w, c) = v > 1e-15 ? v : 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-means

struct LloydResult {
  Eigen::MatrixXd centroids;
  std::vector<int> assignment;
  double inertia = 0.0;
};

inline LloydResult lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd C, int max_iters = 1000) {
  LloydResult r;
  r.assignment.assign(static_cast<std::size_t>(X.rows()), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    r.inertia = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      int best = 0;
      double bd = (X.row(i) - C.row(0)).squaredNorm();
      for (Eigen::Index k = 1; k < C.rows(); ++k) {
        const double d = (X.row(i) - C.row(k)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = static_cast<int>(k);
        }
      }
      changed = changed || r.assignment[static_cast<std::size_t>(i)] != best;
      r.assignment[static_cast<std::size_t>(i)] = best;
      r.inertia += bd;
    }
    if (!changed) break;
    for (Eigen::Index k = 0; k < C.rows(); ++k) {
      Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(X.cols());
      int cnt = 0;
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (r.assignment[static_cast<std::size_t>(i)] == k) {
          s += X.row(i);
          ++cnt;
        }
      }
      if (cnt > 0) C.row(k) = s / cnt;
    }
  }
  r.centroids = C;
  return r;
}

/// Best Lloyd optimum over every K-subset of points as initial centroids.
inline double exhaustive_kmeans_inertia(const Eigen::MatrixXd& X, int K) {
  const int n = static_cast<int>(X.rows());
  std::vector<int> pick(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) pick[static_cast<std::size_t>(k)] = k;
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    Eigen::MatrixXd C(K, X.cols());
    for (int k = 0; k < K; ++k) C.row(k) = X.row(pick[static_cast<std::size_t>(k)]);
    best = std::min(best, lloyd(X, C).inertia);
    int i = K - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - K + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < K; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Lines drawn from two disjoint word sets ("topics"); each line stays in one topic.
inline Lines planted_corpus(std::size_t words_per_topic, std::size_t total_tokens, std::size_t line_len,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, words_per_topic - 1);
  Lines lines;
  std::size_t tokens = 0;
  std::size_t topic = 0;
  while (tokens < total_tokens) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < line_len; ++i) line.push_back((topic == 0 ? "a" : "b") + std::to_string(pick(rng)));
    tokens += line.size();
    lines.push_back(std::move(line));
    topic ^= 1U;
  }
  return lines;
}

/// Rows of U * sqrt(S) from a truncated SVD of a dense positive-PMI matrix.
inline Eigen::MatrixXd svd_embeddings(const Eigen::MatrixXd& counts, Eigen::Index dim) {
  const Eigen::VectorXd nw = counts.rowwise().sum();
  const Eigen::VectorXd nc = counts.colwise().sum().transpose();
  const double total = counts.sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(counts.rows(), counts.cols());
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (counts(i, j) > 0.0) ppmi(i, j) = std::max(0.0, std::log(counts(i, j) * total / (nw(i) * nc(j))));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ppmi, Eigen::ComputeThinU);
  const Eigen::Index d = std::min(dim, svd.singularValues().size());
  Eigen::MatrixXd out = svd.matrixU().leftCols(d) * svd.singularValues().head(d).cwiseSqrt().asDiagonal();
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index arg = 0;
    out.col(j).cwiseAbs().maxCoeff(&arg);
    if (out(arg, j) < 0.0) out.col(j) *= -1.0;
  }
  return out;
}

inline Eigen::VectorXd random_histogram(std::mt19937_64& rng, Eigen::Index n, double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h(i) = (u(rng) < zero_prob) ? 0.0 : u(rng) + 1e-3;
  if (h.sum() == 0.0) h(0) = 1.0;
  return h / h.sum();
}

}  // namespace cmv::oracle

#endif  // CMV_TESTS_ORACLES_HPP
