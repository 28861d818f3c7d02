#ifndef CMV_OT_HPP
#define CMV_OT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmv/error.hpp"
#include "cmv/linalg.hpp"

namespace cmv::ot {

/// Probability vector over a fixed support.
struct Histogram {
  Vector weights;

  Histogram() = default;
  explicit Histogram(Vector w) : weights(std::move(w)) {}
  Histogram(std::initializer_list<double> w) : weights(static_cast<Eigen::Index>(w.size())) {
    Eigen::Index i = 0;
    for (double x : w) weights(i++) = x;
  }

  Eigen::Index size() const noexcept { return weights.size(); }
};

inline constexpr double kSimplexTol = 1e-9;

inline void validate_histogram(const Histogram& h, const char* what) {
  if (h.size() == 0) throw BadInput(std::string(what) + " histogram is empty");
  if (!h.weights.allFinite() || h.weights.minCoeff() < 0.0) {
    throw BadInput(std::string(what) + " histogram has negative or non-finite weights");
  }
  if (std::abs(h.weights.sum() - 1.0) > kSimplexTol) {
    throw BadInput(std::string(what) + " histogram does not sum to 1");
  }
}

enum class CostNorm { none, median, log };

struct CostPreprocessing {
  CostNorm norm = CostNorm::none;
  std::optional<double> clip;
};

/// Ground costs M_ij = D(x_i, y_j)^p after optional clipping and normalization.
struct CostMatrix {
  Eigen::MatrixXd costs;
  int p = 1;
  CostPreprocessing preprocessing;

  CostMatrix() = default;
  explicit CostMatrix(Eigen::MatrixXd c, int p_ = 1, CostPreprocessing pre = {})
      : costs(std::move(c)), p(p_), preprocessing(pre) {}

  Eigen::Index rows() const noexcept { return costs.rows(); }
  Eigen::Index cols() const noexcept { return costs.cols(); }
};

struct TransportPlan {
  Eigen::MatrixXd coupling;
  /// Sharp transport cost sum_ij T_ij M_ij (no entropy term).
  double cost = 0.0;
};

/// Median with the even-count convention "mean of the two middle values".
inline double median_of(std::vector<double> values) {
  if (values.empty()) throw BadInput("median of an empty set");
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n / 2), values.end());
  const double hi = values[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return 0.5 * (lo + hi);
}

inline double matrix_median(const Eigen::MatrixXd& m) {
  return median_of(std::vector<double>(m.data(), m.data() + m.size()));
}

/// Clip first, then normalize (median divides by the median entry, log maps
/// M to log(1+M)).
inline CostMatrix preprocess_cost(const Eigen::MatrixXd& raw, CostPreprocessing pre, int p = 1) {
  if (!raw.allFinite() || (raw.size() > 0 && raw.minCoeff() < 0.0)) {
    throw BadInput("cost matrix must be finite and non-negative");
  }
  Eigen::MatrixXd c = raw;
  if (pre.clip) {
    if (!(*pre.clip > 0.0)) throw BadParameter("clip threshold must be positive");
    c = c.cwiseMin(*pre.clip);
  }
  switch (pre.norm) {
    case CostNorm::none:
      break;
    case CostNorm::median: {
      const double med = matrix_median(c);
      if (!(med > 0.0)) throw DegenerateCost("median of the cost matrix is zero");
      c /= med;
      break;
    }
    case CostNorm::log:
      c = c.array().log1p().matrix();
      break;
  }
  return CostMatrix(std::move(c), p, pre);
}

// ---------------------------------------------------------------------------
// Exact solver (transportation simplex), used as an oracle on small instances.

inline constexpr Eigen::Index kExactMaxSize = 64;

namespace detail {

struct TreePath {
  // Cells of the cycle closing edge (row, col) in the basis tree, in
  // alternating -, +, -, ... order starting from the entering column.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
};

}  // namespace detail

/// Vertex-optimal plan of the transport LP. Pivoting follows Bland's rule.
inline TransportPlan exact_ot(const Histogram& a, const Histogram& b, const CostMatrix& M) {
  const Eigen::Index n = a.size();
  const Eigen::Index m = b.size();
  if (n > kExactMaxSize || m > kExactMaxSize) throw OracleSizeLimit("exact_ot supports at most 64x64");
  if (M.rows() != n || M.cols() != m) throw ShapeError("cost matrix shape does not match histograms");
  validate_histogram(a, "source");
  validate_histogram(b, "target");
  const Eigen::MatrixXd& C = M.costs;

  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, m);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> basic =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, m, false);

  {  // north-west corner start: n+m-1 basic cells forming a spanning tree
    Vector s = a.weights, d = b.weights;
    Eigen::Index i = 0, j = 0;
    for (;;) {
      const double x = std::min(s(i), d(j));
      X(i, j) = x;
      basic(i, j) = true;
      s(i) -= x;
      d(j) -= x;
      if (i == n - 1 && j == m - 1) break;
      if (j == m - 1 || (i < n - 1 && s(i) <= d(j))) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  const double tol = 1e-12 * std::max(1.0, C.cwiseAbs().maxCoeff());
  const Eigen::Index nodes = n + m;  // rows 0..n-1, columns n..n+m-1
  std::vector<double> pot(static_cast<std::size_t>(nodes));
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(nodes));
  std::vector<char> seen(static_cast<std::size_t>(nodes));

  // Builds potentials (u_i + v_j = C_ij on basic cells) and a parent array
  // for the basis tree rooted at `root`.
  auto traverse = [&](Eigen::Index root) {
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<Eigen::Index> stack{root};
    seen[static_cast<std::size_t>(root)] = 1;
    parent[static_cast<std::size_t>(root)] = -1;
    pot[static_cast<std::size_t>(root)] = 0.0;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      if (v < n) {
        for (Eigen::Index j = 0; j < m; ++j) {
          const Eigen::Index w = n + j;
          if (basic(v, j) && !seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = 1;
            parent[static_cast<std::size_t>(w)] = v;
            pot[static_cast<std::size_t>(w)] = C(v, j) - pot[static_cast<std::size_t>(v)];
            stack.push_back(w);
          }
        }
      } else {
        const Eigen::Index j = v - n;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (basic(i, j) && !seen[static_cast<std::size_t>(i)]) {
            seen[static_cast<std::size_t>(i)] = 1;
            parent[static_cast<std::size_t>(i)] = v;
            pot[static_cast<std::size_t>(i)] = C(i, j) - pot[static_cast<std::size_t>(v)];
            stack.push_back(i);
          }
        }
      }
    }
  };

  const long max_pivots = 100000;
  for (long pivot = 0; pivot < max_pivots; ++pivot) {
    traverse(0);
    Eigen::Index ei = -1, ej = -1;
    for (Eigen::Index i = 0; i < n && ei < 0; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (basic(i, j)) continue;
        const double reduced = C(i, j) - pot[static_cast<std::size_t>(i)] - pot[static_cast<std::size_t>(n + j)];
        if (reduced < -tol) {
          ei = i;
          ej = j;
          break;
        }
      }
    }
    if (ei < 0) break;

    // Tree path from column ej up to row ei: re-root at row ei and walk parents.
    traverse(ei);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> minus_cells, plus_cells;
    Eigen::Index v = n + ej;
    bool minus = true;
    while (v != ei) {
      const Eigen::Index up = parent[static_cast<std::size_t>(v)];
      const auto cell = v < n ? std::pair{v, up - n} : std::pair{up, v - n};
      (minus ? minus_cells : plus_cells).push_back(cell);
      minus = !minus;
      v = up;
    }
    double theta = std::numeric_limits<double>::infinity();
    std::pair<Eigen::Index, Eigen::Index> leave{-1, -1};
    for (const auto& c : minus_cells) {
      const double x = X(c.first, c.second);
      if (x < theta || (x == theta && c < leave)) {
        theta = x;
        leave = c;
      }
    }
    X(ei, ej) += theta;
    for (const auto& c : plus_cells) X(c.first, c.second) += theta;
    for (const auto& c : minus_cells) X(c.first, c.second) = std::max(0.0, X(c.first, c.second) - theta);
    X(leave.first, leave.second) = 0.0;
    basic(ei, ej) = true;
    basic(leave.first, leave.second) = false;
  }

  TransportPlan plan;
  plan.cost = (X.array() * C.array()).sum();
  plan.coupling = std::move(X);
  return plan;
}

// ---------------------------------------------------------------------------
// Entropic kernels

struct SinkhornOptions {
  /// Entropic regularization: the objective is <T,M> - lambda H(T).
  double lambda = 0.1;
  std::uint32_t iters = 100;
  /// When > 0, stop once the L1 row-marginal residual falls below tol.
  double tol = 0.0;
};

namespace detail {

/// log K = -M/lambda together with K itself.
struct LogKernel {
  Eigen::MatrixXd log_k;
  Eigen::MatrixXd k;

  LogKernel(const CostMatrix& M, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw BadParameter("lambda must be positive");
    if (!M.costs.allFinite()) throw NumericalOverflow("cost matrix has non-finite entries");
    log_k = -M.costs / lambda;
    if (!log_k.allFinite()) throw NumericalOverflow("kernel is non-finite; lambda too small for the cost scale");
    k = log_k.array().exp().matrix();
  }
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
/// Below this a shifted kernel product has lost relative precision and the
/// row is recomputed with an exact log-sum-exp.
inline constexpr double kShiftedFloor = 1e-250;

/// out(r, c) = log sum_s exp(L(r, s) + x(s, c)) where L = log K (or its
/// transpose). Each column is shifted by its max so the sum is a plain
/// matrix product with K; rows that underflow fall back to a direct
/// log-sum-exp.
inline void log_apply(const LogKernel& ker, bool transpose, const Eigen::MatrixXd& x, Eigen::MatrixXd& out) {
  const Eigen::Index inner = x.rows();
  const Eigen::Index cols = x.cols();
  Eigen::RowVectorXd shift = x.colwise().maxCoeff();
  std::vector<char> dead(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (shift(c) == kNegInf) {
      dead[static_cast<std::size_t>(c)] = 1;
      shift(c) = 0.0;
    }
  }
  const Eigen::MatrixXd w = (x.rowwise() - shift).array().exp().matrix();
  Eigen::MatrixXd prod(transpose ? ker.k.cols() : ker.k.rows(), cols);
  if (transpose) {
    prod.noalias() = ker.k.transpose() * w;
  } else {
    prod.noalias() = ker.k * w;
  }
  out = prod.array().max(kShiftedFloor).log().matrix();
  out.rowwise() += shift;

  const Eigen::Index outer = out.rows();
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (dead[static_cast<std::size_t>(c)]) {
      out.col(c).setConstant(kNegInf);
      continue;
    }
    for (Eigen::Index r = 0; r < outer; ++r) {
      const double v = prod(r, c);
      if (v >= kShiftedFloor && v <= std::numeric_limits<double>::max()) continue;
      double mx = kNegInf;
      for (Eigen::Index s = 0; s < inner; ++s) {
        const double l = transpose ? ker.log_k(s, r) : ker.log_k(r, s);
        mx = std::max(mx, l + x(s, c));
      }
      if (mx == kNegInf) {
        out(r, c) = kNegInf;
        continue;
      }
      double acc = 0.0;
      for (Eigen::Index s = 0; s < inner; ++s) {
        const double l = transpose ? ker.log_k(s, r) : ker.log_k(r, s);
        const double t = l + x(s, c);
        if (t != kNegInf) acc += std::exp(t - mx);
      }
      out(r, c) = mx + std::log(acc);
    }
  }
}

inline Eigen::MatrixXd safe_log(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i) out.data()[i] = p.data()[i] > 0.0 ? std::log(p.data()[i]) : kNegInf;
  return out;
}

/// Projects a near-feasible coupling onto the transport polytope
/// (Altschuler, Weed & Rigollet rounding).
inline void round_to_marginals(Eigen::MatrixXd& T, const Vector& a, const Vector& b) {
  Vector r = T.rowwise().sum();
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    if (r(i) > a(i)) T.row(i) *= a(i) / r(i);
  }
  Vector c = T.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < T.cols(); ++j) {
    if (c(j) > b(j)) T.col(j) *= b(j) / c(j);
  }
  const Vector err_a = (a - T.rowwise().sum()).cwiseMax(0.0);
  const Vector err_b = (b - T.colwise().sum().transpose()).cwiseMax(0.0);
  const double total = err_a.sum();
  if (total > 0.0) T.noalias() += err_a * err_b.transpose() / total;
}

struct SinkhornBlockResult {
  Eigen::MatrixXd alpha;  // n x B scaled row potentials f/lambda
  Eigen::MatrixXd beta;   // m x B scaled column potentials g/lambda
};

/// Log-domain Sinkhorn on B pairs sharing one cost matrix.
inline SinkhornBlockResult sinkhorn_block(const LogKernel& ker, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                          const SinkhornOptions& opt) {
  const Eigen::MatrixXd log_a = safe_log(A);
  const Eigen::MatrixXd log_b = safe_log(B);
  SinkhornBlockResult res;
  res.beta = Eigen::MatrixXd::Zero(B.rows(), B.cols());
  for (Eigen::Index i = 0; i < B.size(); ++i) {
    if (B.data()[i] <= 0.0) res.beta.data()[i] = kNegInf;
  }
  res.alpha.resize(A.rows(), A.cols());
  Eigen::MatrixXd row_lse(A.rows(), A.cols()), col_lse(B.rows(), B.cols());
  for (std::uint32_t it = 0; it < opt.iters; ++it) {
    log_apply(ker, false, res.beta, row_lse);
    res.alpha = log_a - row_lse;
    log_apply(ker, true, res.alpha, col_lse);
    res.beta = log_b - col_lse;
    if (opt.tol > 0.0 && (it % 10 == 9 || it + 1 == opt.iters)) {
      log_apply(ker, false, res.beta, row_lse);
      double worst = 0.0;
      for (Eigen::Index c = 0; c < A.cols(); ++c) {
        double resid = 0.0;
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
          const double s = res.alpha(i, c) + row_lse(i, c);
          resid += std::abs((s == kNegInf ? 0.0 : std::exp(s)) - A(i, c));
        }
        worst = std::max(worst, resid);
      }
      if (worst < opt.tol) break;
    }
  }
  return res;
}

inline TransportPlan plan_from_potentials(const LogKernel& ker, const CostMatrix& M, const Vector& alpha,
                                          const Vector& beta, const Vector& a, const Vector& b) {
  TransportPlan plan;
  plan.coupling.resize(alpha.size(), beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
      const double s = alpha(i) + beta(j);
      plan.coupling(i, j) = s == kNegInf ? 0.0 : std::exp(s + ker.log_k(i, j));
    }
  }
  round_to_marginals(plan.coupling, a, b);
  plan.cost = (plan.coupling.array() * M.costs.array()).sum();
  if (!std::isfinite(plan.cost) || !plan.coupling.allFinite()) {
    throw NumericalOverflow("transport plan is not finite");
  }
  return plan;
}

}  // namespace detail

/// Entropic OT by log-domain Sinkhorn. The returned plan is rounded onto the
/// exact marginals; zero-weight bins carry zero rows/columns.
inline TransportPlan sinkhorn(const Histogram& a, const Histogram& b, const CostMatrix& M,
                              const SinkhornOptions& opt = {}) {
  if (M.rows() != a.size() || M.cols() != b.size()) throw ShapeError("cost matrix shape does not match histograms");
  validate_histogram(a, "source");
  validate_histogram(b, "target");
  const detail::LogKernel ker(M, opt.lambda);
  const auto res = detail::sinkhorn_block(ker, a.weights, b.weights, opt);
  return detail::plan_from_potentials(ker, M, res.alpha.col(0), res.beta.col(0), a.weights, b.weights);
}

using HistogramPair = std::pair<Histogram, Histogram>;

/// Sinkhorn costs for many pairs over the support of one cost matrix.
inline std::vector<double> sinkhorn_batch(std::span<const HistogramPair> pairs, const CostMatrix& M,
                                          const SinkhornOptions& opt = {}) {
  std::vector<double> costs;
  if (pairs.empty()) return costs;
  const Eigen::Index n = M.rows(), m = M.cols();
  Eigen::MatrixXd A(n, static_cast<Eigen::Index>(pairs.size()));
  Eigen::MatrixXd B(m, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [a, b] = pairs[p];
    if (a.size() != n || b.size() != m) {
      throw ShapeError("pair " + std::to_string(p) + " does not match the cost matrix shape");
    }
    validate_histogram(a, "source");
    validate_histogram(b, "target");
    A.col(static_cast<Eigen::Index>(p)) = a.weights;
    B.col(static_cast<Eigen::Index>(p)) = b.weights;
  }
  const detail::LogKernel ker(M, opt.lambda);
  const auto res = detail::sinkhorn_block(ker, A, B, opt);
  costs.reserve(pairs.size());
  for (Eigen::Index p = 0; p < A.cols(); ++p) {
    costs.push_back(detail::plan_from_potentials(ker, M, res.alpha.col(p), res.beta.col(p), A.col(p), B.col(p)).cost);
  }
  return costs;
}

// ---------------------------------------------------------------------------
// Fixed-support regularized barycenters (iterative Bregman projections)

struct BarycenterGroup {
  std::vector<Histogram> histograms;
  /// Empty means uniform weights.
  std::vector<double> eta;
};

namespace detail {

inline std::vector<double> resolve_eta(const BarycenterGroup& g) {
  const std::size_t N = g.histograms.size();
  if (N == 0) throw BadParameter("barycenter of an empty list");
  if (g.eta.empty()) return std::vector<double>(N, 1.0 / static_cast<double>(N));
  if (g.eta.size() != N) throw BadParameter("eta length does not match the number of histograms");
  double s = 0.0;
  for (double e : g.eta) {
    if (!(e >= 0.0)) throw BadParameter("eta must be non-negative");
    s += e;
  }
  if (std::abs(s - 1.0) > kSimplexTol) throw BadParameter("eta must sum to 1");
  return g.eta;
}

}  // namespace detail

/// All groups are stacked as columns of one block and iterated together
/// against the shared kernel; a single barycenter is a block of one group.
inline std::vector<Histogram> barycenter_batch(std::span<const BarycenterGroup> groups, const CostMatrix& M,
                                               const SinkhornOptions& opt = {}) {
  std::vector<Histogram> out;
  if (groups.empty()) return out;
  if (M.rows() != M.cols()) throw ShapeError("barycenter cost matrix must be square");
  const Eigen::Index n = M.rows();

  std::vector<Eigen::Index> offset{0};
  std::vector<double> eta;
  for (const auto& g : groups) {
    const auto e = detail::resolve_eta(g);
    eta.insert(eta.end(), e.begin(), e.end());
    offset.push_back(offset.back() + static_cast<Eigen::Index>(g.histograms.size()));
  }
  const Eigen::Index total = offset.back();
  Eigen::MatrixXd Bw(n, total);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t i = 0; i < groups[g].histograms.size(); ++i) {
      const auto& h = groups[g].histograms[i];
      if (h.size() != n) throw ShapeError("histogram support does not match the cost matrix");
      validate_histogram(h, "input");
      Bw.col(offset[g] + static_cast<Eigen::Index>(i)) = h.weights;
    }
  }

  const detail::LogKernel ker(M, opt.lambda);
  const Eigen::MatrixXd log_b = detail::safe_log(Bw);
  Eigen::MatrixXd log_u = Eigen::MatrixXd::Zero(n, total);
  Eigen::MatrixXd log_v(n, total), tmp(n, total), log_kv(n, total);
  Eigen::MatrixXd log_p(n, static_cast<Eigen::Index>(groups.size()));

  for (std::uint32_t it = 0; it < opt.iters; ++it) {
    detail::log_apply(ker, true, log_u, tmp);
    log_v = log_b - tmp;
    detail::log_apply(ker, false, log_v, log_kv);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto lp = log_p.col(static_cast<Eigen::Index>(g));
      lp.setZero();
      for (Eigen::Index c = offset[g]; c < offset[g + 1]; ++c) {
        const double e = eta[static_cast<std::size_t>(c)];
        if (e > 0.0) lp += e * (log_u.col(c) + log_kv.col(c));
      }
      for (Eigen::Index c = offset[g]; c < offset[g + 1]; ++c) log_u.col(c) = lp - log_kv.col(c);
    }
  }

  out.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto lp = log_p.col(static_cast<Eigen::Index>(g));
    const double mx = lp.maxCoeff();
    Vector p = (lp.array() - mx).exp().matrix();
    p /= p.sum();
    if (!p.allFinite()) throw NumericalOverflow("barycenter is not finite");
    out.emplace_back(std::move(p));
  }
  return out;
}

inline Histogram barycenter(std::span<const Histogram> histograms, std::span<const double> eta, const CostMatrix& M,
                            const SinkhornOptions& opt = {}) {
  BarycenterGroup g{std::vector<Histogram>(histograms.begin(), histograms.end()),
                    std::vector<double>(eta.begin(), eta.end())};
  return std::move(barycenter_batch(std::span<const BarycenterGroup>(&g, 1), M, opt).front());
}

inline double total_variation(const Vector& p, const Vector& q) { return 0.5 * (p - q).cwiseAbs().sum(); }

}  // namespace cmv::ot

#endif  // CMV_OT_HPP
