#ifndef CMV_LINALG_HPP
#define CMV_LINALG_HPP

#include <Eigen/Dense>
#include <string>
#include <string_view>

#include "cmv/error.hpp"

namespace cmv {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Ground metric between embedded atoms.
enum class Metric { euclidean, angular, entailment };

inline std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::angular: return "angular";
    case Metric::entailment: return "entailment";
  }
  return "euclidean";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "angular") return Metric::angular;
  if (s == "entailment") return Metric::entailment;
  throw BadParameter("unknown metric '" + std::string(s) + "'");
}

}  // namespace cmv

#endif  // CMV_LINALG_HPP
