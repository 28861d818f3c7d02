#ifndef CMV_EMBEDDINGS_HPP
#define CMV_EMBEDDINGS_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmv/corpus.hpp"
#include "cmv/error.hpp"
#include "cmv/linalg.hpp"

namespace cmv {

/// V x d vectors aligned with vocabulary ids.
struct EmbeddingTable {
  RowMatrix vectors;

  Eigen::Index rows() const noexcept { return vectors.rows(); }
  Eigen::Index dim() const noexcept { return vectors.cols(); }

  void validate() const {
    if (dim() < 1) throw BadInput("embedding dimension must be >= 1");
    if (!vectors.allFinite()) throw BadInput("embedding table contains non-finite values");
  }
};

/// Parses GloVe-style text (`token v1 ... vd` per line).
inline std::unordered_map<std::string, std::vector<double>> read_glove_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings '" + path.string() + "'");
  std::unordered_map<std::string, std::vector<double>> out;
  std::string line;
  std::size_t dim = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_tokens(line);
    if (fields.empty()) continue;
    std::vector<double> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      try {
        v.push_back(std::stod(fields[i]));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + fields[i] + "'");
      }
    }
    if (v.empty()) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": no vector components");
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": dimension " + std::to_string(v.size()) +
                        " != " + std::to_string(dim));
    }
    out.emplace(fields[0], std::move(v));
  }
  return out;
}

/// Every vocabulary token must have a vector.
inline EmbeddingTable align_embeddings(const std::unordered_map<std::string, std::vector<double>>& vecs,
                                       const Vocabulary& vocab) {
  if (vecs.empty()) throw BadInput("embedding file is empty");
  const auto dim = static_cast<Eigen::Index>(vecs.begin()->second.size());
  EmbeddingTable t{RowMatrix(static_cast<Eigen::Index>(vocab.size()), dim)};
  std::size_t missing = 0;
  std::string first_missing;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto it = vecs.find(vocab.tokens()[i]);
    if (it == vecs.end()) {
      if (missing++ == 0) first_missing = vocab.tokens()[i];
      continue;
    }
    for (Eigen::Index j = 0; j < dim; ++j) t.vectors(static_cast<Eigen::Index>(i), j) = it->second[j];
  }
  if (missing > 0) {
    throw BadInput(std::to_string(missing) + " vocabulary tokens lack embeddings (first: '" + first_missing + "')");
  }
  t.validate();
  return t;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab) {
  return align_embeddings(read_glove_text(path), vocab);
}

inline void save_glove_text(const EmbeddingTable& t, const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    out << vocab.tokens()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < t.dim(); ++j) out << ' ' << t.vectors(i, j);
    out << '\n';
  }
}

}  // namespace cmv

#endif  // CMV_EMBEDDINGS_HPP
