#ifndef CMV_PPMI_HPP
#define CMV_PPMI_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "cmv/binary_io.hpp"
#include "cmv/corpus.hpp"
#include "cmv/error.hpp"

namespace cmv {

/// Shifted, smoothed positive PMI. Stored entries are strictly positive and
/// sorted by (word, context); `row_offsets` indexes the rows.
struct SppmiMatrix {
  std::vector<CoocEntry> entries;
  std::vector<std::size_t> row_offsets;  // size vocab_size + 1
  std::uint32_t vocab_size = 0;
  std::uint32_t window = 0;
  bool symmetric = true;
  double alpha = 1.0;
  double shift = 1.0;

  std::span<const CoocEntry> row(WordId w) const {
    if (w >= vocab_size) throw IndexError("word id " + std::to_string(w) + " >= V=" + std::to_string(vocab_size));
    return std::span<const CoocEntry>(entries).subspan(row_offsets[w], row_offsets[w + 1] - row_offsets[w]);
  }

  double value(WordId w, WordId c) const {
    for (const auto& e : row(w)) {
      if (e.context == c) return e.weight;
      if (e.context > c) break;
    }
    return 0.0;
  }

  void rebuild_offsets() {
    row_offsets.assign(static_cast<std::size_t>(vocab_size) + 1, 0);
    for (const auto& e : entries) ++row_offsets[e.word + 1];
    for (std::size_t i = 1; i < row_offsets.size(); ++i) row_offsets[i] += row_offsets[i - 1];
  }

  friend bool operator==(const SppmiMatrix& a, const SppmiMatrix& b) {
    return a.entries == b.entries && a.vocab_size == b.vocab_size && a.window == b.window &&
           a.symmetric == b.symmetric && a.alpha == b.alpha && a.shift == b.shift;
  }
};

/// Values at or below this after the shift are dropped.
inline constexpr double kSppmiZero = 1e-15;

/// SPPMI(w,c) = max(log(#(w,c) * sum_c' #(c')^alpha / (#(w) * #(c)^alpha)) - log(s), 0)
/// with natural logarithms; #(w) and #(c) are the row and column marginals.
inline SppmiMatrix compute_sppmi(const SparseCoocMatrix& cooc, double alpha, double shift) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw BadParameter("alpha must lie in [0,1]");
  if (!(shift >= 1.0)) throw BadParameter("shift must be >= 1");
  if (cooc.entries.empty()) throw BadInput("co-occurrence matrix is empty");

  const std::size_t V = cooc.vocab_size;
  std::vector<double> row_sum(V, 0.0), col_sum(V, 0.0);
  for (const auto& e : cooc.entries) {
    row_sum[e.word] += e.weight;
    col_sum[e.context] += e.weight;
  }
  double smoothed_total = 0.0;
  std::vector<double> log_col_pow(V, 0.0);
  for (std::size_t c = 0; c < V; ++c) {
    if (col_sum[c] > 0.0) {
      smoothed_total += std::pow(col_sum[c], alpha);
      log_col_pow[c] = alpha * std::log(col_sum[c]);
    }
  }
  const double log_total = std::log(smoothed_total);
  const double log_shift = std::log(shift);

  SppmiMatrix out;
  out.vocab_size = cooc.vocab_size;
  out.window = cooc.window;
  out.symmetric = cooc.symmetric;
  out.alpha = alpha;
  out.shift = shift;
  for (const auto& e : cooc.entries) {
    const double v = std::log(e.weight) + log_total - std::log(row_sum[e.word]) - log_col_pow[e.context] - log_shift;
    if (v > kSppmiZero) out.entries.push_back({e.word, e.context, v});
  }
  out.rebuild_offsets();
  return out;
}

inline std::span<const CoocEntry> sppmi_row(const SppmiMatrix& m, WordId w) { return m.row(w); }

inline constexpr std::string_view kSppmiMagic = "CMVSPMI1";

inline std::string encode_sppmi(const SppmiMatrix& m) {
  io::ByteWriter w;
  w.magic(kSppmiMagic);
  w.u32(m.vocab_size);
  w.u32(m.window);
  w.u8(m.symmetric ? 1 : 0);
  w.f64(m.alpha);
  w.f64(m.shift);
  detail::write_triples(w, m.entries);
  return w.bytes();
}

inline SppmiMatrix decode_sppmi(io::ByteReader r) {
  r.expect_magic(kSppmiMagic);
  SppmiMatrix m;
  m.vocab_size = r.u32();
  m.window = r.u32();
  m.symmetric = r.u8() != 0;
  m.alpha = r.f64();
  m.shift = r.f64();
  m.entries = detail::read_triples(r, m.vocab_size);
  r.expect_end();
  m.rebuild_offsets();
  return m;
}

inline void save_sppmi(const SppmiMatrix& m, const std::filesystem::path& path) {
  io::write_file(path, encode_sppmi(m));
}

inline SppmiMatrix load_sppmi(const std::filesystem::path& path) {
  return decode_sppmi(io::open_reader(path));
}

}  // namespace cmv

#endif  // CMV_PPMI_HPP
