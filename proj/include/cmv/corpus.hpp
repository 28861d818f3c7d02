#ifndef CMV_CORPUS_HPP
#define CMV_CORPUS_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ranges>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cmv/binary_io.hpp"
#include "cmv/error.hpp"
#include "cmv/parallel.hpp"

namespace cmv {

using WordId = std::uint32_t;

/// Token <-> id table. Ids are dense, ordered by descending corpus count
/// with lexicographic tie-break.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from (token, count) pairs already in id order.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts)
      : tokens_(std::move(tokens)), counts_(std::move(counts)) {
    if (tokens_.size() != counts_.size()) throw BadInput("token/count length mismatch");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!index_.emplace(tokens_[i], static_cast<WordId>(i)).second) {
        throw BadInput("duplicate token '" + tokens_[i] + "'");
      }
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  const std::string& token(WordId id) const {
    if (id >= tokens_.size()) throw IndexError("word id " + std::to_string(id) + " out of range");
    return tokens_[id];
  }
  std::uint64_t count(WordId id) const {
    if (id >= counts_.size()) throw IndexError("word id " + std::to_string(id) + " out of range");
    return counts_[id];
  }

  std::optional<WordId> find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  WordId id_of(const std::string& token) const {
    auto id = find(token);
    if (!id) throw OovError("'" + token + "' is not in the vocabulary");
    return *id;
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> index_;
};

/// Orders raw frequency counts into a vocabulary, dropping tokens below min_count.
inline Vocabulary vocabulary_from_counts(const std::unordered_map<std::string, std::uint64_t>& freq,
                                         std::uint64_t min_count) {
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [tok, n] : freq) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  tokens.reserve(kept.size());
  counts.reserve(kept.size());
  for (auto& [tok, n] : kept) {
    tokens.push_back(std::move(tok));
    counts.push_back(n);
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

template <std::ranges::input_range R>
  requires std::convertible_to<std::ranges::range_reference_t<R>, std::string_view>
Vocabulary build_vocabulary(R&& token_stream, std::uint64_t min_count) {
  if (min_count == 0) throw BadParameter("min_count must be positive");
  std::unordered_map<std::string, std::uint64_t> freq;
  std::uint64_t seen = 0;
  for (auto&& tok : token_stream) {
    ++freq[std::string(std::string_view(tok))];
    ++seen;
  }
  if (seen == 0) throw EmptyCorpus("token stream is empty");
  return vocabulary_from_counts(freq, min_count);
}

// ---------------------------------------------------------------------------
// Corpus text

/// One sentence per line, whitespace separated tokens.
inline std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' ||
                               line[i] == '\n' || line[i] == '\f' || line[i] == '\v')) {
      ++i;
    }
    std::size_t j = i;
    while (j < line.size() && !(line[j] == ' ' || line[j] == '\t' || line[j] == '\r' ||
                                line[j] == '\n' || line[j] == '\f' || line[j] == '\v')) {
      ++j;
    }
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

using TokenLines = std::vector<std::vector<std::string>>;

inline TokenLines read_corpus(std::istream& in) {
  TokenLines lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(split_tokens(line));
  return lines;
}

inline TokenLines read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  return read_corpus(in);
}

inline Vocabulary build_vocabulary(const TokenLines& lines, std::uint64_t min_count) {
  return build_vocabulary(lines | std::views::join, min_count);
}

// ---------------------------------------------------------------------------
// Co-occurrence statistics

struct CoocEntry {
  WordId word;
  WordId context;
  double weight;

  friend bool operator==(const CoocEntry&, const CoocEntry&) = default;
};

/// Sparse word x context matrix. Entries are sorted by (word, context) and
/// strictly positive.
struct SparseCoocMatrix {
  std::vector<CoocEntry> entries;
  std::uint32_t vocab_size = 0;
  std::uint32_t window = 0;
  bool symmetric = true;

  std::size_t nnz() const noexcept { return entries.size(); }

  double entry(WordId w, WordId c) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{w, c},
                               [](const CoocEntry& e, const std::pair<WordId, WordId>& key) {
                                 return std::pair{e.word, e.context} < key;
                               });
    if (it == entries.end() || it->word != w || it->context != c) return 0.0;
    return it->weight;
  }

  double total() const noexcept {
    double s = 0.0;
    for (const auto& e : entries) s += e.weight;
    return s;
  }

  friend bool operator==(const SparseCoocMatrix&, const SparseCoocMatrix&) = default;
};

struct CoocOptions {
  std::uint32_t window = 10;
  /// 1/distance weighting (GloVe convention); unit weights when false.
  bool distance_weighting = true;
};

namespace detail {

using PairKey = std::uint64_t;

inline PairKey pair_key(WordId w, WordId c) noexcept {
  return (static_cast<PairKey>(w) << 32) | c;
}

using IdLine = std::vector<std::int64_t>;

inline void accumulate_line(const IdLine& ids, const CoocOptions& opt,
                            std::unordered_map<PairKey, double>& acc) {
  const std::size_t n = ids.size();
  for (std::size_t p = 0; p < n; ++p) {
    if (ids[p] < 0) continue;
    const std::size_t last = std::min<std::size_t>(n - 1, p + opt.window);
    for (std::size_t q = p + 1; q <= last; ++q) {
      if (ids[q] < 0) continue;
      const double w = opt.distance_weighting ? 1.0 / static_cast<double>(q - p) : 1.0;
      const auto a = static_cast<WordId>(ids[p]);
      const auto b = static_cast<WordId>(ids[q]);
      acc[pair_key(a, b)] += w;
      acc[pair_key(b, a)] += w;
    }
  }
}

inline std::vector<CoocEntry> sorted_entries(const std::unordered_map<PairKey, double>& acc) {
  std::vector<CoocEntry> out;
  out.reserve(acc.size());
  for (const auto& [key, w] : acc) {
    if (w > 0.0) out.push_back({static_cast<WordId>(key >> 32), static_cast<WordId>(key & 0xFFFFFFFFu), w});
  }
  std::sort(out.begin(), out.end(), [](const CoocEntry& a, const CoocEntry& b) {
    return a.word != b.word ? a.word < b.word : a.context < b.context;
  });
  return out;
}

}  // namespace detail

/// Lines are co-occurrence boundaries. Out-of-vocabulary tokens keep their
/// position (they count toward distances) but contribute no pairs.
inline SparseCoocMatrix accumulate_cooccurrences(const TokenLines& lines, const Vocabulary& vocab,
                                                 const CoocOptions& opt = {}) {
  if (opt.window < 1) throw BadParameter("window must be >= 1");
  std::vector<detail::IdLine> ids(lines.size());
  for (std::size_t l = 0; l < lines.size(); ++l) {
    ids[l].reserve(lines[l].size());
    for (const auto& tok : lines[l]) {
      auto id = vocab.find(tok);
      ids[l].push_back(id ? static_cast<std::int64_t>(*id) : -1);
    }
  }

  // Fixed-size shards reduced in shard order keep the result independent of
  // the thread count.
  constexpr std::size_t kShard = 4096;
  const std::size_t shards = (ids.size() + kShard - 1) / kShard;
  std::vector<std::unordered_map<detail::PairKey, double>> partial(shards);
  parallel_chunks(ids.size(), kShard, [&](std::size_t begin, std::size_t end) {
    auto& acc = partial[begin / kShard];
    for (std::size_t l = begin; l < end; ++l) detail::accumulate_line(ids[l], opt, acc);
  });
  std::unordered_map<detail::PairKey, double> total;
  for (auto& part : partial) {
    for (const auto& [key, w] : part) total[key] += w;
    part.clear();
  }

  SparseCoocMatrix m;
  m.entries = detail::sorted_entries(total);
  m.vocab_size = static_cast<std::uint32_t>(vocab.size());
  m.window = opt.window;
  m.symmetric = true;
  return m;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::string_view kCoocMagic = "CMVCOOC1";

inline void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << vocab.tokens()[i] << '\t' << vocab.counts()[i] << '\n';
  }
  io::write_file(path, out.str());
}

inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary '" + path.string() + "'");
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected token<TAB>count");
    }
    std::uint64_t n = 0;
    try {
      std::size_t used = 0;
      n = std::stoull(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad count");
    }
    tokens.push_back(line.substr(0, tab));
    counts.push_back(n);
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

namespace detail {

inline void write_triples(io::ByteWriter& w, const std::vector<CoocEntry>& entries) {
  w.u64(entries.size());
  for (const auto& e : entries) {
    w.u32(e.word);
    w.u32(e.context);
    w.f64(e.weight);
  }
}

inline std::vector<CoocEntry> read_triples(io::ByteReader& r, std::uint32_t vocab_size) {
  const std::uint64_t count = r.u64();
  if (count > r.remaining() / 16) throw FormatError("truncated file '" + r.source() + "'");
  std::vector<CoocEntry> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    CoocEntry e{r.u32(), r.u32(), r.f64()};
    if (e.word >= vocab_size || e.context >= vocab_size) {
      throw FormatError("entry id out of range in '" + r.source() + "'");
    }
    if (!entries.empty() && std::pair{entries.back().word, entries.back().context} >= std::pair{e.word, e.context}) {
      throw FormatError("entries not sorted by (word, context) in '" + r.source() + "'");
    }
    entries.push_back(e);
  }
  return entries;
}

}  // namespace detail

inline std::string encode_cooc(const SparseCoocMatrix& m) {
  io::ByteWriter w;
  w.magic(kCoocMagic);
  w.u32(m.vocab_size);
  w.u32(m.window);
  w.u8(m.symmetric ? 1 : 0);
  detail::write_triples(w, m.entries);
  return w.bytes();
}

inline SparseCoocMatrix decode_cooc(io::ByteReader r) {
  r.expect_magic(kCoocMagic);
  SparseCoocMatrix m;
  m.vocab_size = r.u32();
  m.window = r.u32();
  m.symmetric = r.u8() != 0;
  m.entries = detail::read_triples(r, m.vocab_size);
  r.expect_end();
  return m;
}

inline void save_cooc(const SparseCoocMatrix& m, const std::filesystem::path& path) {
  io::write_file(path, encode_cooc(m));
}

inline SparseCoocMatrix load_cooc(const std::filesystem::path& path) {
  return decode_cooc(io::open_reader(path));
}

}  // namespace cmv

#endif  // CMV_CORPUS_HPP
