#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <unistd.h>

#include "cmv/corpus.hpp"
#include "cmv/parallel.hpp"
#include "oracles.hpp"

using namespace cmv;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cmv_corpus_" + std::to_string(::getpid()) + "_" + name);
}

std::map<std::string, std::uint32_t> id_map(const Vocabulary& v) {
  std::map<std::string, std::uint32_t> m;
  for (std::size_t i = 0; i < v.size(); ++i) m[v.token(static_cast<WordId>(i))] = static_cast<std::uint32_t>(i);
  return m;
}

}  // namespace

TEST(Vocabulary, CountsAndOrder) {
  const std::vector<std::string> s{"a", "b", "a"};
  const auto v = build_vocabulary(s, 1);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.token(0), "a");
  EXPECT_EQ(v.count(0), 2u);
  EXPECT_EQ(v.token(1), "b");
  EXPECT_EQ(v.count(1), 1u);
  EXPECT_EQ(v.id_of("b"), 1u);
}

TEST(Vocabulary, MinCountFilters) {
  const std::vector<std::string> s{"a", "b", "a"};
  const auto v = build_vocabulary(s, 2);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v.token(0), "a");
  EXPECT_FALSE(v.find("b").has_value());
  EXPECT_THROW(v.id_of("b"), OovError);
}

TEST(Vocabulary, TiesAreLexicographic) {
  const std::vector<std::string> s{"z", "y", "x", "y", "z", "x", "w"};
  const auto v = build_vocabulary(s, 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"x", "y", "z", "w"}));
}

TEST(Vocabulary, IdsAreDense) {
  const std::vector<std::string> s{"q", "r", "q", "s", "t", "t", "t"};
  const auto v = build_vocabulary(s, 1);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.id_of(v.token(static_cast<WordId>(i))), i);
}

TEST(Vocabulary, EmptyStreamThrows) {
  EXPECT_THROW(build_vocabulary(std::vector<std::string>{}, 1), EmptyCorpus);
  EXPECT_THROW(build_vocabulary(std::vector<std::string>{"a"}, 0), BadParameter);
}

TEST(Vocabulary, MatchesFrequencyCounterOnMultinomial) {
  std::mt19937_64 rng(3);
  std::discrete_distribution<int> d({5, 1, 3, 8, 2, 2, 0.5});
  std::vector<std::string> s;
  std::map<std::string, std::uint64_t> ref;
  for (int i = 0; i < 1000; ++i) {
    s.push_back("t" + std::to_string(d(rng)));
    ++ref[s.back()];
  }
  const auto v = build_vocabulary(s, 1);
  ASSERT_EQ(v.size(), ref.size());
  for (const auto& [tok, n] : ref) EXPECT_EQ(v.count(v.id_of(tok)), n);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GE(v.count(static_cast<WordId>(i - 1)), v.count(static_cast<WordId>(i)));
}

TEST(Corpus, SplitTokensOnWhitespace) {
  EXPECT_EQ(split_tokens("  a\tb  c \r"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_tokens("   ").empty());
}

TEST(Corpus, ReadCorpusKeepsLines) {
  std::istringstream in("a b\n\nc d e\n");
  const auto lines = read_corpus(in);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_TRUE(lines[1].empty());
  EXPECT_EQ(lines[2].size(), 3u);
}

TEST(Cooc, AbaHandTrace) {
  const TokenLines lines{{"a", "b", "a"}};
  const auto v = build_vocabulary(lines, 1);
  const auto m = accumulate_cooccurrences(lines, v, CoocOptions{2, true});
  EXPECT_EQ(m.nnz(), 3u);
  EXPECT_EQ(m.entry(0, 1), 2.0);
  EXPECT_EQ(m.entry(1, 0), 2.0);
  EXPECT_EQ(m.entry(0, 0), 1.0);
  EXPECT_EQ(m.entry(1, 1), 0.0);
  EXPECT_TRUE(m.symmetric);
}

TEST(Cooc, SingleTokenLineIsEmpty) {
  const TokenLines lines{{"a"}, {"a"}};
  const auto v = build_vocabulary(lines, 1);
  EXPECT_EQ(accumulate_cooccurrences(lines, v, CoocOptions{7, true}).nnz(), 0u);
}

TEST(Cooc, LinesAreBoundaries) {
  const TokenLines lines{{"a"}, {"b"}};
  const auto v = build_vocabulary(lines, 1);
  EXPECT_EQ(accumulate_cooccurrences(lines, v, {}).nnz(), 0u);
}

TEST(Cooc, OovKeepsPosition) {
  const TokenLines lines{{"a", "x", "b"}, {"a", "b"}};
  const auto v = build_vocabulary(lines, 2);
  ASSERT_EQ(v.size(), 2u);
  const auto m = accumulate_cooccurrences(lines, v, CoocOptions{2, true});
  EXPECT_DOUBLE_EQ(m.entry(v.id_of("a"), v.id_of("b")), 0.5 + 1.0);
}

TEST(Cooc, UnweightedMode) {
  const TokenLines lines{{"a", "b", "a"}};
  const auto v = build_vocabulary(lines, 1);
  const auto m = accumulate_cooccurrences(lines, v, CoocOptions{2, false});
  EXPECT_EQ(m.entry(0, 0), 2.0);
  EXPECT_EQ(m.entry(0, 1), 2.0);
}

TEST(Cooc, RejectsZeroWindow) {
  const TokenLines lines{{"a", "b"}};
  const auto v = build_vocabulary(lines, 1);
  EXPECT_THROW(accumulate_cooccurrences(lines, v, CoocOptions{0, true}), BadParameter);
}

TEST(Cooc, MatchesDoubleLoopOracle) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> tok(0, 14), len(1, 25);
  TokenLines lines;
  std::size_t total = 0;
  while (total < 200) {
    std::vector<std::string> l;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) l.push_back("w" + std::to_string(tok(rng)));
    total += l.size();
    lines.push_back(std::move(l));
  }
  const auto v = build_vocabulary(lines, 3);
  const auto m = accumulate_cooccurrences(lines, v, CoocOptions{5, true});
  const auto ref = oracle::naive_cooc(lines, id_map(v), 5, true);
  ASSERT_EQ(m.nnz(), ref.size());
  double total_ref = 0.0;
  for (const auto& [k, w] : ref) {
    EXPECT_DOUBLE_EQ(m.entry(k.first, k.second), w);
    total_ref += w;
  }
  EXPECT_NEAR(m.total(), total_ref, 1e-9);
}

TEST(Cooc, SymmetricAndSorted) {
  const auto lines = oracle::planted_corpus(20, 60000, 9, 4);
  TokenLines tl(lines.begin(), lines.end());
  const auto v = build_vocabulary(tl, 1);
  const auto m = accumulate_cooccurrences(tl, v, CoocOptions{4, true});
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    const auto& a = m.entries[i - 1];
    const auto& b = m.entries[i];
    EXPECT_TRUE(a.word < b.word || (a.word == b.word && a.context < b.context));
  }
  for (const auto& e : m.entries) {
    EXPECT_GT(e.weight, 0.0);
    EXPECT_EQ(e.weight, m.entry(e.context, e.word));
  }
}

TEST(Cooc, ThreadCountDoesNotChangeBytes) {
  const auto lines = oracle::planted_corpus(30, 80000, 8, 5);
  TokenLines tl(lines.begin(), lines.end());
  const auto v = build_vocabulary(tl, 1);
  set_max_threads(1);
  const auto one = encode_cooc(accumulate_cooccurrences(tl, v, {}));
  set_max_threads(3);
  const auto three = encode_cooc(accumulate_cooccurrences(tl, v, {}));
  set_max_threads(0);
  EXPECT_EQ(one, three);
}

TEST(CoocFormat, RoundTrips) {
  const TokenLines lines{{"a", "b", "a"}};
  const auto v = build_vocabulary(lines, 1);
  const auto m = accumulate_cooccurrences(lines, v, {});
  const auto path = temp_file("aba.bin");
  save_cooc(m, path);
  const auto back = load_cooc(path);
  EXPECT_EQ(back.entries, m.entries);
  EXPECT_EQ(back.vocab_size, 2u);
  EXPECT_EQ(back.window, 10u);
  EXPECT_TRUE(back.symmetric);
  std::filesystem::remove(path);

  SparseCoocMatrix empty;
  empty.vocab_size = 4;
  const auto e2 = decode_cooc(io::ByteReader(encode_cooc(empty), "mem"));
  EXPECT_TRUE(e2.entries.empty());
  EXPECT_EQ(e2.vocab_size, 4u);
}

TEST(CoocFormat, LargeRandomRoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-6, 100.0);
  SparseCoocMatrix m;
  m.vocab_size = 1000;
  m.window = 3;
  m.symmetric = false;
  for (std::uint32_t w = 0; w < 1000; ++w) {
    for (std::uint32_t c = 0; c < 100; ++c) m.entries.push_back({w, c * 10 + (w % 10), u(rng)});
  }
  const auto bytes = encode_cooc(m);
  const auto back = decode_cooc(io::ByteReader(bytes, "mem"));
  EXPECT_EQ(back.entries, m.entries);
  EXPECT_EQ(encode_cooc(back), bytes);
}

TEST(CoocFormat, BadMagicAndTruncation) {
  const TokenLines lines{{"a", "b", "a"}};
  const auto v = build_vocabulary(lines, 1);
  auto bytes = encode_cooc(accumulate_cooccurrences(lines, v, {}));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_cooc(io::ByteReader(bad, "mem")), FormatError);
  EXPECT_THROW(decode_cooc(io::ByteReader(bytes.substr(0, bytes.size() - 3), "mem")), FormatError);
  EXPECT_THROW(decode_cooc(io::ByteReader(bytes + "z", "mem")), FormatError);
  EXPECT_THROW(load_cooc(temp_file("does_not_exist")), IoError);
}

TEST(VocabularyFormat, RoundTripAndErrors) {
  const std::vector<std::string> s{"a", "b", "a", "c"};
  const auto v = build_vocabulary(s, 1);
  const auto path = temp_file("vocab.tsv");
  save_vocabulary(v, path);
  EXPECT_EQ(load_vocabulary(path), v);
  {
    std::ofstream out(path);
    out << "a\tnotanumber\n";
  }
  EXPECT_THROW(load_vocabulary(path), FormatError);
  std::filesystem::remove(path);
}
