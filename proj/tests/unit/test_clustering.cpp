#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "cmv/clustering.hpp"
#include "oracles.hpp"

using namespace cmv;

namespace {

EmbeddingTable blobs(std::mt19937_64& rng, int per_blob, const std::vector<std::pair<double, double>>& centres,
                     double radius) {
  std::normal_distribution<double> g(0.0, radius);
  EmbeddingTable t{RowMatrix(per_blob * static_cast<int>(centres.size()), 2)};
  int r = 0;
  for (const auto& [x, y] : centres) {
    for (int i = 0; i < per_blob; ++i, ++r) {
      t.vectors(r, 0) = x + g(rng);
      t.vectors(r, 1) = y + g(rng);
    }
  }
  return t;
}

SppmiMatrix random_sppmi(std::mt19937_64& rng, std::uint32_t V, Eigen::MatrixXd& dense) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SppmiMatrix s;
  s.vocab_size = V;
  dense = Eigen::MatrixXd::Zero(V, V);
  for (std::uint32_t w = 0; w < V; ++w) {
    for (std::uint32_t c = 0; c < V; ++c) {
      if (u(rng) < 0.6) continue;
      dense(w, c) = u(rng) * 3.0 + 0.01;
      s.entries.push_back({w, c, dense(w, c)});
    }
  }
  s.rebuild_offsets();
  return s;
}

}  // namespace

TEST(KMeans, KEqualsNIsPermutation) {
  std::mt19937_64 rng(1);
  const auto t = blobs(rng, 1, {{0, 0}, {1, 5}, {3, 2}, {7, 7}, {-2, 4}}, 0.0);
  KMeansOptions opt;
  opt.K = 5;
  const auto c = kmeans(t, opt);
  EXPECT_EQ(c.inertia(), 0.0);
  std::set<ClusterId> ids(c.assignment.begin(), c.assignment.end());
  EXPECT_EQ(ids.size(), 5u);
}

TEST(KMeans, SeparatedBlobsRecovered) {
  std::mt19937_64 rng(2);
  const auto t = blobs(rng, 40, {{0, 0}, {100, 0}}, 1.0);
  KMeansOptions opt;
  opt.K = 2;
  opt.seed = 5;
  const auto c = kmeans(t, opt);
  for (int i = 1; i < 40; ++i) EXPECT_EQ(c.assignment[i], c.assignment[0]);
  for (int i = 41; i < 80; ++i) EXPECT_EQ(c.assignment[i], c.assignment[40]);
  EXPECT_NE(c.assignment[0], c.assignment[40]);
}

TEST(KMeans, MatchesExhaustiveLloydOnSomeSeed) {
  std::mt19937_64 rng(3);
  const auto t = blobs(rng, 10, {{0, 0}, {4, 1}, {2, 5}}, 1.2);
  const double best = oracle::exhaustive_kmeans_inertia(t.vectors, 3);
  double ours = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    KMeansOptions opt;
    opt.K = 3;
    opt.seed = seed;
    ours = std::min(ours, kmeans(t, opt).inertia());
  }
  EXPECT_NEAR(ours, best, 1e-9);
}

TEST(KMeans, InertiaNonIncreasingAndFixedPoint) {
  std::mt19937_64 rng(4);
  const auto t = blobs(rng, 50, {{0, 0}, {3, 0}, {0, 3}, {3, 3}}, 1.5);
  KMeansOptions opt;
  opt.K = 6;
  opt.seed = 11;
  opt.max_iters = 1000;
  const auto c = kmeans(t, opt);
  for (std::size_t i = 1; i < c.inertia_history.size(); ++i) {
    EXPECT_LE(c.inertia_history[i], c.inertia_history[i - 1] + 1e-12);
  }
  for (Eigen::Index k = 0; k < 6; ++k) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
    int n = 0;
    for (int i = 0; i < t.rows(); ++i) {
      if (c.assignment[static_cast<std::size_t>(i)] == k) {
        mean += t.vectors.row(i);
        ++n;
      }
    }
    ASSERT_GT(n, 0);
    EXPECT_LE((mean / n - c.centroids.row(k)).norm(), 1e-6);
  }
}

TEST(KMeans, DeterministicPerSeed) {
  std::mt19937_64 rng(5);
  const auto t = blobs(rng, 30, {{0, 0}, {2, 2}, {4, 0}}, 1.0);
  KMeansOptions opt;
  opt.K = 4;
  opt.seed = 42;
  EXPECT_EQ(encode_clustering(kmeans(t, opt)), encode_clustering(kmeans(t, opt)));
}

TEST(KMeans, AngularNormalizesPoints) {
  EmbeddingTable t{RowMatrix(4, 2)};
  t.vectors << 1, 0, 10, 0.1, 0, 1, 0.1, 20;
  KMeansOptions opt;
  opt.K = 2;
  opt.metric = Metric::angular;
  const auto c = kmeans(t, opt);
  EXPECT_EQ(c.assignment[0], c.assignment[1]);
  EXPECT_EQ(c.assignment[2], c.assignment[3]);
  EXPECT_NE(c.assignment[0], c.assignment[2]);
}

TEST(KMeans, Errors) {
  EmbeddingTable t{RowMatrix::Zero(3, 2)};
  KMeansOptions opt;
  opt.K = 4;
  EXPECT_THROW(kmeans(t, opt), BadParameter);
  opt.K = 0;
  EXPECT_THROW(kmeans(t, opt), BadParameter);
  opt.K = 2;
  t.vectors(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(kmeans(t, opt), BadInput);
}

TEST(Aggregate, IdentityClusteringIsDense) {
  std::mt19937_64 rng(6);
  Eigen::MatrixXd dense;
  const auto s = random_sppmi(rng, 12, dense);
  ContextClustering c;
  c.centroids = RowMatrix::Zero(12, 1);
  for (ClusterId k = 0; k < 12; ++k) c.assignment.push_back(k);
  const auto agg = aggregate_sppmi(s, c);
  EXPECT_EQ((agg.table - dense).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Aggregate, OneClusterIsRowSum) {
  std::mt19937_64 rng(7);
  Eigen::MatrixXd dense;
  const auto s = random_sppmi(rng, 10, dense);
  ContextClustering c;
  c.centroids = RowMatrix::Zero(1, 1);
  c.assignment.assign(10, 0);
  const auto agg = aggregate_sppmi(s, c);
  for (int w = 0; w < 10; ++w) EXPECT_NEAR(agg.table(w, 0), dense.row(w).sum(), 1e-12);
}

TEST(Aggregate, MatchesDoubleLoopAndConservesMass) {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd dense;
  const auto s = random_sppmi(rng, 40, dense);
  ContextClustering c;
  c.centroids = RowMatrix::Zero(5, 1);
  std::uniform_int_distribution<int> k(0, 4);
  for (int i = 0; i < 40; ++i) c.assignment.push_back(static_cast<ClusterId>(k(rng)));
  const auto agg = aggregate_sppmi(s, c);
  for (int w = 0; w < 40; ++w) {
    for (int kk = 0; kk < 5; ++kk) {
      double ref = 0.0;
      for (int cc = 0; cc < 40; ++cc) {
        if (c.assignment[static_cast<std::size_t>(cc)] == static_cast<ClusterId>(kk)) ref += dense(w, cc);
      }
      EXPECT_NEAR(agg.table(w, kk), ref, 1e-12);
    }
    EXPECT_NEAR(agg.table.row(w).sum(), dense.row(w).sum(), 1e-9);
  }
  EXPECT_EQ(agg.beta, 0.0);
}

TEST(Aggregate, LabelPermutationPermutesColumns) {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd dense;
  const auto s = random_sppmi(rng, 20, dense);
  ContextClustering c;
  c.centroids = RowMatrix::Zero(4, 1);
  for (int i = 0; i < 20; ++i) c.assignment.push_back(static_cast<ClusterId>(i % 4));
  const std::vector<ClusterId> perm{2, 0, 3, 1};
  ContextClustering p = c;
  for (auto& a : p.assignment) a = perm[a];
  const auto t1 = aggregate_sppmi(s, c).table;
  const auto t2 = aggregate_sppmi(s, p).table;
  for (int k = 0; k < 4; ++k) EXPECT_EQ((t1.col(k) - t2.col(perm[static_cast<std::size_t>(k)])).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Aggregate, UnassignedContextThrows) {
  std::mt19937_64 rng(10);
  Eigen::MatrixXd dense;
  const auto s = random_sppmi(rng, 6, dense);
  ContextClustering c;
  c.centroids = RowMatrix::Zero(2, 1);
  c.assignment = {0, 1, 0};
  EXPECT_THROW(aggregate_sppmi(s, c), BadClustering);
  c.assignment = {0, 1, 0, 1, 0, 7};
  EXPECT_THROW(aggregate_sppmi(s, c), BadClustering);
}

TEST(ColumnNormalize, Examples) {
  ClusteredSppmi t{RowMatrix(2, 1), 0.0};
  t.table << 4, 0;
  const auto half = column_normalize(t, 0.5);
  EXPECT_EQ(half.table(0, 0), 2.0);
  EXPECT_EQ(half.table(1, 0), 0.0);
  EXPECT_EQ(half.beta, 0.5);

  ClusteredSppmi col{RowMatrix(3, 1), 0.0};
  col.table << 1, 2, 5;
  EXPECT_NEAR(column_normalize(col, 1.0).table.sum(), 1.0, 1e-15);

  std::mt19937_64 rng(11);
  ClusteredSppmi r{RowMatrix::Random(5, 3).cwiseAbs(), 0.0};
  r.table.col(1).setZero();
  const auto same = column_normalize(r, 0.0);
  EXPECT_EQ(same.table, r.table);
  EXPECT_TRUE(column_normalize(r, 1.0).table.col(1).isZero());
  EXPECT_THROW(column_normalize(r, 1.5), BadParameter);
  EXPECT_THROW(column_normalize(r, -0.1), BadParameter);
}

TEST(ClusterFormats, RoundTrip) {
  ContextClustering c;
  c.centroids = RowMatrix(2, 3);
  c.centroids << 0.5, -1.25, 2, 3, 4, 0.125;
  c.assignment = {1, 0, 1, 1};
  const auto bytes = encode_clustering(c);
  EXPECT_EQ(bytes.substr(0, 8), "CMVCLUS1");
  const auto back = decode_clustering(io::ByteReader(bytes, "mem"));
  EXPECT_EQ(back.centroids, c.centroids);
  EXPECT_EQ(back.assignment, c.assignment);
  EXPECT_THROW(decode_clustering(io::ByteReader(bytes.substr(0, bytes.size() - 2), "mem")), FormatError);

  ClusteredSppmi t{RowMatrix(2, 2), 0.5};
  t.table << 1, 0.25, 0, 8;
  const auto tb = decode_clustered(io::ByteReader(encode_clustered(t), "mem"));
  EXPECT_EQ(tb.table, t.table);
  EXPECT_EQ(tb.beta, 0.5);
}
