#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "loadcast/core/rng.hpp"
#include "loadcast/metrics/metrics.hpp"

using namespace loadcast;
using namespace loadcast::metrics;

namespace {

std::vector<double> random_series(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Evaluate, PerfectPrediction) {
  const std::vector<double> y = {3.0, 1.5, -2.0, 8.0};
  const auto r = evaluate(y, y);
  EXPECT_EQ(r.mape, 0.0);
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_EQ(r.rmse, 0.0);
  EXPECT_EQ(r.r2, 1.0);
  EXPECT_EQ(r.n, 4u);
}

TEST(Evaluate, HandExample) {
  const std::vector<double> actual = {1.0, 2.0}, pred = {2.0, 2.0};
  const auto r = evaluate(pred, actual);
  // |2-1|/1 = 1, |2-2|/2 = 0 -> 50%; squared errors 1, 0; mean 1.5, deviations 0.25 + 0.25
  EXPECT_NEAR(r.mape, 50.0, 1e-12);
  EXPECT_NEAR(r.mae, 0.5, 1e-12);
  EXPECT_NEAR(r.rmse, std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(r.r2, -1.0, 1e-12);
}

TEST(Evaluate, MeanPredictorHasZeroR2) {
  Rng rng(3);
  const auto y = random_series(rng, 257, -5.0, 20.0);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  const std::vector<double> pred(y.size(), mean);
  EXPECT_NEAR(evaluate(pred, y).r2, 0.0, 1e-12);
}

TEST(Evaluate, ZeroActualMakesMapeUndefined) {
  const std::vector<double> actual = {0.0, 2.0, 4.0, 0.0}, pred = {1.0, 3.0, 4.0, -1.0};
  const auto r = evaluate(pred, actual);
  EXPECT_FALSE(r.mape_defined());
  EXPECT_TRUE(std::isnan(r.mape));
  EXPECT_EQ(r.zero_actual, (std::vector<std::size_t>{0, 3}));
  EXPECT_NEAR(r.mape_nonzero, 25.0, 1e-12);
  EXPECT_NEAR(r.mae, 0.75, 1e-12);
  EXPECT_TRUE(r.r2_defined());
}

TEST(Evaluate, ConstantActualMakesR2Undefined) {
  const std::vector<double> actual = {5.0, 5.0, 5.0}, pred = {4.0, 5.0, 6.0};
  const auto r = evaluate(pred, actual);
  EXPECT_FALSE(r.r2_defined());
  EXPECT_NEAR(r.mape, 40.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.rmse, std::sqrt(2.0 / 3.0), 1e-12);
}

TEST(Evaluate, RejectsBadInput) {
  const std::vector<double> a = {1.0, 2.0}, b = {1.0, 2.0, 3.0}, one = {1.0};
  EXPECT_THROW(evaluate(a, b), ShapeError);
  EXPECT_THROW(evaluate(one, one), DataError);
  const std::vector<double> bad = {1.0, std::nan("")};
  EXPECT_THROW(evaluate(bad, a), NumericError);
}

TEST(Evaluate, MaeNeverExceedsRmse) {
  Rng rng(11);
  for (int c = 0; c < 2000; ++c) {
    const std::size_t n = 2 + rng.below(60);
    const auto y = random_series(rng, n, 0.5, 10.0);
    const auto p = random_series(rng, n, 0.0, 12.0);
    const auto r = evaluate(p, y);
    EXPECT_LE(r.mae, r.rmse);
    EXPECT_GE(r.mape, 0.0);
    EXPECT_LE(r.r2, 1.0);
  }
}

TEST(Evaluate, EqualAbsoluteErrorsGiveMaeEqualRmse) {
  const std::vector<double> y = {1.0, 4.0, 2.0, 9.0}, p = {1.25, 3.75, 2.25, 8.75};
  const auto r = evaluate(p, y);
  EXPECT_EQ(r.mae, 0.25);
  EXPECT_EQ(r.rmse, 0.25);
}

TEST(Evaluate, ShiftInvariance) {
  Rng rng(5);
  const auto y = random_series(rng, 100, 1.0, 3.0);
  const auto p = random_series(rng, 100, 1.0, 3.0);
  std::vector<double> ys = y, ps = p;
  for (auto& v : ys) v += 50.0;
  for (auto& v : ps) v += 50.0;
  const auto a = evaluate(p, y), b = evaluate(ps, ys);
  EXPECT_NEAR(a.r2, b.r2, 1e-10);
  EXPECT_NEAR(a.mae, b.mae, 1e-10);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-10);
  EXPECT_GT(std::abs(a.mape - b.mape), 1.0);
}

TEST(Evaluate, PermutationInvariance) {
  Rng rng(6);
  const auto y = random_series(rng, 64, 1.0, 3.0);
  const auto p = random_series(rng, 64, 1.0, 3.0);
  std::vector<std::size_t> idx(64);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(std::span<std::size_t>(idx));
  std::vector<double> yp, pp;
  for (auto i : idx) {
    yp.push_back(y[i]);
    pp.push_back(p[i]);
  }
  const auto a = evaluate(p, y), b = evaluate(pp, yp);
  EXPECT_NEAR(a.mape, b.mape, 1e-12);
  EXPECT_NEAR(a.mae, b.mae, 1e-12);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-12);
  EXPECT_NEAR(a.r2, b.r2, 1e-12);
}

TEST(ErrorDensity, ZeroErrorIsSingleSpike) {
  const std::vector<double> y = {1.0, 2.0, 3.0};
  WarningCapture cap;
  const auto d = error_density(y, y, 10);
  EXPECT_TRUE(cap.contains("single-bin"));
  ASSERT_EQ(d.absolute.bins(), 1u);
  EXPECT_EQ(d.absolute.counts[0], 3u);
  EXPECT_LT(d.absolute.edges[0], 0.0);
  EXPECT_GT(d.absolute.edges[1], 0.0);
  EXPECT_EQ(d.relative.bins(), 1u);
}

TEST(ErrorDensity, SymmetricErrorsGiveSymmetricHistogram) {
  std::vector<double> y, p;
  for (int i = 0; i < 40; ++i) {
    const double e = 0.1 * static_cast<double>(1 + i % 5);
    y.push_back(10.0);
    p.push_back(10.0 + e);
    y.push_back(10.0);
    p.push_back(10.0 - e);
  }
  const auto d = error_density(p, y, 6);
  const auto& c = d.absolute.counts;
  ASSERT_EQ(c.size(), 6u);
  for (std::size_t b = 0; b < c.size(); ++b) EXPECT_EQ(c[b], c[c.size() - 1 - b]) << b;
}

TEST(ErrorDensity, MassSumsToOneAndDensityIntegratesToOne) {
  Rng rng(8);
  const auto y = random_series(rng, 500, 1.0, 5.0);
  const auto p = random_series(rng, 500, 1.0, 5.0);
  const auto d = error_density(p, y, 25);
  for (const auto* h : {&d.relative, &d.absolute}) {
    double mass = 0.0, area = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < h->bins(); ++b) {
      mass += h->mass[b];
      area += h->density[b] * (h->edges[b + 1] - h->edges[b]);
      count += h->counts[b];
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_NEAR(area, 1.0, 1e-9);
    EXPECT_EQ(count, 500u);
  }
  std::vector<double> e(500);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = p[i] - y[i];
  EXPECT_EQ(d.absolute.edges.front(), *std::min_element(e.begin(), e.end()));
  EXPECT_EQ(d.absolute.edges.back(), *std::max_element(e.begin(), e.end()));
}

TEST(ErrorDensity, RelativeErrorsSkipZeroActuals) {
  const std::vector<double> y = {0.0, 2.0, 4.0, 5.0}, p = {1.0, 3.0, 2.0, 5.0};
  const auto d = error_density(p, y, 2);
  std::size_t rel = 0, abs = 0;
  for (auto c : d.relative.counts) rel += c;
  for (auto c : d.absolute.counts) abs += c;
  EXPECT_EQ(rel, 3u);
  EXPECT_EQ(abs, 4u);
  EXPECT_DOUBLE_EQ(d.relative.edges.front(), -50.0);
  EXPECT_DOUBLE_EQ(d.relative.edges.back(), 50.0);
}

TEST(ErrorDensity, RejectsBadArguments) {
  const std::vector<double> y = {1.0, 2.0};
  EXPECT_THROW(error_density(y, y, 1), ConfigError);
  const std::vector<double> one = {1.0};
  EXPECT_THROW(error_density(one, one, 4), DataError);
}

TEST(MetricsCsv, WritesFourMetricColumns) {
  const auto dir = std::filesystem::temp_directory_path() / "loadcast_metrics_test";
  std::filesystem::create_directories(dir);
  const std::vector<double> actual = {1.0, 2.0}, pred = {2.0, 2.0};
  write_metrics_csv((dir / "metrics.csv").string(), {{"test", evaluate(pred, actual)}});
  const std::string text = read_file((dir / "metrics.csv").string());
  EXPECT_EQ(text.substr(0, text.find('\n')), "split,MAPE,MAE,RMSE,R2");
  EXPECT_NE(text.find("test,50,0.5,"), std::string::npos);

  write_error_density_csv((dir / "error_density.csv").string(), {{"test", error_density(pred, actual, 4)}});
  const std::string dens = read_file((dir / "error_density.csv").string());
  EXPECT_EQ(dens.substr(0, dens.find('\n')), "split,kind,bin_lo,bin_hi,count,mass,density");
  EXPECT_NE(dens.find("test,relative_pct,"), std::string::npos);
  EXPECT_NE(dens.find("test,absolute,"), std::string::npos);
  std::filesystem::remove_all(dir);
}
