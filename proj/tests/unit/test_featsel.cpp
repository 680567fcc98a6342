#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "loadcast/core/rng.hpp"
#include "loadcast/featsel/screen.hpp"

using namespace loadcast;
using namespace loadcast::featsel;

namespace {

// Tau-b by direct pair enumeration.
double kendall_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  double conc = 0, disc = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double a = x[i] - x[j], b = y[i] - y[j];
      if (a == 0 && b == 0) continue;
      if (a == 0) {
        ++tx;
      } else if (b == 0) {
        ++ty;
      } else if ((a > 0) == (b > 0)) {
        ++conc;
      } else {
        ++disc;
      }
    }
  }
  return (conc - disc) / std::sqrt((conc + disc + tx) * (conc + disc + ty));
}

std::pair<std::vector<double>, std::vector<double>> gaussian_pair(std::size_t n, double rho, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = rho * x[i] + std::sqrt(1.0 - rho * rho) * rng.normal();
  }
  return {x, y};
}

// Kraskov estimator by exhaustive neighbour search.
double ksg_brute_force(const std::vector<double>& x, const std::vector<double>& y, std::size_t k) {
  const std::size_t n = x.size();
  const auto psi = digamma_table(n + 1);
  double acc = 0.0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = j == i ? INFINITY : std::max(std::abs(x[i] - x[j]), std::abs(y[i] - y[j]));
    }
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    const double eps = d[k - 1];
    std::size_t nx = 0, ny = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      nx += std::abs(x[i] - x[j]) < eps ? 1 : 0;
      ny += std::abs(y[i] - y[j]) < eps ? 1 : 0;
    }
    acc += psi[nx + 1] + psi[ny + 1];
  }
  return psi[k] + psi[n] - acc / static_cast<double>(n);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

// y_t = 0.5 y_{t-1} + c x_{t-1} + e_t with white-noise x.
std::pair<std::vector<double>, std::vector<double>> coupled(std::size_t n, double c, Rng& rng) {
  std::vector<double> x(n), y(n);
  for (std::size_t t = 0; t < n; ++t) {
    x[t] = rng.normal();
    y[t] = rng.normal() + (t > 0 ? 0.5 * y[t - 1] + c * x[t - 1] : 0.0);
  }
  return {x, y};
}

// Target driven by two AR(1) columns; the rest are independent AR(1) noise.
preprocess::TimeSeriesTable planted_table(std::size_t n, std::size_t distractors, std::uint64_t seed) {
  Rng rng(seed);
  auto ar1 = [&](double phi) {
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) v[t] = (t > 0 ? phi * v[t - 1] : 0.0) + rng.normal();
    return v;
  };
  preprocess::TimeSeriesTable t;
  for (std::size_t i = 0; i < n; ++i) t.time.push_back(static_cast<std::int64_t>(i) * 15);
  const auto a = ar1(0.8), b = ar1(0.8);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.normal() + (i > 0 ? 0.5 * y[i - 1] + 0.8 * a[i - 1] + 0.8 * b[i - 1] : 0.0);
  }
  t.add(0, "load", preprocess::ColumnKind::kFloat, preprocess::FeatureGroup::kDynamic, y);
  t.add(1, "driver_a", preprocess::ColumnKind::kFloat, preprocess::FeatureGroup::kStatic, a);
  t.add(2, "driver_b", preprocess::ColumnKind::kFloat, preprocess::FeatureGroup::kStatic, b);
  for (std::size_t d = 0; d < distractors; ++d) {
    t.add(10 + static_cast<int>(d), "noise_" + std::to_string(d), preprocess::ColumnKind::kFloat,
          preprocess::FeatureGroup::kStatic, ar1(0.8));
  }
  return t;
}

}  // namespace

TEST(Correlation, PearsonExamples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> lin, neg;
  for (double v : x) {
    lin.push_back(2 * v + 1);
    neg.push_back(-v);
  }
  EXPECT_NEAR(pearson(x, lin), 1.0, 1e-15);
  EXPECT_EQ(pearson(x, neg), -1.0);
  EXPECT_EQ(pearson(x, x), 1.0);
  // Hand value: deviations (-1,0,1) and (-1,1,0) give 1 / sqrt(2 * 2).
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
  EXPECT_THROW(pearson(x, std::vector<double>(5, 2.0)), DataError);
  EXPECT_THROW(pearson(x, std::vector<double>{1, 2}), ShapeError);
}

TEST(Correlation, SpearmanExamples) {
  std::vector<double> x, e, rev;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i * 0.3);
    e.push_back(std::exp(i * 0.3));
    rev.push_back(-i * 7.0);
  }
  EXPECT_NEAR(spearman(x, e), 1.0, 1e-15);
  EXPECT_NEAR(spearman(x, rev), -1.0, 1e-15);
  // Rank differences (0,1,1,0): 1 - 6*2/(4*15) = 0.8.
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
  EXPECT_THROW(spearman(x, std::vector<double>(20, 1.0)), DataError);
}

TEST(Correlation, AverageRanksShareTies) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 10, 30}), (std::vector<double>{1.5, 3, 1.5, 4}));
}

TEST(Correlation, KendallExamples) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_NEAR(kendall(a, std::vector<double>{1, 3, 2}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(kendall(a, std::vector<double>{4, 5, 6}), 1.0);
  EXPECT_EQ(kendall(a, std::vector<double>{9, 5, 1}), -1.0);
  EXPECT_THROW(kendall(a, std::vector<double>{1, 1, 1}), DataError);
}

TEST(Correlation, KendallMatchesPairEnumerationWithTies) {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(150), y(150);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = static_cast<double>(rng.below(8));
      y[i] = rep % 2 ? static_cast<double>(rng.below(5)) + 0.3 * x[i] : rng.normal();
    }
    EXPECT_NEAR(kendall(x, y), kendall_pairs(x, y), 1e-12);
  }
}

TEST(Correlation, Invariances) {
  Rng rng(12);
  std::vector<double> x(300), y(300), xa(300), xm(300);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = 0.4 * x[i] + rng.normal();
    xa[i] = 3.5 * x[i] + 7.0;
    xm[i] = std::exp(x[i]) + x[i] * x[i] * x[i];
  }
  EXPECT_NEAR(pearson(xa, y), pearson(x, y), 1e-12);
  EXPECT_EQ(spearman(xm, y), spearman(x, y));
  EXPECT_EQ(kendall(xm, y), kendall(x, y));
  EXPECT_EQ(std::signbit(spearman(x, y)), std::signbit(kendall(x, y)));
}

TEST(Special, IncompleteBetaMatchesBoost) {
  const double shapes[] = {0.5, 1.0, 2.5, 10.0, 50.0, 500.0, 5000.0};
  double worst = 0.0;
  for (double a : shapes) {
    for (double b : shapes) {
      for (double x = 0.0005; x < 1.0; x += 0.0333) {
        worst = std::max(worst, std::abs(incomplete_beta(a, b, x) - boost::math::ibeta(a, b, x)));
      }
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Special, FTailMatchesBoost) {
  for (double d1 : {1.0, 2.0, 4.0, 8.0}) {
    for (double d2 : {10.0, 100.0, 991.0}) {
      boost::math::fisher_f dist(d1, d2);
      for (double f : {0.01, 0.5, 1.0, 2.0, 5.0, 20.0}) {
        EXPECT_NEAR(f_upper_tail(f, d1, d2), boost::math::cdf(boost::math::complement(dist, f)), 1e-10);
      }
    }
  }
  EXPECT_EQ(f_upper_tail(0.0, 2, 10), 1.0);
}

TEST(Special, DigammaAtIntegers) {
  const auto psi = digamma_table(1000);
  EXPECT_NEAR(psi[1], -0.5772156649015329, 1e-15);
  EXPECT_NEAR(psi[1000], std::log(1000.0) - 1.0 / 2000.0 - 1.0 / (12.0 * 1e6), 1e-12);
}

TEST(Copula, IndependentUniformsScoreNearZero) {
  Rng rng(21);
  std::vector<double> x(5000), y(5000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform();
  }
  EXPECT_NEAR(copula_entropy(x, y).score, 0.0, 0.02);
}

TEST(Copula, GaussianMatchesClosedForm) {
  const auto [x, y] = gaussian_pair(5000, 0.9, 22);
  const CopulaEntropy ce = copula_entropy(x, y);
  EXPECT_NEAR(ce.score, -0.5 * std::log(1.0 - 0.81), 0.05);
  EXPECT_EQ(ce.ce, -ce.score);
}

TEST(Copula, PrunedSearchMatchesBruteForce) {
  for (double rho : {0.0, 0.6, 0.99}) {
    const auto [x, y] = gaussian_pair(800, rho, 25);
    const std::uint64_t seed = 0x5eed;
    const auto rx = copula_ranks(x, seed), ry = copula_ranks(y, seed ^ 0x9e3779b97f4a7c15ULL);
    const auto ux = detail::copula_grid(x.size(), seed + 1), uy = detail::copula_grid(x.size(), seed + 2);
    std::vector<double> cx(x.size()), cy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      cx[i] = ux[static_cast<std::size_t>(rx[i])];
      cy[i] = uy[static_cast<std::size_t>(ry[i])];
    }
    for (std::size_t k : {1u, 3u, 7u}) {
      EXPECT_NEAR(copula_entropy(x, y, k, seed).score, ksg_brute_force(cx, cy, k), 1e-12) << rho << " " << k;
    }
  }
}

TEST(Copula, MonotoneTransformDoesNotChangeScore) {
  const auto [x, y] = gaussian_pair(2000, 0.5, 23);
  std::vector<double> ex(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) ex[i] = std::exp(2.0 * x[i]) - 4.0;
  EXPECT_EQ(copula_entropy(ex, y).score, copula_entropy(x, y).score);
}

TEST(Copula, IndependenceScoreShrinksWithSampleSize) {
  double previous = INFINITY;
  for (std::size_t n : {200u, 1000u, 5000u}) {
    std::vector<double> mags;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const auto [x, y] = gaussian_pair(n, 0.0, 100 + seed);
      mags.push_back(std::abs(copula_entropy(x, y).score));
    }
    const double m = median(mags);
    EXPECT_LT(m, previous) << "n=" << n;
    previous = m;
  }
}

TEST(Copula, DiscreteColumnsAreDeterministic) {
  Rng rng(24);
  std::vector<double> x(500), y(500);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(rng.below(4));
    y[i] = x[i] + rng.normal();
  }
  EXPECT_EQ(copula_entropy(x, y).score, copula_entropy(x, y).score);
  EXPECT_GT(copula_entropy(x, y).score, 0.1);
}

TEST(Copula, Preconditions) {
  std::vector<double> small(49, 1.0);
  EXPECT_THROW(copula_entropy(small, small), DataError);
  std::vector<double> x(60), y(60);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] = static_cast<double>(i);
  EXPECT_THROW(copula_entropy(x, y, 60), ConfigError);
}

TEST(Granger, PlantedCouplingIsDetected) {
  Rng rng(31);
  const auto [x, y] = coupled(1000, 0.8, rng);
  const GrangerResult g = granger_test(x, y, 2);
  EXPECT_LT(g.p_value, 0.001);
  EXPECT_EQ(g.n_effective, 998u);
  EXPECT_GE(g.rss_restricted, g.rss_unrestricted);
  EXPECT_GE(g.f, 0.0);
}

TEST(Granger, NullRejectionRateIsCalibrated) {
  Rng rng(32);
  int rejected = 0;
  const int trials = 400;
  for (int i = 0; i < trials; ++i) {
    const auto [x, y] = coupled(300, 0.0, rng);
    rejected += granger_test(x, y, 2).p_value < 0.05 ? 1 : 0;
  }
  EXPECT_GT(rejected, trials * 0.02);
  EXPECT_LT(rejected, trials * 0.09);
}

TEST(Granger, StatisticIsInvariantToAffineRescaling) {
  Rng rng(33);
  auto [x, y] = coupled(500, 0.2, rng);
  const GrangerResult base = granger_test(x, y, 3);
  for (auto& v : x) v = -4.0 * v + 100.0;
  for (auto& v : y) v = 0.01 * v - 3.0;
  EXPECT_NEAR(granger_test(x, y, 3).f, base.f, 1e-9 * base.f);
}

TEST(Granger, ConstantRegressorIsRankDeficient) {
  Rng rng(34);
  auto [x, y] = coupled(200, 0.0, rng);
  std::fill(x.begin(), x.end(), 3.0);
  EXPECT_THROW(granger_test(x, y, 2), DataError);
  EXPECT_THROW(granger_test(std::vector<double>(9, 1.0), std::vector<double>(9, 1.0), 2), DataError);
}

TEST(Screen, RecoversPlantedDrivers) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScreenReport rep = screen(planted_table(3000, 6, seed), 0);
    EXPECT_EQ(rep.retained(), (std::vector<int>{1, 2})) << "seed " << seed;
    EXPECT_EQ(rep.features.size(), 8u);
    for (const auto& f : rep.features) {
      EXPECT_NE(f.id, 0);
      EXPECT_GE(f.granger_p, 0.0);
      EXPECT_LE(f.granger_p, 1.0);
      EXPECT_LE(std::abs(f.kendall), 1.0);
      if (f.retained) {
        EXPECT_LT(f.granger_p, rep.alpha);
        EXPECT_GE(f.ce_score, rep.ce_min);
      }
    }
  }
}

TEST(Screen, ZeroAlphaRetainsNothing) {
  ScreenOptions opt;
  opt.alpha = 0.0;
  EXPECT_TRUE(screen(planted_table(1000, 3, 7), 0, opt).retained().empty());
}

TEST(Screen, FailingFeatureBecomesAWarning) {
  preprocess::TimeSeriesTable t = planted_table(1000, 2, 8);
  t.add(20, "flat", preprocess::ColumnKind::kFloat, preprocess::FeatureGroup::kStatic, std::vector<double>(1000, 1.0));
  WarningCapture warnings;
  const ScreenReport rep = screen(t, 0);
  EXPECT_TRUE(warnings.contains("'flat'"));
  EXPECT_FALSE(rep.at(20).error.empty());
  EXPECT_FALSE(rep.at(20).retained);
  EXPECT_TRUE(rep.at(1).error.empty());
}

TEST(Screen, PersistentTargetIsDifferenced) {
  preprocess::TimeSeriesTable t = planted_table(2000, 2, 9);
  std::vector<double> walk(2000);
  Rng rng(10);
  for (std::size_t i = 1; i < walk.size(); ++i) walk[i] = walk[i - 1] + rng.normal();
  t.columns[0].values = walk;
  EXPECT_TRUE(screen(t, 0).target_differenced);
  EXPECT_FALSE(screen(planted_table(2000, 2, 9), 0).target_differenced);
}

TEST(Screen, PercentileInterpolates) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 75.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 50.0), 2.5);
  EXPECT_DOUBLE_EQ(percentile({1, NAN, 3}, 100.0), 3.0);
}

TEST(Screen, StaticFloorTopsUpByScore) {
  ScreenReport rep;
  auto add = [&](int id, preprocess::FeatureGroup g, double ce, bool keep) {
    FeatureScore f;
    f.id = id;
    f.group = g;
    f.ce_score = ce;
    f.retained = keep;
    rep.features.push_back(f);
  };
  add(1, preprocess::FeatureGroup::kStatic, 0.3, true);
  add(2, preprocess::FeatureGroup::kStatic, 0.1, false);
  add(3, preprocess::FeatureGroup::kStatic, 0.2, false);
  add(4, preprocess::FeatureGroup::kStatic, 0.05, false);
  add(37, preprocess::FeatureGroup::kDynamic, 0.9, true);
  EXPECT_EQ(with_static_floor(rep, 3), (std::vector<int>{1, 2, 3, 37}));
  EXPECT_EQ(with_static_floor(rep, 0), (std::vector<int>{1, 37}));
}

TEST(Screen, ReportCsvHasDocumentedHeader) {
  const ScreenReport rep = screen(planted_table(500, 1, 12), 0);
  const auto path = std::filesystem::temp_directory_path() / "loadcast_test_screen.csv";
  write_screen_report(path.string(), rep);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("id,name,pearson,spearman,kendall,ce_score,granger_F,granger_p,retained", 0), 0u);
  std::filesystem::remove(path);
}
