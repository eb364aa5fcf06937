#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "demand/backtest.hpp"
#include "demand/ensembles.hpp"
#include "demand/error.hpp"
#include "support.hpp"

using namespace demand;

namespace {

std::vector<ModelPtr> light_models() {
  auto fp = TreeEnsembleParams::forest_defaults();
  fp.n_trees = 15;
  auto gp = TreeEnsembleParams::gbm_defaults();
  gp.n_trees = 30;
  const ModelPtr forest = std::make_shared<ForestModel>("forest", fp);
  const ModelPtr gbm = std::make_shared<GbmModel>("gbm", gp);
  const ModelPtr additive = std::make_shared<AdditiveModel>();
  return {std::make_shared<InHouseModel>(), std::make_shared<SeasonalNaiveModel>(),
          std::make_shared<EnhancedNaiveModel>(), std::make_shared<ArimaModel>(),
          std::make_shared<RidgeModel>(), std::make_shared<KnnModel>(), forest, gbm, additive,
          std::make_shared<VotingModel>("voting", std::vector<ModelPtr>{gbm, forest, additive}),
          std::make_shared<ResidualCorrectedModel>("gbm_ar", gbm, ResidualCorrector{ResidualCorrector::Kind::Autoregressive})};
}

ForecastVintage vintage_of(const std::vector<std::pair<double, double>>& pa, int index = 0) {
  ForecastVintage v;
  v.vintage = index;
  for (std::size_t i = 0; i < pa.size(); ++i)
    v.records.push_back({make_date(2017, 1, 1) + Days{long(i)}, int(i) + 1, pa[i].first, pa[i].second});
  return v;
}

}  // namespace

TEST(Schedule, ThreeYearsGiveTwelveVintages) {
  const auto s = make_schedule(make_date(2016, 12, 31), make_date(2019, 12, 31));
  ASSERT_EQ(s.size(), 12u);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].horizon_start, s[i].train_end + Days{1});
    EXPECT_EQ(s[i].horizon_end, s[i].horizon_start + Days{90});
    if (i > 0) {
      EXPECT_EQ(s[i].train_end, s[i - 1].train_end + Days{91});
      EXPECT_EQ(s[i].horizon_start, s[i - 1].horizon_end + Days{1});
    }
  }
  EXPECT_LE(s.back().horizon_end, make_date(2019, 12, 31));
}

TEST(Schedule, SpanBoundaries) {
  const Date t = make_date(2018, 1, 1);
  EXPECT_EQ(make_schedule(t, t + Days{91}).size(), 1u);
  try {
    make_schedule(t, t + Days{90});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySchedule);
  }
}

TEST(Recursive, ShortLagsFollowTheProtocol) {
  const auto s = fixture::small_synth(make_date(2018, 12, 31), 12);
  const Vintage v{0, make_date(2018, 3, 31), make_date(2018, 4, 1), make_date(2018, 6, 30)};
  for (const auto& m : light_models()) {
    const ForecastVintage fv = recursive_forecast(*m, s.series, s.holidays, s.covid, v);
    ASSERT_EQ(fv.records.size(), 91u);
    for (int day = 1; day <= 7; ++day) {
      const FeatureRow& r = fv.rows[std::size_t(day - 1)];
      for (std::size_t k = 0; k < kNumLags; ++k)
        ASSERT_EQ(r.x[k], s.series.at(r.date - Days{kLagOffsets[k]})) << m->name() << " day " << day;
    }
    for (int day = 8; day <= 91; ++day) {
      const FeatureRow& r = fv.rows[std::size_t(day - 1)];
      ASSERT_EQ(r[Feature::Lag7d], fv.records[std::size_t(day - 8)].predicted) << m->name();
      if (day > 14) {
        ASSERT_EQ(r[Feature::Lag14d], fv.records[std::size_t(day - 15)].predicted);
      }
      for (std::size_t k = 2; k < kNumLags; ++k)
        ASSERT_EQ(r.x[k], s.series.at(r.date - Days{kLagOffsets[k]}));
    }
  }
}

TEST(Recursive, NoLeakageFromFutureActuals) {
  const auto s = fixture::small_synth(make_date(2018, 12, 31), 13);
  const Vintage v{0, make_date(2018, 3, 31), make_date(2018, 4, 1), make_date(2018, 6, 30)};
  std::vector<double> counts(s.series.counts().begin(), s.series.counts().end());
  std::mt19937_64 rng(1);
  const std::size_t cut = std::size_t(days_between(s.series.start(), v.train_end));
  for (std::size_t i = cut + 1; i < counts.size(); ++i) counts[i] = double(rng() % 500);
  const DailySeries perturbed(s.series.start(), counts);
  for (const auto& m : light_models()) {
    const auto a = recursive_forecast(*m, s.series, s.holidays, s.covid, v);
    const auto b = recursive_forecast(*m, perturbed, s.holidays, s.covid, v);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      ASSERT_EQ(a.records[i].predicted, b.records[i].predicted) << m->name();
      ASSERT_EQ(b.records[i].actual, perturbed.at(b.records[i].date));
    }
  }
}

TEST(Recursive, ExcludedDatesVanish) {
  const auto s = fixture::small_synth(make_date(2021, 12, 31), 14);
  BacktestOptions opt;
  opt.exclusions = ExclusionRanges({{make_date(2020, 1, 1), make_date(2020, 12, 31)}});
  const auto schedule = make_schedule(make_date(2019, 9, 30), make_date(2021, 6, 30));
  const std::vector<ModelPtr> models{std::make_shared<RidgeModel>(), std::make_shared<SeasonalNaiveModel>()};
  const BacktestReport rep = run_backtest(models, s.series, s.holidays, s.covid, schedule, opt);
  std::size_t days = 0;
  for (const auto& cells : rep.cells)
    for (const auto& v : cells)
      for (const auto& r : v.records) {
        ASSERT_FALSE(opt.exclusions.excluded(r.date)) << format_date(r.date);
        ++days;
      }
  EXPECT_GT(days, 0u);
  EXPECT_LT(rep.vintages.size(), schedule.size());
}

TEST(Metrics, HandExamples) {
  const Metrics a = metrics(std::vector<double>{0, 0}, std::vector<double>{3, 4});
  EXPECT_EQ(a.rmse, std::sqrt(12.5));
  EXPECT_NEAR(a.rmse, 3.53553, 1e-5);
  EXPECT_EQ(a.mae, 3.5);
  const Metrics b = metrics(std::vector<double>{110, 180}, std::vector<double>{100, 200});
  ASSERT_TRUE(b.mape.has_value());
  EXPECT_DOUBLE_EQ(*b.mape, 10.0);
  const Metrics c = metrics(std::vector<double>{5, 6, 7}, std::vector<double>{5, 6, 7});
  EXPECT_EQ(c.rmse, 0.0);
  EXPECT_EQ(c.mae, 0.0);
  EXPECT_EQ(*c.mape, 0.0);
}

TEST(Metrics, ZeroActualsAreDroppedFromMape) {
  const Metrics m = metrics(std::vector<double>{2, 110}, std::vector<double>{0, 100});
  EXPECT_EQ(m.mape_dropped, 1u);
  EXPECT_DOUBLE_EQ(*m.mape, 10.0);
  EXPECT_EQ(m.mae, 6.0);
  EXPECT_FALSE(metrics(std::vector<double>{1}, std::vector<double>{0}).mape.has_value());
}

TEST(Metrics, RmseDominatesMae) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> p(1 + std::size_t(t % 91)), a(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = u(rng);
      a[i] = u(rng);
    }
    const Metrics m = metrics(p, a);
    ASSERT_GE(m.rmse, m.mae);
  }
}

TEST(Ranks, Examples) {
  EXPECT_EQ(mean_ranks({std::vector<double>(12, 1.0), std::vector<double>(12, 2.0)}),
            (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(rank_with_ties(std::vector<double>{3.0, 3.0, 1.0}), (std::vector<double>{2.5, 2.5, 1.0}));
  EXPECT_EQ(rank_with_ties(std::vector<double>{2.0, 2.0}), (std::vector<double>{1.5, 1.5}));
  try {
    mean_ranks({{1.0, NAN}, {2.0, 3.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingCell);
  }
}

TEST(Ranks, MatchIndependentRecomputation) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> scores(16, std::vector<double>(12));
    for (auto& row : scores)
      for (auto& v : row) v = double(rng() % 9);  // frequent ties
    std::vector<double> oracle(16, 0.0);
    for (std::size_t v = 0; v < 12; ++v)
      for (std::size_t m = 0; m < 16; ++m) {
        int less = 0, equal = 0;
        for (std::size_t o = 0; o < 16; ++o) {
          less += scores[o][v] < scores[m][v];
          equal += scores[o][v] == scores[m][v];
        }
        oracle[m] += 1.0 + less + 0.5 * (equal - 1);
      }
    for (auto& o : oracle) o /= 12.0;
    ASSERT_EQ(mean_ranks(scores), oracle);
  }
}

TEST(Ranks, EachVintageIsAPermutation) {
  const auto s = fixture::small_synth(make_date(2018, 12, 31), 15);
  const auto schedule = make_schedule(make_date(2017, 12, 31), make_date(2018, 12, 31));
  const auto models = light_models();
  const BacktestReport rep = run_backtest(models, s.series, s.holidays, s.covid, schedule, {});
  for (std::size_t v = 0; v < rep.vintages.size(); ++v) {
    double sum = 0.0;
    for (std::size_t m = 0; m < models.size(); ++m) sum += rep.ranks[m][v];
    const double n = double(models.size());
    ASSERT_EQ(sum, n * (n + 1) / 2);
  }
}

TEST(Backtest, SingleModelRanksOne) {
  const auto s = fixture::small_synth(make_date(2018, 12, 31), 15);
  const auto schedule = make_schedule(make_date(2017, 12, 31), make_date(2018, 12, 31));
  const std::vector<ModelPtr> models{std::make_shared<RidgeModel>()};
  const BacktestReport rep = run_backtest(models, s.series, s.holidays, s.covid, schedule, {});
  for (double r : rep.ranks[0]) EXPECT_EQ(r, 1.0);
  EXPECT_EQ(rep.summary[0].mean_rank, 1.0);
  EXPECT_TRUE(rep.dm.empty());
}

TEST(Backtest, SerialAndParallelReportsAgree) {
  const auto s = fixture::small_synth(make_date(2018, 12, 31), 17);
  const auto schedule = make_schedule(make_date(2017, 12, 31), make_date(2018, 12, 31));
  const auto models = light_models();
  BacktestOptions opt;
  opt.seed = 5;
  const auto a = run_backtest(models, s.series, s.holidays, s.covid, schedule, opt, Execution::Serial);
  const auto b = run_backtest(models, s.series, s.holidays, s.covid, schedule, opt, Execution::Parallel);
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t v = 0; v < a.vintages.size(); ++v)
      for (std::size_t i = 0; i < a.cells[m][v].records.size(); ++i)
        ASSERT_EQ(a.cells[m][v].records[i].predicted, b.cells[m][v].records[i].predicted);
}

TEST(Backtest, ErrorsCarryModelAndVintageContext) {
  const auto s = fixture::small_synth(make_date(2018, 12, 31), 18);
  const auto schedule = make_schedule(make_date(2017, 12, 31), make_date(2018, 12, 31));
  const std::vector<ModelPtr> models{std::make_shared<KnnModel>("knn_huge", 100000)};
  try {
    run_backtest(models, s.series, s.holidays, s.covid, schedule, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
    EXPECT_NE(std::string(e.what()).find("knn_huge"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("vintage"), std::string::npos);
  }
}

TEST(Stability, PerfectModelIsZero) {
  std::vector<ForecastVintage> vs;
  for (int k = 0; k < 3; ++k) {
    std::vector<std::pair<double, double>> pa;
    for (int i = 0; i < 91; ++i) pa.push_back({double(i + k), double(i + k)});
    vs.push_back(vintage_of(pa, k));
  }
  const auto prof = stability_profile(vs);
  ASSERT_EQ(prof.size(), 91u);
  for (const auto& r : prof) {
    EXPECT_EQ(r.count, 3u);
    EXPECT_EQ(r.median, 0.0);
    EXPECT_EQ(r.q1, 0.0);
    EXPECT_EQ(r.q3, 0.0);
    EXPECT_EQ(r.min, 0.0);
    EXPECT_EQ(r.max, 0.0);
  }
}

TEST(Stability, GrowingResidualsGiveMonotoneSpread) {
  std::vector<ForecastVintage> vs;
  for (int k = 0; k < 12; ++k) {
    std::vector<std::pair<double, double>> pa;
    for (int day = 1; day <= 91; ++day) pa.push_back({100.0, 100.0 + double(day) * double(k - 5)});
    vs.push_back(vintage_of(pa, k));
  }
  const auto prof = stability_profile(vs);
  for (std::size_t i = 0; i < prof.size(); ++i) {
    EXPECT_EQ(prof[i].count, 12u);
    if (i > 0) {
      EXPECT_GT(prof[i].q3 - prof[i].q1, prof[i - 1].q3 - prof[i - 1].q1);
    }
  }
  // type-7 quantiles of {-5..6} * day
  EXPECT_DOUBLE_EQ(prof[0].median, 0.5);
  EXPECT_DOUBLE_EQ(prof[0].q1, -2.25);
  EXPECT_DOUBLE_EQ(prof[0].q3, 3.25);
}

TEST(DieboldMariano, DegenerateDifferentialIsRejected) {
  const std::vector<double> e{1, -2, 3, 0.5, -1, 2, 1.5, -0.5, 0.25, 4};
  try {
    dm_test(e, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DegenerateDifferential);
  }
  std::vector<double> a(12, 2.0), b(12, 1.0);
  EXPECT_THROW(dm_test(a, b), Error);
}

TEST(DieboldMariano, TenPointHandExample) {
  const std::vector<double> ea{1.2, -0.5, 2.3, 0.8, -1.7, 0.4, 3.1, -2.2, 0.9, 1.5};
  const std::vector<double> eb{0.7, -1.1, 1.0, 1.9, -0.3, 0.6, 1.4, -0.8, 0.2, 1.1};
  // d = ea^2 - eb^2; dbar = 1.757; gamma0 = 8.389561;
  // s = dbar / sqrt(gamma0 / 10) * sqrt(9 / 10); p = erfc(|s| / sqrt 2).
  const DmResult r = dm_test(ea, eb, 1);
  EXPECT_NEAR(r.mean_differential, 1.757, 1e-12);
  EXPECT_NEAR(r.long_run_variance, 8.389561, 1e-12);
  EXPECT_NEAR(r.statistic, 1.8197988998862356, 1e-9);
  EXPECT_NEAR(r.p_value, 0.06878963533864264, 1e-9);

  const DmResult r2 = dm_test(ea, eb, 2);
  EXPECT_NEAR(r2.long_run_variance, 3.8947592, 1e-9);
  EXPECT_NEAR(r2.statistic, 2.3888985331816794, 1e-9);
}

TEST(DieboldMariano, PowerAgainstVarianceRatioFour) {
  int rejections = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::mt19937_64 rng(std::uint64_t(7000 + trial));
    std::normal_distribution<double> a(0.0, 1.0), b(0.0, 2.0);
    std::vector<double> ea(364), eb(364);
    for (std::size_t i = 0; i < ea.size(); ++i) {
      ea[i] = a(rng);
      eb[i] = b(rng);
    }
    rejections += dm_test(ea, eb, 1).p_value < 0.05;
  }
  EXPECT_GE(rejections, 160);
}

TEST(DieboldMariano, AbsoluteLossAndSignConvention) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> a(0.0, 1.0), b(0.0, 3.0);
  std::vector<double> ea(200), eb(200);
  for (std::size_t i = 0; i < ea.size(); ++i) {
    ea[i] = a(rng);
    eb[i] = b(rng);
  }
  EXPECT_LT(dm_test(ea, eb, 1, DmLoss::Absolute).statistic, 0.0);
  EXPECT_GT(dm_test(eb, ea, 1, DmLoss::Squared).statistic, 0.0);
}
