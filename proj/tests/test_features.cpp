#include <gtest/gtest.h>

#include <sstream>

#include "demand/error.hpp"
#include "demand/features.hpp"
#include "support.hpp"

using namespace demand;

TEST(Features, ConstantHistoryNonHoliday) {
  const DailySeries s(make_date(2010, 1, 1), std::vector<double>(1500, 100.0));
  const Date d = make_date(2013, 6, 3);
  const FeatureRow r = build_row(ObservedLags(s), HolidayCalendar{}, CovidSchedule{}, d);
  for (std::size_t k = 0; k < kNumLags; ++k) EXPECT_EQ(r.x[k], 100.0);
  EXPECT_EQ(r[Feature::PublicHoliday], 0.0);
  EXPECT_EQ(r[Feature::CovidLevel], 1.0);
  EXPECT_EQ(r[Feature::Week], double(week_number(d)));
  EXPECT_FALSE(r.target.has_value());
}

TEST(Features, ShortHistoryMissesLongestLag) {
  const Date d = make_date(2018, 4, 2);
  const DailySeries s(d - Days{800}, std::vector<double>(800, 5.0));
  try {
    build_row(ObservedLags(s), HolidayCalendar{}, CovidSchedule{}, d);
    FAIL() << "expected MissingLag";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingLag);
    EXPECT_NE(std::string(e.what()).find("1092"), std::string::npos);
  }
}

TEST(Features, EasterMondayRow) {
  const Date d = make_date(2018, 4, 2);
  HolidayCalendar cal;
  cal.add(d, "Easter Monday");
  const DailySeries s(make_date(2014, 1, 1), std::vector<double>(2000, 7.0));
  const FeatureRow r = build_row(ObservedLags(s), cal, CovidSchedule{}, d);
  EXPECT_EQ(r[Feature::PublicHoliday], 1.0);
  EXPECT_EQ(r[Feature::Week], 14.0);
}

TEST(Features, OneWeekWindow) {
  const auto syn = fixture::small_synth(make_date(2016, 12, 31));
  const DateRange w{make_date(2016, 3, 1), make_date(2016, 3, 7)};
  const FeatureMatrix X = build_training_matrix(syn.series, syn.holidays, syn.covid, w);
  ASSERT_EQ(X.size(), 7u);
  for (const auto& r : X) {
    EXPECT_EQ(r[Feature::Lag7d], syn.series.at(r.date - Days{7}));
    EXPECT_EQ(*r.target, syn.series.at(r.date));
  }
}

TEST(Features, WindowTooEarly) {
  const auto syn = fixture::small_synth(make_date(2016, 12, 31));
  const Date first = syn.series.start() + Days{kMaxLag - 1};
  try {
    build_training_matrix(syn.series, syn.holidays, syn.covid, {first, first + Days{10}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientHistory);
  }
  EXPECT_NO_THROW(build_training_matrix(syn.series, syn.holidays, syn.covid,
                                        {first + Days{1}, first + Days{10}}));
}

TEST(Features, LagColumnsAreShiftedCopies) {
  // Brute-force shift oracle: index arithmetic on the raw count vector.
  const auto syn = fixture::small_synth(make_date(2017, 12, 31), 5);
  const auto counts = syn.series.counts();
  const std::size_t first = kMaxLag;
  const DateRange w{syn.series.start() + Days{long(first)}, syn.series.end()};
  const FeatureMatrix X = build_training_matrix(syn.series, syn.holidays, syn.covid, w);
  ASSERT_EQ(long(X.size()), days_between(w.first, w.last) + 1);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const std::size_t t = first + i;
    for (std::size_t k = 0; k < kNumLags; ++k)
      ASSERT_EQ(X[i].x[k], counts[t - std::size_t(kLagOffsets[k])]) << i << " lag " << k;
    ASSERT_EQ(*X[i].target, counts[t]);
  }
}

TEST(Features, RowDomainsHold) {
  const auto syn = fixture::small_synth(make_date(2021, 12, 31), 2);
  const FeatureMatrix X = build_training_matrix(
      syn.series, syn.holidays, syn.covid, {syn.series.start() + Days{kMaxLag}, syn.series.end()});
  for (const auto& r : X) {
    ASSERT_TRUE(r[Feature::Week] >= 1 && r[Feature::Week] <= 53);
    ASSERT_TRUE(r[Feature::PublicHoliday] == 0 || r[Feature::PublicHoliday] == 1);
    ASSERT_TRUE(r[Feature::CovidLevel] >= 1 && r[Feature::CovidLevel] <= 4);
    for (std::size_t k = 0; k < kNumLags; ++k) ASSERT_GE(r.x[k], 0.0);
  }
}

TEST(Features, RecursiveLagsSubstitutePredictions) {
  const DailySeries s(make_date(2010, 1, 1), std::vector<double>(1500, 50.0));
  const Date train_end = make_date(2013, 6, 30);
  const std::vector<double> preds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  const RecursiveLags lags(s, train_end, preds);
  const Date day8 = train_end + Days{8};
  EXPECT_EQ(*lags.lag(day8, 7), 1.0);
  EXPECT_EQ(*lags.lag(train_end + Days{15}, 14), 1.0);
  EXPECT_EQ(*lags.lag(train_end + Days{7}, 7), 50.0);
  EXPECT_EQ(*lags.lag(day8, 364), 50.0);
  // Observed values after the boundary are never read.
  EXPECT_FALSE(RecursiveLags(s, train_end, {}).lag(day8, 7).has_value());
}

TEST(Features, CsvExportHasFixedColumnOrder) {
  const auto syn = fixture::small_synth(make_date(2015, 12, 31));
  const FeatureMatrix X = build_training_matrix(syn.series, syn.holidays, syn.covid,
                                                {make_date(2015, 1, 1), make_date(2015, 1, 2)});
  std::ostringstream out;
  write_feature_csv(out, X.rows());
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "date,lag7d,lag14d,lag1,lag2,lag3,public_holiday,week,covid_level,target");
  EXPECT_NE(text.find("\n2015-01-01,"), std::string::npos);
}
