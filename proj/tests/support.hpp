#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "demand/backtest.hpp"
#include "demand/features.hpp"
#include "demand/synth.hpp"

namespace demand::fixture {

inline FeatureMatrix random_matrix(std::size_t n, std::uint64_t seed, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::normal_distribution<double> e(0.0, noise);
  std::vector<FeatureRow> rows;
  const Date start = make_date(2015, 1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRow r;
    r.date = start + Days{long(i)};
    for (std::size_t j = 0; j < 5; ++j) r.x[j] = u(rng);
    r.x[5] = (rng() % 7 == 0) ? 1.0 : 0.0;
    r.x[6] = double(1 + rng() % 53);
    r.x[7] = double(1 + rng() % 4);
    double y = 10.0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) y += 0.1 * double(j + 1) * r.x[j];
    r.target = y + e(rng);
    rows.push_back(r);
  }
  return FeatureMatrix(std::move(rows));
}

inline SynthResult small_synth(Date end = make_date(2019, 12, 31), std::uint64_t seed = 1) {
  SynthConfig c;
  c.end = end;
  c.seed = seed;
  return generate(c);
}

}  // namespace demand::fixture
