#include "demand/dm_test.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "demand/error.hpp"

namespace demand {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DmResult dm_test(std::span<const double> ea, std::span<const double> eb, int h, DmLoss loss) {
  if (ea.size() != eb.size())
    throw Error(ErrorCode::InvalidArgument, "DM test: error series differ in length");
  const std::size_t n = ea.size();
  if (n < 10) throw Error(ErrorCode::InvalidArgument, "DM test needs at least 10 errors");
  if (h < 1 || std::size_t(h) >= n)
    throw Error(ErrorCode::InvalidArgument, "DM test: horizon must be in [1, n)");

  std::vector<double> d(n);
  bool all_zero = true;
  for (std::size_t t = 0; t < n; ++t) {
    d[t] = loss == DmLoss::Squared ? ea[t] * ea[t] - eb[t] * eb[t]
                                   : std::abs(ea[t]) - std::abs(eb[t]);
    all_zero = all_zero && d[t] == 0.0;
  }
  if (all_zero)
    throw Error(ErrorCode::DegenerateDifferential, "identical losses; the test is undefined");

  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= double(n);
  auto autocov = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t t = k; t < n; ++t) s += (d[t] - mean) * (d[t - k] - mean);
    return s / double(n);
  };
  double v = autocov(0);
  for (int k = 1; k < h; ++k) v += 2.0 * autocov(std::size_t(k));
  if (!(v > 0.0))
    throw Error(ErrorCode::DegenerateDifferential,
                "non-positive long-run variance of the loss differential");

  const double nd = double(n), hd = double(h);
  const double raw = mean / std::sqrt(v / nd);
  const double correction = std::sqrt((nd + 1.0 - 2.0 * hd + hd * (hd - 1.0) / nd) / nd);
  DmResult r;
  r.statistic = raw * correction;
  r.p_value = std::erfc(std::abs(r.statistic) / std::sqrt(2.0));
  r.mean_differential = mean;
  r.long_run_variance = v;
  r.n = n;
  r.h = h;
  return r;
}

}  // namespace demand
