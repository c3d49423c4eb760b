#include "autoar/stattests.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "autoar/error.hpp"

namespace autoar {

std::size_t schwert_bandwidth(std::size_t n) {
  return static_cast<std::size_t>(
      std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

double kpss_critical_value(double significance) {
  // Kwiatkowski et al. (1992), Table 1, eta_mu.
  struct Entry {
    double level;
    double value;
  };
  static constexpr Entry kTable[] = {
      {0.10, 0.347}, {0.05, 0.463}, {0.025, 0.574}, {0.01, 0.739}};
  for (const auto& e : kTable) {
    if (std::abs(e.level - significance) < 1e-12) return e.value;
  }
  throw ConfigError("unsupported KPSS significance " +
                    std::to_string(significance) +
                    " (use 0.10, 0.05, 0.025 or 0.01)");
}

KpssResult kpss_level(std::span<const double> x, double significance,
                      std::optional<std::size_t> bandwidth) {
  const std::size_t n = x.size();
  if (n < kKpssMinLength) {
    throw DataError("KPSS needs at least " + std::to_string(kKpssMinLength) +
                    " observations, got " + std::to_string(n));
  }
  KpssResult out;
  out.critical_value = kpss_critical_value(significance);
  out.bandwidth = bandwidth.value_or(schwert_bandwidth(n));
  if (out.bandwidth >= n) {
    throw ConfigError("KPSS bandwidth " + std::to_string(out.bandwidth) +
                      " must be smaller than the series length " +
                      std::to_string(n));
  }

  double mean = 0.0;
  double scale = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("KPSS input contains non-finite values");
    mean += v;
    scale = std::max(scale, std::abs(v));
  }
  mean /= static_cast<double>(n);

  std::vector<double> e(n);
  double partial = 0.0;
  double sum_partial_sq = 0.0;
  double gamma0 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    e[t] = x[t] - mean;
    partial += e[t];
    sum_partial_sq += partial * partial;
    gamma0 += e[t] * e[t];
  }

  const double nd = static_cast<double>(n);
  const double noise_floor = 1e-12 * scale;
  if (gamma0 <= nd * noise_floor * noise_floor) {
    out.degenerate = true;
    return out;
  }

  double long_run = gamma0;
  const std::size_t l = out.bandwidth;
  for (std::size_t s = 1; s <= l; ++s) {
    double acc = 0.0;
    for (std::size_t t = s; t < n; ++t) acc += e[t] * e[t - s];
    const double w = 1.0 - static_cast<double>(s) / static_cast<double>(l + 1);
    long_run += 2.0 * w * acc;
  }
  long_run /= nd;
  if (!(long_run > 0.0)) {
    out.degenerate = true;
    return out;
  }

  out.statistic = sum_partial_sq / (nd * nd) / long_run;
  out.reject_stationarity = out.statistic > out.critical_value;
  return out;
}

DifferencingDecision decide_differencing(
    std::span<const std::span<const double>> samples, double significance) {
  if (samples.empty()) {
    throw DataError("differencing decision needs at least one channel");
  }
  DifferencingDecision out;
  out.per_channel.reserve(samples.size());
  out.per_channel_reject.reserve(samples.size());
  std::size_t rejections = 0;
  for (std::size_t c = 0; c < samples.size(); ++c) {
    KpssResult r;
    try {
      r = kpss_level(samples[c], significance);
    } catch (const DataError& err) {
      throw DataError("channel " + std::to_string(c) + ": " + err.what());
    }
    rejections += r.reject_stationarity ? 1 : 0;
    out.per_channel_reject.push_back(r.reject_stationarity);
    out.per_channel.push_back(r);
  }
  const std::size_t majority = (samples.size() + 1) / 2;
  out.d = rejections >= majority ? 1 : 0;
  return out;
}

DifferencingDecision decide_differencing(const MultiChannelSeries& series,
                                         double significance) {
  std::vector<std::span<const double>> channels;
  channels.reserve(series.channels());
  for (std::size_t c = 0; c < series.channels(); ++c) {
    channels.push_back(series.channel(c));
  }
  return decide_differencing(std::span<const std::span<const double>>(channels),
                             significance);
}

MultiChannelSeries difference(const MultiChannelSeries& series, int d) {
  if (d == 0) return series;
  if (d != 1) {
    throw ConfigError("differencing order " + std::to_string(d) +
                      " is not supported (only 0 or 1)");
  }
  if (series.length() < 2) {
    throw DataError("first differences need at least two rows");
  }
  const auto& v = series.values();
  const Eigen::Index n = v.rows() - 1;
  Eigen::MatrixXd out = v.bottomRows(n) - v.topRows(n);
  return MultiChannelSeries(std::move(out), series.channel_names());
}

Eigen::MatrixXd integrate(const Eigen::MatrixXd& diff_forecast,
                          const Eigen::VectorXd& last_level) {
  if (diff_forecast.cols() != last_level.size()) {
    throw DataError("integrate: " + std::to_string(diff_forecast.cols()) +
                    " forecast channels but " +
                    std::to_string(last_level.size()) + " last levels");
  }
  Eigen::MatrixXd out(diff_forecast.rows(), diff_forecast.cols());
  for (Eigen::Index c = 0; c < diff_forecast.cols(); ++c) {
    double level = last_level(c);
    for (Eigen::Index h = 0; h < diff_forecast.rows(); ++h) {
      level += diff_forecast(h, c);
      out(h, c) = level;
    }
  }
  return out;
}

}  // namespace autoar
