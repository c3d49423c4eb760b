#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "autoar/series.hpp"

namespace autoar {

/// Outcome of a KPSS test of the null hypothesis "x is level-stationary".
struct KpssResult {
  double statistic = 0.0;       ///< eta = sum_t S_t^2 / (T^2 s^2(l))
  std::size_t bandwidth = 0;    ///< Bartlett-kernel lag l
  double critical_value = 0.0;
  bool reject_stationarity = false;
  /// Zero long-run variance (constant input); reported as non-rejecting.
  bool degenerate = false;
};

/// Smallest series length accepted by kpss_level.
inline constexpr std::size_t kKpssMinLength = 10;

/// Schwert rule floor(12 (T/100)^{1/4}).
std::size_t schwert_bandwidth(std::size_t n);

/// Asymptotic level-stationarity critical value. Supported significance
/// levels are 0.10, 0.05, 0.025 and 0.01; anything else is a ConfigError.
double kpss_critical_value(double significance);

/// Level KPSS test with a Bartlett long-run variance. The bandwidth defaults
/// to schwert_bandwidth(T).
KpssResult kpss_level(std::span<const double> x, double significance = 0.05,
                      std::optional<std::size_t> bandwidth = {});

struct DifferencingDecision {
  int d = 0;
  std::vector<bool> per_channel_reject;
  std::vector<KpssResult> per_channel;
};

/// d = 1 when at least ceil(C/2) channels reject level stationarity.
DifferencingDecision decide_differencing(const MultiChannelSeries& series,
                                         double significance = 0.05);

/// Same majority rule over an arbitrary collection of univariate samples.
DifferencingDecision decide_differencing(
    std::span<const std::span<const double>> samples, double significance);

/// First differences (d = 1) or identity (d = 0).
MultiChannelSeries difference(const MultiChannelSeries& series, int d);

/// Cumulative sum of predicted first differences (H x C) started from
/// `last_level` (one value per channel).
Eigen::MatrixXd integrate(const Eigen::MatrixXd& diff_forecast,
                          const Eigen::VectorXd& last_level);

}  // namespace autoar
