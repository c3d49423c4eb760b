#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "autoar/armodel.hpp"
#include "autoar/series.hpp"

namespace autoar {

/// Lookback candidates searched by default: log-spaced small orders plus the
/// context lengths common in long-horizon benchmarks.
std::vector<std::size_t> default_lookback_grid();

struct AutoArConfig {
  std::size_t max_lookback = 512;
  std::vector<std::size_t> lookback_grid = default_lookback_grid();
  double kpss_significance = 0.05;
  bool intercept = true;
  /// Skip the stationarity test and use this differencing order.
  std::optional<int> force_d;
  std::size_t jobs = 1;

  bool zero_shot = false;
  std::size_t zero_shot_window = 256;
  std::vector<std::size_t> zero_shot_grid{64, 96, 128, 192};

  /// Throws ConfigError on an empty, unsorted or duplicated grid, entries
  /// above max_lookback, or an unsupported significance level.
  void validate() const;
};

struct SelectionResult {
  std::size_t chosen_p = 0;
  int d = 0;
  std::map<std::size_t, double> bic_by_p;
  std::vector<bool> per_channel_reject;
  /// Grid entries too long for the available data.
  std::vector<std::size_t> skipped;
};

struct AutoArResult {
  FitResult fit;
  SelectionResult selection;
};

/// Differencing by per-channel KPSS majority, lookback by BIC over the grid
/// (ties toward the smaller p), then the fitted model at the chosen p.
AutoArResult run_auto_ar(const MultiChannelSeries& train,
                         const AutoArConfig& config);

/// Fixed-lookback AR without differencing or selection.
FitResult run_untuned_ar(const MultiChannelSeries& train, std::size_t p = 512,
                         const FitOptions& options = {});

/// True when every channel of `length` (differenced) rows has a full window
/// for lookback p and the pooled sample count exceeds the BIC parameter
/// count, so the criterion is defined.
bool lookback_feasible(std::size_t p, std::size_t length, std::size_t channels,
                       bool intercept);

/// Multiplicity of every target index of the differenced context when all
/// L - W + 1 rolling windows of length W are pooled (zero below p).
std::vector<double> rolling_window_weights(std::size_t context_len,
                                           std::size_t window, int d,
                                           std::size_t p);

/// Auto-AR fitted only on the rolling windows of one context (L x C).
AutoArResult fit_zero_shot(const MultiChannelSeries& context,
                           const AutoArConfig& config);

/// fit_zero_shot followed by an H-step forecast from the full context.
Eigen::MatrixXd run_zero_shot(const MultiChannelSeries& context,
                              const AutoArConfig& config, std::size_t horizon);

}  // namespace autoar
