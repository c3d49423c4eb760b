#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "autoar/lag_regression.hpp"
#include "autoar/series.hpp"

namespace autoar {

/// A fitted autoregression of order p on the d-times differenced series:
///   y_{t+1} = intercept + sum_{k=1}^{p} coeffs[k-1] * y_{t-k+1}.
/// One coefficient vector is shared by every channel.
struct ArModel {
  std::size_t lookback = 0;
  int differencing = 0;
  bool has_intercept = true;
  double intercept = 0.0;
  Eigen::VectorXd coeffs;
  double noise_var = 0.0;  ///< RSS / n (maximum-likelihood convention)
  std::size_t n_train_samples = 0;
  /// Channel names seen at fit time; empty when unknown.
  std::vector<std::string> channel_names;

  /// Coefficients plus intercept, e.g. 513 for p = 512.
  std::size_t parameter_count() const {
    return lookback + (has_intercept ? 1 : 0);
  }

  /// Rows of context the model consumes: p + d.
  std::size_t required_context() const {
    return lookback + static_cast<std::size_t>(differencing);
  }
};

struct FitDiagnostics {
  double rss = 0.0;
  double n = 0.0;
  double log_likelihood = 0.0;
  /// n ln(rss/n) + k ln(n), k = coefficients + intercept + noise variance.
  double bic = 0.0;
  bool regularized = false;
};

struct FitOptions {
  bool intercept = true;
  std::size_t jobs = 1;
};

struct FitResult {
  ArModel model;
  FitDiagnostics diagnostics;
};

/// Least-squares (Gaussian maximum-likelihood) fit of a pooled AR(p) on the
/// d-differenced channels of `train`.
FitResult fit(const MultiChannelSeries& train, std::size_t p, int d,
              const FitOptions& options = {});

/// Same fit on channels that are already differenced `d` times. With
/// non-empty `weights`, channel c's target t counts weights[c][t] times.
FitResult fit_differenced(std::span<const std::span<const double>> channels,
                          std::size_t p, int d, const FitOptions& options,
                          std::span<const std::vector<double>> weights = {});

/// One independent model per channel (non-default, for experimentation).
std::vector<FitResult> fit_per_channel(const MultiChannelSeries& train,
                                       std::size_t p, int d,
                                       const FitOptions& options = {});

/// BIC and log-likelihood for a solution with `k_params` free parameters.
FitDiagnostics make_diagnostics(double rss, double n, std::size_t k_params);

/// Recursive forecast of H steps per channel from the last p + d context
/// rows, integrated back to levels when d = 1. Returns H x C.
Eigen::MatrixXd forecast(const ArModel& model, const MultiChannelSeries& context,
                         std::size_t horizon);

/// Univariate version on a raw context window (at least p + d values).
Eigen::VectorXd forecast_one(const ArModel& model, std::span<const double> context,
                             std::size_t horizon);

/// The recursive forecast is affine in the last p + d context values:
///   forecast = weights * window + offset,
/// with the window ordered oldest to newest. Evaluating many windows through
/// this matrix turns the recursion into one matrix product.
struct ForecastOperator {
  Eigen::MatrixXd weights;  ///< H x (p + d)
  Eigen::VectorXd offset;   ///< H
};

ForecastOperator make_forecast_operator(const ArModel& model, std::size_t horizon);

/// JSON record {format, version, p, d, intercept, has_intercept, coeffs,
/// noise_var, n_train_samples, channel_names}. Doubles round-trip exactly.
std::string serialize_model(const ArModel& model);
ArModel parse_model(std::string_view text);

}  // namespace autoar
