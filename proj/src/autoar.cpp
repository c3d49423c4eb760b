#include "autoar/autoar.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

#include "autoar/error.hpp"
#include "autoar/stattests.hpp"

namespace autoar {

namespace {

void validate_grid(const std::vector<std::size_t>& grid, std::size_t max_lookback,
                   const char* what) {
  if (grid.empty()) throw ConfigError(std::string(what) + " is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == 0) throw ConfigError(std::string(what) + " contains 0");
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw ConfigError(std::string(what) +
                        " must be strictly increasing (no duplicates)");
    }
    if (grid[i] > max_lookback) {
      throw ConfigError(std::string(what) + " entry " + std::to_string(grid[i]) +
                        " exceeds max_lookback " + std::to_string(max_lookback));
    }
  }
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (auto x : v) out += (out.empty() ? "" : ", ") + std::to_string(x);
  return out;
}

std::vector<std::span<const double>> spans_of(const MultiChannelSeries& s) {
  std::vector<std::span<const double>> out;
  out.reserve(s.channels());
  for (std::size_t c = 0; c < s.channels(); ++c) out.push_back(s.channel(c));
  return out;
}

// Selection over already differenced channels. `weights_for(p)` returns the
// per-target multiplicities (empty for plain pooled fitting), and
// `feasible(p)` filters the grid.
template <typename Feasible, typename Weights>
AutoArResult select_lookback(std::span<const std::span<const double>> channels,
                             const std::vector<std::size_t>& grid, int d,
                             const FitOptions& options, Feasible feasible,
                             Weights weights_for) {
  AutoArResult out;
  out.selection.d = d;
  double best = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (std::size_t p : grid) {
    if (!feasible(p)) {
      out.selection.skipped.push_back(p);
      continue;
    }
    const std::vector<double> w = weights_for(p);
    std::vector<std::vector<double>> per_channel;
    if (!w.empty()) per_channel.assign(channels.size(), w);
    FitResult r = fit_differenced(channels, p, d, options, per_channel);
    out.selection.bic_by_p[p] = r.diagnostics.bic;
    if (!have_best || r.diagnostics.bic < best) {
      best = r.diagnostics.bic;
      out.fit = std::move(r);
      out.selection.chosen_p = p;
      have_best = true;
    }
  }
  if (!have_best) {
    throw DataError("no lookback candidate is feasible for the available data "
                    "(skipped: " + join(out.selection.skipped) + ")");
  }
  return out;
}

}  // namespace

std::vector<std::size_t> default_lookback_grid() {
  return {1, 2, 4, 8, 16, 32, 64, 96, 128, 192, 256, 384, 512};
}

void AutoArConfig::validate() const {
  validate_grid(lookback_grid, max_lookback, "lookback grid");
  (void)kpss_critical_value(kpss_significance);
  if (force_d && *force_d != 0 && *force_d != 1) {
    throw ConfigError("forced differencing must be 0 or 1");
  }
  if (zero_shot) {
    validate_grid(zero_shot_grid, max_lookback, "zero-shot grid");
    if (zero_shot_window <= zero_shot_grid.back()) {
      throw ConfigError("zero-shot window " + std::to_string(zero_shot_window) +
                        " must exceed every zero-shot grid entry (largest " +
                        std::to_string(zero_shot_grid.back()) + ")");
    }
  }
}

bool lookback_feasible(std::size_t p, std::size_t length, std::size_t channels,
                       bool intercept) {
  if (length <= p) return false;
  const std::size_t n = channels * (length - p);
  const std::size_t k = p + (intercept ? 1 : 0) + 1;
  return n > k;
}

AutoArResult run_auto_ar(const MultiChannelSeries& train,
                         const AutoArConfig& config) {
  config.validate();
  AutoArResult out;
  DifferencingDecision decision;
  if (config.force_d) {
    decision.d = *config.force_d;
  } else {
    decision = decide_differencing(train, config.kpss_significance);
  }
  const MultiChannelSeries work = difference(train, decision.d);
  const auto channels = spans_of(work);

  // Longest admissible lookback: capped by the configuration and by the
  // differenced length (at least one sample per channel).
  const std::size_t cap = std::min(config.max_lookback, work.length() - 1);
  const FitOptions options{config.intercept, config.jobs};
  out = select_lookback(
      channels, config.lookback_grid, decision.d, options,
      [&](std::size_t p) {
        return p <= cap && lookback_feasible(p, work.length(), work.channels(),
                                             config.intercept);
      },
      [](std::size_t) { return std::vector<double>{}; });
  out.selection.per_channel_reject = decision.per_channel_reject;
  out.fit.model.channel_names = train.channel_names();
  return out;
}

FitResult run_untuned_ar(const MultiChannelSeries& train, std::size_t p,
                         const FitOptions& options) {
  return fit(train, p, 0, options);
}

std::vector<double> rolling_window_weights(std::size_t context_len,
                                           std::size_t window, int d,
                                           std::size_t p) {
  if (window > context_len || window <= static_cast<std::size_t>(d)) {
    throw ConfigError("rolling window " + std::to_string(window) +
                      " does not fit a context of " + std::to_string(context_len));
  }
  const std::size_t n = context_len - static_cast<std::size_t>(d);
  const std::size_t w = window - static_cast<std::size_t>(d);
  const std::size_t last_start = context_len - window;
  std::vector<double> weights(n, 0.0);
  for (std::size_t j = p; j < n; ++j) {
    // Window s (differenced coordinates) covers [s, s + w - 1]; target j needs
    // its p lags inside the same window.
    const std::size_t lo = j + 1 >= w ? j + 1 - w : 0;
    const std::size_t hi = std::min(j - p, last_start);
    if (hi >= lo) weights[j] = static_cast<double>(hi - lo + 1);
  }
  return weights;
}

AutoArResult fit_zero_shot(const MultiChannelSeries& context,
                           const AutoArConfig& config) {
  AutoArConfig cfg = config;
  cfg.zero_shot = true;
  cfg.validate();
  const std::size_t len = context.length();
  const std::size_t w = cfg.zero_shot_window;
  if (w >= len) {
    throw ConfigError("zero-shot window " + std::to_string(w) +
                      " must be shorter than the context length " +
                      std::to_string(len));
  }
  const std::size_t n_windows = len - w + 1;

  DifferencingDecision decision;
  if (cfg.force_d) {
    decision.d = *cfg.force_d;
  } else {
    std::vector<std::span<const double>> samples;
    samples.reserve(context.channels() * n_windows);
    for (std::size_t c = 0; c < context.channels(); ++c) {
      const auto ch = context.channel(c);
      for (std::size_t s = 0; s < n_windows; ++s) samples.push_back(ch.subspan(s, w));
    }
    decision = decide_differencing(
        std::span<const std::span<const double>>(samples), cfg.kpss_significance);
  }

  const MultiChannelSeries work = difference(context, decision.d);
  const auto channels = spans_of(work);
  const std::size_t w_diff = w - static_cast<std::size_t>(decision.d);
  const FitOptions options{cfg.intercept, 1};
  AutoArResult out = select_lookback(
      channels, cfg.zero_shot_grid, decision.d, options,
      [&](std::size_t p) {
        if (w_diff <= p) return false;
        const std::size_t n = context.channels() * n_windows * (w_diff - p);
        return n > p + (cfg.intercept ? 1 : 0) + 1;
      },
      [&](std::size_t p) { return rolling_window_weights(len, w, decision.d, p); });
  out.selection.per_channel_reject = decision.per_channel_reject;
  out.fit.model.channel_names = context.channel_names();
  return out;
}

Eigen::MatrixXd run_zero_shot(const MultiChannelSeries& context,
                              const AutoArConfig& config, std::size_t horizon) {
  const AutoArResult r = fit_zero_shot(context, config);
  return forecast(r.fit.model, context, horizon);
}

}  // namespace autoar
