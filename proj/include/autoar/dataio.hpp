#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "autoar/series.hpp"

namespace autoar {

/// Reads a benchmark CSV: one header row, a timestamp in the first column
/// (dropped), and one decimal column per channel. Rejects empty, non-numeric
/// and non-finite cells, naming the file line and column.
MultiChannelSeries load_csv(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_channels = {});

/// Train/validation/test partition of the leading rows of a series.
///
/// Fractional mode follows the long-horizon benchmark convention:
/// train = floor(0.7 T), test = floor(0.2 T), validation = the rest.
struct SplitSpec {
  enum class Mode { fractional, explicit_counts };

  Mode mode = Mode::fractional;
  std::size_t train_len = 0;
  std::size_t val_len = 0;
  std::size_t test_len = 0;

  static SplitSpec fractional() { return {}; }
  static SplitSpec explicit_counts(std::size_t train, std::size_t val,
                                   std::size_t test) {
    return {Mode::explicit_counts, train, val, test};
  }

  /// Concrete row counts for a series of `total_rows` rows. Throws DataError
  /// when the counts exceed the series or a segment would be empty.
  SplitSpec resolved(std::size_t total_rows) const;

  std::size_t val_begin() const { return train_len; }
  std::size_t test_begin() const { return train_len + val_len; }
  std::size_t end() const { return train_len + val_len + test_len; }
};

struct SplitSeries {
  MultiChannelSeries train;
  MultiChannelSeries val;
  MultiChannelSeries test;
};

SplitSeries split(const MultiChannelSeries& series, const SplitSpec& spec);

/// Number of (context, horizon) windows each segment yields when contexts of
/// length `context_len` may reach back into the preceding segments.
struct WindowCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

WindowCounts window_counts(const SplitSpec& resolved, std::size_t context_len,
                           std::size_t horizon);

/// Per-channel standardization fitted on a training split (population std).
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

Scaler fit_scaler(const MultiChannelSeries& train);
MultiChannelSeries apply_scaler(const Scaler& scaler,
                                const MultiChannelSeries& series);
MultiChannelSeries invert_scaler(const Scaler& scaler,
                                 const MultiChannelSeries& series);
/// Rows are time, columns are channels (e.g. a forecast matrix).
Eigen::MatrixXd invert_scaler(const Scaler& scaler,
                              const Eigen::MatrixXd& values);

/// The trailing floor(fraction * T) rows of a training split.
MultiChannelSeries subsample_train(const MultiChannelSeries& train,
                                   double fraction);

/// Built-in description of a standard long-horizon benchmark file.
struct DatasetPreset {
  std::string name;
  std::string file_name;
  std::size_t channels;
  std::size_t rows;
  SplitSpec split;
  std::vector<std::size_t> horizons;
};

std::span<const DatasetPreset> dataset_presets();

/// Case-insensitive lookup; throws ConfigError listing known presets.
const DatasetPreset& find_preset(std::string_view name);

}  // namespace autoar
