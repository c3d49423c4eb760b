#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace autoar {

/// A uniformly spaced, real-valued series of T rows and C channels.
///
/// Values are stored column-major (T x C), so every channel is a contiguous
/// run of T doubles. Instances are immutable once built: T >= 1, C >= 1,
/// and every entry is finite.
class MultiChannelSeries {
 public:
  /// Channel names default to "c0", "c1", ... when `channel_names` is empty.
  explicit MultiChannelSeries(Eigen::MatrixXd values,
                              std::vector<std::string> channel_names = {});

  std::size_t length() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t channels() const { return static_cast<std::size_t>(values_.cols()); }

  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& channel_names() const { return names_; }

  std::span<const double> channel(std::size_t c) const {
    return {values_.col(static_cast<Eigen::Index>(c)).data(), length()};
  }

  double operator()(std::size_t t, std::size_t c) const {
    return values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
  }

  /// Rows [begin, begin + count) as a new series with the same channel names.
  MultiChannelSeries rows(std::size_t begin, std::size_t count) const;

  /// Channels reordered by `order` (a permutation or any selection).
  MultiChannelSeries select_channels(std::span<const std::size_t> order) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

}  // namespace autoar
