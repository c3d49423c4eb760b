#include "autoar/series.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "autoar/error.hpp"

namespace autoar {

MultiChannelSeries::MultiChannelSeries(Eigen::MatrixXd values,
                                       std::vector<std::string> channel_names)
    : values_(std::move(values)), names_(std::move(channel_names)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw DataError("series must have at least one row and one channel (got " +
                    std::to_string(values_.rows()) + "x" +
                    std::to_string(values_.cols()) + ")");
  }
  if (!values_.allFinite()) {
    for (Eigen::Index c = 0; c < values_.cols(); ++c) {
      for (Eigen::Index t = 0; t < values_.rows(); ++t) {
        if (!std::isfinite(values_(t, c))) {
          throw DataError("non-finite value at row " + std::to_string(t) +
                          ", channel " + std::to_string(c));
        }
      }
    }
  }
  if (names_.empty()) {
    names_.reserve(static_cast<std::size_t>(values_.cols()));
    for (Eigen::Index c = 0; c < values_.cols(); ++c) {
      names_.push_back("c" + std::to_string(c));
    }
  } else if (names_.size() != static_cast<std::size_t>(values_.cols())) {
    throw DataError("got " + std::to_string(names_.size()) +
                    " channel names for " + std::to_string(values_.cols()) +
                    " channels");
  }
}

MultiChannelSeries MultiChannelSeries::rows(std::size_t begin,
                                            std::size_t count) const {
  if (begin + count > length()) {
    throw DataError("row range [" + std::to_string(begin) + ", " +
                    std::to_string(begin + count) + ") exceeds series length " +
                    std::to_string(length()));
  }
  return MultiChannelSeries(
      values_.middleRows(static_cast<Eigen::Index>(begin),
                         static_cast<Eigen::Index>(count)),
      names_);
}

MultiChannelSeries MultiChannelSeries::select_channels(
    std::span<const std::size_t> order) const {
  Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(order.size()));
  std::vector<std::string> names;
  names.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= channels()) {
      throw DataError("channel index " + std::to_string(order[i]) +
                      " out of range");
    }
    out.col(static_cast<Eigen::Index>(i)) =
        values_.col(static_cast<Eigen::Index>(order[i]));
    names.push_back(names_[order[i]]);
  }
  return MultiChannelSeries(std::move(out), std::move(names));
}

}  // namespace autoar
