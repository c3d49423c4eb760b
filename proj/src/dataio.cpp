#include "autoar/dataio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "autoar/error.hpp"

namespace autoar {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string where(const std::filesystem::path& path, std::size_t line_no,
                  std::size_t column) {
  return path.string() + ":" + std::to_string(line_no) + " column " +
         std::to_string(column);
}

}  // namespace

MultiChannelSeries load_csv(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_channels) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) {
    throw DataError(path.string() + ": empty file");
  }
  {
    auto header = split_fields(line);
    if (header.size() < 2) {
      throw DataError(path.string() +
                      ": header needs a timestamp column and at least one "
                      "channel");
    }
    for (std::size_t i = 1; i < header.size(); ++i) {
      names.emplace_back(header[i]);
    }
  }
  const std::size_t n_channels = names.size();
  if (expected_channels && *expected_channels != n_channels) {
    throw DataError(path.string() + ": expected " +
                    std::to_string(*expected_channels) + " channels, header has " +
                    std::to_string(n_channels));
  }

  // Row-major staging; transposed into the column-major series at the end.
  std::vector<double> staged;
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != n_channels + 1) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(n_channels + 1) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto field = fields[c];
      double value = 0.0;
      const auto* first = field.data();
      const auto* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (field.empty() || ec != std::errc() || ptr != last) {
        throw DataError(where(path, line_no, c + 1) + ": cannot parse '" +
                        std::string(field) + "' as a number");
      }
      if (!std::isfinite(value)) {
        throw DataError(where(path, line_no, c + 1) + ": non-finite value '" +
                        std::string(field) + "'");
      }
      staged.push_back(value);
    }
    ++n_rows;
  }
  if (n_rows == 0) {
    throw DataError(path.string() + ": no data rows");
  }

  Eigen::MatrixXd values =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>(
          staged.data(), static_cast<Eigen::Index>(n_rows),
          static_cast<Eigen::Index>(n_channels));
  return MultiChannelSeries(std::move(values), std::move(names));
}

SplitSpec SplitSpec::resolved(std::size_t total_rows) const {
  SplitSpec out = *this;
  if (mode == Mode::fractional) {
    // Same float arithmetic as int(len * 0.7) in the reference loaders.
    out.train_len = static_cast<std::size_t>(static_cast<double>(total_rows) * 0.7);
    out.test_len = static_cast<std::size_t>(static_cast<double>(total_rows) * 0.2);
    out.val_len = total_rows - out.train_len - out.test_len;
  }
  if (out.train_len == 0 || out.val_len == 0 || out.test_len == 0) {
    throw DataError("split of " + std::to_string(total_rows) +
                    " rows leaves an empty segment (" +
                    std::to_string(out.train_len) + "/" +
                    std::to_string(out.val_len) + "/" +
                    std::to_string(out.test_len) + ")");
  }
  if (out.end() > total_rows) {
    throw DataError("split " + std::to_string(out.train_len) + "/" +
                    std::to_string(out.val_len) + "/" +
                    std::to_string(out.test_len) + " exceeds series length " +
                    std::to_string(total_rows));
  }
  return out;
}

SplitSeries split(const MultiChannelSeries& series, const SplitSpec& spec) {
  const SplitSpec r = spec.resolved(series.length());
  return {series.rows(0, r.train_len), series.rows(r.val_begin(), r.val_len),
          series.rows(r.test_begin(), r.test_len)};
}

WindowCounts window_counts(const SplitSpec& resolved, std::size_t context_len,
                           std::size_t horizon) {
  auto count = [](std::size_t available, std::size_t need) -> std::size_t {
    return available >= need ? available - need + 1 : 0;
  };
  return {count(resolved.train_len, context_len + horizon),
          count(resolved.val_len, horizon), count(resolved.test_len, horizon)};
}

Scaler fit_scaler(const MultiChannelSeries& train) {
  const auto& x = train.values();
  const double n = static_cast<double>(x.rows());
  Scaler s;
  s.mean = x.colwise().sum().transpose() / n;
  s.std.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    // Relative threshold: a constant channel leaves only rounding noise.
    if (sd == 0.0 || sd <= 1e-12 * std::abs(s.mean(c))) {
      throw DataError("channel '" + train.channel_names()[static_cast<std::size_t>(c)] +
                      "' has zero variance in the training split");
    }
    s.std(c) = sd;
  }
  return s;
}

namespace {

void check_width(const Scaler& scaler, Eigen::Index cols) {
  if (scaler.mean.size() != cols) {
    throw DataError("scaler fitted on " + std::to_string(scaler.mean.size()) +
                    " channels applied to " + std::to_string(cols));
  }
}

}  // namespace

MultiChannelSeries apply_scaler(const Scaler& scaler,
                                const MultiChannelSeries& series) {
  check_width(scaler, series.values().cols());
  Eigen::MatrixXd out =
      (series.values().rowwise() - scaler.mean.transpose()).array().rowwise() /
      scaler.std.transpose().array();
  return MultiChannelSeries(std::move(out), series.channel_names());
}

Eigen::MatrixXd invert_scaler(const Scaler& scaler,
                              const Eigen::MatrixXd& values) {
  check_width(scaler, values.cols());
  Eigen::MatrixXd out = values.array().rowwise() * scaler.std.transpose().array();
  out.rowwise() += scaler.mean.transpose();
  return out;
}

MultiChannelSeries invert_scaler(const Scaler& scaler,
                                 const MultiChannelSeries& series) {
  return MultiChannelSeries(invert_scaler(scaler, series.values()),
                            series.channel_names());
}

MultiChannelSeries subsample_train(const MultiChannelSeries& train,
                                   double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1], got " +
                      std::to_string(fraction));
  }
  const auto keep = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(train.length())));
  if (keep == 0) {
    throw DataError("train fraction " + std::to_string(fraction) +
                    " keeps no rows of a " + std::to_string(train.length()) +
                    "-row split");
  }
  return train.rows(train.length() - keep, keep);
}

namespace {

const std::vector<DatasetPreset>& preset_table() {
  static const std::vector<DatasetPreset> presets = [] {
    const std::vector<std::size_t> long_h{96, 192, 336, 720};
    const std::vector<std::size_t> ili_h{24, 36, 48, 60};
    // ETT files ship with fixed 12/4/4-month borders.
    const auto hourly = SplitSpec::explicit_counts(8640, 2880, 2880);
    const auto minutely = SplitSpec::explicit_counts(34560, 11520, 11520);
    const auto frac = SplitSpec::fractional();
    return std::vector<DatasetPreset>{
        {"ETTh1", "ETTh1.csv", 7, 17420, hourly, long_h},
        {"ETTh2", "ETTh2.csv", 7, 17420, hourly, long_h},
        {"ETTm1", "ETTm1.csv", 7, 69680, minutely, long_h},
        {"ETTm2", "ETTm2.csv", 7, 69680, minutely, long_h},
        {"Weather", "weather.csv", 21, 52696, frac, long_h},
        {"Electricity", "electricity.csv", 321, 26304, frac, long_h},
        {"ILI", "national_illness.csv", 7, 966, frac, ili_h},
        {"Traffic", "traffic.csv", 862, 17544, frac, long_h},
    };
  }();
  return presets;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::span<const DatasetPreset> dataset_presets() { return preset_table(); }

const DatasetPreset& find_preset(std::string_view name) {
  for (const auto& p : preset_table()) {
    if (iequals(p.name, name)) return p;
  }
  std::string known;
  for (const auto& p : preset_table()) {
    known += (known.empty() ? "" : ", ") + p.name;
  }
  throw ConfigError("unknown dataset preset '" + std::string(name) +
                    "' (known: " + known + ")");
}

}  // namespace autoar
