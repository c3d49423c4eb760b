#include "autoar/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "autoar/error.hpp"
#include "parallel.hpp"

namespace autoar {

namespace {

// Forecast values produced per block (H x anchors x C); bounds block memory.
constexpr std::size_t kBlockValues = std::size_t{1} << 21;
constexpr std::size_t kMaxBlockAnchors = 512;

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t block_anchors(std::size_t horizon, std::size_t channels) {
  const std::size_t per_anchor = std::max<std::size_t>(horizon * channels, 1);
  return std::clamp<std::size_t>(kBlockValues / per_anchor, 1, kMaxBlockAnchors);
}

}  // namespace

void ForecastTask::validate() const {
  if (horizon == 0) throw ConfigError("horizon must be at least 1");
  if (context_len == 0) throw ConfigError("context length must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1]");
  }
  for (const auto& preset : dataset_presets()) {
    if (preset.name != dataset_id) continue;
    if (!std::count(preset.horizons.begin(), preset.horizons.end(), horizon)) {
      std::string allowed;
      for (auto h : preset.horizons) {
        allowed += (allowed.empty() ? "" : ", ") + std::to_string(h);
      }
      throw ConfigError("horizon " + std::to_string(horizon) +
                        " is not a benchmark horizon for " + dataset_id + " (" +
                        allowed + ")");
    }
  }
}

void ErrorAccumulator::Compensated::add(double v) {
  const double t = sum + v;
  if (std::abs(sum) >= std::abs(v)) {
    comp += (sum - t) + v;
  } else {
    comp += (v - t) + sum;
  }
  sum = t;
}

void ErrorAccumulator::add(double prediction, double truth) {
  const double e = prediction - truth;
  sq_.add(e * e);
  abs_.add(std::abs(e));
  ++count_;
}

void ErrorAccumulator::merge(const ErrorAccumulator& other) {
  sq_.add(other.sq_.sum);
  sq_.add(other.sq_.comp);
  abs_.add(other.abs_.sum);
  abs_.add(other.abs_.comp);
  count_ += other.count_;
}

double ErrorAccumulator::mse() const {
  if (count_ == 0) throw DataError("no errors accumulated");
  return sq_.value() / static_cast<double>(count_);
}

double ErrorAccumulator::mae() const {
  if (count_ == 0) throw DataError("no errors accumulated");
  return abs_.value() / static_cast<double>(count_);
}

ArForecaster::ArForecaster(ArModel model, std::size_t context_len)
    : model_(std::move(model)), context_len_(context_len) {
  if (context_len_ < model_.required_context()) {
    throw ConfigError("context length " + std::to_string(context_len_) +
                      " is shorter than the model's p + d = " +
                      std::to_string(model_.required_context()));
  }
}

void ArForecaster::prepare(std::size_t max_horizon) {
  if (max_horizon > prepared_) {
    op_ = make_forecast_operator(model_, max_horizon);
    prepared_ = max_horizon;
  }
}

Eigen::MatrixXd ArForecaster::predict(const Eigen::MatrixXd& values,
                                      std::span<const std::size_t> anchors,
                                      std::size_t horizon) const {
  if (horizon > prepared_) {
    throw ConfigError("forecaster prepared for horizon " +
                      std::to_string(prepared_) + ", asked for " +
                      std::to_string(horizon));
  }
  const auto width = static_cast<Eigen::Index>(model_.required_context());
  const auto c = values.cols();
  const auto n = static_cast<Eigen::Index>(anchors.size());
  Eigen::MatrixXd windows(width, n * c);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto anchor = static_cast<Eigen::Index>(anchors[static_cast<std::size_t>(a)]);
    for (Eigen::Index ch = 0; ch < c; ++ch) {
      windows.col(a * c + ch) = values.col(ch).segment(anchor - width + 1, width);
    }
  }
  const auto h = static_cast<Eigen::Index>(horizon);
  Eigen::MatrixXd out = op_.weights.topRows(h) * windows;
  out.colwise() += op_.offset.head(h);
  return out;
}

ZeroShotForecaster::ZeroShotForecaster(AutoArConfig config, std::size_t context_len,
                                       bool reuse_selection)
    : config_(std::move(config)),
      context_len_(context_len),
      reuse_selection_(reuse_selection) {
  config_.zero_shot = true;
  config_.validate();
  if (config_.zero_shot_window >= context_len_) {
    throw ConfigError("zero-shot window " + std::to_string(config_.zero_shot_window) +
                      " must be shorter than the context length " +
                      std::to_string(context_len_));
  }
}

void ZeroShotForecaster::prepare_selection(const Eigen::MatrixXd& values,
                                           std::size_t anchor) {
  if (!reuse_selection_) return;
  const auto len = static_cast<Eigen::Index>(context_len_);
  MultiChannelSeries context(
      values.middleRows(static_cast<Eigen::Index>(anchor) - len + 1, len));
  const AutoArResult r = fit_zero_shot(context, config_);
  config_.force_d = r.selection.d;
  config_.zero_shot_grid = {r.selection.chosen_p};
}

Eigen::MatrixXd ZeroShotForecaster::predict(const Eigen::MatrixXd& values,
                                            std::span<const std::size_t> anchors,
                                            std::size_t horizon) const {
  const auto c = values.cols();
  const auto len = static_cast<Eigen::Index>(context_len_);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(horizon),
                      static_cast<Eigen::Index>(anchors.size()) * c);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    MultiChannelSeries context(
        values.middleRows(static_cast<Eigen::Index>(anchors[a]) - len + 1, len));
    out.middleCols(static_cast<Eigen::Index>(a) * c, c) =
        run_zero_shot(context, config_, horizon);
  }
  return out;
}

std::vector<std::size_t> window_anchors(const EvalWindowSpec& spec,
                                        std::size_t horizon) {
  if (spec.stride == 0) throw ConfigError("stride must be at least 1");
  if (spec.test_begin == 0 || spec.test_end <= spec.test_begin) {
    throw DataError("test rows must start after row 0 and be non-empty");
  }
  const std::size_t test_len = spec.test_end - spec.test_begin;
  if (test_len < horizon) {
    throw DataError("test split of " + std::to_string(test_len) +
                    " rows is shorter than horizon " + std::to_string(horizon));
  }
  std::vector<std::size_t> anchors;
  for (std::size_t a = spec.test_begin - 1; a + horizon < spec.test_end;
       a += spec.stride) {
    anchors.push_back(a);
  }
  return anchors;
}

ErrorAccumulator accumulate_errors(const Forecaster& forecaster,
                                   const Eigen::MatrixXd& values,
                                   std::span<const std::size_t> anchors,
                                   std::size_t horizon, std::size_t jobs) {
  const auto c = static_cast<std::size_t>(values.cols());
  const std::size_t per_block = block_anchors(horizon, c);
  const std::size_t blocks = (anchors.size() + per_block - 1) / per_block;
  std::vector<ErrorAccumulator> partial(blocks);
  detail::parallel_for(blocks, jobs, [&](std::size_t b) {
    const auto chunk = anchors.subspan(
        b * per_block, std::min(per_block, anchors.size() - b * per_block));
    const Eigen::MatrixXd pred = forecaster.predict(values, chunk, horizon);
    for (std::size_t a = 0; a < chunk.size(); ++a) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const auto col = static_cast<Eigen::Index>(a * c + ch);
        for (std::size_t h = 0; h < horizon; ++h) {
          partial[b].add(pred(static_cast<Eigen::Index>(h), col),
                         values(static_cast<Eigen::Index>(chunk[a] + 1 + h),
                                static_cast<Eigen::Index>(ch)));
        }
      }
    }
  });
  ErrorAccumulator total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

std::vector<HorizonMetrics> evaluate(Forecaster& forecaster,
                                     const MultiChannelSeries& series,
                                     const EvalWindowSpec& spec, std::size_t jobs) {
  if (spec.horizons.empty()) throw ConfigError("no horizons to evaluate");
  std::vector<std::size_t> horizons = spec.horizons;
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  if (horizons.front() == 0) throw ConfigError("horizon must be at least 1");
  if (spec.test_end > series.length()) {
    throw DataError("test rows end at " + std::to_string(spec.test_end) +
                    " beyond the series length " + std::to_string(series.length()));
  }
  const std::size_t h_max = horizons.back();
  for (auto h : horizons) (void)window_anchors(spec, h);  // length checks
  const std::vector<std::size_t> anchors = window_anchors(spec, horizons.front());
  if (anchors.front() + 1 < forecaster.context_len()) {
    throw DataError("first test window needs " +
                    std::to_string(forecaster.context_len()) +
                    " rows of history but only " +
                    std::to_string(anchors.front() + 1) + " precede it");
  }
  forecaster.prepare(h_max);
  if (auto* zs = dynamic_cast<ZeroShotForecaster*>(&forecaster)) {
    zs->prepare_selection(series.values(), anchors.front());
  }

  const auto& values = series.values();
  const auto c = static_cast<std::size_t>(values.cols());
  const std::size_t per_block = block_anchors(h_max, c);
  const std::size_t blocks = (anchors.size() + per_block - 1) / per_block;
  std::vector<std::vector<ErrorAccumulator>> partial(
      blocks, std::vector<ErrorAccumulator>(horizons.size()));
  detail::parallel_for(blocks, jobs, [&](std::size_t b) {
    const std::span<const std::size_t> chunk(
        anchors.data() + b * per_block,
        std::min(per_block, anchors.size() - b * per_block));
    const Eigen::MatrixXd pred = forecaster.predict(values, chunk, h_max);
    for (std::size_t a = 0; a < chunk.size(); ++a) {
      for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
        const std::size_t h_len = horizons[hi];
        if (chunk[a] + h_len >= spec.test_end) continue;
        auto& acc = partial[b][hi];
        for (std::size_t ch = 0; ch < c; ++ch) {
          const auto col = static_cast<Eigen::Index>(a * c + ch);
          for (std::size_t h = 0; h < h_len; ++h) {
            acc.add(pred(static_cast<Eigen::Index>(h), col),
                    values(static_cast<Eigen::Index>(chunk[a] + 1 + h),
                           static_cast<Eigen::Index>(ch)));
          }
        }
      }
    }
  });

  std::vector<HorizonMetrics> out;
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    ErrorAccumulator total;
    for (std::size_t b = 0; b < blocks; ++b) total.merge(partial[b][hi]);
    HorizonMetrics m;
    m.horizon = horizons[hi];
    m.mse = total.mse();
    m.mae = total.mae();
    m.rmse = std::sqrt(m.mse);
    m.n_windows = total.count() / (c * horizons[hi]);
    out.push_back(m);
  }
  return out;
}

EvalRecord evaluate(Forecaster& forecaster, const ForecastTask& task,
                    const std::string& method, const MultiChannelSeries& series,
                    std::size_t test_begin, std::size_t test_end,
                    std::size_t stride, std::size_t jobs) {
  task.validate();
  EvalWindowSpec spec{test_begin, test_end, {task.horizon}, stride};
  const auto m = evaluate(forecaster, series, spec, jobs).front();
  EvalRecord r;
  r.task = task;
  r.method = method;
  r.mse = m.mse;
  r.mae = m.mae;
  r.rmse = m.rmse;
  r.n_windows = m.n_windows;
  return r;
}

namespace {

std::optional<double> score_of(const EvalRecord& r, ScoreMetric metric) {
  if (metric == ScoreMetric::mae) return r.mae;
  if (r.rmse) return r.rmse;
  if (r.mse) return std::sqrt(*r.mse);
  return std::nullopt;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Ranks (1 = lowest score) of the given scores under the tie policy.
std::vector<double> rank_scores(const std::vector<double>& scores, TiePolicy ties) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> ranks(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = ties == TiePolicy::average
                         ? 0.5 * static_cast<double>(i + j) + 1.0
                         : static_cast<double>(j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

AggregateReport aggregate(std::span<const EvalRecord> records,
                          const AggregateOptions& options) {
  using TaskKey = std::pair<std::string, std::size_t>;
  std::map<TaskKey, std::map<std::string, double>> tasks;
  for (const auto& r : records) {
    if (!options.methods.empty() && !contains(options.methods, r.method)) continue;
    if (contains(options.exclude_datasets, r.task.dataset_id)) continue;
    const auto score = score_of(r, options.metric);
    if (!score) continue;
    auto& row = tasks[{r.task.dataset_id, r.task.horizon}];
    if (!row.emplace(r.method, *score).second) {
      throw DataError("duplicate record for " + r.method + " on " +
                      r.task.dataset_id + " H=" + std::to_string(r.task.horizon));
    }
  }
  if (tasks.empty()) throw DataError("aggregate: no records to aggregate");

  std::map<std::string, std::vector<double>> scores, ranks, improvements;
  for (const auto& [key, row] : tasks) {
    const auto base = row.find(options.baseline);
    if (base == row.end()) {
      throw DataError("baseline '" + options.baseline + "' has no score for " +
                      key.first + " H=" + std::to_string(key.second));
    }
    std::vector<double> values;
    for (const auto& [method, s] : row) values.push_back(s);
    const auto r = rank_scores(values, options.ties);
    std::size_t i = 0;
    for (const auto& [method, s] : row) {
      scores[method].push_back(s);
      ranks[method].push_back(r[i++]);
      improvements[method].push_back(100.0 * (base->second - s) / base->second);
    }
  }

  AggregateReport out;
  out.baseline_method = options.baseline;
  out.metric = options.metric;
  out.n_tasks = tasks.size();
  for (const auto& [method, s] : scores) {
    MethodSummary m;
    m.n_tasks = s.size();
    const double n = static_cast<double>(s.size());
    for (double v : s) m.average_score += v;
    m.average_score /= n;
    for (double v : ranks[method]) m.average_rank += v;
    m.average_rank /= n;
    for (double v : improvements[method]) m.mean_pct_improvement += v;
    m.mean_pct_improvement /= n;
    m.median_pct_improvement = median(improvements[method]);
    out.per_method.emplace(method, m);
  }
  return out;
}

std::vector<EvalRecord> parse_reference_results(std::istream& in,
                                                const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(source + ": empty reference file");
  ++line_no;
  if (trim(line) != "dataset,horizon,method,metric,value") {
    throw DataError(source + ": expected header 'dataset,horizon,method,metric,value'");
  }
  std::vector<EvalRecord> out;
  std::map<std::tuple<std::string, std::size_t, std::string>, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
    const std::string where = source + ":" + std::to_string(line_no);
    if (f.size() != 5) throw DataError(where + ": expected 5 fields");
    std::size_t horizon = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      horizon = std::stoul(f[1], &used);
      if (used != f[1].size() || horizon == 0) throw std::invalid_argument("");
      value = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw DataError(where + ": malformed horizon or value");
    }
    if (!std::isfinite(value) || value < 0.0) {
      throw DataError(where + ": value must be finite and non-negative");
    }
    const std::string& metric = f[3];
    if (metric != "mse" && metric != "mae" && metric != "rmse") {
      throw DataError(where + ": unknown metric '" + metric + "'");
    }
    const auto key = std::make_tuple(f[0], horizon, f[2]);
    auto it = index.find(key);
    if (it == index.end()) {
      EvalRecord r;
      r.task.dataset_id = f[0];
      r.task.horizon = horizon;
      r.method = f[2];
      it = index.emplace(key, out.size()).first;
      out.push_back(std::move(r));
    }
    EvalRecord& r = out[it->second];
    std::optional<double>& slot =
        metric == "mse" ? r.mse : (metric == "mae" ? r.mae : r.rmse);
    if (slot) {
      throw DataError(where + ": duplicate " + metric + " for " + f[2] + " on " +
                      f[0] + " H=" + f[1]);
    }
    slot = value;
  }
  for (auto& r : out) {
    if (r.mse && !r.rmse) r.rmse = std::sqrt(*r.mse);
    if (r.rmse && !r.mse) r.mse = *r.rmse * *r.rmse;
  }
  return out;
}

std::vector<EvalRecord> load_reference_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reference results " + path.string());
  return parse_reference_results(in, path.string());
}

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records) {
  out << "dataset,horizon,method,context_len,train_fraction,lookback,d,"
         "n_windows,mse,mae,rmse\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const auto& r : records) {
    out << r.task.dataset_id << ',' << r.task.horizon << ',' << r.method << ','
        << r.task.context_len << ',' << fmt(r.task.train_fraction, "%g") << ','
        << (r.lookback ? std::to_string(*r.lookback) : "") << ','
        << (r.differencing ? std::to_string(*r.differencing) : "") << ','
        << r.n_windows << ',' << opt(r.mse) << ',' << opt(r.mae) << ','
        << opt(r.rmse) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const AggregateReport& report) {
  out << "method,average_score,average_rank,mean_pct_improvement,"
         "median_pct_improvement,n_tasks\n";
  for (const auto& [method, m] : report.per_method) {
    out << method << ',' << fmt(m.average_score, "%.6f") << ','
        << fmt(m.average_rank, "%.6f") << ',' << fmt(m.mean_pct_improvement, "%.6f")
        << ',' << fmt(m.median_pct_improvement, "%.6f") << ',' << m.n_tasks << '\n';
  }
}

std::string format_aggregate_table(const AggregateReport& report) {
  std::vector<std::pair<std::string, MethodSummary>> rows(report.per_method.begin(),
                                                          report.per_method.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.second.average_score < b.second.average_score;
  });
  const char* metric = report.metric == ScoreMetric::rmse ? "RMSE" : "MAE";
  std::ostringstream os;
  os << "Aggregate over " << report.n_tasks << " tasks (score: " << metric
     << ", baseline: " << report.baseline_method << ")\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %10s %9s %10s %12s %6s\n", "method",
                "avg score", "avg rank", "mean %imp", "median %imp", "tasks");
  os << line;
  for (const auto& [method, m] : rows) {
    std::snprintf(line, sizeof line, "%-22s %10.3f %9.2f %10.2f %12.2f %6zu\n",
                  method.c_str(), m.average_score, m.average_rank,
                  m.mean_pct_improvement, m.median_pct_improvement, m.n_tasks);
    os << line;
  }
  return os.str();
}

}  // namespace autoar
