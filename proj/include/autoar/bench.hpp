#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "autoar/armodel.hpp"
#include "autoar/autoar.hpp"
#include "autoar/dataio.hpp"
#include "autoar/series.hpp"

namespace autoar {

/// One (dataset, horizon) forecasting problem.
struct ForecastTask {
  std::string dataset_id;
  std::size_t horizon = 96;
  std::size_t context_len = 512;
  SplitSpec split;
  double train_fraction = 1.0;

  /// Benchmark presets only allow their standard horizon set (ILI: 24..60,
  /// others: 96..720); free-form datasets accept any H >= 1.
  void validate() const;
};

struct EvalRecord {
  ForecastTask task;
  std::string method;
  std::optional<double> mse;
  std::optional<double> mae;
  std::optional<double> rmse;
  std::size_t n_windows = 0;
  /// Filled for models fitted by this library.
  std::optional<std::size_t> lookback;
  std::optional<int> differencing;
};

/// Pooled squared/absolute error sums with Neumaier compensation.
class ErrorAccumulator {
 public:
  void add(double prediction, double truth);
  void merge(const ErrorAccumulator& other);

  std::size_t count() const { return count_; }
  double mse() const;
  double mae() const;

 private:
  struct Compensated {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v);
    double value() const { return sum + comp; }
  };
  Compensated sq_;
  Compensated abs_;
  std::size_t count_ = 0;
};

/// Produces forecasts for many anchors of one series at once.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  /// Rows of history each forecast reads, ending at the anchor.
  virtual std::size_t context_len() const = 0;

  /// Called once, before any concurrent predict(), with the largest horizon.
  virtual void prepare(std::size_t max_horizon) { (void)max_horizon; }

  /// `values` is the full T x C series; an anchor is the index of the last
  /// context row. Returns H x (anchors * C), column a * C + c.
  virtual Eigen::MatrixXd predict(const Eigen::MatrixXd& values,
                                  std::span<const std::size_t> anchors,
                                  std::size_t horizon) const = 0;
};

/// A fitted AR model evaluated through its linear forecast operator.
class ArForecaster final : public Forecaster {
 public:
  ArForecaster(ArModel model, std::size_t context_len);
  std::size_t context_len() const override { return context_len_; }
  void prepare(std::size_t max_horizon) override;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& values,
                          std::span<const std::size_t> anchors,
                          std::size_t horizon) const override;
  const ArModel& model() const { return model_; }

 private:
  ArModel model_;
  std::size_t context_len_;
  ForecastOperator op_;
  std::size_t prepared_ = 0;
};

/// Auto-AR refitted on each anchor's own context window.
class ZeroShotForecaster final : public Forecaster {
 public:
  /// With `reuse_selection`, d and p are chosen once on the first anchor
  /// passed to prepare_selection() and only the coefficients are refitted.
  ZeroShotForecaster(AutoArConfig config, std::size_t context_len,
                     bool reuse_selection = false);
  std::size_t context_len() const override { return context_len_; }
  Eigen::MatrixXd predict(const Eigen::MatrixXd& values,
                          std::span<const std::size_t> anchors,
                          std::size_t horizon) const override;
  void prepare_selection(const Eigen::MatrixXd& values, std::size_t anchor);

 private:
  AutoArConfig config_;
  std::size_t context_len_;
  bool reuse_selection_;
};

/// Stride-s windows over the test rows [test_begin, test_end): anchors run
/// from test_begin - 1 while the H targets stay inside the test rows.
struct EvalWindowSpec {
  std::size_t test_begin = 0;
  std::size_t test_end = 0;
  std::vector<std::size_t> horizons;
  std::size_t stride = 1;
};

struct HorizonMetrics {
  std::size_t horizon = 0;
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n_windows = 0;
};

/// Anchors valid for `horizon` under `spec` (ascending).
std::vector<std::size_t> window_anchors(const EvalWindowSpec& spec,
                                        std::size_t horizon);

/// Errors of `forecaster` at the given anchors, pooled over H x C values per
/// anchor. Anchor blocks are fixed by the data shape, so the result is the
/// same for every `jobs`.
ErrorAccumulator accumulate_errors(const Forecaster& forecaster,
                                   const Eigen::MatrixXd& values,
                                   std::span<const std::size_t> anchors,
                                   std::size_t horizon, std::size_t jobs = 1);

/// Evaluates every horizon in `spec` in one pass (shorter horizons reuse the
/// prefix of the longest forecast).
std::vector<HorizonMetrics> evaluate(Forecaster& forecaster,
                                     const MultiChannelSeries& series,
                                     const EvalWindowSpec& spec,
                                     std::size_t jobs = 1);

/// Single-task convenience wrapper returning a record for `method`.
EvalRecord evaluate(Forecaster& forecaster, const ForecastTask& task,
                    const std::string& method, const MultiChannelSeries& series,
                    std::size_t test_begin, std::size_t test_end,
                    std::size_t stride = 1, std::size_t jobs = 1);

enum class ScoreMetric { rmse, mae };
enum class TiePolicy { average, max };

struct AggregateOptions {
  std::string baseline = "Auto-ARIMA";
  ScoreMetric metric = ScoreMetric::rmse;
  TiePolicy ties = TiePolicy::average;
  /// Restrict to these methods (empty: all).
  std::vector<std::string> methods;
  std::vector<std::string> exclude_datasets;
};

struct MethodSummary {
  double average_score = 0.0;
  double average_rank = 0.0;
  double mean_pct_improvement = 0.0;
  double median_pct_improvement = 0.0;
  std::size_t n_tasks = 0;
};

struct AggregateReport {
  std::string baseline_method;
  ScoreMetric metric = ScoreMetric::rmse;
  std::size_t n_tasks = 0;
  std::map<std::string, MethodSummary> per_method;
};

/// Average score, average within-task rank (methods lacking a task are left
/// out of that task's ranking) and mean / median % improvement over the
/// baseline, per method.
AggregateReport aggregate(std::span<const EvalRecord> records,
                          const AggregateOptions& options);

/// CSV with header "dataset,horizon,method,metric,value"; metric is one of
/// mse, mae, rmse. Several metric rows of one task merge into one record.
std::vector<EvalRecord> load_reference_results(const std::filesystem::path& path);
std::vector<EvalRecord> parse_reference_results(std::istream& in,
                                                const std::string& source);

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records);
void write_aggregate_csv(std::ostream& out, const AggregateReport& report);
std::string format_aggregate_table(const AggregateReport& report);

}  // namespace autoar
