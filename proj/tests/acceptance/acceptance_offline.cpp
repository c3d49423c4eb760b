#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "autoar/autoar.hpp"
#include "autoar/bench.hpp"
#include "autoar/dataio.hpp"
#include "autoar/stattests.hpp"
#include "report.hpp"
#include "support.hpp"

using namespace autoar;

namespace {

const std::vector<std::string> kRmseMethods{"GPT4TS", "TEST",      "MOMENT",   "TTM-B",   "TTM-A",
                                            "S2IP-LLM", "CALF",    "TEMPO",    "TimesFM", "DLinear",
                                            "Auto-ARIMA", "AR",    "Auto-AR"};
const std::vector<std::string> kMaeMethods{"GPT4TS", "TEST",    "MOMENT",     "S2IP-LLM",
                                           "CALF",   "DLinear", "Auto-ARIMA", "Auto-AR"};

struct Expected {
  double score, rank, mean, median;
};

void check_summary(Report& report, const std::string& id, const std::string& file,
                   ScoreMetric metric, TiePolicy ties, const std::vector<std::string>& methods,
                   Expected want) {
  AggregateOptions o;
  o.metric = metric;
  o.ties = ties;
  o.methods = methods;
  o.exclude_datasets = {"ILI"};
  const auto records = load_reference_results(std::string(AUTOAR_REFERENCE_DIR) + "/" + file);
  const AggregateReport rep = aggregate(records, o);
  const MethodSummary& m = rep.per_method.at("Auto-AR");
  const MethodSummary& base = rep.per_method.at("Auto-ARIMA");
  const bool ok = std::abs(m.average_score - want.score) <= 0.005 &&
                  std::abs(m.average_rank - want.rank) <= 0.15 &&
                  std::abs(m.mean_pct_improvement - want.mean) <= 0.3 &&
                  std::abs(m.median_pct_improvement - want.median) <= 0.3 &&
                  base.mean_pct_improvement == 0.0 && base.median_pct_improvement == 0.0;
  report.line(id, ok,
              "Auto-AR score " + fmt("%.4f", m.average_score) + " rank " +
                  fmt("%.2f", m.average_rank) + " mean " + fmt("%.2f", m.mean_pct_improvement) +
                  " median " + fmt("%.2f", m.median_pct_improvement) + " over " +
                  std::to_string(rep.n_tasks) + " tasks; baseline improvement " +
                  fmt("%g", base.mean_pct_improvement) + "/" +
                  fmt("%g", base.median_pct_improvement));
}

void guarded(Report& report, const std::string& id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report.line(id, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  Report report;

  guarded(report, "aggregate-rmse", [&] {
    check_summary(report, "aggregate-rmse", "long_horizon_mse.csv", ScoreMetric::rmse,
                  TiePolicy::average, kRmseMethods, {0.551, 5.45, 31.91, 25.36});
  });
  guarded(report, "aggregate-mae", [&] {
    check_summary(report, "aggregate-mae", "long_horizon_mae.csv", ScoreMetric::mae,
                  TiePolicy::max, kMaeMethods, {0.333, 2.71, 33.86, 29.46});
  });

  guarded(report, "ar1-recovery", [&] {
    double worst = 0.0, worst_intercept = 0.0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
      const auto x = testing::simulate_ar({0.8}, 0.0, 0.1, 5000, seed);
      const FitResult r = fit(MultiChannelSeries(testing::columns({x})), 1, 0);
      worst = std::max(worst, std::abs(r.model.coeffs(0) - 0.8));
      worst_intercept = std::max(worst_intercept, std::abs(r.model.intercept));
    }
    report.line("ar1-recovery", worst < 0.02 && worst_intercept < 0.02,
                "max |a1 - 0.8| " + fmt("%.4f", worst) + ", max |a0| " +
                    fmt("%.4f", worst_intercept) + " over 20 seeds (T=5000, sigma=0.1)");
  });

  guarded(report, "ols-oracle", [&] {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n01;
    double worst = 0.0;
    int instances = 0;
    for (std::size_t p = 1; p <= 3; ++p) {
      for (std::size_t samples = p + 2; samples <= 10; ++samples) {
        for (int rep = 0; rep < 20; ++rep) {
          std::vector<double> x(p + samples);
          for (auto& v : x) v = n01(rng);
          const std::span<const double> spans[] = {x};
          const auto sol = solve_normal_equations(pooled_cross_products(spans, p), true);
          const auto oracle = testing::brute_force_ols({x}, p);
          for (std::size_t i = 0; i < oracle.size(); ++i) {
            worst = std::max(worst, std::abs(sol.beta(static_cast<Eigen::Index>(i)) - oracle[i]) /
                                        std::max(1.0, std::abs(oracle[i])));
          }
          ++instances;
        }
      }
    }
    report.line("ols-oracle", worst < 1e-8,
                "max deviation " + fmt("%.2e", worst) + " over " + std::to_string(instances) +
                    " instances with <= 10 samples");
  });

  guarded(report, "bic-enumeration", [&] {
    const std::vector<std::size_t> grid{1, 2, 3, 4, 6, 8};
    int agree = 0, total = 0;
    for (unsigned seed = 1; seed <= 10; ++seed) {
      std::vector<std::vector<double>> ch;
      for (unsigned c = 0; c < 2; ++c) {
        ch.push_back(testing::simulate_ar({0.5, -0.25}, 0.1, 1.0, 300, seed * 31 + c));
      }
      AutoArConfig cfg;
      cfg.lookback_grid = grid;
      cfg.force_d = 0;
      const AutoArResult r = run_auto_ar(MultiChannelSeries(testing::columns(ch)), cfg);
      std::size_t best_p = 0;
      double best = INFINITY;
      for (auto p : grid) {
        const auto beta = testing::brute_force_ols(ch, p);
        const double rss = testing::brute_force_rss(ch, p, beta);
        const double n = 2.0 * static_cast<double>(300 - p);
        const double bic = n * std::log(rss / n) + static_cast<double>(p + 2) * std::log(n);
        if (bic < best) {
          best = bic;
          best_p = p;
        }
      }
      agree += r.selection.chosen_p == best_p ? 1 : 0;
      ++total;
    }
    report.line("bic-enumeration", agree == total,
                std::to_string(agree) + "/" + std::to_string(total) +
                    " AR(2) series select the enumeration minimum");
  });

  guarded(report, "kpss-reference", [&] {
    const auto cases = testing::load_kpss_cases(AUTOAR_TEST_DATA_DIR "/kpss_reference.csv");
    int agree = 0, seeded = 0;
    double worst = 0.0;
    for (const auto& c : cases) {
      worst = std::max(worst, std::abs(kpss_level(c.values, 0.05, c.lags).statistic - c.statistic) /
                                  std::max(1.0, c.statistic));
      if (c.id == "trend200" || c.id == "white500") continue;
      ++seeded;
      agree += kpss_level(c.values).reject_stationarity == c.reference_reject ? 1 : 0;
    }
    report.line("kpss-reference", seeded == 50 && agree >= 48 && worst < 1e-6,
                std::to_string(agree) + "/" + std::to_string(seeded) +
                    " decisions match; max statistic deviation " + fmt("%.1e", worst));
  });

  guarded(report, "difference-roundtrip", [&] {
    const MultiChannelSeries x(testing::random_walks(5000, 7, 3, 0.1));
    const Eigen::MatrixXd back =
        integrate(difference(x, 1).values(), x.values().row(0).transpose());
    const Eigen::MatrixXd& v = x.values();
    double worst = 0.0;
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      for (Eigen::Index t = 1; t < v.rows(); ++t) {
        worst = std::max(worst, std::abs(back(t - 1, c) - v(t, c)) / std::max(1.0, std::abs(v(t, c))));
      }
    }
    report.line("difference-roundtrip", worst < 1e-12,
                "max relative error " + fmt("%.1e", worst));
  });

  guarded(report, "scaler-roundtrip", [&] {
    const MultiChannelSeries x(testing::random_walks(5000, 7, 4, 0.5));
    const Scaler s = fit_scaler(x.rows(0, 3500));
    const MultiChannelSeries back = invert_scaler(s, apply_scaler(s, x));
    const double worst = ((back.values() - x.values()).array() /
                          x.values().array().abs().max(1.0))
                             .abs()
                             .maxCoeff();
    report.line("scaler-roundtrip", worst < 1e-12, "max relative error " + fmt("%.1e", worst));
  });

  guarded(report, "parallel-evaluation", [&] {
    const MultiChannelSeries s(testing::random_walks(8000, 7, 5));
    const FitResult r = fit(s.rows(0, 4000), 96, 1);
    ArForecaster f(r.model, 512);
    const EvalWindowSpec spec{5000, 8000, {96, 192, 336, 720}, 1};
    const auto serial = evaluate(f, s, spec, 1);
    const auto parallel = evaluate(f, s, spec, 4);
    double worst = 0.0;
    for (std::size_t i = 0; i < serial.size(); ++i) {
      worst = std::max(worst, std::abs(serial[i].mse - parallel[i].mse) / serial[i].mse);
      worst = std::max(worst, std::abs(serial[i].mae - parallel[i].mae) / serial[i].mae);
    }
    report.line("parallel-evaluation", worst <= 1e-12,
                "max relative difference 1 vs 4 workers " + fmt("%.1e", worst));
  });

  guarded(report, "model-size", [&] {
    const MultiChannelSeries s(testing::random_walks(4000, 3, 6));
    AutoArConfig cfg;
    cfg.lookback_grid = {512};
    const AutoArResult r = run_auto_ar(s, cfg);
    report.line("model-size", r.fit.model.parameter_count() == 513 && r.selection.chosen_p == 512,
                "p=512 model reports " + std::to_string(r.fit.model.parameter_count()) +
                    " parameters");
  });

  return report.exit_code();
}
