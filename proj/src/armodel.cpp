#include "autoar/armodel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include <json.hpp>

#include "autoar/error.hpp"
#include "autoar/stattests.hpp"

namespace autoar {

namespace {

constexpr std::string_view kModelFormat = "autoar-model";
constexpr int kModelVersion = 1;

// Relative RSS below which the quadratic form is replaced by an explicit pass.
constexpr double kExplicitRssThreshold = 1e-8;

std::vector<std::span<const double>> channel_spans(const MultiChannelSeries& s) {
  std::vector<std::span<const double>> out;
  out.reserve(s.channels());
  for (std::size_t c = 0; c < s.channels(); ++c) out.push_back(s.channel(c));
  return out;
}

// Affine recursion on one differenced-or-level window of exactly p + d values.
Eigen::VectorXd recurse(const ArModel& model, std::span<const double> window,
                        std::size_t horizon, bool with_intercept) {
  const std::size_t p = model.lookback;
  const int d = model.differencing;
  std::vector<double> hist(p + horizon);
  if (d == 1) {
    for (std::size_t i = 0; i < p; ++i) hist[i] = window[i + 1] - window[i];
  } else {
    for (std::size_t i = 0; i < p; ++i) hist[i] = window[i];
  }
  const double a0 = with_intercept && model.has_intercept ? model.intercept : 0.0;
  // Reversed so reversed(j) multiplies hist[pos - p + j].
  const Eigen::VectorXd reversed = model.coeffs.reverse();
  for (std::size_t h = 0; h < horizon; ++h) {
    const std::size_t pos = p + h;
    hist[pos] = a0 + reversed.dot(Eigen::Map<const Eigen::VectorXd>(
                         hist.data() + pos - p, static_cast<Eigen::Index>(p)));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(horizon));
  double level = d == 1 ? window.back() : 0.0;
  for (std::size_t h = 0; h < horizon; ++h) {
    if (d == 1) {
      level += hist[p + h];
      out(static_cast<Eigen::Index>(h)) = level;
    } else {
      out(static_cast<Eigen::Index>(h)) = hist[p + h];
    }
  }
  return out;
}

void check_model(const ArModel& model) {
  if (model.differencing != 0 && model.differencing != 1) {
    throw ConfigError("differencing order " + std::to_string(model.differencing) +
                      " is not supported (only 0 or 1)");
  }
  if (model.lookback == 0 ||
      static_cast<std::size_t>(model.coeffs.size()) != model.lookback) {
    throw ConfigError("model lookback " + std::to_string(model.lookback) +
                      " does not match " + std::to_string(model.coeffs.size()) +
                      " coefficients");
  }
}

}  // namespace

FitDiagnostics make_diagnostics(double rss, double n, std::size_t k_params) {
  FitDiagnostics out;
  out.rss = rss;
  out.n = n;
  // An exact fit would send ln(rss) to -inf; the floor keeps BIC finite and
  // lets the parameter penalty break ties between exact fits.
  const double floored = std::max(rss, n * std::numeric_limits<double>::min());
  const double sigma2 = floored / n;
  out.log_likelihood = -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
  out.bic = n * std::log(sigma2) + static_cast<double>(k_params) * std::log(n);
  return out;
}

FitResult fit_differenced(std::span<const std::span<const double>> channels,
                          std::size_t p, int d, const FitOptions& options,
                          std::span<const std::vector<double>> weights) {
  if (p == 0) throw ConfigError("lookback must be at least 1");
  if (channels.empty()) throw DataError("fit needs at least one channel");
  if (!weights.empty() && weights.size() != channels.size()) {
    throw DataError("one weight vector per channel is required");
  }
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() <= p) {
      throw DataError("channel " + std::to_string(c) + " has " +
                      std::to_string(channels[c].size()) +
                      " rows after differencing; lookback " + std::to_string(p) +
                      " needs at least " + std::to_string(p + 1));
    }
  }

  LagCrossProducts cp(p);
  if (weights.empty()) {
    cp = pooled_cross_products(channels, p, options.jobs);
  } else {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      accumulate_lagged_weighted(cp, channels[c], weights[c]);
    }
  }
  if (cp.count <= 0.0) throw DataError("fit has no training samples");

  const OlsSolution sol = solve_normal_equations(cp, options.intercept);
  double rss = quadratic_rss(cp, sol.beta);
  if (!(rss > kExplicitRssThreshold * cp.yty)) {
    rss = 0.0;
    for (std::size_t c = 0; c < channels.size(); ++c) {
      rss += explicit_rss(channels[c], p, sol.beta, options.intercept,
                          weights.empty() ? std::span<const double>{}
                                          : std::span<const double>(weights[c]));
    }
  }
  rss = std::max(rss, 0.0);

  FitResult out;
  ArModel& m = out.model;
  m.lookback = p;
  m.differencing = d;
  m.has_intercept = options.intercept;
  m.intercept = options.intercept ? sol.beta(0) : 0.0;
  m.coeffs = sol.beta.tail(static_cast<Eigen::Index>(p));
  m.n_train_samples = static_cast<std::size_t>(std::llround(cp.count));
  m.noise_var = rss / cp.count;
  if (!m.coeffs.allFinite() || !std::isfinite(m.intercept)) {
    throw NumericalError("fit produced non-finite coefficients");
  }
  out.diagnostics = make_diagnostics(rss, cp.count, m.parameter_count() + 1);
  out.diagnostics.regularized = sol.regularized;
  return out;
}

FitResult fit(const MultiChannelSeries& train, std::size_t p, int d,
              const FitOptions& options) {
  const MultiChannelSeries work = difference(train, d);
  const auto spans = channel_spans(work);
  FitResult out = fit_differenced(spans, p, d, options);
  out.model.channel_names = train.channel_names();
  return out;
}

std::vector<FitResult> fit_per_channel(const MultiChannelSeries& train,
                                       std::size_t p, int d,
                                       const FitOptions& options) {
  const MultiChannelSeries work = difference(train, d);
  std::vector<FitResult> out;
  out.reserve(work.channels());
  for (std::size_t c = 0; c < work.channels(); ++c) {
    const std::span<const double> one[] = {work.channel(c)};
    out.push_back(fit_differenced(one, p, d, options));
    out.back().model.channel_names = {train.channel_names()[c]};
  }
  return out;
}

Eigen::VectorXd forecast_one(const ArModel& model, std::span<const double> context,
                             std::size_t horizon) {
  check_model(model);
  const std::size_t need = model.required_context();
  if (context.size() < need) {
    throw DataError("context of " + std::to_string(context.size()) +
                    " rows is shorter than the " + std::to_string(need) +
                    " the model needs (p + d)");
  }
  return recurse(model, context.subspan(context.size() - need), horizon, true);
}

Eigen::MatrixXd forecast(const ArModel& model, const MultiChannelSeries& context,
                         std::size_t horizon) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(horizon),
                      static_cast<Eigen::Index>(context.channels()));
  for (std::size_t c = 0; c < context.channels(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) =
        forecast_one(model, context.channel(c), horizon);
  }
  return out;
}

ForecastOperator make_forecast_operator(const ArModel& model,
                                        std::size_t horizon) {
  check_model(model);
  const std::size_t width = model.required_context();
  ForecastOperator op;
  op.weights.resize(static_cast<Eigen::Index>(horizon),
                    static_cast<Eigen::Index>(width));
  std::vector<double> window(width, 0.0);
  op.offset = recurse(model, window, horizon, true);
  for (std::size_t i = 0; i < width; ++i) {
    window.assign(width, 0.0);
    window[i] = 1.0;
    op.weights.col(static_cast<Eigen::Index>(i)) =
        recurse(model, window, horizon, false);
  }
  return op;
}

std::string serialize_model(const ArModel& model) {
  check_model(model);
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["p"] = model.lookback;
  j["d"] = model.differencing;
  j["has_intercept"] = model.has_intercept;
  j["intercept"] = model.intercept;
  j["coeffs"] = std::vector<double>(model.coeffs.data(),
                                    model.coeffs.data() + model.coeffs.size());
  j["noise_var"] = model.noise_var;
  j["n_train_samples"] = model.n_train_samples;
  j["channel_names"] = model.channel_names;
  return j.dump(1) + "\n";
}

ArModel parse_model(std::string_view text) {
  ArModel m;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw DataError("not an autoar model file");
    }
    if (j.at("version").get<int>() != kModelVersion) {
      throw DataError("unsupported model version " +
                      std::to_string(j.at("version").get<int>()));
    }
    m.lookback = j.at("p").get<std::size_t>();
    m.differencing = j.at("d").get<int>();
    m.has_intercept = j.value("has_intercept", true);
    m.intercept = j.at("intercept").get<double>();
    const auto coeffs = j.at("coeffs").get<std::vector<double>>();
    m.coeffs = Eigen::Map<const Eigen::VectorXd>(
        coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    m.noise_var = j.at("noise_var").get<double>();
    m.n_train_samples = j.at("n_train_samples").get<std::size_t>();
    m.channel_names =
        j.value("channel_names", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  check_model(m);
  return m;
}

}  // namespace autoar
