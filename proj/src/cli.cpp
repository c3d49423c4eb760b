#include "autoar/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "autoar/armodel.hpp"
#include "autoar/autoar.hpp"
#include "autoar/bench.hpp"
#include "autoar/dataio.hpp"
#include "autoar/error.hpp"

namespace autoar {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kAutoArMethod = "Auto-AR";
constexpr const char* kArMethod = "AR";
constexpr const char* kZeroShotMethod = "Auto-AR-ZS";

// Everything a run needs after merging defaults, the config file and flags.
struct RunConfig {
  std::vector<std::string> presets;
  std::vector<std::string> data;
  std::string data_dir;
  std::vector<std::size_t> horizons;
  std::size_t context_len = 512;
  double train_fraction = 1.0;
  AutoArConfig autoar;
  bool allow_skip = false;
  std::size_t ar_lookback = 512;
  bool skip_ar = false;
  bool zero_shot = false;
  bool reuse_selection = false;
  std::vector<std::string> baseline_ref;
  std::string baseline = "Auto-ARIMA";
  std::string metric = "rmse";
  std::string ties = "average";
  std::vector<std::string> methods;
  std::vector<std::string> exclude_datasets;
  std::string out;
  std::size_t stride = 1;
  std::size_t jobs = 1;
  // forecast only
  std::string model;
  std::vector<std::string> inputs;
};

// Raw flag values; applied only when the flag was given on the command line.
struct Flags {
  std::string config;
  std::vector<std::string> presets, data, baseline_ref, inputs;
  std::string data_dir, horizons, grid, zs_grid, out, model, baseline, metric,
      ties, methods, exclude;
  std::size_t context_len = 0, lookback_max = 0, zs_window = 0, ar_lookback = 0,
              jobs = 0, stride = 0;
  double kpss_alpha = 0.0, train_fraction = 0.0;
  int force_d = 0;
  bool no_intercept = false, allow_skip = false, skip_ar = false,
       zero_shot = false, reuse_selection = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// Items of a comma-split flag, without surrounding blanks or empty entries.
std::vector<std::string> trimmed(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    for (auto& part : split_list(item)) out.push_back(std::move(part));
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s, const char* what) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      if (item.empty() || item[0] == '-') throw std::invalid_argument("");
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) {
      throw ConfigError(std::string(what) + ": '" + item +
                        "' is not a non-negative integer");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError(std::string(what) + " is empty");
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (auto x : v) out += (out.empty() ? "" : ", ") + std::to_string(x);
  return out;
}

std::string read_file(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  const std::string text = read_file(path, "config file");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path + " must hold an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "presets") cfg.presets = v.get<std::vector<std::string>>();
      else if (key == "data") cfg.data = v.get<std::vector<std::string>>();
      else if (key == "data_dir") cfg.data_dir = v.get<std::string>();
      else if (key == "horizons") cfg.horizons = v.get<std::vector<std::size_t>>();
      else if (key == "context_len") cfg.context_len = v.get<std::size_t>();
      else if (key == "train_fraction") cfg.train_fraction = v.get<double>();
      else if (key == "lookback_max") cfg.autoar.max_lookback = v.get<std::size_t>();
      else if (key == "grid") cfg.autoar.lookback_grid = v.get<std::vector<std::size_t>>();
      else if (key == "kpss_alpha") cfg.autoar.kpss_significance = v.get<double>();
      else if (key == "intercept") cfg.autoar.intercept = v.get<bool>();
      else if (key == "force_d") cfg.autoar.force_d = v.get<int>();
      else if (key == "zero_shot") cfg.zero_shot = v.get<bool>();
      else if (key == "zero_shot_window") cfg.autoar.zero_shot_window = v.get<std::size_t>();
      else if (key == "zero_shot_grid") cfg.autoar.zero_shot_grid = v.get<std::vector<std::size_t>>();
      else if (key == "reuse_selection") cfg.reuse_selection = v.get<bool>();
      else if (key == "allow_skip") cfg.allow_skip = v.get<bool>();
      else if (key == "ar_lookback") cfg.ar_lookback = v.get<std::size_t>();
      else if (key == "skip_ar") cfg.skip_ar = v.get<bool>();
      else if (key == "baseline_ref") cfg.baseline_ref = v.get<std::vector<std::string>>();
      else if (key == "baseline") cfg.baseline = v.get<std::string>();
      else if (key == "metric") cfg.metric = v.get<std::string>();
      else if (key == "ties") cfg.ties = v.get<std::string>();
      else if (key == "methods") cfg.methods = v.get<std::vector<std::string>>();
      else if (key == "exclude_datasets") cfg.exclude_datasets = v.get<std::vector<std::string>>();
      else if (key == "out") cfg.out = v.get<std::string>();
      else if (key == "stride") cfg.stride = v.get<std::size_t>();
      else if (key == "jobs") cfg.jobs = v.get<std::size_t>();
      else throw ConfigError("config file " + path + ": unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["presets"] = c.presets;
  j["data"] = c.data;
  j["data_dir"] = c.data_dir;
  j["horizons"] = c.horizons;
  j["context_len"] = c.context_len;
  j["train_fraction"] = c.train_fraction;
  j["lookback_max"] = c.autoar.max_lookback;
  j["grid"] = c.autoar.lookback_grid;
  j["kpss_alpha"] = c.autoar.kpss_significance;
  j["intercept"] = c.autoar.intercept;
  j["force_d"] = c.autoar.force_d ? json(*c.autoar.force_d) : json(nullptr);
  j["zero_shot"] = c.zero_shot;
  j["zero_shot_window"] = c.autoar.zero_shot_window;
  j["zero_shot_grid"] = c.autoar.zero_shot_grid;
  j["reuse_selection"] = c.reuse_selection;
  j["allow_skip"] = c.allow_skip;
  j["ar_lookback"] = c.ar_lookback;
  j["skip_ar"] = c.skip_ar;
  j["baseline_ref"] = c.baseline_ref;
  j["baseline"] = c.baseline;
  j["metric"] = c.metric;
  j["ties"] = c.ties;
  j["methods"] = c.methods;
  j["exclude_datasets"] = c.exclude_datasets;
  j["out"] = c.out;
  j["stride"] = c.stride;
  j["jobs"] = c.jobs;
  return j;
}

void add_data_flags(CLI::App* app, Flags& f) {
  app->add_option("--preset", f.presets,
                  "Benchmark preset(s), e.g. ETTh1 (comma separated or repeated; 'all')")
      ->delimiter(',');
  app->add_option("--data", f.data, "CSV file(s) with a timestamp column")
      ->delimiter(',');
  app->add_option("--data-dir", f.data_dir,
                  "Directory holding preset files (default: $AUTOAR_DATA_DIR or ./data)");
  app->add_option("--train-fraction", f.train_fraction,
                  "Keep the trailing fraction of each training split");
}

void add_model_flags(CLI::App* app, Flags& f) {
  app->add_option("--lookback-max", f.lookback_max, "Largest lookback considered");
  app->add_option("--grid", f.grid, "Lookback candidates, e.g. 8,16,32");
  app->add_option("--kpss-alpha", f.kpss_alpha, "KPSS significance (0.1, 0.05, 0.025, 0.01)");
  app->add_option("--force-d", f.force_d, "Skip KPSS and use this differencing order");
  app->add_flag("--no-intercept", f.no_intercept, "Fit without an intercept");
  app->add_flag("--allow-skip", f.allow_skip,
                "Drop lookback candidates too long for the data instead of failing");
  app->add_option("--jobs", f.jobs, "Worker threads");
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file (flags override it)");
  app->add_option("--out", f.out, "Output directory");
}

void add_eval_flags(CLI::App* app, Flags& f) {
  app->add_option("--horizons", f.horizons, "Forecast horizons, e.g. 96,192");
  app->add_option("--context-len", f.context_len, "History length L per test window");
  app->add_option("--stride", f.stride, "Evaluate every s-th test window");
  app->add_option("--zero-shot-window", f.zs_window, "Rolling window W of zero-shot fitting");
  app->add_option("--zero-shot-grid", f.zs_grid, "Zero-shot lookback candidates");
  app->add_flag("--reuse-selection", f.reuse_selection,
                "Zero-shot: choose d and p on the first window only");
  app->add_option("--baseline-ref", f.baseline_ref,
                  "Reference results CSV(s) merged into the aggregate")
      ->delimiter(',');
  app->add_option("--baseline", f.baseline, "Baseline method of % improvement");
  app->add_option("--metric", f.metric, "Aggregate score: rmse or mae");
  app->add_option("--ties", f.ties, "Rank ties: average or max");
  app->add_option("--methods", f.methods, "Only aggregate these methods");
  app->add_option("--exclude-datasets", f.exclude, "Leave these datasets out of the aggregate");
}

// Applies the config file, then every flag present on the command line.
RunConfig resolve_config(const CLI::App* sub, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) apply_config_file(c, f.config);
  auto given = [&](const char* name) {
    try {
      return sub->count(name) > 0;
    } catch (const CLI::OptionNotFound&) {
      return false;
    }
  };
  if (given("--preset")) c.presets = trimmed(f.presets);
  if (given("--data")) c.data = trimmed(f.data);
  if (given("--data-dir")) c.data_dir = f.data_dir;
  if (given("--horizons")) c.horizons = parse_sizes(f.horizons, "--horizons");
  if (given("--context-len")) c.context_len = f.context_len;
  if (given("--train-fraction")) c.train_fraction = f.train_fraction;
  if (given("--lookback-max")) c.autoar.max_lookback = f.lookback_max;
  if (given("--grid")) c.autoar.lookback_grid = parse_sizes(f.grid, "--grid");
  if (given("--kpss-alpha")) c.autoar.kpss_significance = f.kpss_alpha;
  if (given("--force-d")) c.autoar.force_d = f.force_d;
  if (given("--no-intercept")) c.autoar.intercept = false;
  if (given("--allow-skip")) c.allow_skip = true;
  if (given("--zero-shot-window")) c.autoar.zero_shot_window = f.zs_window;
  if (given("--zero-shot-grid")) {
    c.autoar.zero_shot_grid = parse_sizes(f.zs_grid, "--zero-shot-grid");
  }
  if (given("--reuse-selection")) c.reuse_selection = true;
  if (given("--ar-lookback")) c.ar_lookback = f.ar_lookback;
  if (given("--skip-ar")) c.skip_ar = true;
  if (given("--zero-shot")) c.zero_shot = true;
  if (given("--baseline-ref")) c.baseline_ref = trimmed(f.baseline_ref);
  if (given("--baseline")) c.baseline = f.baseline;
  if (given("--metric")) c.metric = f.metric;
  if (given("--ties")) c.ties = f.ties;
  if (given("--methods")) c.methods = split_list(f.methods);
  if (given("--exclude-datasets")) c.exclude_datasets = split_list(f.exclude);
  if (given("--out")) c.out = f.out;
  if (given("--stride")) c.stride = f.stride;
  if (given("--jobs")) c.jobs = f.jobs;
  if (given("--model")) c.model = f.model;
  if (given("--input")) c.inputs = trimmed(f.inputs);

  if (c.jobs == 0) throw ConfigError("--jobs must be at least 1");
  if (c.stride == 0) throw ConfigError("--stride must be at least 1");
  if (c.context_len == 0) throw ConfigError("--context-len must be at least 1");
  if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0)) {
    throw ConfigError("--train-fraction must lie in (0, 1]");
  }
  if (c.metric != "rmse" && c.metric != "mae") {
    throw ConfigError("--metric must be rmse or mae");
  }
  if (c.ties != "average" && c.ties != "max") {
    throw ConfigError("--ties must be average or max");
  }
  c.autoar.jobs = c.jobs;
  c.autoar.zero_shot = c.zero_shot;
  c.autoar.validate();
  return c;
}

struct DatasetSource {
  std::string id;
  fs::path path;
  SplitSpec split;
  std::vector<std::size_t> horizons;
  std::optional<std::size_t> channels;
  bool is_preset = false;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Resolves presets and paths without loading anything; fails on the first
// missing file so no work starts on a partially valid configuration.
std::vector<DatasetSource> resolve_datasets(const RunConfig& c) {
  fs::path dir = c.data_dir;
  if (dir.empty()) {
    const char* env = std::getenv("AUTOAR_DATA_DIR");
    dir = env && *env ? fs::path(env) : fs::path("data");
  }
  std::vector<std::string> names;
  for (const auto& raw : c.presets) {
    const std::string p = trim(raw);
    if (lower(p) == "all") {
      for (const auto& preset : dataset_presets()) names.push_back(preset.name);
    } else {
      names.push_back(p);
    }
  }
  std::vector<DatasetSource> out;
  for (const auto& name : names) {
    const DatasetPreset& p = find_preset(name);
    out.push_back({p.name, dir / p.file_name, p.split, p.horizons, p.channels, true});
  }
  for (const auto& path : c.data) {
    DatasetSource s;
    s.path = path;
    s.id = fs::path(path).stem().string();
    s.split = SplitSpec::fractional();
    s.horizons = {96, 192, 336, 720};
    for (const auto& p : dataset_presets()) {
      if (lower(p.file_name) == lower(fs::path(path).filename().string())) {
        s = {p.name, path, p.split, p.horizons, p.channels, true};
      }
    }
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("no dataset given (use --preset or --data)");
  std::set<std::string> seen;
  for (auto& s : out) {
    if (!seen.insert(s.id).second) throw ConfigError("dataset " + s.id + " given twice");
    if (!c.horizons.empty()) s.horizons = c.horizons;
    for (auto h : s.horizons) {
      ForecastTask t;
      t.dataset_id = s.is_preset ? s.id : "";
      t.horizon = h;
      t.context_len = c.context_len;
      t.train_fraction = c.train_fraction;
      t.validate();
    }
    if (!fs::is_regular_file(s.path)) {
      throw DataError("dataset " + s.id + ": file " + s.path.string() +
                      " not found (set --data-dir or AUTOAR_DATA_DIR)");
    }
  }
  return out;
}

// A dataset after splitting, subsampling and standardization.
struct Prepared {
  DatasetSource source;
  SplitSpec split;
  Scaler scaler;
  MultiChannelSeries standardized;
  MultiChannelSeries train;
};

Prepared prepare(const DatasetSource& s, const RunConfig& c) {
  const MultiChannelSeries raw = load_csv(s.path, s.channels);
  const SplitSpec spec = s.split.resolved(raw.length());
  const SplitSeries parts = split(raw, spec);
  const Scaler scaler = fit_scaler(parts.train);
  MultiChannelSeries standardized = apply_scaler(scaler, raw);
  MultiChannelSeries train = standardized.rows(0, spec.train_len);
  if (c.train_fraction < 1.0) train = subsample_train(train, c.train_fraction);
  return {s, spec, scaler, std::move(standardized), std::move(train)};
}

// Without --allow-skip, every lookback candidate must be fittable on the
// (possibly differenced) training rows.
void check_grid(const std::vector<std::size_t>& grid, std::size_t rows,
                std::size_t channels, const RunConfig& c, const std::string& id) {
  if (c.allow_skip) return;
  const std::size_t usable = rows > 0 ? rows - 1 : 0;
  std::vector<std::size_t> bad;
  for (auto p : grid) {
    if (p > c.autoar.max_lookback ||
        !lookback_feasible(p, usable, channels, c.autoar.intercept)) {
      bad.push_back(p);
    }
  }
  if (!bad.empty()) {
    throw DataError(id + ": lookback candidates " + join_sizes(bad) +
                    " are infeasible for " + std::to_string(rows) +
                    " training rows (shrink --grid or pass --allow-skip)");
  }
}

std::string model_text(const ArModel& model, const Scaler* scaler) {
  json j = json::parse(serialize_model(model));
  if (scaler) {
    j["scaler"] = {
        {"mean", std::vector<double>(scaler->mean.data(),
                                     scaler->mean.data() + scaler->mean.size())},
        {"std", std::vector<double>(scaler->std.data(),
                                    scaler->std.data() + scaler->std.size())}};
  }
  return j.dump(1) + "\n";
}

json selection_json(const std::string& id, const AutoArResult& r) {
  json j;
  j["dataset"] = id;
  j["chosen_p"] = r.selection.chosen_p;
  j["d"] = r.selection.d;
  json bic = json::object();
  for (const auto& [p, v] : r.selection.bic_by_p) bic[std::to_string(p)] = v;
  j["bic_by_p"] = bic;
  j["kpss_reject"] = r.selection.per_channel_reject;
  j["skipped"] = r.selection.skipped;
  j["parameters"] = r.fit.model.parameter_count();
  return j;
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto sources = resolve_datasets(c);
  if (sources.size() != 1) throw ConfigError("fit takes exactly one dataset");
  const Prepared d = prepare(sources.front(), c);
  check_grid(c.autoar.lookback_grid, d.train.length(), d.train.channels(), c,
             d.source.id);
  const auto t0 = std::chrono::steady_clock::now();
  const AutoArResult r = run_auto_ar(d.train, c.autoar);
  err << d.source.id << ": p=" << r.selection.chosen_p << " d=" << r.selection.d
      << " fit=" << fmt("%.2f", seconds_since(t0)) << "s\n";
  const std::string model = model_text(r.fit.model, &d.scaler);
  const std::string selection = selection_json(d.source.id, r).dump(1) + "\n";
  if (c.out.empty()) {
    out << model;
    return kExitOk;
  }
  const fs::path dir = c.out;
  write_file(dir / "models" / (d.source.id + ".model"), model);
  write_file(dir / "selection.json", selection);
  write_file(dir / "config.echo", to_json(c).dump(1) + "\n");
  out << selection;
  return kExitOk;
}

int cmd_forecast(const RunConfig& c, std::ostream& out, std::ostream&) {
  if (c.model.empty()) throw ConfigError("forecast needs --model");
  if (c.data.size() != 1) throw ConfigError("forecast needs one --data context CSV");
  if (c.horizons.size() > 1) throw ConfigError("forecast takes a single --horizons value");
  const std::size_t horizon = c.horizons.empty() ? 96 : c.horizons.front();
  const std::string text = read_file(c.model, "model file");
  const ArModel model = parse_model(text);
  std::optional<Scaler> scaler;
  try {
    const auto j = json::parse(text);
    if (j.contains("scaler")) {
      const auto mean = j["scaler"].at("mean").get<std::vector<double>>();
      const auto sd = j["scaler"].at("std").get<std::vector<double>>();
      Scaler s;
      s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      s.std = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
      scaler = s;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed scaler in model file: ") + e.what());
  }
  const MultiChannelSeries context = load_csv(c.data.front());
  const std::size_t expected = scaler ? static_cast<std::size_t>(scaler->mean.size())
                                      : model.channel_names.size();
  if (expected != 0 && expected != context.channels()) {
    throw DataError("context has " + std::to_string(context.channels()) +
                    " channels but the model was fitted on " + std::to_string(expected));
  }
  if (context.length() < model.required_context()) {
    throw DataError("context has " + std::to_string(context.length()) +
                    " rows; the model needs p + d = " +
                    std::to_string(model.required_context()));
  }
  Eigen::MatrixXd pred;
  if (scaler) {
    pred = invert_scaler(*scaler, forecast(model, apply_scaler(*scaler, context), horizon));
  } else {
    pred = forecast(model, context, horizon);
  }
  std::ostringstream csv;
  csv << "date";
  for (const auto& name : context.channel_names()) csv << ',' << name;
  csv << '\n';
  for (Eigen::Index h = 0; h < pred.rows(); ++h) {
    csv << context.length() + static_cast<std::size_t>(h);
    for (Eigen::Index ch = 0; ch < pred.cols(); ++ch) csv << ',' << fmt("%.17g", pred(h, ch));
    csv << '\n';
  }
  if (c.out.empty()) {
    out << csv.str();
  } else {
    write_file(c.out, csv.str());
  }
  return kExitOk;
}

AggregateOptions aggregate_options(const RunConfig& c) {
  AggregateOptions o;
  o.baseline = c.baseline;
  o.metric = c.metric == "mae" ? ScoreMetric::mae : ScoreMetric::rmse;
  o.ties = c.ties == "max" ? TiePolicy::max : TiePolicy::average;
  o.methods = c.methods;
  o.exclude_datasets = c.exclude_datasets;
  return o;
}

// Reads either a reference file or a records.csv written by `bench`.
std::vector<EvalRecord> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open results file " + path);
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header.rfind("dataset,horizon,method,context_len", 0) != 0) {
    return load_reference_results(path);
  }
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 11) f.emplace_back();
    const std::string where = path + ":" + std::to_string(line_no);
    try {
      EvalRecord r;
      r.task.dataset_id = f[0];
      r.task.horizon = std::stoul(f[1]);
      r.method = f[2];
      r.task.context_len = std::stoul(f[3]);
      r.task.train_fraction = std::stod(f[4]);
      if (!f[5].empty()) r.lookback = std::stoul(f[5]);
      if (!f[6].empty()) r.differencing = std::stoi(f[6]);
      r.n_windows = std::stoul(f[7]);
      if (!f[8].empty()) r.mse = std::stod(f[8]);
      if (!f[9].empty()) r.mae = std::stod(f[9]);
      if (!f[10].empty()) r.rmse = std::stod(f[10]);
      out.push_back(r);
    } catch (const std::exception&) {
      throw DataError(where + ": malformed record");
    }
  }
  return out;
}

// Reference records with the computed ones taking precedence on clashes.
std::vector<EvalRecord> merge_records(const std::vector<EvalRecord>& reference,
                                      const std::vector<EvalRecord>& computed) {
  std::set<std::tuple<std::string, std::size_t, std::string>> own;
  for (const auto& r : computed) own.emplace(r.task.dataset_id, r.task.horizon, r.method);
  std::vector<EvalRecord> out;
  for (const auto& r : reference) {
    if (!own.count({r.task.dataset_id, r.task.horizon, r.method})) out.push_back(r);
  }
  out.insert(out.end(), computed.begin(), computed.end());
  return out;
}

EvalRecord make_record(const Prepared& d, const RunConfig& c, const std::string& method,
                       const HorizonMetrics& m, std::optional<std::size_t> p,
                       std::optional<int> diff) {
  EvalRecord r;
  r.task.dataset_id = d.source.id;
  r.task.horizon = m.horizon;
  r.task.context_len = c.context_len;
  r.task.split = d.split;
  r.task.train_fraction = c.train_fraction;
  r.method = method;
  r.mse = m.mse;
  r.mae = m.mae;
  r.rmse = m.rmse;
  r.n_windows = m.n_windows;
  r.lookback = p;
  r.differencing = diff;
  return r;
}

void log_line(std::ostream& err, const std::string& id, const HorizonMetrics& m,
              const std::string& method, const std::string& detail, double secs) {
  err << id << " H=" << m.horizon << ' ' << method << ' ' << detail
      << " fit=" << fmt("%.2f", secs) << "s mse=" << fmt("%.4f", m.mse)
      << " mae=" << fmt("%.4f", m.mae) << " windows=" << m.n_windows << '\n';
}

int cmd_bench(const RunConfig& c, std::ostream& out, std::ostream& err) {
  // Validate everything that can fail before the first fit.
  const auto sources = resolve_datasets(c);
  std::vector<EvalRecord> reference;
  for (const auto& path : c.baseline_ref) {
    auto part = load_results(path);
    reference.insert(reference.end(), part.begin(), part.end());
  }

  std::vector<EvalRecord> computed;
  std::map<fs::path, std::string> models;
  for (const auto& source : sources) {
    const Prepared d = prepare(source, c);
    const EvalWindowSpec spec{d.split.test_begin(), d.split.end(), source.horizons,
                              c.stride};

    if (c.zero_shot) {
      const auto t0 = std::chrono::steady_clock::now();
      ZeroShotForecaster zs(c.autoar, c.context_len, c.reuse_selection);
      const auto metrics = evaluate(zs, d.standardized, spec, c.jobs);
      const double secs = seconds_since(t0);
      for (const auto& m : metrics) {
        computed.push_back(make_record(d, c, kZeroShotMethod, m, std::nullopt, std::nullopt));
        log_line(err, source.id, m, kZeroShotMethod, "W=" + std::to_string(c.autoar.zero_shot_window), secs);
      }
      continue;
    }

    check_grid(c.autoar.lookback_grid, d.train.length(), d.train.channels(), c, source.id);
    auto t0 = std::chrono::steady_clock::now();
    const AutoArResult fit = run_auto_ar(d.train, c.autoar);
    double secs = seconds_since(t0);
    ArForecaster auto_ar(fit.fit.model, c.context_len);
    const auto metrics = evaluate(auto_ar, d.standardized, spec, c.jobs);
    const std::string text = model_text(fit.fit.model, &d.scaler);
    for (const auto& m : metrics) {
      computed.push_back(make_record(d, c, kAutoArMethod, m, fit.selection.chosen_p,
                                     fit.selection.d));
      log_line(err, source.id, m, kAutoArMethod,
               "p=" + std::to_string(fit.selection.chosen_p) +
                   " d=" + std::to_string(fit.selection.d),
               secs);
      models[fs::path("models") / (source.id + "_" + std::to_string(m.horizon) + ".model")] = text;
    }

    if (!c.skip_ar) {
      if (!lookback_feasible(c.ar_lookback, d.train.length(), d.train.channels(),
                             c.autoar.intercept)) {
        throw DataError(source.id + ": AR baseline lookback " +
                        std::to_string(c.ar_lookback) + " is infeasible for " +
                        std::to_string(d.train.length()) + " training rows (use --skip-ar)");
      }
      t0 = std::chrono::steady_clock::now();
      const FitResult ar = run_untuned_ar(d.train, c.ar_lookback,
                                          FitOptions{c.autoar.intercept, c.jobs});
      secs = seconds_since(t0);
      ArForecaster ar_fc(ar.model, std::max(c.context_len, ar.model.required_context()));
      for (const auto& m : evaluate(ar_fc, d.standardized, spec, c.jobs)) {
        computed.push_back(make_record(d, c, kArMethod, m, c.ar_lookback, 0));
        log_line(err, source.id, m, kArMethod, "p=" + std::to_string(c.ar_lookback) + " d=0", secs);
      }
    }
  }

  std::ostringstream records;
  write_records_csv(records, computed);
  std::optional<AggregateReport> report;
  if (!reference.empty()) {
    const auto merged = merge_records(reference, computed);
    report = aggregate(merged, aggregate_options(c));
  }

  if (!c.out.empty()) {
    const fs::path dir = c.out;
    write_file(dir / "records.csv", records.str());
    if (report) {
      std::ostringstream agg;
      write_aggregate_csv(agg, *report);
      write_file(dir / "aggregate.csv", agg.str());
    }
    for (const auto& [rel, text] : models) write_file(dir / rel, text);
    write_file(dir / "config.echo", to_json(c).dump(1) + "\n");
  } else {
    out << records.str();
  }
  if (report) out << format_aggregate_table(*report);
  return kExitOk;
}

int cmd_aggregate(const RunConfig& c, std::ostream& out) {
  std::vector<std::string> files = c.inputs;
  files.insert(files.end(), c.baseline_ref.begin(), c.baseline_ref.end());
  if (files.empty()) throw ConfigError("aggregate needs --input or --baseline-ref files");
  std::vector<EvalRecord> reference, computed;
  for (const auto& path : c.baseline_ref) {
    auto part = load_results(path);
    reference.insert(reference.end(), part.begin(), part.end());
  }
  for (const auto& path : c.inputs) {
    auto part = load_results(path);
    computed.insert(computed.end(), part.begin(), part.end());
  }
  const auto report = aggregate(merge_records(reference, computed), aggregate_options(c));
  if (!c.out.empty()) {
    std::ostringstream agg;
    write_aggregate_csv(agg, report);
    write_file(fs::path(c.out) / "aggregate.csv", agg.str());
  }
  out << format_aggregate_table(report);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Auto-AR forecasting and long-horizon benchmark tool", "autoar"};
  app.require_subcommand(1);
  Flags f;

  auto* fit = app.add_subcommand("fit", "Select d and p on a training split and write the model");
  add_common(fit, f);
  add_data_flags(fit, f);
  add_model_flags(fit, f);

  auto* fc = app.add_subcommand("forecast", "Forecast H steps from a context CSV with a saved model");
  add_common(fc, f);
  fc->add_option("--model", f.model, "Model file written by fit or bench");
  fc->add_option("--data", f.data, "Context CSV");
  fc->add_option("--horizons", f.horizons, "Forecast horizon H");

  auto* bench = app.add_subcommand("bench", "Evaluate Auto-AR and AR on benchmark test splits");
  add_common(bench, f);
  add_data_flags(bench, f);
  add_model_flags(bench, f);
  add_eval_flags(bench, f);
  bench->add_option("--ar-lookback", f.ar_lookback, "Lookback of the untuned AR baseline");
  bench->add_flag("--skip-ar", f.skip_ar, "Do not run the untuned AR baseline");
  bench->add_flag("--zero-shot", f.zero_shot, "Fit on each test window's own history");

  auto* zs = app.add_subcommand("zeroshot", "Zero-shot Auto-AR on benchmark test splits");
  add_common(zs, f);
  add_data_flags(zs, f);
  add_model_flags(zs, f);
  add_eval_flags(zs, f);

  auto* agg = app.add_subcommand("aggregate", "Aggregate result files into the summary table");
  add_common(agg, f);
  agg->add_option("--baseline-ref", f.baseline_ref, "Reference results CSV(s)")->delimiter(',');
  agg->add_option("--input", f.inputs, "records.csv file(s) from bench")->delimiter(',');
  agg->add_option("--baseline", f.baseline, "Baseline method of % improvement");
  agg->add_option("--metric", f.metric, "Score: rmse or mae");
  agg->add_option("--ties", f.ties, "Rank ties: average or max");
  agg->add_option("--methods", f.methods, "Only these methods (comma separated)");
  agg->add_option("--exclude-datasets", f.exclude, "Leave these datasets out");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  if (!argv.empty()) argv.pop_back();  // program name
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (fit->parsed()) return cmd_fit(resolve_config(fit, f), out, err);
    if (fc->parsed()) {
      RunConfig c = resolve_config(fc, f);
      return cmd_forecast(c, out, err);
    }
    if (bench->parsed()) return cmd_bench(resolve_config(bench, f), out, err);
    if (zs->parsed()) {
      Flags zf = f;
      RunConfig c = resolve_config(zs, zf);
      c.zero_shot = true;
      c.autoar.zero_shot = true;
      c.autoar.validate();
      return cmd_bench(c, out, err);
    }
    if (agg->parsed()) return cmd_aggregate(resolve_config(agg, f), out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}

}  // namespace autoar
