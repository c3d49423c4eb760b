#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "autoar/armodel.hpp"
#include "autoar/cli.hpp"
#include "support.hpp"

using namespace autoar;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "autoar");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// A walk-plus-cycle series long enough for the default 512 lookback.
fs::path synthetic_csv(const testing::TempDir& dir, const std::string& name,
                       std::size_t rows = 3000) {
  Eigen::MatrixXd x = testing::random_walks(rows, 3, 19);
  for (Eigen::Index t = 0; t < x.rows(); ++t) x.row(t).array() += std::sin(0.26 * static_cast<double>(t));
  return dir.write(name, testing::csv_of(x));
}

}  // namespace

TEST_CASE("cli: usage errors exit with the config code") {
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"nonsense"}).code == kExitConfig);
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"fit"}).code == kExitConfig);
  CHECK(cli({"bench", "--preset", "nope"}).code == kExitConfig);
}

TEST_CASE("cli: fit with a single grid entry writes the model and selection") {
  testing::TempDir dir;
  const auto csv = synthetic_csv(dir, "walk.csv");
  const auto out = dir.path() / "run";
  const Run r = cli({"fit", "--data", csv.string(), "--grid", "8", "--out", out.string()});
  REQUIRE(r.code == kExitOk);
  const auto sel = nlohmann::json::parse(testing::read_text(out / "selection.json"));
  CHECK(sel["chosen_p"] == 8);
  CHECK(sel["d"] == 1);
  const ArModel m = parse_model(testing::read_text(out / "models" / "walk.model"));
  CHECK(m.lookback == 8);
  CHECK(m.differencing == 1);
  CHECK(fs::exists(out / "config.echo"));
}

TEST_CASE("cli: fit on a 10-row CSV names the infeasible candidates") {
  testing::TempDir dir;
  std::string text = "date,a\n";
  for (int t = 0; t < 10; ++t) text += std::to_string(t) + "," + std::to_string(t * t % 7) + "\n";
  const auto csv = dir.write("tiny.csv", text);
  const Run r = cli({"fit", "--data", csv.string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("infeasible") != std::string::npos);
  CHECK(r.err.find("512") != std::string::npos);
}

TEST_CASE("cli: forecast round trip, persistence and horizon zero") {
  testing::TempDir dir;
  const auto csv = synthetic_csv(dir, "walk.csv");
  const auto out = dir.path() / "fit";
  REQUIRE(cli({"fit", "--data", csv.string(), "--grid", "4,16", "--out", out.string()}).code == 0);
  const auto model_path = out / "models" / "walk.model";

  const Run f = cli({"forecast", "--model", model_path.string(), "--data", csv.string(),
                     "--horizons", "5"});
  REQUIRE(f.code == kExitOk);
  std::istringstream lines(f.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "date,v0,v1,v2");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);

  const Run zero = cli({"forecast", "--model", model_path.string(), "--data", csv.string(),
                        "--horizons", "0"});
  CHECK(zero.code == kExitOk);
  CHECK(zero.out == "date,v0,v1,v2\n");

  ArModel p;
  p.lookback = 1;
  p.coeffs = Eigen::VectorXd::Ones(1);
  const auto pm = dir.write("persist.model", serialize_model(p));
  const auto ctx = dir.write("ctx.csv", "date,a,b\n0,1,2\n1,3,-4.5\n");
  const Run pf = cli({"forecast", "--model", pm.string(), "--data", ctx.string(), "--horizons", "2"});
  CHECK(pf.out == "date,a,b\n2,3,-4.5\n3,3,-4.5\n");

  const auto short_ctx = dir.write("short.csv", "date,a,b,c\n0,1,2,3\n");
  CHECK(cli({"forecast", "--model", model_path.string(), "--data", short_ctx.string()}).code ==
        kExitData);
  CHECK(cli({"forecast", "--model", model_path.string(), "--data", ctx.string()}).code ==
        kExitData);
}

TEST_CASE("cli: bench writes the output layout and is reproducible") {
  testing::TempDir dir;
  const auto csv = synthetic_csv(dir, "walk.csv");
  const auto a = dir.path() / "a";
  const auto b = dir.path() / "b";
  const std::vector<std::string> common{"bench", "--data", csv.string(), "--horizons", "24,48",
                                        "--grid", "4,16,64", "--ar-lookback", "64",
                                        "--context-len", "128"};
  auto args = common;
  args.insert(args.end(), {"--out", a.string()});
  const Run ra = cli(args);
  REQUIRE(ra.code == kExitOk);
  args = common;
  args.insert(args.end(), {"--out", b.string(), "--jobs", "3"});
  REQUIRE(cli(args).code == kExitOk);
  CHECK(testing::read_text(a / "records.csv") == testing::read_text(b / "records.csv"));
  CHECK(fs::exists(a / "models" / "walk_24.model"));
  CHECK(fs::exists(a / "models" / "walk_48.model"));
  CHECK(fs::exists(a / "config.echo"));
  // One log line per (dataset, horizon, method).
  CHECK(std::count(ra.err.begin(), ra.err.end(), '\n') == 4);
  const std::string rec = testing::read_text(a / "records.csv");
  CHECK(rec.find("walk,24,Auto-AR,128,1,") != std::string::npos);
  CHECK(rec.find("walk,48,AR,128,1,64,0,") != std::string::npos);
}

TEST_CASE("cli: config file with flag override") {
  testing::TempDir dir;
  const auto csv = synthetic_csv(dir, "walk.csv");
  const auto cfg = dir.write("run.json", R"({"grid": [4, 8], "lookback_max": 64})");
  const auto out = dir.path() / "o";
  REQUIRE(cli({"fit", "--config", cfg.string(), "--data", csv.string(), "--grid", "16",
               "--out", out.string()})
              .code == 0);
  const auto echo = nlohmann::json::parse(testing::read_text(out / "config.echo"));
  CHECK(echo["grid"] == std::vector<int>{16});
  CHECK(echo["lookback_max"] == 64);

  const auto bad = dir.write("bad.json", R"({"gird": [4]})");
  CHECK(cli({"fit", "--config", bad.string(), "--data", csv.string()}).code == kExitConfig);
}

TEST_CASE("cli: fail fast leaves no partial output") {
  testing::TempDir dir;
  const auto csv = synthetic_csv(dir, "walk.csv");
  const auto out = dir.path() / "never";
  const Run r = cli({"bench", "--data", csv.string() + "," + (dir.path() / "gone.csv").string(),
                     "--out", out.string()});
  CHECK(r.code == kExitData);
  CHECK_FALSE(fs::exists(out));
  CHECK(cli({"bench", "--data", csv.string(), "--kpss-alpha", "0.2", "--out", out.string()}).code ==
        kExitConfig);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli: aggregate over the bundled reference") {
  testing::TempDir dir;
  const Run r = cli({"aggregate", "--baseline-ref", AUTOAR_REFERENCE_DIR "/long_horizon_mse.csv",
                     "--exclude-datasets", "ILI", "--methods",
                     "GPT4TS,TEST,MOMENT,TTM-B,TTM-A,S2IP-LLM,CALF,TEMPO,TimesFM,DLinear,"
                     "Auto-ARIMA,AR,Auto-AR",
                     "--out", dir.path().string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("Aggregate over 28 tasks") != std::string::npos);
  const std::string agg = testing::read_text(dir.path() / "aggregate.csv");
  const auto row = agg.find("\nAuto-AR,");
  REQUIRE(row != std::string::npos);
  CHECK(std::stod(agg.substr(row + 9)) == doctest::Approx(0.551).epsilon(0.005 / 0.551));
  CHECK(cli({"aggregate", "--baseline-ref", AUTOAR_REFERENCE_DIR "/long_horizon_mae.csv",
             "--metric", "mae"})
            .code == kExitData);
}

TEST_CASE("cli: comma lists tolerate blanks") {
  testing::TempDir dir;
  const auto a = synthetic_csv(dir, "a.csv", 1500);
  const auto b = synthetic_csv(dir, "b.csv", 1500);
  const auto out = dir.path() / "run";
  const Run r = cli({"bench", "--data", a.string() + ", " + b.string() + ",", "--grid", "8",
                     "--skip-ar", "--horizons", "24", "--context-len", "64", "--stride", "50",
                     "--out", out.string()});
  REQUIRE(r.code == kExitOk);
  const auto echo = nlohmann::json::parse(testing::read_text(out / "config.echo"));
  CHECK(echo["data"] == nlohmann::json{a.string(), b.string()});
}
