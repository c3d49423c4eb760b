#include <doctest.h>

#include <cmath>
#include <string>

#include "autoar/dataio.hpp"
#include "autoar/error.hpp"
#include "support.hpp"

using namespace autoar;

TEST_CASE("csv: three-row file gives a 2x2 series") {
  testing::TempDir dir;
  const auto path = dir.write("small.csv", "date,a,b\nt1,1,2\nt2,3,4\n");
  const MultiChannelSeries s = load_csv(path);
  CHECK(s.length() == 2);
  CHECK(s.channels() == 2);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(0, 1) == 2.0);
  CHECK(s(1, 0) == 3.0);
  CHECK(s(1, 1) == 4.0);
  CHECK(s.channel_names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("csv: quoted cells, CRLF and trailing blank line") {
  testing::TempDir dir;
  const auto path = dir.write("q.csv", "\"date\",\"x\"\r\n\"2016-07-01 00:00:00\", 1.5 \r\n\r\n");
  const MultiChannelSeries s = load_csv(path);
  CHECK(s.length() == 1);
  CHECK(s(0, 0) == 1.5);
}

TEST_CASE("csv: NaN cell is rejected with its location") {
  testing::TempDir dir;
  const auto path = dir.write("nan.csv", "date,a,b\nt1,1,2\nt2,NaN,4\n");
  try {
    (void)load_csv(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":3") != std::string::npos);
    CHECK(msg.find("NaN") != std::string::npos);
  }
}

TEST_CASE("csv: malformed inputs") {
  testing::TempDir dir;
  CHECK_THROWS_AS(load_csv(dir.path() / "missing.csv"), DataError);
  CHECK_THROWS_AS(load_csv(dir.write("e.csv", "")), DataError);
  CHECK_THROWS_AS(load_csv(dir.write("h.csv", "date,a\n")), DataError);
  CHECK_THROWS_AS(load_csv(dir.write("w.csv", "date,a,b\nt,1\n")), DataError);
  CHECK_THROWS_AS(load_csv(dir.write("x.csv", "date,a\nt,abc\n")), DataError);
  CHECK_THROWS_AS(load_csv(dir.write("i.csv", "date,a\nt,inf\n")), DataError);
  CHECK_THROWS_AS(load_csv(dir.write("c.csv", "date,a,b\nt,1,2\n"), 7), DataError);
}

TEST_CASE("split: explicit counts are honoured") {
  const auto spec = SplitSpec::explicit_counts(8033, 2785, 2785).resolved(17420);
  CHECK(spec.train_len == 8033);
  CHECK(spec.val_len == 2785);
  CHECK(spec.test_len == 2785);
  CHECK(spec.test_begin() == 8033 + 2785);
}

TEST_CASE("split: fractional floor arithmetic") {
  auto s = SplitSpec::fractional().resolved(10);
  CHECK(s.train_len == 7);
  CHECK(s.val_len == 1);
  CHECK(s.test_len == 2);
  // Weather (52696 rows) and its window counts at L=512, H=96.
  s = SplitSpec::fractional().resolved(52696);
  const WindowCounts w = window_counts(s, 512, 96);
  CHECK(w.train == 36280);
  CHECK(w.val == 5175);
  CHECK(w.test == 10444);
}

TEST_CASE("split: preset window counts") {
  const auto& etth1 = find_preset("etth1");
  const auto s = etth1.split.resolved(etth1.rows);
  const WindowCounts w = window_counts(s, 512, 96);
  CHECK(w.train == 8033);
  CHECK(w.val == 2785);
  CHECK(w.test == 2785);
  const auto& ili = find_preset("ILI");
  const auto wi = window_counts(ili.split.resolved(ili.rows), 512, 96);
  CHECK(wi.train == 69);
  CHECK(wi.val == 2);
  CHECK(wi.test == 98);
  CHECK_THROWS_AS(find_preset("exchange"), ConfigError);
}

TEST_CASE("split: segments partition the series") {
  Eigen::MatrixXd x(10, 1);
  for (int t = 0; t < 10; ++t) x(t, 0) = t;
  const SplitSeries parts = split(MultiChannelSeries(x), SplitSpec::fractional());
  CHECK(parts.train.length() == 7);
  CHECK(parts.val(0, 0) == 7.0);
  CHECK(parts.test(1, 0) == 9.0);
  CHECK_THROWS_AS(split(MultiChannelSeries(x), SplitSpec::explicit_counts(8, 2, 2)),
                  DataError);
  CHECK_THROWS_AS(SplitSpec::explicit_counts(5, 0, 2).resolved(10), DataError);
  CHECK_THROWS_AS(SplitSpec::fractional().resolved(3), DataError);
}

TEST_CASE("scaler: two-point standardization and round trip") {
  const MultiChannelSeries train(testing::columns({{1.0, 3.0}}));
  const Scaler s = fit_scaler(train);
  CHECK(s.mean(0) == 2.0);
  CHECK(s.std(0) == 1.0);
  const MultiChannelSeries z = apply_scaler(s, train);
  CHECK(z(0, 0) == -1.0);
  CHECK(z(1, 0) == 1.0);

  const MultiChannelSeries walk(testing::random_walks(300, 4, 11));
  const Scaler sw = fit_scaler(walk);
  const MultiChannelSeries back = invert_scaler(sw, apply_scaler(sw, walk));
  CHECK((back.values() - walk.values()).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd back_m = invert_scaler(sw, apply_scaler(sw, walk).values());
  CHECK((back_m - walk.values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scaler: constant channel is a zero-variance error") {
  CHECK_THROWS_AS(fit_scaler(MultiChannelSeries(testing::columns({{5, 5, 5}}))), DataError);
  CHECK_THROWS_AS(fit_scaler(MultiChannelSeries(testing::columns({{1e6, 1e6, 1e6}}))),
                  DataError);
}

TEST_CASE("subsample: trailing floor(fraction * T) rows") {
  Eigen::MatrixXd x(8033, 1);
  for (int t = 0; t < 8033; ++t) x(t, 0) = t;
  const MultiChannelSeries s(x);
  const auto sub = subsample_train(s, 0.2);
  CHECK(sub.length() == 1606);
  CHECK(sub(0, 0) == 8033.0 - 1606.0);
  CHECK(subsample_train(s, 1.0).values() == s.values());
  CHECK_THROWS_AS(subsample_train(s, 0.0), ConfigError);
  CHECK_THROWS_AS(subsample_train(s, 1.5), ConfigError);
  CHECK_THROWS_AS(subsample_train(MultiChannelSeries(testing::columns({{1, 2}})), 0.1),
                  DataError);
}

TEST_CASE("series: invariants") {
  CHECK_THROWS_AS(MultiChannelSeries(Eigen::MatrixXd(0, 2)), DataError);
  Eigen::MatrixXd bad(2, 1);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(MultiChannelSeries{bad}, DataError);
  const MultiChannelSeries s(testing::columns({{1, 2}, {3, 4}, {5, 6}}));
  CHECK(s.channel_names()[2] == "c2");
  const std::size_t order[] = {2, 0};
  const auto picked = s.select_channels(order);
  CHECK(picked(1, 0) == 6.0);
  CHECK(picked.channel_names()[1] == "c0");
}
