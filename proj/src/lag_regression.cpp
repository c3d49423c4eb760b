#include "autoar/lag_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "autoar/error.hpp"
#include "parallel.hpp"

namespace autoar {

namespace {

using ConstMap = Eigen::Map<const Eigen::VectorXd>;

ConstMap segment(std::span<const double> x, std::size_t begin, std::size_t len) {
  return ConstMap(x.data() + begin, static_cast<Eigen::Index>(len));
}

// Upper bound on the number of partial sums kept alive during a pooled
// reduction; fixed so the summation tree never depends on the thread count.
constexpr std::size_t kMaxReductionBlocks = 16;

constexpr int kRefinementSteps = 30;

}  // namespace

LagCrossProducts::LagCrossProducts(std::size_t p)
    : lookback(p),
      gram(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p + 1),
                                 static_cast<Eigen::Index>(p + 1))),
      xty(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p + 1))) {}

LagCrossProducts& LagCrossProducts::operator+=(const LagCrossProducts& other) {
  if (other.lookback != lookback) {
    throw ConfigError("cannot pool cross products of lookback " +
                      std::to_string(other.lookback) + " into lookback " +
                      std::to_string(lookback));
  }
  gram += other.gram;
  xty += other.xty;
  yty += other.yty;
  count += other.count;
  return *this;
}

void accumulate_lagged(LagCrossProducts& acc, std::span<const double> x) {
  const std::size_t p = acc.lookback;
  const std::size_t n = x.size();
  if (n <= p) {
    throw DataError("series of length " + std::to_string(n) +
                    " has no full window for lookback " + std::to_string(p));
  }
  const std::size_t samples = n - p;

  // S(a, b) = sum_{t=p}^{n-1} x[t-a] x[t-b], a, b in [0, p]. Row 0 by direct
  // dot products, the rest along diagonals:
  //   S(a, b) = S(a-1, b-1) + x[p-a] x[p-b] - x[n-a] x[n-b].
  const auto p1 = static_cast<Eigen::Index>(p + 1);
  Eigen::MatrixXd s(p1, p1);
  const auto target = segment(x, p, samples);
  for (std::size_t b = 0; b <= p; ++b) {
    s(0, static_cast<Eigen::Index>(b)) = target.dot(segment(x, p - b, samples));
  }
  for (std::size_t a = 1; a <= p; ++a) {
    for (std::size_t b = a; b <= p; ++b) {
      const auto ia = static_cast<Eigen::Index>(a);
      const auto ib = static_cast<Eigen::Index>(b);
      s(ia, ib) = s(ia - 1, ib - 1) + x[p - a] * x[p - b] - x[n - a] * x[n - b];
    }
  }

  // Linear sums L(a) = sum_{t=p}^{n-1} x[t-a] via prefix sums.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + x[t];
  auto linear = [&](std::size_t a) { return prefix[n - a] - prefix[p - a]; };

  acc.count += static_cast<double>(samples);
  acc.yty += s(0, 0);
  acc.gram(0, 0) += static_cast<double>(samples);
  acc.xty(0) += linear(0);
  for (std::size_t k = 1; k <= p; ++k) {
    const auto ik = static_cast<Eigen::Index>(k);
    const double lk = linear(k);
    acc.gram(0, ik) += lk;
    acc.gram(ik, 0) += lk;
    acc.xty(ik) += s(0, ik);
    for (std::size_t m = k; m <= p; ++m) {
      const auto im = static_cast<Eigen::Index>(m);
      acc.gram(ik, im) += s(ik, im);
      if (m != k) acc.gram(im, ik) += s(ik, im);
    }
  }
}

void accumulate_lagged_weighted(LagCrossProducts& acc, std::span<const double> x,
                                std::span<const double> target_weights) {
  const std::size_t p = acc.lookback;
  const std::size_t n = x.size();
  if (target_weights.size() != n) {
    throw DataError("weights length " + std::to_string(target_weights.size()) +
                    " does not match series length " + std::to_string(n));
  }
  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < n; ++t) {
    if (target_weights[t] == 0.0) continue;
    if (t < p || target_weights[t] < 0.0) {
      throw DataError("invalid weight at target " + std::to_string(t) +
                      " for lookback " + std::to_string(p));
    }
    rows.push_back(t);
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto width = static_cast<Eigen::Index>(p + 2);
  // Columns: [1, x_{t-1}, ..., x_{t-p}, x_t].
  Eigen::MatrixXd z(m, width);
  Eigen::VectorXd w(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::size_t t = rows[static_cast<std::size_t>(r)];
    z(r, 0) = 1.0;
    for (std::size_t k = 1; k <= p; ++k) {
      z(r, static_cast<Eigen::Index>(k)) = x[t - k];
    }
    z(r, width - 1) = x[t];
    w(r) = target_weights[t];
  }
  const Eigen::MatrixXd moments = z.transpose() * (w.asDiagonal() * z);
  const auto p1 = static_cast<Eigen::Index>(p + 1);
  acc.gram += moments.topLeftCorner(p1, p1);
  acc.xty += moments.col(width - 1).head(p1);
  acc.yty += moments(width - 1, width - 1);
  acc.count += w.sum();
}

LagCrossProducts pooled_cross_products(
    std::span<const std::span<const double>> channels, std::size_t lookback,
    std::size_t jobs) {
  const std::size_t c = channels.size();
  const std::size_t blocks = std::min(c, kMaxReductionBlocks);
  const std::size_t per_block = blocks == 0 ? 0 : (c + blocks - 1) / blocks;
  std::vector<LagCrossProducts> partial(blocks, LagCrossProducts(lookback));
  detail::parallel_for(blocks, jobs, [&](std::size_t b) {
    const std::size_t first = b * per_block;
    const std::size_t last = std::min(c, first + per_block);
    for (std::size_t ch = first; ch < last; ++ch) {
      accumulate_lagged(partial[b], channels[ch]);
    }
  });
  LagCrossProducts total(lookback);
  for (const auto& part : partial) total += part;
  return total;
}

OlsSolution solve_normal_equations(const LagCrossProducts& cp, bool intercept) {
  const auto p = static_cast<Eigen::Index>(cp.lookback);
  const Eigen::Index offset = intercept ? 0 : 1;
  const Eigen::Index dim = p + 1 - offset;
  const Eigen::MatrixXd a = cp.gram.bottomRightCorner(dim, dim);
  const Eigen::VectorXd b = cp.xty.tail(dim);

  OlsSolution out;
  const double tiny = std::numeric_limits<double>::epsilon() * static_cast<double>(dim);
  {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success && llt.rcond() > tiny) {
      out.beta = llt.solve(b);
      if (out.beta.allFinite()) return out;
    }
  }

  out.regularized = true;
  const double ridge = 1e-8 * a.diagonal().mean();
  Eigen::MatrixXd ar = a;
  ar.diagonal().array() += ridge;
  {
    Eigen::LLT<Eigen::MatrixXd> llt(ar);
    if (llt.info() == Eigen::Success) {
      out.beta = llt.solve(b);
      // Iterated Tikhonov: removes the ridge bias along well-determined
      // directions while null-space components stay at their small start.
      for (int it = 0; it < kRefinementSteps && out.beta.allFinite(); ++it) {
        const Eigen::VectorXd step = llt.solve(b - a * out.beta);
        out.beta += step;
        if (step.norm() <= 1e-15 * out.beta.norm()) break;
      }
      if (out.beta.allFinite()) return out;
    }
  }

  out.pivoted_qr = true;
  out.beta = ar.colPivHouseholderQr().solve(b);
  if (!out.beta.allFinite()) {
    throw NumericalError("normal equations for lookback " +
                         std::to_string(cp.lookback) +
                         " could not be solved (singular even after ridge)");
  }
  return out;
}

double quadratic_rss(const LagCrossProducts& cp, const Eigen::VectorXd& beta) {
  const Eigen::Index dim = beta.size();
  const auto g = cp.gram.bottomRightCorner(dim, dim);
  const auto b = cp.xty.tail(dim);
  return cp.yty - 2.0 * beta.dot(b) + beta.dot(g * beta);
}

double explicit_rss(std::span<const double> x, std::size_t lookback,
                    const Eigen::VectorXd& beta, bool intercept,
                    std::span<const double> target_weights) {
  const std::size_t p = lookback;
  const double a0 = intercept ? beta(0) : 0.0;
  const auto coeffs = beta.tail(static_cast<Eigen::Index>(p));
  // Reversed so that reversed(j) multiplies x[t - p + j].
  const Eigen::VectorXd reversed = coeffs.reverse();
  double rss = 0.0;
  for (std::size_t t = p; t < x.size(); ++t) {
    const double w = target_weights.empty() ? 1.0 : target_weights[t];
    if (w == 0.0) continue;
    const double pred = a0 + reversed.dot(segment(x, t - p, p));
    const double r = x[t] - pred;
    rss += w * r * r;
  }
  return rss;
}

}  // namespace autoar
