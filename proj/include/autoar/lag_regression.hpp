#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace autoar {

/// Sufficient statistics of the pooled regression
///   x_t ~ a_0 + a_1 x_{t-1} + ... + a_p x_{t-p}
/// accumulated over every target t that has a full lookback window.
///
/// Index 0 of `gram`/`xty` is the intercept column; index k >= 1 is lag k.
struct LagCrossProducts {
  explicit LagCrossProducts(std::size_t lookback);

  std::size_t lookback;
  Eigen::MatrixXd gram;  ///< (p+1) x (p+1), symmetric
  Eigen::VectorXd xty;   ///< (p+1)
  double yty = 0.0;
  double count = 0.0;  ///< number of (weighted) samples

  LagCrossProducts& operator+=(const LagCrossProducts& other);
};

/// Adds every full window of `x` (T - p samples). Cost O(T p + p^2).
void accumulate_lagged(LagCrossProducts& acc, std::span<const double> x);

/// Adds target t with multiplicity `target_weights[t]`; entries for t < p
/// must be zero. Used for overlapping rolling-window sample sets.
void accumulate_lagged_weighted(LagCrossProducts& acc, std::span<const double> x,
                                std::span<const double> target_weights);

/// Pooled statistics over all channels. Channels are reduced in fixed blocks
/// and summed in channel order, so the result does not depend on `jobs`.
LagCrossProducts pooled_cross_products(
    std::span<const std::span<const double>> channels, std::size_t lookback,
    std::size_t jobs = 1);

struct OlsSolution {
  Eigen::VectorXd beta;  ///< [intercept?, a_1..a_p]
  bool regularized = false;
  bool pivoted_qr = false;
};

/// Solves the normal equations by Cholesky. Ill-conditioned or singular
/// systems get a ridge of 1e-8 * mean(diag) and, failing that, a
/// column-pivoted QR. With `intercept == false` the intercept row/column is
/// dropped and beta holds only the lag coefficients.
OlsSolution solve_normal_equations(const LagCrossProducts& cp, bool intercept);

/// RSS of `beta` from the cross products alone (loses precision when the fit
/// is nearly exact). A beta without intercept has p entries.
double quadratic_rss(const LagCrossProducts& cp, const Eigen::VectorXd& beta);

/// RSS of `beta` evaluated sample by sample; `target_weights` empty means 1.
double explicit_rss(std::span<const double> x, std::size_t lookback,
                    const Eigen::VectorXd& beta, bool intercept,
                    std::span<const double> target_weights = {});

}  // namespace autoar
