#pragma once

#include "recur/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>

namespace recur {

using Rng = std::mt19937_64;

/// Independent generator for replicate `b` of draw `a` under `seed`.
Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Log-density of Gamma(shape, rate) at x > 0.
template <typename Scalar>
Scalar gamma_logpdf(const Scalar& x, const Scalar& shape, const Scalar& rate) {
  using std::lgamma;
  using std::log;
  return shape * log(rate) - lgamma(shape) + (shape - Scalar(1)) * log(x) - rate * x;
}

/// Exponential duration contribution: log-density when the episode ended,
/// log-survival when it is right-censored.
template <typename Scalar>
Scalar exp_duration_loglik(const Scalar& beta, const Scalar& x, bool censored) {
  using std::log;
  return censored ? -beta * x : log(beta) - beta * x;
}

/// Gamma(shape, rate) draw, clamped away from zero.
double sample_gamma(Rng& rng, double shape, double rate);
double sample_beta(Rng& rng, double a, double b);
VectorXd sample_dirichlet(Rng& rng, const VectorXd& alpha);
/// Index drawn with probability proportional to `weights` (nonnegative).
int sample_categorical(Rng& rng, const VectorXd& weights);
double sample_exponential(Rng& rng, double rate);

/// Regularized lower incomplete gamma P(shape, rate * x).
double gamma_cdf(double x, double shape, double rate);

/// Draw from Gamma(shape, rate) restricted to [lo, hi] (hi may be +inf).
///
/// Uses inverse-CDF sampling on whichever tail represents the interval more
/// accurately, and uniform-proposal rejection when the interval holds less
/// than 1e-12 of the mass. Returns nullopt if every route fails.
std::optional<double> sample_truncated_gamma(Rng& rng, double shape, double rate, double lo,
                                             double hi);

}  // namespace recur
