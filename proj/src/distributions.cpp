#include "recur/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>

namespace recur {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double uniform_open(Rng& rng) {
  // (0, 1): avoid exact endpoints for inverse-CDF routes.
  double u;
  do {
    u = std::generate_canonical<double, 53>(rng);
  } while (u <= 0.0);
  return u;
}

}  // namespace

Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = seed;
  std::uint64_t s0 = splitmix64(state);
  state ^= a * 0xD1B54A32D192ED03ull;
  std::uint64_t s1 = splitmix64(state);
  state ^= b * 0x8CB92BA72F3D8DD7ull;
  std::uint64_t s2 = splitmix64(state);
  std::seed_seq seq{std::uint32_t(s0), std::uint32_t(s0 >> 32), std::uint32_t(s1),
                    std::uint32_t(s1 >> 32), std::uint32_t(s2), std::uint32_t(s2 >> 32)};
  return Rng(seq);
}

double sample_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return std::max(dist(rng), std::numeric_limits<double>::min());
}

double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  double x = ga(rng);
  double y = gb(rng);
  if (x + y <= 0.0) return a / (a + b);
  return x / (x + y);
}

VectorXd sample_dirichlet(Rng& rng, const VectorXd& alpha) {
  VectorXd draw(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    std::gamma_distribution<double> g(alpha[i], 1.0);
    draw[i] = g(rng);
  }
  double total = draw.sum();
  if (!(total > 0.0)) return VectorXd::Constant(alpha.size(), 1.0 / double(alpha.size()));
  draw /= total;
  return draw;
}

int sample_categorical(Rng& rng, const VectorXd& weights) {
  double total = weights.sum();
  double u = std::generate_canonical<double, 53>(rng) * total;
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

double sample_exponential(Rng& rng, double rate) {
  return -std::log(uniform_open(rng)) / rate;
}

double gamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, rate * x);
}

std::optional<double> sample_truncated_gamma(Rng& rng, double shape, double rate, double lo,
                                             double hi) {
  namespace bm = boost::math;
  if (!(hi >= lo)) return std::nullopt;
  if (hi - lo <= std::numeric_limits<double>::epsilon() * std::max(1.0, lo)) return lo;

  const double scaled_lo = rate * lo;
  const double scaled_hi = std::isinf(hi) ? hi : rate * hi;

  const double p_lo = bm::gamma_p(shape, scaled_lo);
  const bool upper = p_lo > 0.5;
  double mass;
  double a, b;  // CDF (or survival) values bracketing the interval
  if (upper) {
    a = std::isinf(hi) ? 0.0 : bm::gamma_q(shape, scaled_hi);
    b = bm::gamma_q(shape, scaled_lo);
  } else {
    a = p_lo;
    b = std::isinf(hi) ? 1.0 : bm::gamma_p(shape, scaled_hi);
  }
  mass = b - a;

  auto clamp = [&](double x) { return std::clamp(x, lo, hi); };

  if (mass >= 1e-12 || (std::isinf(hi) && b > 0.0)) {
    double u = a + (b - a) * uniform_open(rng);
    double z = upper ? bm::gamma_q_inv(shape, u) : bm::gamma_p_inv(shape, u);
    if (std::isfinite(z)) return clamp(z / rate);
  }
  if (std::isinf(hi)) return std::nullopt;

  // Narrow or deep-tail interval: rejection from a uniform proposal. The
  // Gamma log-density is unimodal, so its maximum on [lo, hi] sits at the
  // clamped mode.
  const double mode = shape > 1.0 ? (shape - 1.0) / rate : 0.0;
  const double peak = std::clamp(mode, lo, hi);
  auto logf = [&](double x) { return (shape - 1.0) * std::log(x) - rate * x; };
  const double log_max = peak > 0.0 ? logf(peak) : logf(lo);
  std::uniform_real_distribution<double> prop(lo, hi);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    double x = prop(rng);
    if (std::log(uniform_open(rng)) <= logf(x) - log_max) return x;
  }
  return std::nullopt;
}

}  // namespace recur
