#include "recur/diagnostics.hpp"

#include "recur/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

namespace recur {

namespace {

std::string latent_name(int l) { return "N" + std::to_string(l + 1); }
std::string class_name(int c) { return std::string(to_string(NonNClass(c))); }
std::string idx(int i) { return "[" + std::to_string(i + 1) + "]"; }

// Biased autocovariance at lags 0..n-1 via zero-padded FFT.
VectorXd autocovariance(const VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::Index m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> padded(m, 0.0);
  const double mean = x.mean();
  for (Eigen::Index i = 0; i < n; ++i) padded[i] = x[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);
  VectorXd acov(n);
  for (Eigen::Index t = 0; t < n; ++t) acov[t] = back[t] / double(n);
  return acov;
}

double variance(const VectorXd& x) {
  if (x.size() < 2) return 0.0;
  return (x.array() - x.mean()).square().sum() / double(x.size() - 1);
}

double split_rhat(const std::vector<VectorXd>& chains) {
  std::vector<VectorXd> halves;
  for (const auto& c : chains) {
    const Eigen::Index h = c.size() / 2;
    if (h < 2) return 1.0;
    halves.push_back(c.head(h));
    halves.push_back(c.segment(c.size() - h, h));
  }
  const double n = double(halves.front().size());
  const double m = double(halves.size());
  VectorXd means(halves.size());
  double w = 0.0;
  for (std::size_t i = 0; i < halves.size(); ++i) {
    means[i] = halves[i].mean();
    w += variance(halves[i]);
  }
  w /= m;
  const double b = n * variance(means);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

}  // namespace

std::vector<std::string> parameter_names(const ModelParams& p) {
  std::vector<std::string> names;
  const bool shN = p.sharing.share_beta_N;
  const bool shC = p.sharing.share_beta_nonN;
  for (Eigen::Index g = 0; g < p.beta_N.rows(); ++g)
    for (int l = 1; l < p.k; ++l)
      names.push_back("beta_N" + (shN ? std::string("[*]") : idx(int(g))) + "[" +
                      latent_name(l) + "]");
  for (Eigen::Index g = 0; g < p.beta_nonN.rows(); ++g)
    for (int c = 0; c < kClasses; ++c)
      names.push_back("beta_nonN" + (shC ? std::string("[*]") : idx(int(g))) + "[" +
                      class_name(c) + "]");
  for (int a = 0; a < kArms; ++a)
    for (int c = 0; c < kClasses; ++c)
      for (int l = 0; l < p.k; ++l)
        for (int to = 0; to < p.k; ++to)
          names.push_back("P_toN" + idx(a) + "[" + class_name(c) + "][" + latent_name(l) + "][" +
                          latent_name(to) + "]");
  for (int a = 0; a < kArms; ++a)
    for (int l = 0; l < p.k; ++l)
      for (int c = 0; c < kClasses; ++c)
        for (int to = 0; to < kClasses; ++to)
          names.push_back("P_toNonN" + idx(a) + "[" + latent_name(l) + "][" + class_name(c) +
                          "][" + class_name(to) + "]");
  for (int a = 0; a < kArms; ++a)
    for (int l = 0; l < p.k; ++l) names.push_back("P0_N" + idx(a) + "[" + latent_name(l) + "]");
  for (int a = 0; a < kArms; ++a)
    for (int c = 0; c < kClasses; ++c)
      names.push_back("P0_nonN" + idx(a) + "[" + class_name(c) + "]");
  for (int a = 0; a < kArms; ++a) names.push_back("P00" + idx(a));
  return names;
}

VectorXd flatten(const ModelParams& p) {
  std::vector<double> v;
  for (Eigen::Index g = 0; g < p.beta_N.rows(); ++g)
    for (int l = 1; l < p.k; ++l) v.push_back(p.beta_N(g, l));
  for (Eigen::Index g = 0; g < p.beta_nonN.rows(); ++g)
    for (int c = 0; c < kClasses; ++c) v.push_back(p.beta_nonN(g, c));
  for (int a = 0; a < kArms; ++a)
    for (Eigen::Index r = 0; r < p.to_N[a].rows(); ++r)
      for (int to = 0; to < p.k; ++to) v.push_back(p.to_N[a](r, to));
  for (int a = 0; a < kArms; ++a)
    for (Eigen::Index r = 0; r < p.to_nonN[a].rows(); ++r)
      for (int to = 0; to < kClasses; ++to) v.push_back(p.to_nonN[a](r, to));
  for (int a = 0; a < kArms; ++a)
    for (int l = 0; l < p.k; ++l) v.push_back(p.init_N(a, l));
  for (int a = 0; a < kArms; ++a)
    for (int c = 0; c < kClasses; ++c) v.push_back(p.init_nonN(a, c));
  for (int a = 0; a < kArms; ++a) v.push_back(p.phase_N[a]);
  return Eigen::Map<VectorXd>(v.data(), Eigen::Index(v.size()));
}

ScalarSummary summarize_chains(const std::vector<VectorXd>& chains) {
  if (chains.empty()) throw Error(ErrorCode::TooFewDraws, "no chains");
  const Eigen::Index n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n) throw Error(ErrorCode::InvalidConfig, "chains differ in length");
  const double m = double(chains.size());
  const double total = m * double(n);

  ScalarSummary s;
  double sum = 0.0;
  for (const auto& c : chains) sum += c.sum();
  s.mean = sum / total;
  double ss = 0.0;
  for (const auto& c : chains) ss += (c.array() - s.mean).square().sum();
  s.sd = total > 1 ? std::sqrt(ss / (total - 1.0)) : 0.0;

  if (s.sd <= 0.0 || n < 4) {
    s.ess = total;
    s.mcse = 0.0;
    s.rhat = 1.0;
    return s;
  }

  std::vector<VectorXd> acov;
  VectorXd means(chains.size());
  double w = 0.0;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    acov.push_back(autocovariance(chains[i]));
    means[i] = chains[i].mean();
    w += acov.back()[0] * double(n) / double(n - 1);
  }
  w /= m;
  const double b = chains.size() > 1 ? double(n) * variance(means) : 0.0;
  const double var_plus = (double(n) - 1.0) / double(n) * w + b / double(n);

  auto rho = [&](Eigen::Index t) {
    double mean_acov = 0.0;
    for (const auto& a : acov) mean_acov += a[t];
    mean_acov /= m;
    return 1.0 - (w - mean_acov) / var_plus;
  };

  // Geyer: sum adjacent pairs while positive, enforcing monotonicity.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(std::max(total, 10.0)));
  s.ess = std::min(total / tau, total);
  s.mcse = s.sd / std::sqrt(s.ess);
  s.rhat = split_rhat(chains);
  return s;
}

std::vector<ParamSummary> diagnostics(const PosteriorDraws& draws) {
  if (draws.draws.size() < 10)
    throw Error(ErrorCode::TooFewDraws, "need at least 10 draws, have " +
                                            std::to_string(draws.draws.size()));
  std::map<int, std::vector<VectorXd>> by_chain;
  for (const auto& d : draws.draws) by_chain[d.chain].push_back(flatten(d.params));

  // Equal-length chains: truncate to the shortest.
  std::size_t len = std::numeric_limits<std::size_t>::max();
  for (const auto& [c, v] : by_chain) len = std::min(len, v.size());

  const std::vector<std::string> names = parameter_names(draws.draws.front().params);
  std::vector<ParamSummary> out;
  out.reserve(names.size());
  for (std::size_t p = 0; p < names.size(); ++p) {
    std::vector<VectorXd> chains;
    for (const auto& [c, v] : by_chain) {
      VectorXd x(len);
      for (std::size_t i = 0; i < len; ++i) x[Eigen::Index(i)] = v[i][Eigen::Index(p)];
      chains.push_back(std::move(x));
    }
    out.push_back({names[p], summarize_chains(chains)});
  }
  return out;
}

}  // namespace recur
