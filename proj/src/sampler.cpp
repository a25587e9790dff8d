#include "recur/sampler.hpp"

#include "recur/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace recur {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log-probability of mark `m` at position t given the two preceding marks.
inline double mark_term(const LogParams& lp, int arm, Phase phase, std::size_t t, int m, int prev,
                        int prevprev) {
  const int k = lp.params->k;
  if (t < 2) return phase == Phase::N ? lp.log_init_N(arm, m) : lp.log_init_nonN(arm, m);
  return phase == Phase::N ? lp.log_to_N[arm](prev * k + prevprev, m)
                           : lp.log_to_nonN[arm](prev * kClasses + prevprev, m);
}

// Unnormalised log full conditional of position j, written into `out`.
void fill_log_weights(const LogParams& lp, const EpisodeSequence& seq,
                      std::span<const int> marks, std::size_t j, std::span<double> out) {
  const Episode& e = seq.episodes[j];
  const int arm = seq.arm();
  const std::size_t len = seq.episodes.size();
  const int n = lp.params->n_marks(e.phase);
  const int prev = j >= 1 ? marks[j - 1] : -1;
  const int prevprev = j >= 2 ? marks[j - 2] : -1;
  for (int c = 0; c < n; ++c) {
    if (e.phase == Phase::NonN && !e.candidates.contains(c)) {
      out[c] = kNegInf;
      continue;
    }
    double w = lp.duration(arm, e.phase, c, e.duration, e.censored);
    w += mark_term(lp, arm, e.phase, j, c, prev, prevprev);
    if (j + 1 < len)
      w += mark_term(lp, arm, seq.episodes[j + 1].phase, j + 1, marks[j + 1], c, prev);
    if (j + 2 < len)
      w += mark_term(lp, arm, seq.episodes[j + 2].phase, j + 2, marks[j + 2], marks[j + 1], c);
    out[c] = w;
  }
}

// Converts log weights to probabilities in place.
void normalise(std::span<double> w, const EpisodeSequence& seq, std::size_t j) {
  double top = kNegInf;
  for (double x : w) top = std::max(top, x);
  if (!(top > kNegInf) || std::isnan(top))
    throw Error(ErrorCode::AllZeroMass, "subject '" + seq.subject_id + "' episode " +
                                            std::to_string(j + 1) +
                                            ": no mark has positive probability");
  double total = 0.0;
  for (double& x : w) {
    x = std::exp(x - top);
    total += x;
  }
  for (double& x : w) x /= total;
}

void require_latent(const EpisodeSequence& seq, std::size_t j) {
  if (j >= seq.episodes.size())
    throw Error(ErrorCode::MalformedRecord, "episode index out of range");
  const Episode& e = seq.episodes[j];
  if (e.phase == Phase::NonN && !e.censored)
    throw Error(ErrorCode::MalformedRecord, "subject '" + seq.subject_id + "' episode " +
                                                std::to_string(j + 1) + " has an observed class");
}

int initial_mark(const ModelParams& params, const Episode& e, int arm) {
  if (e.phase == Phase::NonN) {
    if (!e.censored) return int(*e.observed_class);
    if (e.observed_class && e.candidates.contains(*e.observed_class))
      return int(*e.observed_class);
    return e.candidates.first();
  }
  int best = 0;
  double best_ll = kNegInf;
  for (int l = 0; l < params.k; ++l) {
    double ll = exp_duration_loglik(params.intensity(arm, Phase::N, l), e.duration, e.censored);
    if (ll > best_ll) {
      best_ll = ll;
      best = l;
    }
  }
  return best;
}

MatrixXd dirichlet_rows(const MatrixXd& counts, double concentration, Rng& rng) {
  MatrixXd out(counts.rows(), counts.cols());
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    VectorXd alpha = counts.row(r).transpose().array() + concentration;
    out.row(r) = sample_dirichlet(rng, alpha).transpose();
  }
  return out;
}

}  // namespace

void validate_config(const ChainConfig& c) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (c.burn_in < 0) bad("burn_in must be >= 0");
  if (c.draws < 1) bad("draws must be >= 1");
  if (c.thin < 1) bad("thin must be >= 1");
  if (c.chains < 1) bad("chains must be >= 1");
  if (c.k < 1) bad("k must be >= 1");
  const PriorConfig& p = c.prior;
  if (!(p.gamma_shape > 0 && p.gamma_rate > 0 && p.dirichlet_concentration > 0 &&
        p.phase_alpha > 0 && p.phase_beta > 0))
    bad("prior hyperparameters must be positive");
}

SufficientStats::SufficientStats(int k_) : k(k_) {
  events_N = exposure_N = MatrixXd::Zero(kArms, k);
  events_nonN = exposure_nonN = MatrixXd::Zero(kArms, kClasses);
  for (int a = 0; a < kArms; ++a) {
    to_N[a] = MatrixXd::Zero(kClasses * k, k);
    to_nonN[a] = MatrixXd::Zero(k * kClasses, kClasses);
  }
  init_N = MatrixXd::Zero(kArms, k);
  init_nonN = MatrixXd::Zero(kArms, kClasses);
}

VectorXd latent_full_conditional(const LogParams& logp, const EpisodeSequence& seq,
                                 std::span<const int> marks, std::size_t j) {
  require_latent(seq, j);
  VectorXd w(logp.params->n_marks(seq.episodes[j].phase));
  std::span<double> view(w.data(), std::size_t(w.size()));
  fill_log_weights(logp, seq, marks, j, view);
  normalise(view, seq, j);
  return w;
}

VectorXd latent_full_conditional(const ModelParams& params, const EpisodeSequence& seq,
                                 std::span<const int> marks, std::size_t j) {
  LogParams logp(params);
  return latent_full_conditional(logp, seq, marks, j);
}

LatentAssignment init_assignment(const ModelParams& params,
                                 std::span<const EpisodeSequence> data) {
  LatentAssignment out;
  out.marks.reserve(data.size());
  for (const auto& seq : data) {
    std::vector<int> m;
    m.reserve(seq.episodes.size());
    for (const auto& e : seq.episodes) m.push_back(initial_mark(params, e, seq.arm()));
    out.marks.push_back(std::move(m));
  }
  return out;
}

void sweep_subject(const LogParams& logp, const EpisodeSequence& seq, std::span<int> marks,
                   Rng& rng) {
  const int width = std::max(logp.params->k, kClasses);
  double stack[16];
  std::vector<double> heap;
  double* buf = stack;
  if (width > 16) {
    heap.resize(width);
    buf = heap.data();
  }
  for (std::size_t j = 0; j < seq.episodes.size(); ++j) {
    const Episode& e = seq.episodes[j];
    if (!e.is_latent()) continue;
    const int n = logp.params->n_marks(e.phase);
    std::span<double> w(buf, std::size_t(n));
    fill_log_weights(logp, seq, marks, j, w);
    normalise(w, seq, j);
    double u = std::generate_canonical<double, 53>(rng);
    int pick = -1;
    double acc = 0.0;
    for (int c = 0; c < n; ++c) {
      if (w[c] <= 0.0) continue;
      acc += w[c];
      pick = c;
      if (u < acc) break;
    }
    marks[j] = pick;
  }
}

void sweep_latents(const ModelParams& params, std::span<const EpisodeSequence> data,
                   LatentAssignment& assign, Rng& rng) {
  LogParams logp(params);
  for (std::size_t i = 0; i < data.size(); ++i) sweep_subject(logp, data[i], assign.marks[i], rng);
}

SufficientStats accumulate_sufficient_stats(int k, std::span<const EpisodeSequence> data,
                                            const LatentAssignment& assign) {
  SufficientStats s(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const EpisodeSequence& seq = data[i];
    const std::vector<int>& m = assign.marks[i];
    const int a = seq.arm();
    for (std::size_t j = 0; j < seq.episodes.size(); ++j) {
      const Episode& e = seq.episodes[j];
      const bool n_phase = e.phase == Phase::N;
      MatrixXd& events = n_phase ? s.events_N : s.events_nonN;
      MatrixXd& exposure = n_phase ? s.exposure_N : s.exposure_nonN;
      exposure(a, m[j]) += e.duration;
      if (!e.censored) events(a, m[j]) += 1.0;
      if (j == 0) (n_phase ? s.starts_N : s.starts_nonN)[a] += 1.0;
      if (j < 2) {
        (n_phase ? s.init_N : s.init_nonN)(a, m[j]) += 1.0;
      } else if (n_phase) {
        s.to_N[a](m[j - 1] * k + m[j - 2], m[j]) += 1.0;
      } else {
        s.to_nonN[a](m[j - 1] * kClasses + m[j - 2], m[j]) += 1.0;
      }
    }
  }
  return s;
}

IntensityDraw update_intensities(const SufficientStats& stats, const PriorConfig& prior,
                                 const SharingConfig& sharing, const MatrixXd& beta_N,
                                 const MatrixXd& beta_nonN, Rng& rng) {
  IntensityDraw out{beta_N, beta_nonN, 0};
  const int k = stats.k;

  auto pooled = [](const MatrixXd& m, bool shared, Eigen::Index g) -> VectorXd {
    return shared ? VectorXd(m.colwise().sum().transpose()) : VectorXd(m.row(g).transpose());
  };

  for (Eigen::Index g = 0; g < out.beta_nonN.rows(); ++g) {
    VectorXd n = pooled(stats.events_nonN, sharing.share_beta_nonN, g);
    VectorXd t = pooled(stats.exposure_nonN, sharing.share_beta_nonN, g);
    for (int c = 0; c < kClasses; ++c)
      out.beta_nonN(g, c) = sample_gamma(rng, prior.gamma_shape + n[c], prior.gamma_rate + t[c]);
  }

  for (Eigen::Index g = 0; g < out.beta_N.rows(); ++g) {
    VectorXd n = pooled(stats.events_N, sharing.share_beta_N, g);
    VectorXd t = pooled(stats.exposure_N, sharing.share_beta_N, g);
    out.beta_N(g, 0) = kAbsorbingIntensity;
    for (int l = 1; l < k; ++l) {
      const double lo = out.beta_N(g, l - 1);
      const double hi =
          l + 1 < k ? out.beta_N(g, l + 1) : std::numeric_limits<double>::infinity();
      auto x = sample_truncated_gamma(rng, prior.gamma_shape + n[l], prior.gamma_rate + t[l], lo,
                                      hi);
      if (x) {
        out.beta_N(g, l) = *x;
      } else {
        ++out.truncation_failures;
        out.beta_N(g, l) = std::clamp(out.beta_N(g, l), lo, hi);
      }
    }
  }
  return out;
}

TransitionDraw update_transition_probs(const SufficientStats& stats, const PriorConfig& prior,
                                       Rng& rng) {
  TransitionDraw out;
  for (int a = 0; a < kArms; ++a) {
    out.to_N[a] = dirichlet_rows(stats.to_N[a], prior.dirichlet_concentration, rng);
    out.to_nonN[a] = dirichlet_rows(stats.to_nonN[a], prior.dirichlet_concentration, rng);
  }
  return out;
}

InitialDraw update_initial_probs(const SufficientStats& stats, const PriorConfig& prior,
                                 Rng& rng) {
  return {dirichlet_rows(stats.init_N, prior.dirichlet_concentration, rng),
          dirichlet_rows(stats.init_nonN, prior.dirichlet_concentration, rng)};
}

Eigen::Vector3d update_phase_prob(const SufficientStats& stats, const PriorConfig& prior,
                                  Rng& rng) {
  Eigen::Vector3d p;
  for (int a = 0; a < kArms; ++a)
    p[a] = sample_beta(rng, prior.phase_alpha + stats.starts_N[a],
                       prior.phase_beta + stats.starts_nonN[a]);
  return p;
}

double dataset_loglik(const ModelParams& params, std::span<const EpisodeSequence> data,
                      const LatentAssignment& assign) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += sequence_loglik_complete(params, data[i], assign.marks[i]);
  return total;
}

int gibbs_iteration(ModelParams& params, std::span<const EpisodeSequence> data,
                    LatentAssignment& assign, const PriorConfig& prior, Rng& rng) {
  sweep_latents(params, data, assign, rng);
  SufficientStats stats = accumulate_sufficient_stats(params.k, data, assign);
  IntensityDraw beta =
      update_intensities(stats, prior, params.sharing, params.beta_N, params.beta_nonN, rng);
  params.beta_N = std::move(beta.beta_N);
  params.beta_nonN = std::move(beta.beta_nonN);
  TransitionDraw trans = update_transition_probs(stats, prior, rng);
  params.to_N = std::move(trans.to_N);
  params.to_nonN = std::move(trans.to_nonN);
  InitialDraw init = update_initial_probs(stats, prior, rng);
  params.init_N = std::move(init.init_N);
  params.init_nonN = std::move(init.init_nonN);
  params.phase_N = update_phase_prob(stats, prior, rng);
  return beta.truncation_failures;
}

std::vector<ModelParams> PosteriorDraws::params() const {
  std::vector<ModelParams> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d.params);
  return out;
}

std::vector<Draw> run_chain(std::span<const EpisodeSequence> data, const ChainConfig& config,
                            int chain, long* truncation_failures) {
  for (const auto& seq : data) check_episode_sequence(seq);
  Rng rng(config.seed + std::uint64_t(chain));
  ModelParams params = init_params(data, config.prior, config.k, config.sharing, rng);
  LatentAssignment assign = init_assignment(params, data);

  std::vector<Draw> out;
  out.reserve(config.draws);
  long failures = 0;
  const long total = long(config.burn_in) + long(config.draws) * config.thin;
  for (long it = 1; it <= total; ++it) {
    failures += gibbs_iteration(params, data, assign, config.prior, rng);
    if (it <= config.burn_in || (it - config.burn_in) % config.thin != 0) continue;
    Draw d;
    d.iter = int(it);
    d.chain = chain;
    d.params = params;
    d.loglik = dataset_loglik(params, data, assign);
    if (!std::isfinite(d.loglik))
      throw Error(ErrorCode::ChainDiverged,
                  "non-finite log-likelihood at iteration " + std::to_string(it));
    if (config.keep_latents) d.latents = assign;
    out.push_back(std::move(d));
  }
  if (truncation_failures) *truncation_failures = failures;
  return out;
}

PosteriorDraws gibbs_run(std::span<const EpisodeSequence> data, const ChainConfig& config) {
  validate_config(config);
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no subjects to fit");

  PosteriorDraws result;
  result.config = config;
  result.truncation_failures.assign(config.chains, 0);
  std::vector<std::vector<Draw>> per_chain(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);

  auto work = [&](int c) {
    try {
      per_chain[c] = run_chain(data, config, c, &result.truncation_failures[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int c = 0; c < config.chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& chain : per_chain)
    for (auto& d : chain) result.draws.push_back(std::move(d));
  return result;
}

}  // namespace recur
