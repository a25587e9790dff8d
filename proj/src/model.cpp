#include "recur/model.hpp"

#include "recur/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace recur {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

MatrixXd uniform_rows(Eigen::Index rows, Eigen::Index cols) {
  return MatrixXd::Constant(rows, cols, 1.0 / double(cols));
}

MatrixXd safe_log(const MatrixXd& m) { return m.array().log().matrix(); }

double log_prob(double p) {
  if (!(p > 0.0)) throw Error(ErrorCode::ZeroProbabilityTransition, "zero-probability mark");
  return std::log(p);
}

void check_marks(const ModelParams& params, const EpisodeSequence& seq,
                 std::span<const int> marks) {
  if (marks.size() != seq.episodes.size())
    throw Error(ErrorCode::UnassignedLatent, "subject '" + seq.subject_id + "': " +
                                                 std::to_string(marks.size()) + " marks for " +
                                                 std::to_string(seq.episodes.size()) +
                                                 " episodes");
  for (std::size_t j = 0; j < marks.size(); ++j) {
    const Episode& e = seq.episodes[j];
    int m = marks[j];
    if (m < 0 || m >= params.n_marks(e.phase))
      throw Error(ErrorCode::UnassignedLatent,
                  "subject '" + seq.subject_id + "' episode " + std::to_string(j + 1) +
                      ": mark out of range");
    if (e.phase == Phase::NonN) {
      bool ok = e.censored ? e.candidates.contains(m) : int(*e.observed_class) == m;
      if (!ok)
        throw Error(ErrorCode::MalformedRecord,
                    "subject '" + seq.subject_id + "' episode " + std::to_string(j + 1) +
                        ": class inconsistent with the diary");
    }
  }
}

// 1 / mean duration of each of `bins` equal-count groups of sorted durations.
std::vector<double> binned_rates(std::vector<double> durations, int bins) {
  std::sort(durations.begin(), durations.end());
  const double overall =
      durations.size() / std::accumulate(durations.begin(), durations.end(), 0.0);
  std::vector<double> rates;
  const std::size_t n = durations.size();
  for (int b = 0; b < bins; ++b) {
    std::size_t from = b * n / bins;
    std::size_t to = (b + 1) * n / bins;
    if (to <= from) {
      rates.push_back(overall);
      continue;
    }
    double sum = std::accumulate(durations.begin() + from, durations.begin() + to, 0.0);
    rates.push_back(double(to - from) / sum);
  }
  return rates;
}

}  // namespace

ModelParams ModelParams::uniform(int k, SharingConfig sharing) {
  if (k < 1) throw Error(ErrorCode::InvalidParams, "k must be >= 1");
  ModelParams p;
  p.k = k;
  p.sharing = sharing;
  const int gn = sharing.share_beta_N ? 1 : kArms;
  const int gc = sharing.share_beta_nonN ? 1 : kArms;
  p.beta_N = MatrixXd::Constant(gn, k, 0.1);
  p.beta_N.col(0).setConstant(kAbsorbingIntensity);
  p.beta_nonN = MatrixXd::Constant(gc, kClasses, 0.2);
  for (int a = 0; a < kArms; ++a) {
    p.to_N[a] = uniform_rows(kClasses * k, k);
    p.to_nonN[a] = uniform_rows(k * kClasses, kClasses);
  }
  p.init_N = uniform_rows(kArms, k);
  p.init_nonN = uniform_rows(kArms, kClasses);
  p.phase_N.setConstant(0.5);
  return p;
}

LogParams::LogParams(const ModelParams& p)
    : params(&p),
      log_beta_N(safe_log(p.beta_N)),
      log_beta_nonN(safe_log(p.beta_nonN)),
      log_init_N(safe_log(p.init_N)),
      log_init_nonN(safe_log(p.init_nonN)) {
  for (int a = 0; a < kArms; ++a) {
    log_to_N[a] = safe_log(p.to_N[a]);
    log_to_nonN[a] = safe_log(p.to_nonN[a]);
  }
  log_phase_N = p.phase_N.array().log();
  log_phase_nonN = (1.0 - p.phase_N.array()).log();
}

double duration_loglik(double beta, double x, bool censored) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw Error(ErrorCode::NonPositiveBeta, "intensity must be positive");
  if (!(x > 0.0) || !std::isfinite(x))
    throw Error(ErrorCode::NonPositiveDuration, "duration must be positive");
  return exp_duration_loglik(beta, x, censored);
}

double sequence_loglik_complete(const ModelParams& params, const EpisodeSequence& seq,
                                std::span<const int> marks) {
  check_marks(params, seq, marks);
  if (seq.episodes.empty()) return 0.0;
  const int arm = seq.arm();
  double ll = log_prob(params.phase_prob(arm, seq.episodes.front().phase));
  for (std::size_t j = 0; j < seq.episodes.size(); ++j) {
    const Episode& e = seq.episodes[j];
    const double p = j < 2 ? params.initial_row(arm, e.phase)(marks[j])
                           : params.transition_row(arm, e.phase, marks[j - 1], marks[j - 2])(
                                 marks[j]);
    ll += log_prob(p);
    ll += duration_loglik(params.intensity(arm, e.phase, marks[j]), e.duration, e.censored);
  }
  return ll;
}

std::vector<int> marks_from_slots(const EpisodeSequence& seq) {
  std::vector<int> marks;
  marks.reserve(seq.episodes.size());
  for (std::size_t j = 0; j < seq.episodes.size(); ++j) {
    const Episode& e = seq.episodes[j];
    if (e.latent_class) {
      marks.push_back(*e.latent_class);
    } else if (e.phase == Phase::NonN && !e.censored && e.observed_class) {
      marks.push_back(int(*e.observed_class));
    } else if (e.phase == Phase::NonN && e.candidates.size() == 1) {
      marks.push_back(e.candidates.first());
    } else {
      throw Error(ErrorCode::UnassignedLatent, "subject '" + seq.subject_id + "' episode " +
                                                   std::to_string(j + 1) + " has no mark");
    }
  }
  return marks;
}

double sequence_loglik_complete(const ModelParams& params, const EpisodeSequence& seq) {
  std::vector<int> marks = marks_from_slots(seq);
  return sequence_loglik_complete(params, seq, marks);
}

double prior_logpdf(const ModelParams& params, const PriorConfig& prior) {
  const double a = prior.gamma_shape;
  const double b = prior.gamma_rate;
  double lp = 0.0;
  for (Eigen::Index g = 0; g < params.beta_N.rows(); ++g) {
    for (Eigen::Index l = 0; l < params.k; ++l) {
      double x = params.beta_N(g, l);
      if (!(x > 0.0)) return kNegInf;
      if (l > 0 && x < params.beta_N(g, l - 1)) return kNegInf;
      if (l > 0) lp += gamma_logpdf(x, a, b);
    }
  }
  for (double x : params.beta_nonN.reshaped()) {
    if (!(x > 0.0)) return kNegInf;
    lp += gamma_logpdf(x, a, b);
  }

  const double c = prior.dirichlet_concentration;
  auto dirichlet_kernel = [&](const MatrixXd& m) {
    double s = 0.0;
    if (c == 1.0) return s;
    for (double p : m.reshaped()) s += (c - 1.0) * std::log(p);
    return s;
  };
  for (int arm = 0; arm < kArms; ++arm) {
    lp += dirichlet_kernel(params.to_N[arm]) + dirichlet_kernel(params.to_nonN[arm]);
  }
  lp += dirichlet_kernel(params.init_N) + dirichlet_kernel(params.init_nonN);

  for (int arm = 0; arm < kArms; ++arm) {
    double p = params.phase_N[arm];
    if (p < 0.0 || p > 1.0) return kNegInf;
    if (prior.phase_alpha != 1.0) lp += (prior.phase_alpha - 1.0) * std::log(p);
    if (prior.phase_beta != 1.0) lp += (prior.phase_beta - 1.0) * std::log1p(-p);
  }
  return lp;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Shape: return "ShapeViolation";
    case ViolationKind::Simplex: return "SimplexViolation";
    case ViolationKind::Ordering: return "OrderingViolation";
    case ViolationKind::FixedIntensity: return "FixedIntensityViolation";
    case ViolationKind::Positivity: return "PositivityViolation";
    case ViolationKind::PhaseProbability: return "PhaseProbabilityViolation";
  }
  return "?";
}

std::vector<Violation> validate_params(const ModelParams& p, double tol) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind kind, std::string where) { out.push_back({kind, std::move(where)}); };

  const int k = p.k;
  if (k < 1) {
    add(ViolationKind::Shape, "k");
    return out;
  }
  const int gn = p.sharing.share_beta_N ? 1 : kArms;
  const int gc = p.sharing.share_beta_nonN ? 1 : kArms;
  auto shape_ok = [&](const MatrixXd& m, Eigen::Index r, Eigen::Index c, std::string name) {
    if (m.rows() == r && m.cols() == c) return true;
    add(ViolationKind::Shape, std::move(name));
    return false;
  };
  bool ok = shape_ok(p.beta_N, gn, k, "beta_N");
  ok &= shape_ok(p.beta_nonN, gc, kClasses, "beta_nonN");
  for (int a = 0; a < kArms; ++a) {
    ok &= shape_ok(p.to_N[a], kClasses * k, k, "P_toN[" + std::to_string(a + 1) + "]");
    ok &= shape_ok(p.to_nonN[a], k * kClasses, kClasses, "P_toNonN[" + std::to_string(a + 1) + "]");
  }
  ok &= shape_ok(p.init_N, kArms, k, "P0_N");
  ok &= shape_ok(p.init_nonN, kArms, kClasses, "P0_nonN");
  if (!ok) return out;

  for (Eigen::Index g = 0; g < p.beta_N.rows(); ++g) {
    const std::string row = "beta_N[" + std::to_string(g + 1) + "]";
    if (p.beta_N(g, 0) != kAbsorbingIntensity) add(ViolationKind::FixedIntensity, row);
    for (int l = 0; l < k; ++l) {
      double x = p.beta_N(g, l);
      if (!(x > 0.0) || !std::isfinite(x))
        add(ViolationKind::Positivity, row + "[" + std::to_string(l + 1) + "]");
      if (l > 0 && x < p.beta_N(g, l - 1))
        add(ViolationKind::Ordering, row + "[" + std::to_string(l + 1) + "]");
    }
  }
  for (Eigen::Index g = 0; g < p.beta_nonN.rows(); ++g)
    for (int c = 0; c < kClasses; ++c) {
      double x = p.beta_nonN(g, c);
      if (!(x > 0.0) || !std::isfinite(x))
        add(ViolationKind::Positivity,
            "beta_nonN[" + std::to_string(g + 1) + "][" + std::to_string(c + 1) + "]");
    }

  auto check_rows = [&](const MatrixXd& m, const std::string& name) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      bool nonneg = (m.row(r).array() >= 0.0).all() && m.row(r).allFinite();
      if (!nonneg || std::abs(m.row(r).sum() - 1.0) > tol)
        add(ViolationKind::Simplex, name + " row " + std::to_string(r + 1));
    }
  };
  for (int a = 0; a < kArms; ++a) {
    check_rows(p.to_N[a], "P_toN[" + std::to_string(a + 1) + "]");
    check_rows(p.to_nonN[a], "P_toNonN[" + std::to_string(a + 1) + "]");
  }
  check_rows(p.init_N, "P0_N");
  check_rows(p.init_nonN, "P0_nonN");
  for (int a = 0; a < kArms; ++a)
    if (!(p.phase_N[a] >= 0.0 && p.phase_N[a] <= 1.0))
      add(ViolationKind::PhaseProbability, "P00[" + std::to_string(a + 1) + "]");
  return out;
}

ModelParams init_params(std::span<const EpisodeSequence> data, const PriorConfig& prior, int k,
                        SharingConfig sharing, Rng& rng) {
  if (data.empty()) throw Error(ErrorCode::DegenerateDataset, "no subjects to initialise from");
  ModelParams p = ModelParams::uniform(k, sharing);

  // N-phase: one row per sharing group.
  for (Eigen::Index g = 0; g < p.beta_N.rows(); ++g) {
    std::vector<double> durations;
    for (const auto& seq : data) {
      if (!sharing.share_beta_N && seq.arm() != g) continue;
      for (const auto& e : seq.episodes)
        if (e.phase == Phase::N) durations.push_back(e.duration);
    }
    std::vector<double> free(k - 1);
    if (durations.empty()) {
      for (double& x : free) x = sample_gamma(rng, prior.gamma_shape, prior.gamma_rate);
    } else {
      free = binned_rates(std::move(durations), k - 1);
    }
    std::sort(free.begin(), free.end());
    for (int l = 1; l < k; ++l) p.beta_N(g, l) = std::max(free[l - 1], kAbsorbingIntensity);
  }

  for (Eigen::Index g = 0; g < p.beta_nonN.rows(); ++g) {
    for (int c = 0; c < kClasses; ++c) {
      double total = 0.0;
      int count = 0;
      for (const auto& seq : data) {
        if (!sharing.share_beta_nonN && seq.arm() != g) continue;
        for (const auto& e : seq.episodes)
          if (e.phase == Phase::NonN && !e.censored && int(*e.observed_class) == c) {
            total += e.duration;
            ++count;
          }
      }
      p.beta_nonN(g, c) =
          count > 0 ? count / total : sample_gamma(rng, prior.gamma_shape, prior.gamma_rate);
    }
  }

  std::array<int, kArms> starts{}, starts_n{};
  for (const auto& seq : data) {
    if (seq.episodes.empty()) continue;
    ++starts[seq.arm()];
    if (seq.episodes.front().phase == Phase::N) ++starts_n[seq.arm()];
  }
  for (int a = 0; a < kArms; ++a)
    p.phase_N[a] = starts[a] > 0 ? double(starts_n[a]) / starts[a] : 0.5;
  return p;
}

}  // namespace recur
