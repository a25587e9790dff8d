#include "recur/prediction.hpp"

#include "recur/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace recur {

namespace {

template <typename Row>
int draw_mark(Rng& rng, const Row& row) {
  const double u = std::generate_canonical<double, 53>(rng) * row.sum();
  double acc = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (row[i] <= 0.0) continue;
    acc += row[i];
    last = int(i);
    if (u < acc) return last;
  }
  return last;
}

int next_mark(const ModelParams& p, int arm, Phase phase, int index, int prev, int prevprev,
              Rng& rng) {
  if (index <= 2) return draw_mark(rng, p.initial_row(arm, phase));
  return draw_mark(rng, p.transition_row(arm, phase, prev, prevprev));
}

void check_arm(int arm) {
  if (arm < 0 || arm >= kArms) throw Error(ErrorCode::BadTreatmentCode, "arm out of range");
}

MatrixXd normalised(MatrixXd m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) m.row(r) /= m.row(r).sum();
  return m;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * double(sorted.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);
}

// Start time of every segment plus the end of the last.
std::vector<double> boundaries(const Trajectory& traj) {
  std::vector<double> b{0.0};
  for (const auto& s : traj.segments) b.push_back(b.back() + s.duration);
  return b;
}

}  // namespace

const Segment* Trajectory::at(double t) const {
  if (t < 0.0 || t >= horizon) return nullptr;
  double start = 0.0;
  for (const auto& s : segments) {
    if (t < start + s.duration) return &s;
    start += s.duration;
  }
  return segments.empty() ? nullptr : &segments.back();
}

ModelParams expand(const ReducedParams& r) {
  ModelParams p = ModelParams::uniform(r.k, SharingConfig{true, false});
  p.beta_N.row(0) = r.beta_N.transpose();
  p.beta_nonN = r.beta_nonN;
  for (int a = 0; a < kArms; ++a) {
    for (int c = 0; c < kClasses; ++c)
      for (int l = 0; l < r.k; ++l) p.to_N[a].row(c * r.k + l) = r.M_N[a].row(l);
    for (int l = 0; l < r.k; ++l)
      for (int c = 0; c < kClasses; ++c) p.to_nonN[a].row(l * kClasses + c) = r.M_nonN[a].row(c);
  }
  p.init_N = r.init_N;
  p.init_nonN = r.init_nonN;
  p.phase_N = r.phase_N;
  return p;
}

ReducedParams hrt_reference_params() {
  ReducedParams r;
  r.k = 4;
  r.phase_N << 0.37, 0.34, 0.98;
  r.init_N.resize(kArms, 4);
  r.init_N << 0.07, 0.09, 0.28, 0.56,
              0.11, 0.17, 0.17, 0.56,
              0.02, 0.66, 0.31, 0.01;
  r.init_nonN.resize(kArms, kClasses);
  r.init_nonN << 0.82, 0.14, 0.04,
                 0.81, 0.13, 0.06,
                 0.18, 0.76, 0.06;
  r.beta_N.resize(4);
  r.beta_N << kAbsorbingIntensity, 0.02, 0.04, 0.10;
  r.beta_nonN.resize(kArms, kClasses);
  r.beta_nonN << 0.19, 0.13, 0.75,
                 0.24, 0.16, 0.29,
                 0.33, 0.44, 0.24;

  MatrixXd n1(4, 4), n2(4, 4), n3(4, 4);
  n1 << 0.53, 0.20, 0.14, 0.13,
        0.35, 0.48, 0.07, 0.09,
        0.04, 0.22, 0.35, 0.40,
        0.02, 0.31, 0.07, 0.59;
  n2 << 0.64, 0.16, 0.09, 0.11,
        0.43, 0.43, 0.08, 0.06,
        0.17, 0.22, 0.39, 0.22,
        0.02, 0.16, 0.07, 0.75;
  n3 << 0.27, 0.12, 0.41, 0.19,
        0.04, 0.56, 0.32, 0.07,
        0.00, 0.02, 0.82, 0.16,
        0.00, 0.03, 0.77, 0.19;
  MatrixXd c1(3, 3), c2(3, 3), c3(3, 3);
  c1 << 0.89, 0.09, 0.02,
        0.63, 0.33, 0.03,
        0.18, 0.09, 0.73;
  c2 << 0.91, 0.08, 0.02,
        0.81, 0.19, 0.00,
        0.71, 0.14, 0.14;
  c3 << 0.44, 0.54, 0.02,
        0.22, 0.76, 0.03,
        0.31, 0.44, 0.25;
  r.M_N = {normalised(n1), normalised(n2), normalised(n3)};
  r.M_nonN = {normalised(c1), normalised(c2), normalised(c3)};
  r.init_N = normalised(r.init_N);
  r.init_nonN = normalised(r.init_nonN);
  return r;
}

Trajectory simulate_trajectory(const ModelParams& p, int arm, double horizon, Rng& rng,
                               const std::optional<ChainState>& start) {
  check_arm(arm);
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidConfig, "horizon must be positive");

  Phase phase;
  int mark;
  int prev = -1;
  int index;
  if (start) {
    phase = start->phase;
    mark = start->mark;
    index = start->index;
    if (index < 1 || mark < 0 || mark >= p.n_marks(phase))
      throw Error(ErrorCode::InvalidStart, "start mark or index out of range");
    if (index >= 2) {
      if (!start->prev_mark)
        throw Error(ErrorCode::InvalidStart, "start beyond the first episode needs the prior mark");
      prev = *start->prev_mark;
      if (prev < 0 || prev >= p.n_marks(other(phase)))
        throw Error(ErrorCode::InvalidStart, "prior mark out of range");
    }
  } else {
    phase = std::generate_canonical<double, 53>(rng) < p.phase_N[arm] ? Phase::N : Phase::NonN;
    mark = draw_mark(rng, p.initial_row(arm, phase));
    index = 1;
  }

  Trajectory traj;
  traj.horizon = horizon;
  double t = 0.0;
  while (true) {
    const double d = sample_exponential(rng, p.intensity(arm, phase, mark));
    if (t + d >= horizon) {
      traj.segments.push_back({phase, mark, horizon - t});
      break;
    }
    traj.segments.push_back({phase, mark, d});
    t += d;
    phase = other(phase);
    ++index;
    const int nm = next_mark(p, arm, phase, index, mark, prev, rng);
    prev = mark;
    mark = nm;
  }
  return traj;
}

Trajectory simulate_trajectory(const ReducedParams& params, int arm, double horizon, Rng& rng,
                               const std::optional<ChainState>& start) {
  return simulate_trajectory(expand(params), arm, horizon, rng, start);
}

std::optional<double> time_to_cumulative_amenorrhea(const Trajectory& traj,
                                                    const AmenorrheaSpec& spec) {
  if (!(spec.window > 0.0)) throw Error(ErrorCode::InvalidConfig, "window must be positive");
  if (traj.horizon < spec.window)
    throw Error(ErrorCode::HorizonTooShort, "horizon shorter than the amenorrhea window");
  double t = 0.0;
  for (const auto& s : traj.segments) {
    if (s.phase == Phase::N && (spec.strict ? s.duration > spec.window : s.duration >= spec.window))
      return t;
    t += s.duration;
  }
  return std::nullopt;
}

VectorXd occupancy_proportions(std::span<const Trajectory> trajs, int k, OccupancyClock until,
                               const AmenorrheaSpec& spec) {
  if (trajs.empty()) throw Error(ErrorCode::InvalidConfig, "no trajectories");
  auto accumulate = [&](OccupancyClock clock) {
    VectorXd time = VectorXd::Zero(k + kClasses);
    for (const auto& traj : trajs) {
      double stop = traj.horizon;
      if (clock == OccupancyClock::UntilAmenorrhea)
        stop = time_to_cumulative_amenorrhea(traj, spec).value_or(traj.horizon);
      double t = 0.0;
      for (const auto& s : traj.segments) {
        if (t >= stop) break;
        const double span = std::min(s.duration, stop - t);
        time[s.phase == Phase::N ? s.mark : k + s.mark] += span;
        t += s.duration;
      }
    }
    return time;
  };
  VectorXd time = accumulate(until);
  // Every path reached amenorrhea at time zero: fall back to the full horizon.
  if (!(time.sum() > 0.0)) time = accumulate(OccupancyClock::Horizon);
  return time / time.sum();
}

WaitingTimeSummary summarize_waiting_times(std::span<const std::optional<double>> times,
                                           double censor_at) {
  WaitingTimeSummary s;
  s.n = times.size();
  if (times.empty()) return s;
  std::vector<double> v;
  v.reserve(times.size());
  std::size_t missing = 0;
  for (const auto& t : times) {
    if (!t) ++missing;
    v.push_back(t.value_or(censor_at));
  }
  std::sort(v.begin(), v.end());
  s.median = quantile(v, 0.5);
  s.q25 = quantile(v, 0.25);
  s.q75 = quantile(v, 0.75);
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  s.not_reached_frac = double(missing) / double(times.size());
  return s;
}

namespace {

void tally_phase_N(const Trajectory& traj, std::span<const double> times, VectorXd& hits) {
  const std::vector<double> b = boundaries(traj);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    auto it = std::upper_bound(b.begin(), b.end(), t);
    std::size_t seg = std::size_t(it - b.begin()) - 1;
    seg = std::min(seg, traj.segments.size() - 1);
    if (traj.segments[seg].phase == Phase::N) hits[Eigen::Index(i)] += 1.0;
  }
}

double horizon_for(std::span<const double> times) {
  double top = 0.0;
  for (double t : times) {
    if (t < 0.0) throw Error(ErrorCode::InvalidConfig, "time points must be >= 0");
    top = std::max(top, t);
  }
  return top + 1.0;
}

}  // namespace

VectorXd prob_N_at_times(const ModelParams& params, int arm, std::span<const double> times,
                         int n_sims, std::uint64_t seed) {
  if (n_sims < 1) throw Error(ErrorCode::InvalidConfig, "n_sims must be >= 1");
  const double horizon = horizon_for(times);
  VectorXd hits = VectorXd::Zero(Eigen::Index(times.size()));
  for (int r = 0; r < n_sims; ++r) {
    Rng rng = substream(seed, 0, std::uint64_t(r));
    tally_phase_N(simulate_trajectory(params, arm, horizon, rng), times, hits);
  }
  return hits / double(n_sims);
}

GenericPrediction predict_generic(const ModelParams& params, int arm, const GenericConfig& cfg) {
  if (cfg.n_sims < 1) throw Error(ErrorCode::InvalidConfig, "n_sims must be >= 1");
  double horizon = std::max(cfg.horizon, cfg.times.empty() ? 0.0 : horizon_for(cfg.times));
  if (horizon < cfg.spec.window)
    throw Error(ErrorCode::HorizonTooShort, "horizon shorter than the amenorrhea window");

  GenericPrediction out;
  out.prob_N = VectorXd::Zero(Eigen::Index(cfg.times.size()));
  std::vector<std::optional<double>> waits;
  waits.reserve(cfg.n_sims);
  VectorXd time = VectorXd::Zero(params.k + kClasses);
  for (int r = 0; r < cfg.n_sims; ++r) {
    Rng rng = substream(cfg.seed, 0, std::uint64_t(r));
    Trajectory traj = simulate_trajectory(params, arm, horizon, rng);
    tally_phase_N(traj, cfg.times, out.prob_N);
    auto wait = time_to_cumulative_amenorrhea(traj, cfg.spec);
    waits.push_back(wait);
    const double stop = wait.value_or(horizon);
    double t = 0.0;
    for (const auto& s : traj.segments) {
      if (t >= stop) break;
      time[s.phase == Phase::N ? s.mark : params.k + s.mark] += std::min(s.duration, stop - t);
      t += s.duration;
    }
  }
  out.prob_N /= double(cfg.n_sims);
  out.amenorrhea = summarize_waiting_times(waits, horizon);
  out.occupancy = time.sum() > 0.0 ? VectorXd(time / time.sum()) : time;
  return out;
}

WaitingTimeSummary residual_relapse_time(const ModelParams& params, int arm, double t0,
                                         int n_sims, std::uint64_t seed, double horizon,
                                         long max_attempts) {
  if (!(t0 >= 0.0)) throw Error(ErrorCode::InvalidConfig, "t0 must be >= 0");
  if (!(horizon > t0)) throw Error(ErrorCode::InvalidConfig, "horizon must exceed t0");
  if (n_sims < 1) throw Error(ErrorCode::InvalidConfig, "n_sims must be >= 1");
  if (max_attempts <= 0) max_attempts = 100L * n_sims + 1000;

  std::vector<std::optional<double>> residuals;
  residuals.reserve(n_sims);
  for (long a = 0; a < max_attempts && long(residuals.size()) < n_sims; ++a) {
    Rng rng = substream(seed, 0, std::uint64_t(a));
    Trajectory traj = simulate_trajectory(params, arm, horizon, rng);
    const std::vector<double> b = boundaries(traj);
    std::size_t seg = std::size_t(std::upper_bound(b.begin(), b.end(), t0) - b.begin()) - 1;
    seg = std::min(seg, traj.segments.size() - 1);
    if (traj.segments[seg].phase != Phase::N) continue;
    if (seg + 1 < traj.segments.size())
      residuals.push_back(b[seg + 1] - t0);
    else
      residuals.push_back(std::nullopt);
  }
  if (long(residuals.size()) < n_sims)
    throw Error(ErrorCode::ConditioningFailure,
                "only " + std::to_string(residuals.size()) + " of " + std::to_string(n_sims) +
                    " paths were in phase N at t0");
  return summarize_waiting_times(residuals, horizon - t0);
}

std::vector<SubjectTerminal> condition_subject_latents(std::span<const ModelParams> draws,
                                                       const EpisodeSequence& subject,
                                                       int sweeps, std::uint64_t seed) {
  check_episode_sequence(subject);
  if (!subject.episodes.back().censored)
    throw Error(ErrorCode::InvalidStart, "subject's final episode must be censored");
  if (sweeps < 1) throw Error(ErrorCode::InvalidConfig, "sweeps must be >= 1");

  std::vector<SubjectTerminal> out;
  out.reserve(draws.size());
  const std::span<const EpisodeSequence> one(&subject, 1);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    Rng rng = substream(seed, d, 0);
    LogParams logp(draws[d]);
    std::vector<int> marks = init_assignment(draws[d], one).marks.front();
    for (int s = 0; s < sweeps; ++s) sweep_subject(logp, subject, marks, rng);

    const std::size_t len = subject.episodes.size();
    SubjectTerminal term;
    term.draw = d;
    term.state.phase = subject.episodes.back().phase;
    term.state.mark = marks.back();
    if (len >= 2) term.state.prev_mark = marks[len - 2];
    term.state.index = int(len);
    term.state.elapsed = subject.episodes.back().duration;
    term.marks = std::move(marks);
    out.push_back(std::move(term));
  }
  return out;
}

SubjectPrediction predict_subject_future(std::span<const ModelParams> draws,
                                         const EpisodeSequence& subject,
                                         const SubjectConfig& cfg) {
  if (draws.empty()) throw Error(ErrorCode::EmptyDraws, "no parameter draws");
  if (cfg.n_sims_per_draw < 1) throw Error(ErrorCode::InvalidConfig, "n_sims must be >= 1");
  const double future = std::max(cfg.horizon, cfg.times.empty() ? 0.0 : horizon_for(cfg.times));
  const std::vector<SubjectTerminal> terms =
      condition_subject_latents(draws, subject, cfg.sweeps, cfg.seed);
  const double observed = subject.total_duration();
  const int arm = subject.arm();

  SubjectPrediction out;
  out.prob_N = VectorXd::Zero(Eigen::Index(cfg.times.size()));
  std::vector<std::optional<double>> waits;
  const bool long_enough = observed + future >= cfg.spec.window;

  for (const auto& term : terms) {
    Trajectory history;
    for (std::size_t j = 0; j < subject.episodes.size(); ++j)
      history.segments.push_back(
          {subject.episodes[j].phase, term.marks[j], subject.episodes[j].duration});
    for (int r = 0; r < cfg.n_sims_per_draw; ++r) {
      Rng rng = substream(cfg.seed + 1, term.draw, std::uint64_t(r));
      Trajectory ahead = simulate_trajectory(draws[term.draw], arm, future, rng, term.state);
      tally_phase_N(ahead, cfg.times, out.prob_N);
      if (!long_enough) continue;
      Trajectory whole = history;
      whole.horizon = observed + future;
      whole.segments.back().duration += ahead.segments.front().duration;
      whole.segments.insert(whole.segments.end(), ahead.segments.begin() + 1, ahead.segments.end());
      waits.push_back(time_to_cumulative_amenorrhea(whole, cfg.spec));
    }
  }
  out.prob_N /= double(terms.size()) * cfg.n_sims_per_draw;
  out.amenorrhea = summarize_waiting_times(waits, observed + future);
  return out;
}

std::array<TwoStep, kArms> two_step_summary(std::span<const ModelParams> draws, int n_sims,
                                            std::uint64_t seed, int episodes) {
  if (draws.empty()) throw Error(ErrorCode::EmptyDraws, "no parameter draws");
  if (n_sims < 1 || episodes < 3) throw Error(ErrorCode::InvalidConfig, "bad two-step settings");
  const int k = draws.front().k;
  std::array<TwoStep, kArms> out;
  for (int arm = 0; arm < kArms; ++arm) {
    MatrixXd sum_N = MatrixXd::Zero(k, k), sum_C = MatrixXd::Zero(kClasses, kClasses);
    VectorXd rows_N = VectorXd::Zero(k), rows_C = VectorXd::Zero(kClasses);
    VectorXd visits_N = VectorXd::Zero(k), visits_C = VectorXd::Zero(kClasses);
    std::vector<int> marks(episodes);
    for (std::size_t d = 0; d < draws.size(); ++d) {
      const ModelParams& p = draws[d];
      MatrixXd cN = MatrixXd::Zero(k, k), cC = MatrixXd::Zero(kClasses, kClasses);
      for (int r = 0; r < n_sims; ++r) {
        Rng rng = substream(seed, d + std::uint64_t(arm) * 1000003ull, std::uint64_t(r));
        Phase first =
            std::generate_canonical<double, 53>(rng) < p.phase_N[arm] ? Phase::N : Phase::NonN;
        Phase phase = first;
        for (int j = 0; j < episodes; ++j) {
          marks[j] = next_mark(p, arm, phase, j + 1, j >= 1 ? marks[j - 1] : 0,
                               j >= 2 ? marks[j - 2] : 0, rng);
          phase = other(phase);
        }
        for (int j = 0; j + 2 < episodes; ++j) {
          const bool n_phase = ((j % 2 == 0) == (first == Phase::N));
          (n_phase ? cN : cC)(marks[j], marks[j + 2]) += 1.0;
        }
      }
      for (int a = 0; a < k; ++a) {
        const double total = cN.row(a).sum();
        visits_N[a] += total;
        if (total > 0) {
          sum_N.row(a) += cN.row(a) / total;
          rows_N[a] += 1.0;
        }
      }
      for (int a = 0; a < kClasses; ++a) {
        const double total = cC.row(a).sum();
        visits_C[a] += total;
        if (total > 0) {
          sum_C.row(a) += cC.row(a) / total;
          rows_C[a] += 1.0;
        }
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int a = 0; a < k; ++a)
      sum_N.row(a) = rows_N[a] > 0 ? (sum_N.row(a) / rows_N[a]).eval() : Eigen::RowVectorXd::Constant(k, nan);
    for (int a = 0; a < kClasses; ++a)
      sum_C.row(a) = rows_C[a] > 0 ? (sum_C.row(a) / rows_C[a]).eval()
                                   : Eigen::RowVectorXd::Constant(kClasses, nan);
    out[arm] = {sum_N, sum_C, visits_N, visits_C};
  }
  return out;
}

}  // namespace recur
