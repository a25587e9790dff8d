#pragma once

#include "recur/diary.hpp"
#include "recur/model.hpp"
#include "recur/sampler.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace recur {

struct Segment {
  Phase phase = Phase::N;
  int mark = 0;  ///< latent state (N) or class (NonN), 0-based
  double duration = 0.0;
};

/// A simulated path on [0, horizon). The last segment is clipped at the
/// horizon.
struct Trajectory {
  std::vector<Segment> segments;
  double horizon = 0.0;

  /// Segment covering time t, or nullptr outside [0, horizon).
  const Segment* at(double t) const;
};

/// Where a continued simulation picks up: the in-progress episode's phase and
/// mark, the mark before it (needed once the episode index reaches 2), and
/// the 1-based index of the in-progress episode.
struct ChainState {
  Phase phase = Phase::N;
  int mark = 0;
  std::optional<int> prev_mark;
  int index = 1;
  double elapsed = 0.0;
};

/// Summary parameterisation: per-arm initial laws, intensities and the
/// same-phase one-return laws M_N (k x k) and M_nonN (3 x 3).
struct ReducedParams {
  int k = kDefaultLatentStates;
  Eigen::Vector3d phase_N = Eigen::Vector3d::Constant(0.5);
  MatrixXd init_N;     ///< 3 x k
  MatrixXd init_nonN;  ///< 3 x 3
  VectorXd beta_N;     ///< k, shared by all arms
  MatrixXd beta_nonN;  ///< 3 x 3
  std::array<MatrixXd, kArms> M_N;
  std::array<MatrixXd, kArms> M_nonN;
};

/// Full parameters whose second-order tensors ignore the intermediate mark,
/// so the next same-phase mark depends only on the previous one.
ModelParams expand(const ReducedParams& reduced);

/// Posterior means for the three HRT arms (two continuous-combined regimens
/// and one sequential regimen, in that order), k = 4. Rows are renormalised
/// to sum to one after rounding.
ReducedParams hrt_reference_params();

/// Simulates one path. Without a start state, the first phase is drawn from
/// the arm's phase probability and the first two marks from the initial laws.
/// With a start state, the in-progress episode gets a fresh exponential
/// residual. Throws InvalidStart on an inconsistent start.
Trajectory simulate_trajectory(const ModelParams& params, int arm, double horizon, Rng& rng,
                               const std::optional<ChainState>& start = std::nullopt);
Trajectory simulate_trajectory(const ReducedParams& params, int arm, double horizon, Rng& rng,
                               const std::optional<ChainState>& start = std::nullopt);

struct AmenorrheaSpec {
  double window = 180.0;
  /// Gap must be strictly longer than the window when true.
  bool strict = true;
};

/// End of the last non-N segment followed by an N gap longer than the window
/// (0 when the path opens with such a gap); nullopt when no gap inside the
/// horizon qualifies. Throws HorizonTooShort if horizon < window.
std::optional<double> time_to_cumulative_amenorrhea(const Trajectory& traj,
                                                    const AmenorrheaSpec& spec = {});

enum class OccupancyClock { UntilAmenorrhea, Horizon };

/// Time-weighted proportions over N1..Nk, S, SB, B.
VectorXd occupancy_proportions(std::span<const Trajectory> trajs, int k, OccupancyClock until,
                               const AmenorrheaSpec& spec = {});

/// Distribution of a possibly censored waiting time. Censored values are
/// carried at their censoring point.
struct WaitingTimeSummary {
  double median = 0.0;
  double mean = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double not_reached_frac = 0.0;
  std::size_t n = 0;
};

WaitingTimeSummary summarize_waiting_times(std::span<const std::optional<double>> times,
                                           double censor_at);

/// P(phase N at t) for each t, by Monte Carlo. Replicate r uses the
/// sub-stream (seed, 0, r).
VectorXd prob_N_at_times(const ModelParams& params, int arm, std::span<const double> times,
                         int n_sims, std::uint64_t seed);

struct GenericPrediction {
  VectorXd prob_N;
  WaitingTimeSummary amenorrhea;
  VectorXd occupancy;  ///< until amenorrhea
};

struct GenericConfig {
  std::vector<double> times;
  double horizon = 3000.0;
  int n_sims = 100000;
  AmenorrheaSpec spec;
  std::uint64_t seed = kDefaultSeed;
};

/// P(N at t), time to cumulative amenorrhea and occupancy until amenorrhea
/// from one set of simulated paths.
GenericPrediction predict_generic(const ModelParams& params, int arm, const GenericConfig& cfg);

/// Time from t0 to the next entry into a non-N phase among paths in phase N
/// at t0. Paths without a relapse before the horizon count as censored at
/// horizon - t0. Throws ConditioningFailure when fewer than n_sims
/// qualifying paths turn up within `max_attempts` simulations.
WaitingTimeSummary residual_relapse_time(const ModelParams& params, int arm, double t0,
                                         int n_sims, std::uint64_t seed, double horizon,
                                         long max_attempts = 0);

struct SubjectTerminal {
  std::size_t draw = 0;
  ChainState state;
  std::vector<int> marks;  ///< full mark path after the last sweep
};

/// For each parameter draw, runs `sweeps` latent sweeps over this subject
/// only and reports the terminal state needed to continue the path.
std::vector<SubjectTerminal> condition_subject_latents(std::span<const ModelParams> draws,
                                                       const EpisodeSequence& subject,
                                                       int sweeps, std::uint64_t seed);

struct SubjectConfig {
  std::vector<double> times;  ///< days after the end of observation
  double horizon = 365.0;     ///< days simulated past the end of observation
  int n_sims_per_draw = 200;
  int sweeps = 50;
  AmenorrheaSpec spec;
  std::uint64_t seed = kDefaultSeed;
};

struct SubjectPrediction {
  VectorXd prob_N;
  /// Waiting time in days since the start of treatment, history included.
  WaitingTimeSummary amenorrhea;
};

/// Continues the subject's path from each conditioned terminal state and
/// averages over draws and replicates.
SubjectPrediction predict_subject_future(std::span<const ModelParams> draws,
                                         const EpisodeSequence& subject,
                                         const SubjectConfig& cfg);

struct TwoStep {
  MatrixXd M_N;      ///< k x k; NaN rows were never visited
  MatrixXd M_nonN;   ///< 3 x 3
  VectorXd visits_N;     ///< departures counted from each N state
  VectorXd visits_nonN;
};

/// Law of the next same-phase mark given the current one, estimated from
/// simulated mark sequences (`episodes` marks per replicate) under each draw
/// and averaged over draws. Durations do not enter.
std::array<TwoStep, kArms> two_step_summary(std::span<const ModelParams> draws, int n_sims,
                                            std::uint64_t seed, int episodes = 40);

}  // namespace recur
