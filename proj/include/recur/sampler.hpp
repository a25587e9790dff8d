#pragma once

#include "recur/diary.hpp"
#include "recur/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace recur {

/// Full mark sequence C_1, C_2, ... of every subject (0-based marks).
/// Observed classes are stored too so each row is a complete path.
struct LatentAssignment {
  std::vector<std::vector<int>> marks;
  bool operator==(const LatentAssignment&) const = default;
};

/// Default seed used by the CLI and by ChainConfig.
inline constexpr std::uint64_t kDefaultSeed = 20140117;

struct ChainConfig {
  int burn_in = 5000;
  int draws = 5000;
  int thin = 5;
  int chains = 2;
  std::uint64_t seed = kDefaultSeed;
  int k = kDefaultLatentStates;
  SharingConfig sharing;
  PriorConfig prior;
  bool keep_latents = false;
};

/// Throws Error(InvalidConfig) on non-positive counts or hyperparameters.
void validate_config(const ChainConfig& config);

/// Event counts and exposures per intensity cell, transition counts per row,
/// and initial-phase / initial-mark counts. All indexed by arm (0-based);
/// pooling across arms happens in the updates.
struct SufficientStats {
  int k = 0;
  MatrixXd events_N, exposure_N;        ///< 3 x k
  MatrixXd events_nonN, exposure_nonN;  ///< 3 x 3
  std::array<MatrixXd, kArms> to_N;     ///< same layout as ModelParams::to_N
  std::array<MatrixXd, kArms> to_nonN;
  MatrixXd init_N;     ///< 3 x k
  MatrixXd init_nonN;  ///< 3 x 3
  Eigen::Vector3d starts_N = Eigen::Vector3d::Zero();
  Eigen::Vector3d starts_nonN = Eigen::Vector3d::Zero();

  explicit SufficientStats(int k_ = 0);
};

/// Normalised full conditional of the mark of episode `j` (0-based) given
/// every other mark, the data and the parameters. The vector spans all marks
/// of the episode's phase; classes outside a censored episode's candidate set
/// get probability zero.
VectorXd latent_full_conditional(const ModelParams& params, const EpisodeSequence& seq,
                                 std::span<const int> marks, std::size_t j);
VectorXd latent_full_conditional(const LogParams& logp, const EpisodeSequence& seq,
                                 std::span<const int> marks, std::size_t j);

/// A starting assignment: each N episode gets the state under which its
/// duration is most likely, each ambiguous censored class its first candidate.
LatentAssignment init_assignment(const ModelParams& params,
                                 std::span<const EpisodeSequence> data);

/// One systematic scan over one subject's latent marks.
void sweep_subject(const LogParams& logp, const EpisodeSequence& seq, std::span<int> marks,
                   Rng& rng);

/// One systematic scan, subjects in dataset order, episodes in time order.
void sweep_latents(const ModelParams& params, std::span<const EpisodeSequence> data,
                   LatentAssignment& assign, Rng& rng);

SufficientStats accumulate_sufficient_stats(int k, std::span<const EpisodeSequence> data,
                                            const LatentAssignment& assign);

struct IntensityDraw {
  MatrixXd beta_N;
  MatrixXd beta_nonN;
  int truncation_failures = 0;
};

/// Conjugate Gamma updates. The N block is updated one state at a time from
/// the posterior truncated to its neighbours; state 0 stays at 1e-5. A failed
/// truncated draw keeps the current value and is counted.
IntensityDraw update_intensities(const SufficientStats& stats, const PriorConfig& prior,
                                 const SharingConfig& sharing, const MatrixXd& beta_N,
                                 const MatrixXd& beta_nonN, Rng& rng);

struct TransitionDraw {
  std::array<MatrixXd, kArms> to_N;
  std::array<MatrixXd, kArms> to_nonN;
};

TransitionDraw update_transition_probs(const SufficientStats& stats, const PriorConfig& prior,
                                       Rng& rng);

struct InitialDraw {
  MatrixXd init_N;
  MatrixXd init_nonN;
};

InitialDraw update_initial_probs(const SufficientStats& stats, const PriorConfig& prior,
                                 Rng& rng);

Eigen::Vector3d update_phase_prob(const SufficientStats& stats, const PriorConfig& prior,
                                  Rng& rng);

/// Complete-data log-likelihood summed over subjects.
double dataset_loglik(const ModelParams& params, std::span<const EpisodeSequence> data,
                      const LatentAssignment& assign);

/// One full Gibbs iteration: latents, then intensities, transitions, initial
/// laws and phase probabilities. Returns the number of failed truncated draws.
int gibbs_iteration(ModelParams& params, std::span<const EpisodeSequence> data,
                    LatentAssignment& assign, const PriorConfig& prior, Rng& rng);

struct Draw {
  int iter = 0;
  int chain = 0;
  ModelParams params;
  double loglik = 0.0;
  std::optional<LatentAssignment> latents;
};

struct PosteriorDraws {
  ChainConfig config;
  std::vector<Draw> draws;
  std::vector<long> truncation_failures;  ///< per chain

  std::vector<ModelParams> params() const;
};

/// Runs `config.chains` independent chains (chain c seeded from seed + c).
/// Deterministic given data and config.
PosteriorDraws gibbs_run(std::span<const EpisodeSequence> data, const ChainConfig& config);

/// Single chain; exposed for callers that drive chains themselves.
std::vector<Draw> run_chain(std::span<const EpisodeSequence> data, const ChainConfig& config,
                            int chain, long* truncation_failures = nullptr);

}  // namespace recur
