#pragma once

#include "recur/diary.hpp"
#include "recur/distributions.hpp"
#include "recur/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace recur {

/// Which intensity blocks are pooled across the three arms.
struct SharingConfig {
  bool share_beta_N = true;
  bool share_beta_nonN = false;
  bool operator==(const SharingConfig&) const = default;
};

/// Hyperparameters. Intensities get independent Gamma(shape, rate) priors
/// (the N-phase block restricted to the ordered region), every probability
/// row a symmetric Dirichlet, and each arm's initial-phase probability a
/// Beta prior (Uniform by default).
struct PriorConfig {
  double gamma_shape = 0.1;
  double gamma_rate = 0.1;
  double dirichlet_concentration = 1.0;
  double phase_alpha = 1.0;
  double phase_beta = 1.0;
};

/// Parameters of the alternating marked point process.
///
/// Marks are 0-based: latent states 0..k-1 (state 0 is the nearly absorbing
/// one with intensity fixed at 1e-5) and non-N classes S=0, SB=1, B=2.
///
/// Transition tensors are stored per arm as row-stacked matrices:
///  - to_N[arm] row `prev_class * k + prevprev_state` is the law of the next
///    latent state after a non-N episode;
///  - to_nonN[arm] row `prev_state * 3 + prevprev_class` is the law of the
///    next non-N class after an N episode.
struct ModelParams {
  int k = kDefaultLatentStates;
  SharingConfig sharing;
  MatrixXd beta_N;     ///< groups x k, groups = 1 when shared else 3
  MatrixXd beta_nonN;  ///< groups x 3
  std::array<MatrixXd, kArms> to_N;
  std::array<MatrixXd, kArms> to_nonN;
  MatrixXd init_N;     ///< 3 x k
  MatrixXd init_nonN;  ///< 3 x 3
  Eigen::Vector3d phase_N;  ///< probability of starting in an N episode, per arm

  /// Uniform rows, P(start in N) = 1/2, beta_N = (1e-5, 0.1, ..., 0.1),
  /// beta_nonN = 0.2 everywhere.
  static ModelParams uniform(int k, SharingConfig sharing = {});

  int group_N(int arm) const { return sharing.share_beta_N ? 0 : arm; }
  int group_nonN(int arm) const { return sharing.share_beta_nonN ? 0 : arm; }
  int n_marks(Phase p) const { return p == Phase::N ? k : kClasses; }

  double intensity(int arm, Phase p, int mark) const {
    return p == Phase::N ? beta_N(group_N(arm), mark) : beta_nonN(group_nonN(arm), mark);
  }
  /// Law of the mark of an episode in phase `target` given the two preceding
  /// marks (episode index >= 3).
  auto transition_row(int arm, Phase target, int prev, int prevprev) const {
    return target == Phase::N ? to_N[arm].row(prev * k + prevprev)
                              : to_nonN[arm].row(prev * kClasses + prevprev);
  }
  auto initial_row(int arm, Phase p) const {
    return p == Phase::N ? init_N.row(arm) : init_nonN.row(arm);
  }
  double phase_prob(int arm, Phase p) const {
    return p == Phase::N ? phase_N[arm] : 1.0 - phase_N[arm];
  }
};

/// Elementwise logs of every parameter, for inner loops.
struct LogParams {
  explicit LogParams(const ModelParams& p);

  const ModelParams* params;
  MatrixXd log_beta_N, log_beta_nonN;
  std::array<MatrixXd, kArms> log_to_N, log_to_nonN;
  MatrixXd log_init_N, log_init_nonN;
  Eigen::Vector3d log_phase_N, log_phase_nonN;

  double duration(int arm, Phase p, int mark, double x, bool censored) const {
    const ModelParams& m = *params;
    if (p == Phase::N) {
      int g = m.group_N(arm);
      return censored ? -m.beta_N(g, mark) * x : log_beta_N(g, mark) - m.beta_N(g, mark) * x;
    }
    int g = m.group_nonN(arm);
    return censored ? -m.beta_nonN(g, mark) * x
                    : log_beta_nonN(g, mark) - m.beta_nonN(g, mark) * x;
  }
  /// Log-probability of the mark of episode j (0-based) given the two before.
  double mark(int arm, Phase p, std::size_t j, std::span<const int> marks) const {
    const int k = params->k;
    if (j < 2) return p == Phase::N ? log_init_N(arm, marks[j]) : log_init_nonN(arm, marks[j]);
    return p == Phase::N ? log_to_N[arm](marks[j - 1] * k + marks[j - 2], marks[j])
                         : log_to_nonN[arm](marks[j - 1] * kClasses + marks[j - 2], marks[j]);
  }
  double phase(int arm, Phase p) const {
    return p == Phase::N ? log_phase_N[arm] : log_phase_nonN[arm];
  }
};

/// Log-likelihood contribution of one exponential duration: ln(beta) - beta x
/// for a completed episode, -beta x for a censored one.
double duration_loglik(double beta, double x, bool censored);

/// Complete-data log-likelihood of one subject given every mark.
///
/// `marks[j]` is the 0-based mark of episode j: a latent state for N
/// episodes, a class for non-N episodes. Observed classes must match and
/// censored classes must lie in the candidate set.
double sequence_loglik_complete(const ModelParams& params, const EpisodeSequence& seq,
                                std::span<const int> marks);
/// Same, reading marks from the episode slots (`latent_class`, observed class,
/// or a singleton candidate set). Throws UnassignedLatent when one is missing.
double sequence_loglik_complete(const ModelParams& params, const EpisodeSequence& seq);

/// Marks stored in the episode slots; throws UnassignedLatent if incomplete.
std::vector<int> marks_from_slots(const EpisodeSequence& seq);

/// Prior log-density up to an additive constant; -inf outside the support
/// (ordering violated, non-positive intensity, probability outside [0,1]).
double prior_logpdf(const ModelParams& params, const PriorConfig& prior);

enum class ViolationKind {
  Shape,
  Simplex,
  Ordering,
  FixedIntensity,
  Positivity,
  PhaseProbability,
};

struct Violation {
  ViolationKind kind;
  std::string where;
};

std::string_view to_string(ViolationKind kind);

/// Every violated invariant; empty iff the parameters are valid.
std::vector<Violation> validate_params(const ModelParams& params, double tol = 1e-12);

/// Starting point for a chain.
///
/// N-phase intensities come from k-1 duration-quantile bins (inverse mean
/// duration in each bin, sorted, with the first state pinned to 1e-5);
/// non-N intensities from per-class event rates. Cells with no data fall back
/// to prior draws. Transition and initial rows are uniform; the phase
/// probability of each arm is the fraction of its subjects starting in N.
ModelParams init_params(std::span<const EpisodeSequence> data, const PriorConfig& prior, int k,
                        SharingConfig sharing, Rng& rng);

}  // namespace recur
