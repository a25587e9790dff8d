#pragma once

#include "recur/diary.hpp"
#include "recur/prediction.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace recur {

/// Daily diary from a continuous path. Day d covers [d-1, d) and takes the
/// mark of the segment covering its midpoint: N, S or B directly; an SB
/// segment writes B, S, B, ... over the days it covers.
DiarySeries discretize(const Trajectory& traj, std::string subject_id, int treatment);

/// What a right-censored non-N episode reveals about its class.
enum class CensoredClassRule {
  Diary,  ///< S -> {S, SB}, B -> {B, SB}, SB -> {SB}
  Hidden, ///< any class
  Exact,  ///< the true class
};

/// Continuous-time episode sequence for a simulated path; latent states are
/// written to `latent_class` so the truth is available to tests.
EpisodeSequence to_episodes(const Trajectory& traj, std::string subject_id, int treatment,
                            CensoredClassRule rule = CensoredClassRule::Diary);

/// `per_arm` subjects in each arm, `days` days each. Subject ids are
/// `s<arm>_<n>`; replicate streams derive from `seed`.
DiaryDataset simulate_dataset(const ModelParams& params, int per_arm, int days,
                              std::uint64_t seed);

std::vector<EpisodeSequence> simulate_episodes(const ModelParams& params, int per_arm,
                                               double horizon, std::uint64_t seed,
                                               CensoredClassRule rule = CensoredClassRule::Diary);

}  // namespace recur
