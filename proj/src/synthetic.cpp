#include "recur/synthetic.hpp"

#include "recur/error.hpp"

#include <cmath>

namespace recur {

DiarySeries discretize(const Trajectory& traj, std::string subject_id, int treatment) {
  DiarySeries s;
  s.subject_id = std::move(subject_id);
  s.treatment = treatment;
  const int days = int(std::floor(traj.horizon + 1e-9));
  if (days < 1) throw Error(ErrorCode::EmptySeries, "path shorter than one day");
  s.days.reserve(days);

  std::size_t seg = 0;
  double seg_start = 0.0;
  std::size_t run_seg = std::size_t(-1);
  int run_pos = 0;
  for (int d = 1; d <= days; ++d) {
    const double mid = d - 0.5;
    while (seg + 1 < traj.segments.size() && mid >= seg_start + traj.segments[seg].duration) {
      seg_start += traj.segments[seg].duration;
      ++seg;
    }
    const Segment& cur = traj.segments[seg];
    run_pos = seg == run_seg ? run_pos + 1 : 0;
    run_seg = seg;
    DayStatus status = DayStatus::N;
    if (cur.phase == Phase::NonN) {
      switch (NonNClass(cur.mark)) {
        case NonNClass::S: status = DayStatus::S; break;
        case NonNClass::B: status = DayStatus::B; break;
        case NonNClass::SB: status = run_pos % 2 == 0 ? DayStatus::B : DayStatus::S; break;
      }
    }
    s.days.push_back(status);
  }
  return s;
}

EpisodeSequence to_episodes(const Trajectory& traj, std::string subject_id, int treatment,
                            CensoredClassRule rule) {
  EpisodeSequence seq{std::move(subject_id), treatment, {}};
  for (const auto& s : traj.segments) {
    Episode e;
    e.phase = s.phase;
    e.duration = s.duration;
    if (s.phase == Phase::N)
      e.latent_class = s.mark;
    else
      e.observed_class = NonNClass(s.mark);
    seq.episodes.push_back(e);
  }
  Episode& last = seq.episodes.back();
  last.censored = true;
  if (last.phase == Phase::NonN) {
    const NonNClass truth = *last.observed_class;
    switch (rule) {
      case CensoredClassRule::Diary:
        last.candidates = ClassSet::of(NonNClass::SB).with(truth);
        break;
      case CensoredClassRule::Hidden:
        last.candidates = ClassSet::all();
        last.observed_class.reset();
        break;
      case CensoredClassRule::Exact:
        last.candidates = ClassSet::of(truth);
        break;
    }
    // Keep the true class recoverable for tests.
    if (last.candidates.size() > 1) last.latent_class = int(truth);
  }
  return seq;
}

DiaryDataset simulate_dataset(const ModelParams& params, int per_arm, int days,
                              std::uint64_t seed) {
  if (per_arm < 1 || days < 1) throw Error(ErrorCode::InvalidConfig, "need subjects and days");
  DiaryDataset data;
  for (int arm = 0; arm < kArms; ++arm)
    for (int n = 0; n < per_arm; ++n) {
      Rng rng = substream(seed, std::uint64_t(arm), std::uint64_t(n));
      Trajectory traj = simulate_trajectory(params, arm, double(days), rng);
      data.subjects.push_back(discretize(
          traj, "s" + std::to_string(arm + 1) + "_" + std::to_string(n + 1), arm + 1));
    }
  return data;
}

std::vector<EpisodeSequence> simulate_episodes(const ModelParams& params, int per_arm,
                                               double horizon, std::uint64_t seed,
                                               CensoredClassRule rule) {
  if (per_arm < 1 || !(horizon > 0.0))
    throw Error(ErrorCode::InvalidConfig, "need subjects and a positive horizon");
  std::vector<EpisodeSequence> out;
  for (int arm = 0; arm < kArms; ++arm)
    for (int n = 0; n < per_arm; ++n) {
      Rng rng = substream(seed, std::uint64_t(arm), std::uint64_t(n));
      Trajectory traj = simulate_trajectory(params, arm, horizon, rng);
      out.push_back(to_episodes(
          traj, "s" + std::to_string(arm + 1) + "_" + std::to_string(n + 1), arm + 1, rule));
    }
  return out;
}

}  // namespace recur
