#pragma once

#include "recur/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace recur {

enum class DayStatus : std::uint8_t { B, S, N };

char to_char(DayStatus s);
/// Throws Error(UnknownStatusChar) for anything outside {B, S, N}.
DayStatus day_status_from_char(char c);

/// One subject's daily diary. Day d (1-based) is `days[d - 1]`; the
/// observation ends (right-censoring) after the last day.
struct DiarySeries {
  std::string subject_id;
  int treatment = 1;  ///< arm code, 1..3
  std::vector<DayStatus> days;

  int observation_end() const { return static_cast<int>(days.size()); }
  int arm() const { return treatment - 1; }
  bool operator==(const DiarySeries&) const = default;
};

struct DiaryDataset {
  std::vector<DiarySeries> subjects;

  /// Number of subjects per arm, indexed by arm - 1.
  std::array<int, kArms> arm_counts() const;
  bool operator==(const DiaryDataset&) const = default;
};

enum class DiaryFormat { LongCsv, CompactCsv };

std::optional<DiaryFormat> diary_format_from_string(std::string_view s);

/// A maximal constant-phase interval.
///
/// For a NonN episode `observed_class` is the class implied by the symbols
/// seen in its run. When the episode is censored that class is provisional
/// and `candidates` lists the classes the completed episode could still take.
/// `latent_class` holds the unobserved part of the episode's mark (the
/// 0-based latent state of an N episode, or the drawn class of an ambiguous
/// censored NonN episode) once inference has assigned one.
struct Episode {
  Phase phase = Phase::N;
  double duration = 0.0;
  std::optional<NonNClass> observed_class;
  std::optional<int> latent_class;
  bool censored = false;
  ClassSet candidates;

  /// True when the mark of this episode is not fixed by the data.
  bool is_latent() const {
    return phase == Phase::N || (censored && candidates.size() > 1);
  }
  bool operator==(const Episode&) const = default;
};

struct EpisodeSequence {
  std::string subject_id;
  int treatment = 1;
  std::vector<Episode> episodes;

  int arm() const { return treatment - 1; }
  double total_duration() const;
  bool operator==(const EpisodeSequence&) const = default;
};

struct SubjectSummary {
  int days = 0;
  int n_days = 0;
  int s_days = 0;
  int b_days = 0;
  double pct_n = 0.0;
  double pct_s = 0.0;
  double pct_b = 0.0;
  int episodes = 0;
};

/// Validates subject ids, treatment codes and day counts. Throws on the first
/// violation.
void validate_dataset(const DiaryDataset& dataset);

DiaryDataset parse_dataset(std::istream& in, DiaryFormat format);
DiaryDataset parse_dataset(const std::filesystem::path& path, DiaryFormat format);

void write_dataset(const DiaryDataset& dataset, std::ostream& out, DiaryFormat format);
void write_dataset(const DiaryDataset& dataset, const std::filesystem::path& path,
                   DiaryFormat format);

/// Splits a diary into alternating N / NonN episodes. Consecutive B and S
/// days form one NonN episode classified S, B or SB by the symbols it holds.
/// The last episode is right-censored.
EpisodeSequence extract_episodes(const DiarySeries& series);

std::vector<EpisodeSequence> extract_episodes(const DiaryDataset& dataset);

SubjectSummary summarize_subject(const DiarySeries& series);

/// Writes `subject_id,index,phase,class,duration,censored,candidates`.
/// Latent states are written 1-based as N1..Nk.
void write_episodes_csv(std::span<const EpisodeSequence> sequences, std::ostream& out);

/// Checks the structural invariants of an episode sequence (alternation,
/// positivity, censoring only at the end, candidate sets). Throws
/// Error(MalformedRecord) naming the first violation.
void check_episode_sequence(const EpisodeSequence& seq);

}  // namespace recur
