#include "recur/diary.hpp"

#include "recur/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace recur {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(ErrorCode code, int line, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ": " << what;
  throw Error(code, msg.str());
}

int parse_int(std::string_view field, int line, ErrorCode code, const char* name) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail(code, line, std::string("bad ") + name + " '" + std::string(field) + "'");
  return value;
}

int parse_treatment(std::string_view field, int line) {
  int tr = parse_int(field, line, ErrorCode::BadTreatmentCode, "treatment");
  if (tr < 1 || tr > kArms)
    fail(ErrorCode::BadTreatmentCode, line, "treatment must be 1..3, got " + std::string(field));
  return tr;
}

void expect_header(std::istream& in, std::string_view expected, int& line_no) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::EmptyDataset, "missing header");
  ++line_no;
  std::string_view h = trim(header);
  if (h.size() >= 3 && static_cast<unsigned char>(h[0]) == 0xEF) h.remove_prefix(3);
  if (h != expected)
    fail(ErrorCode::MalformedRecord, line_no,
         "expected header '" + std::string(expected) + "', got '" + std::string(h) + "'");
}

DiaryDataset parse_compact(std::istream& in) {
  int line_no = 0;
  expect_header(in, "subject_id,treatment,diary", line_no);
  DiaryDataset data;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 3) fail(ErrorCode::MalformedRecord, line_no, "expected 3 fields");
    DiarySeries s;
    s.subject_id = std::string(fields[0]);
    if (s.subject_id.empty()) fail(ErrorCode::MalformedRecord, line_no, "empty subject_id");
    if (!seen.insert(s.subject_id).second)
      fail(ErrorCode::DuplicateSubjectDay, line_no, "subject '" + s.subject_id + "' repeated");
    s.treatment = parse_treatment(fields[1], line_no);
    if (fields[2].empty()) fail(ErrorCode::EmptySeries, line_no, "empty diary");
    s.days.reserve(fields[2].size());
    for (char c : fields[2]) {
      try {
        s.days.push_back(day_status_from_char(c));
      } catch (const Error&) {
        fail(ErrorCode::UnknownStatusChar, line_no, std::string("unknown status '") + c + "'");
      }
    }
    data.subjects.push_back(std::move(s));
  }
  return data;
}

DiaryDataset parse_long(std::istream& in) {
  int line_no = 0;
  expect_header(in, "subject_id,treatment,day,status", line_no);

  struct Pending {
    int treatment = 0;
    std::map<int, DayStatus> days;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> pending;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != 4) fail(ErrorCode::MalformedRecord, line_no, "expected 4 fields");
    std::string id(fields[0]);
    if (id.empty()) fail(ErrorCode::MalformedRecord, line_no, "empty subject_id");
    int tr = parse_treatment(fields[1], line_no);
    int day = parse_int(fields[2], line_no, ErrorCode::NonContiguousDays, "day");
    if (day < 1) fail(ErrorCode::NonContiguousDays, line_no, "day must be >= 1");
    if (fields[3].size() != 1)
      fail(ErrorCode::UnknownStatusChar, line_no,
           "unknown status '" + std::string(fields[3]) + "'");
    DayStatus status;
    try {
      status = day_status_from_char(fields[3][0]);
    } catch (const Error&) {
      fail(ErrorCode::UnknownStatusChar, line_no,
           "unknown status '" + std::string(fields[3]) + "'");
    }

    auto [it, inserted] = pending.try_emplace(id);
    if (inserted) {
      order.push_back(id);
      it->second.treatment = tr;
    } else if (it->second.treatment != tr) {
      fail(ErrorCode::BadTreatmentCode, line_no, "treatment changes within subject '" + id + "'");
    }
    if (!it->second.days.emplace(day, status).second)
      fail(ErrorCode::DuplicateSubjectDay, line_no,
           "subject '" + id + "' day " + std::to_string(day) + " repeated");
  }

  DiaryDataset data;
  data.subjects.reserve(order.size());
  for (const auto& id : order) {
    const Pending& p = pending.at(id);
    DiarySeries s;
    s.subject_id = id;
    s.treatment = p.treatment;
    int expected = 1;
    for (const auto& [day, status] : p.days) {
      if (day != expected)
        throw Error(ErrorCode::NonContiguousDays,
                    "subject '" + id + "' is missing day " + std::to_string(expected));
      s.days.push_back(status);
      ++expected;
    }
    data.subjects.push_back(std::move(s));
  }
  return data;
}

}  // namespace

char to_char(DayStatus s) {
  switch (s) {
    case DayStatus::B: return 'B';
    case DayStatus::S: return 'S';
    case DayStatus::N: return 'N';
  }
  return '?';
}

DayStatus day_status_from_char(char c) {
  switch (c) {
    case 'B': return DayStatus::B;
    case 'S': return DayStatus::S;
    case 'N': return DayStatus::N;
    default: throw Error(ErrorCode::UnknownStatusChar, std::string("unknown status '") + c + "'");
  }
}

std::array<int, kArms> DiaryDataset::arm_counts() const {
  std::array<int, kArms> counts{};
  for (const auto& s : subjects) ++counts[s.arm()];
  return counts;
}

std::optional<DiaryFormat> diary_format_from_string(std::string_view s) {
  if (s == "long_csv" || s == "long") return DiaryFormat::LongCsv;
  if (s == "compact_csv" || s == "compact") return DiaryFormat::CompactCsv;
  return std::nullopt;
}

double EpisodeSequence::total_duration() const {
  double total = 0.0;
  for (const auto& e : episodes) total += e.duration;
  return total;
}

void validate_dataset(const DiaryDataset& dataset) {
  if (dataset.subjects.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no subjects");
  std::unordered_set<std::string> seen;
  for (const auto& s : dataset.subjects) {
    if (s.subject_id.empty() || s.subject_id.find_first_of(",\n\r") != std::string::npos)
      throw Error(ErrorCode::MalformedRecord, "invalid subject id '" + s.subject_id + "'");
    if (!seen.insert(s.subject_id).second)
      throw Error(ErrorCode::DuplicateSubjectDay, "subject '" + s.subject_id + "' repeated");
    if (s.treatment < 1 || s.treatment > kArms)
      throw Error(ErrorCode::BadTreatmentCode,
                  "subject '" + s.subject_id + "' has treatment " + std::to_string(s.treatment));
    if (s.days.empty())
      throw Error(ErrorCode::EmptySeries, "subject '" + s.subject_id + "' has no days");
  }
}

DiaryDataset parse_dataset(std::istream& in, DiaryFormat format) {
  DiaryDataset data = format == DiaryFormat::LongCsv ? parse_long(in) : parse_compact(in);
  validate_dataset(data);
  return data;
}

DiaryDataset parse_dataset(const std::filesystem::path& path, DiaryFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return parse_dataset(in, format);
}

void write_dataset(const DiaryDataset& dataset, std::ostream& out, DiaryFormat format) {
  validate_dataset(dataset);
  if (format == DiaryFormat::CompactCsv) {
    out << "subject_id,treatment,diary\n";
    for (const auto& s : dataset.subjects) {
      out << s.subject_id << ',' << s.treatment << ',';
      for (DayStatus d : s.days) out << to_char(d);
      out << '\n';
    }
  } else {
    out << "subject_id,treatment,day,status\n";
    for (const auto& s : dataset.subjects)
      for (std::size_t d = 0; d < s.days.size(); ++d)
        out << s.subject_id << ',' << s.treatment << ',' << d + 1 << ',' << to_char(s.days[d])
            << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed");
}

void write_dataset(const DiaryDataset& dataset, const std::filesystem::path& path,
                   DiaryFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  write_dataset(dataset, out, format);
}

EpisodeSequence extract_episodes(const DiarySeries& series) {
  if (series.days.empty())
    throw Error(ErrorCode::EmptySeries, "subject '" + series.subject_id + "' has no days");
  EpisodeSequence seq{series.subject_id, series.treatment, {}};

  std::size_t i = 0;
  const std::size_t n = series.days.size();
  while (i < n) {
    const bool quiet = series.days[i] == DayStatus::N;
    bool saw_b = false;
    bool saw_s = false;
    std::size_t j = i;
    while (j < n && (series.days[j] == DayStatus::N) == quiet) {
      saw_b |= series.days[j] == DayStatus::B;
      saw_s |= series.days[j] == DayStatus::S;
      ++j;
    }
    Episode e;
    e.duration = static_cast<double>(j - i);
    if (quiet) {
      e.phase = Phase::N;
    } else {
      e.phase = Phase::NonN;
      e.observed_class = saw_b && saw_s ? NonNClass::SB : (saw_b ? NonNClass::B : NonNClass::S);
    }
    seq.episodes.push_back(e);
    i = j;
  }

  Episode& last = seq.episodes.back();
  last.censored = true;
  if (last.phase == Phase::NonN) {
    last.candidates = ClassSet::of(NonNClass::SB);
    if (*last.observed_class != NonNClass::SB) last.candidates = last.candidates.with(*last.observed_class);
  }
  return seq;
}

std::vector<EpisodeSequence> extract_episodes(const DiaryDataset& dataset) {
  std::vector<EpisodeSequence> out;
  out.reserve(dataset.subjects.size());
  for (const auto& s : dataset.subjects) out.push_back(extract_episodes(s));
  return out;
}

SubjectSummary summarize_subject(const DiarySeries& series) {
  SubjectSummary sum;
  sum.days = series.observation_end();
  for (DayStatus d : series.days) {
    switch (d) {
      case DayStatus::N: ++sum.n_days; break;
      case DayStatus::S: ++sum.s_days; break;
      case DayStatus::B: ++sum.b_days; break;
    }
  }
  if (sum.days > 0) {
    sum.pct_n = 100.0 * sum.n_days / sum.days;
    sum.pct_s = 100.0 * sum.s_days / sum.days;
    sum.pct_b = 100.0 * sum.b_days / sum.days;
    sum.episodes = static_cast<int>(extract_episodes(series).episodes.size());
  }
  return sum;
}

void write_episodes_csv(std::span<const EpisodeSequence> sequences, std::ostream& out) {
  out << "subject_id,index,phase,class,duration,censored,candidates\n";
  for (const auto& seq : sequences) {
    for (std::size_t j = 0; j < seq.episodes.size(); ++j) {
      const Episode& e = seq.episodes[j];
      out << seq.subject_id << ',' << j + 1 << ',' << (e.phase == Phase::N ? "N" : "NonN") << ',';
      if (e.phase == Phase::N) {
        if (e.latent_class) out << 'N' << *e.latent_class + 1;
      } else if (e.observed_class) {
        out << to_string(*e.observed_class);
      }
      out << ',' << e.duration << ',' << (e.censored ? 1 : 0) << ',' << to_string(e.candidates)
          << '\n';
    }
  }
}

void check_episode_sequence(const EpisodeSequence& seq) {
  auto bad = [&](std::size_t j, const std::string& what) {
    throw Error(ErrorCode::MalformedRecord,
                "subject '" + seq.subject_id + "' episode " + std::to_string(j + 1) + ": " + what);
  };
  if (seq.episodes.empty()) throw Error(ErrorCode::EmptySeries, "subject '" + seq.subject_id + "' has no episodes");
  if (seq.treatment < 1 || seq.treatment > kArms)
    throw Error(ErrorCode::BadTreatmentCode, "subject '" + seq.subject_id + "' bad treatment");
  for (std::size_t j = 0; j < seq.episodes.size(); ++j) {
    const Episode& e = seq.episodes[j];
    if (!(e.duration > 0.0)) bad(j, "non-positive duration");
    if (j > 0 && e.phase == seq.episodes[j - 1].phase) bad(j, "phases do not alternate");
    if (e.censored && j + 1 != seq.episodes.size()) bad(j, "censored episode before the end");
    if (e.phase == Phase::N) {
      if (e.observed_class) bad(j, "N episode with an observed class");
      if (!e.candidates.empty()) bad(j, "N episode with class candidates");
    } else {
      if (e.censored != !e.candidates.empty()) bad(j, "candidates present iff censored NonN");
      if (!e.censored && !e.observed_class) bad(j, "NonN episode without an observed class");
      if (e.censored && e.observed_class && !e.candidates.contains(*e.observed_class))
        bad(j, "provisional class outside the candidate set");
      if (e.censored && e.observed_class == NonNClass::SB &&
          e.candidates != ClassSet::of(NonNClass::SB))
        bad(j, "censored run with both symbols must be SB");
    }
  }
}

}  // namespace recur
