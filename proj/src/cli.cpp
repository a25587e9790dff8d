#include "recur/cli.hpp"

#include "recur/diagnostics.hpp"
#include "recur/diary.hpp"
#include "recur/error.hpp"
#include "recur/prediction.hpp"
#include "recur/sampler.hpp"
#include "recur/serialize.hpp"
#include "recur/synthetic.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace recur::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string input;
  std::string format = "long";
  std::string out_dir;
  std::string out;
  std::uint64_t seed = kDefaultSeed;
  int k = kDefaultLatentStates;
  int burnin = 5000;
  int draws = 5000;
  int thin = 5;
  int chains = 2;
  bool share_beta_N = true;
  bool share_beta_nonN = false;
  bool save_latents = false;
  double horizon = 0.0;  // 0: command default
  int nsims = 0;         // 0: command default
  double window = 180.0;
  std::string times;
  std::string params;
  bool reference = false;
  std::string draws_file;
  int subjects_per_arm = 50;
  std::string subject;
  int sweeps = 50;
  int arm = 0;  // 0: all arms
};

std::string num(double x) {
  if (std::isnan(x)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

Json json_num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

DiaryFormat parse_format(const std::string& s) {
  auto f = diary_format_from_string(s);
  if (!f) throw Error(ErrorCode::InvalidConfig, "unknown format '" + s + "' (long or compact)");
  return *f;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return f;
}

fs::path out_dir(const Options& o) {
  require(!o.out_dir.empty(), "--out-dir is required");
  fs::create_directories(o.out_dir);
  return o.out_dir;
}

DiaryDataset load_dataset(const Options& o) {
  require(!o.input.empty(), "--input is required");
  DiaryDataset data = parse_dataset(fs::path(o.input), parse_format(o.format));
  validate_dataset(data);
  return data;
}

std::vector<int> arms_of(const Options& o) {
  if (o.arm == 0) return {0, 1, 2};
  require(o.arm >= 1 && o.arm <= kArms, "--arm must be 1, 2 or 3");
  return {o.arm - 1};
}

std::vector<ModelParams> draws_from_file(const std::string& path) {
  std::vector<ModelParams> out;
  for (auto& d : read_draws(fs::path(path))) out.push_back(std::move(d.params));
  return out;
}

/// Fixed parameters from --params, --reference or the mean of --draws-file.
ModelParams fixed_params(const Options& o) {
  const int given = int(!o.params.empty()) + int(o.reference) + int(!o.draws_file.empty());
  require(given == 1, "give exactly one of --params, --reference, --draws-file");
  if (o.reference) return expand(hrt_reference_params());
  if (!o.params.empty()) return load_params_file(o.params);
  auto draws = draws_from_file(o.draws_file);
  return posterior_mean(draws);
}

/// Draw list from --draws-file, or a single fixed parameter set.
std::vector<ModelParams> param_draws(const Options& o) {
  if (!o.draws_file.empty() && o.params.empty() && !o.reference)
    return draws_from_file(o.draws_file);
  return {fixed_params(o)};
}

int cmd_validate(const Options& o, std::ostream& out) {
  DiaryDataset data = load_dataset(o);
  std::size_t episodes = 0;
  long days = 0;
  for (const auto& s : data.subjects) {
    EpisodeSequence seq = extract_episodes(s);
    check_episode_sequence(seq);
    episodes += seq.episodes.size();
    days += s.observation_end();
  }
  auto counts = data.arm_counts();
  Json j = {{"valid", true},
            {"subjects", data.subjects.size()},
            {"subjects_per_arm", {counts[0], counts[1], counts[2]}},
            {"days", days},
            {"episodes", episodes}};
  out << j.dump() << '\n';
  return kExitOk;
}

int cmd_episodes(const Options& o, std::ostream& out) {
  DiaryDataset data = load_dataset(o);
  auto seqs = extract_episodes(data);
  if (o.out.empty()) {
    write_episodes_csv(seqs, out);
  } else {
    auto f = open_out(o.out);
    write_episodes_csv(seqs, f);
  }
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  ModelParams params = fixed_params(o);
  const double days = o.horizon > 0 ? o.horizon : 360.0;
  require(o.subjects_per_arm > 0, "--subjects-per-arm must be positive");
  require(days >= 1.0, "--horizon must be at least one day");
  DiaryDataset data = simulate_dataset(params, o.subjects_per_arm, int(days), o.seed);
  const DiaryFormat fmt = parse_format(o.format);
  if (!o.out.empty()) {
    auto f = open_out(o.out);
    write_dataset(data, f, fmt);
  } else if (!o.out_dir.empty()) {
    auto f = open_out(out_dir(o) / "diary.csv");
    write_dataset(data, f, fmt);
  } else {
    write_dataset(data, out, fmt);
  }
  return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
  DiaryDataset data = load_dataset(o);
  const fs::path dir = out_dir(o);
  ChainConfig cfg;
  cfg.burn_in = o.burnin;
  cfg.draws = o.draws;
  cfg.thin = o.thin;
  cfg.chains = o.chains;
  cfg.seed = o.seed;
  cfg.k = o.k;
  cfg.sharing = {o.share_beta_N, o.share_beta_nonN};
  cfg.keep_latents = o.save_latents;
  validate_config(cfg);

  auto seqs = extract_episodes(data);
  PosteriorDraws post = gibbs_run(seqs, cfg);
  {
    auto f = open_out(dir / "draws.jsonl");
    write_draws(post, f);
  }
  if (o.save_latents) {
    auto f = open_out(dir / "latents.jsonl");
    write_latents(post, seqs, f);
  }

  Json summary = {{"draws", post.draws.size()},
                  {"chains", cfg.chains},
                  {"truncation_failures", post.truncation_failures}};
  if (post.draws.size() / std::size_t(cfg.chains) >= 10) {
    auto diag = diagnostics(post);
    auto f = open_out(dir / "diagnostics.csv");
    f << "parameter,mean,sd,mcse,ess,rhat\n";
    double max_rhat = 0.0, min_ess = INFINITY;
    for (const auto& p : diag) {
      f << p.name << ',' << num(p.stats.mean) << ',' << num(p.stats.sd) << ','
        << num(p.stats.mcse) << ',' << num(p.stats.ess) << ',' << num(p.stats.rhat) << '\n';
      if (std::isfinite(p.stats.rhat)) max_rhat = std::max(max_rhat, p.stats.rhat);
      min_ess = std::min(min_ess, p.stats.ess);
    }
    summary["max_rhat"] = json_num(max_rhat);
    summary["min_ess"] = json_num(min_ess);
  } else {
    summary["diagnostics"] = "skipped: fewer than 10 draws per chain";
  }
  out << summary.dump() << '\n';
  return kExitOk;
}

std::string state_label(int m, int k) {
  return m < k ? "N" + std::to_string(m + 1) : std::string(to_string(NonNClass(m - k)));
}

Json waiting_json(const WaitingTimeSummary& w) {
  return {{"median", json_num(w.median)}, {"mean", json_num(w.mean)},
          {"q25", json_num(w.q25)},       {"q75", json_num(w.q75)},
          {"not_reached_frac", w.not_reached_frac}, {"n", w.n}};
}

int cmd_predict_generic(const Options& o, std::ostream& out) {
  ModelParams params = fixed_params(o);
  const fs::path dir = out_dir(o);
  GenericConfig cfg;
  cfg.times = parse_time_grid(o.times.empty() ? "30:360:30" : o.times);
  cfg.horizon = o.horizon > 0 ? o.horizon : 3000.0;
  cfg.n_sims = o.nsims > 0 ? o.nsims : 100000;
  cfg.spec.window = o.window;
  cfg.seed = o.seed;
  require(o.window > 0, "--window must be positive");

  Json summary = Json::object();
  for (int arm : arms_of(o)) {
    GenericPrediction pred = predict_generic(params, arm, cfg);
    const std::string tag = "arm" + std::to_string(arm + 1);
    {
      auto f = open_out(dir / ("prob_N_" + tag + ".csv"));
      f << "t,prob_N\n";
      for (std::size_t i = 0; i < cfg.times.size(); ++i)
        f << num(cfg.times[i]) << ',' << num(pred.prob_N(Eigen::Index(i))) << '\n';
    }
    Json amen = waiting_json(pred.amenorrhea);
    amen["horizon"] = cfg.horizon;
    amen["window"] = cfg.spec.window;
    {
      auto f = open_out(dir / ("amenorrhea_" + tag + ".json"));
      f << amen.dump(2) << '\n';
    }
    {
      auto f = open_out(dir / ("occupancy_" + tag + ".csv"));
      for (Eigen::Index m = 0; m < pred.occupancy.size(); ++m)
        f << (m ? "," : "") << state_label(int(m), params.k);
      f << '\n';
      for (Eigen::Index m = 0; m < pred.occupancy.size(); ++m)
        f << (m ? "," : "") << num(pred.occupancy(m));
      f << '\n';
    }
    summary[tag] = amen;
  }
  out << summary.dump() << '\n';
  return kExitOk;
}

const EpisodeSequence& find_subject(const std::vector<EpisodeSequence>& seqs,
                                    const std::string& id) {
  for (const auto& s : seqs)
    if (s.subject_id == id) return s;
  throw Error(ErrorCode::InvalidConfig, "subject '" + id + "' not in dataset");
}

int cmd_predict_subject(const Options& o, std::ostream& out) {
  require(!o.subject.empty(), "--subject is required");
  DiaryDataset data = load_dataset(o);
  auto seqs = extract_episodes(data);
  const EpisodeSequence& subject = find_subject(seqs, o.subject);
  std::vector<ModelParams> draws = param_draws(o);
  const fs::path dir = out_dir(o);

  SubjectConfig cfg;
  cfg.horizon = o.horizon > 0 ? o.horizon : 365.0;
  cfg.times = parse_time_grid(o.times.empty() ? "30:" + num(cfg.horizon) + ":30" : o.times);
  cfg.n_sims_per_draw = o.nsims > 0 ? o.nsims : 200;
  cfg.sweeps = o.sweeps;
  cfg.spec.window = o.window;
  cfg.seed = o.seed;
  require(o.sweeps >= 0, "--sweeps must be non-negative");

  SubjectPrediction pred = predict_subject_future(draws, subject, cfg);
  const std::string tag = "subject_" + o.subject;
  {
    auto f = open_out(dir / (tag + "_prob_N.csv"));
    f << "t,prob_N\n";
    for (std::size_t i = 0; i < cfg.times.size(); ++i)
      f << num(cfg.times[i]) << ',' << num(pred.prob_N(Eigen::Index(i))) << '\n';
  }
  Json amen = waiting_json(pred.amenorrhea);
  amen["subject_id"] = o.subject;
  amen["observation_end"] = subject.total_duration();
  amen["horizon"] = cfg.horizon;
  amen["window"] = cfg.spec.window;
  amen["draws"] = draws.size();
  {
    auto f = open_out(dir / (tag + "_amenorrhea.json"));
    f << amen.dump(2) << '\n';
  }
  out << amen.dump() << '\n';
  return kExitOk;
}

void write_two_step(const std::array<TwoStep, kArms>& ts, int k, const fs::path& dir) {
  auto fN = open_out(dir / "two_step_N.csv");
  fN << "arm,from";
  for (int j = 0; j < k; ++j) fN << ",N" << j + 1;
  fN << '\n';
  auto fC = open_out(dir / "two_step_nonN.csv");
  fC << "arm,from,S,SB,B\n";
  for (int a = 0; a < kArms; ++a) {
    for (int i = 0; i < k; ++i) {
      fN << a + 1 << ",N" << i + 1;
      for (int j = 0; j < k; ++j) fN << ',' << num(ts[a].M_N(i, j));
      fN << '\n';
    }
    for (int i = 0; i < kClasses; ++i) {
      fC << a + 1 << ',' << to_string(NonNClass(i));
      for (int j = 0; j < kClasses; ++j) fC << ',' << num(ts[a].M_nonN(i, j));
      fC << '\n';
    }
  }
}

/// --nsims is a total budget for the two-step tables, spread over the draws.
int per_draw_sims(const Options& o, std::size_t n_draws) {
  const long total = o.nsims > 0 ? o.nsims : 20000;
  return int(std::max<long>(1, (total + long(n_draws) - 1) / long(n_draws)));
}

int cmd_two_step(const Options& o, std::ostream& out) {
  std::vector<ModelParams> draws = param_draws(o);
  const fs::path dir = out_dir(o);
  const int n = per_draw_sims(o, draws.size());
  auto ts = two_step_summary(draws, n, o.seed);
  write_two_step(ts, draws.front().k, dir);
  out << Json({{"draws", draws.size()}, {"n_sims_per_draw", n}}).dump() << '\n';
  return kExitOk;
}

int cmd_summarize(const Options& o, std::ostream& out) {
  require(!o.draws_file.empty(), "--draws-file is required");
  std::vector<ModelParams> draws = draws_from_file(o.draws_file);
  const ModelParams mean = posterior_mean(draws);
  const int k = mean.k;
  const fs::path dir = out_dir(o);
  {
    auto f = open_out(dir / "table_phase.csv");
    f << "arm,P00";
    for (int j = 0; j < k; ++j) f << ",P0_N" << j + 1;
    f << ",P0_S,P0_SB,P0_B\n";
    for (int a = 0; a < kArms; ++a) {
      f << a + 1 << ',' << num(mean.phase_N(a));
      for (int j = 0; j < k; ++j) f << ',' << num(mean.init_N(a, j));
      for (int c = 0; c < kClasses; ++c) f << ',' << num(mean.init_nonN(a, c));
      f << '\n';
    }
  }
  {
    auto f = open_out(dir / "table_intensity.csv");
    f << "arm";
    for (int j = 0; j < k; ++j) f << ",N" << j + 1;
    f << ",S,SB,B\n";
    for (int a = 0; a < kArms; ++a) {
      f << a + 1;
      for (int j = 0; j < k; ++j) f << ',' << num(mean.intensity(a, Phase::N, j));
      for (int c = 0; c < kClasses; ++c) f << ',' << num(mean.intensity(a, Phase::NonN, c));
      f << '\n';
    }
  }
  const int n = per_draw_sims(o, draws.size());
  write_two_step(two_step_summary(draws, n, o.seed), k, dir);
  out << Json({{"draws", draws.size()}}).dump() << '\n';
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownStatusChar:
    case ErrorCode::NonContiguousDays:
    case ErrorCode::DuplicateSubjectDay:
    case ErrorCode::BadTreatmentCode:
    case ErrorCode::MalformedRecord:
    case ErrorCode::EmptySeries:
    case ErrorCode::EmptyDataset:
    case ErrorCode::InvalidParams:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidStart:
    case ErrorCode::HorizonTooShort:
    case ErrorCode::EmptyDraws:
    case ErrorCode::MalformedDraws:
    case ErrorCode::TooFewDraws:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void report(std::ostream& err, std::string_view name, const std::string& message, int code) {
  err << Json({{"error", name}, {"message", message}, {"exit_code", code}}).dump() << '\n';
}

}  // namespace

std::vector<double> parse_time_grid(const std::string& text) {
  auto parse_num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v))
      throw Error(ErrorCode::InvalidConfig, "bad time value '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw Error(ErrorCode::InvalidConfig, "time range must be start:stop:step");
    const double a = parse_num(parts[0]), b = parse_num(parts[1]), h = parse_num(parts[2]);
    if (!(h > 0) || b < a) throw Error(ErrorCode::InvalidConfig, "empty time range '" + text + "'");
    const long n = long(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + double(i) * h);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_num(p));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "no time points");
  for (double t : out)
    if (t < 0) throw Error(ErrorCode::InvalidConfig, "negative time point");
  return out;
}

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Recurrent-event diary modelling: fit, simulate and predict"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value file mirroring the flags; flags win");

  app.add_option("--input", o.input, "Diary file");
  app.add_option("--format", o.format, "Diary format: long or compact");
  app.add_option("--out-dir", o.out_dir, "Output directory");
  app.add_option("--out", o.out, "Output file (stdout when omitted)");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--k", o.k, "Number of latent N states")->check(CLI::PositiveNumber);
  app.add_option("--burnin", o.burnin, "Burn-in iterations")->check(CLI::NonNegativeNumber);
  app.add_option("--draws", o.draws, "Stored draws per chain")->check(CLI::PositiveNumber);
  app.add_option("--thin", o.thin, "Thinning interval")->check(CLI::PositiveNumber);
  app.add_option("--chains", o.chains, "Number of chains")->check(CLI::PositiveNumber);
  app.add_flag("--share-beta-n,!--no-share-beta-n", o.share_beta_N,
               "Share N intensities across arms (default on)");
  app.add_flag("--share-beta-nonn,!--no-share-beta-nonn", o.share_beta_nonN,
               "Share non-N intensities across arms (default off)");
  app.add_flag("--save-latents", o.save_latents, "Write latent paths next to the draws");
  app.add_option("--horizon", o.horizon, "Simulation horizon in days")->check(CLI::PositiveNumber);
  app.add_option("--nsims", o.nsims, "Monte Carlo replicates")->check(CLI::PositiveNumber);
  app.add_option("--window", o.window, "Amenorrhea window in days")->check(CLI::PositiveNumber);
  app.add_option("--times", o.times, "Time points: a,b,c or start:stop:step");
  app.add_option("--params", o.params, "Parameter JSON (full or reduced layout)");
  app.add_flag("--reference", o.reference, "Use the built-in HRT reference parameters");
  app.add_option("--draws-file", o.draws_file, "Posterior draws file (JSON lines)");
  app.add_option("--subjects-per-arm", o.subjects_per_arm, "Simulated subjects per arm");
  app.add_option("--subject", o.subject, "Subject id");
  app.add_option("--sweeps", o.sweeps, "Latent sweeps when conditioning on a subject");
  app.add_option("--arm", o.arm, "Restrict to one arm (1..3)");

  using Handler = int (*)(const Options&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
      {"validate", "Check a diary file", cmd_validate},
      {"episodes", "Dump extracted episodes as CSV", cmd_episodes},
      {"simulate", "Simulate a diary dataset from fixed parameters", cmd_simulate},
      {"fit", "Run the Gibbs sampler and write draws and diagnostics", cmd_fit},
      {"predict-generic", "Population-level predictions per arm", cmd_predict_generic},
      {"predict-subject", "Predictions for one subject's future", cmd_predict_subject},
      {"summarize", "Posterior-mean tables from a draws file", cmd_summarize},
      {"two-step", "Same-phase one-return matrices", cmd_two_step},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) subs.push_back(app.add_subcommand(name, help)->fallthrough());

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      report(err, "UsageError", e.what(), kExitValidation);
      return kExitValidation;
    }
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return std::get<2>(commands[i])(o, out);
    report(err, "UsageError", "no subcommand", kExitValidation);
    return kExitValidation;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    report(err, to_string(e.code()), e.what(), code);
    return code;
  } catch (const Json::exception& e) {
    report(err, "MalformedInput", e.what(), kExitValidation);
    return kExitValidation;
  } catch (const std::exception& e) {
    report(err, "RuntimeError", e.what(), kExitRuntime);
    return kExitRuntime;
  }
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"recur"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_command(int(argv.size()), argv.data(), out, err);
}

}  // namespace recur::cli
