#include "recur/serialize.hpp"

#include "recur/error.hpp"

#include <fstream>
#include <sstream>

namespace recur {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidParams, what); }

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const VectorXd& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) invalid(std::string("missing key '") + key + "'");
  return j.at(key);
}

VectorXd vector_from(const Json& j, Eigen::Index n, const std::string& name) {
  if (!j.is_array() || Eigen::Index(j.size()) != n)
    invalid(name + ": expected an array of " + std::to_string(n));
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!j[i].is_number()) invalid(name + ": non-numeric entry");
    v[i] = j[i].get<double>();
  }
  return v;
}

MatrixXd matrix_from(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
  if (!j.is_array() || Eigen::Index(j.size()) != rows)
    invalid(name + ": expected " + std::to_string(rows) + " rows");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = vector_from(j[r], cols, name).transpose();
  return m;
}

// [prev][prevprev][next] block of one arm, row-stacked as prev * n_prevprev + prevprev.
MatrixXd tensor_from(const Json& j, int n_prev, int n_prevprev, int n_next, const std::string& name) {
  if (!j.is_array() || int(j.size()) != n_prev) invalid(name + ": wrong outer dimension");
  MatrixXd m(n_prev * n_prevprev, n_next);
  for (int a = 0; a < n_prev; ++a)
    m.middleRows(a * n_prevprev, n_prevprev) = matrix_from(j[a], n_prevprev, n_next, name);
  return m;
}

Json tensor_json(const MatrixXd& m, int n_prev, int n_prevprev) {
  Json out = Json::array();
  for (int a = 0; a < n_prev; ++a) out.push_back(matrix_json(m.middleRows(a * n_prevprev, n_prevprev)));
  return out;
}

std::string_view class_token(int c) { return to_string(NonNClass(c)); }

}  // namespace

Json to_json(const ModelParams& p) {
  Json j;
  j["k"] = p.k;
  j["sharing"] = {{"share_beta_N", p.sharing.share_beta_N},
                  {"share_beta_nonN", p.sharing.share_beta_nonN}};
  j["beta_N"] = matrix_json(p.beta_N);
  j["beta_nonN"] = matrix_json(p.beta_nonN);
  Json to_n = Json::array(), to_c = Json::array();
  for (int a = 0; a < kArms; ++a) {
    to_n.push_back(tensor_json(p.to_N[a], kClasses, p.k));
    to_c.push_back(tensor_json(p.to_nonN[a], p.k, kClasses));
  }
  j["P_toN"] = std::move(to_n);
  j["P_toNonN"] = std::move(to_c);
  j["P0_N"] = matrix_json(p.init_N);
  j["P0_nonN"] = matrix_json(p.init_nonN);
  j["P00"] = vector_json(p.phase_N);
  return j;
}

ModelParams params_from_json(const Json& j) {
  try {
    const Json& kj = field(j, "k");
    if (!kj.is_number_integer() || kj.get<int>() < 1) invalid("k must be a positive integer");
    const int k = kj.get<int>();
    SharingConfig sharing;
    if (j.contains("sharing")) {
      const Json& s = j.at("sharing");
      sharing.share_beta_N = s.value("share_beta_N", true);
      sharing.share_beta_nonN = s.value("share_beta_nonN", false);
    }
    ModelParams p = ModelParams::uniform(k, sharing);
    p.beta_N = matrix_from(field(j, "beta_N"), p.beta_N.rows(), k, "beta_N");
    p.beta_nonN = matrix_from(field(j, "beta_nonN"), p.beta_nonN.rows(), kClasses, "beta_nonN");
    const Json& to_n = field(j, "P_toN");
    const Json& to_c = field(j, "P_toNonN");
    if (!to_n.is_array() || to_n.size() != kArms) invalid("P_toN: expected 3 arms");
    if (!to_c.is_array() || to_c.size() != kArms) invalid("P_toNonN: expected 3 arms");
    for (int a = 0; a < kArms; ++a) {
      p.to_N[a] = tensor_from(to_n[a], kClasses, k, k, "P_toN");
      p.to_nonN[a] = tensor_from(to_c[a], k, kClasses, kClasses, "P_toNonN");
    }
    p.init_N = matrix_from(field(j, "P0_N"), kArms, k, "P0_N");
    p.init_nonN = matrix_from(field(j, "P0_nonN"), kArms, kClasses, "P0_nonN");
    p.phase_N = vector_from(field(j, "P00"), kArms, "P00");
    auto issues = validate_params(p, 1e-9);
    if (!issues.empty())
      invalid(std::string(to_string(issues.front().kind)) + " at " + issues.front().where);
    return p;
  } catch (const Json::exception& e) {
    invalid(e.what());
  }
}

Json to_json(const ReducedParams& r) {
  Json j;
  j["k"] = r.k;
  j["P00"] = vector_json(r.phase_N);
  j["P0_N"] = matrix_json(r.init_N);
  j["P0_nonN"] = matrix_json(r.init_nonN);
  j["beta_N"] = vector_json(r.beta_N);
  j["beta_nonN"] = matrix_json(r.beta_nonN);
  Json mn = Json::array(), mc = Json::array();
  for (int a = 0; a < kArms; ++a) {
    mn.push_back(matrix_json(r.M_N[a]));
    mc.push_back(matrix_json(r.M_nonN[a]));
  }
  j["M_N"] = std::move(mn);
  j["M_nonN"] = std::move(mc);
  return j;
}

ReducedParams reduced_from_json(const Json& j) {
  try {
    const Json& kj = field(j, "k");
    if (!kj.is_number_integer() || kj.get<int>() < 1) invalid("k must be a positive integer");
    ReducedParams r;
    r.k = kj.get<int>();
    r.phase_N = vector_from(field(j, "P00"), kArms, "P00");
    r.init_N = matrix_from(field(j, "P0_N"), kArms, r.k, "P0_N");
    r.init_nonN = matrix_from(field(j, "P0_nonN"), kArms, kClasses, "P0_nonN");
    r.beta_N = vector_from(field(j, "beta_N"), r.k, "beta_N");
    r.beta_nonN = matrix_from(field(j, "beta_nonN"), kArms, kClasses, "beta_nonN");
    const Json& mn = field(j, "M_N");
    const Json& mc = field(j, "M_nonN");
    if (!mn.is_array() || mn.size() != kArms) invalid("M_N: expected 3 arms");
    if (!mc.is_array() || mc.size() != kArms) invalid("M_nonN: expected 3 arms");
    for (int a = 0; a < kArms; ++a) {
      r.M_N[a] = matrix_from(mn[a], r.k, r.k, "M_N");
      r.M_nonN[a] = matrix_from(mc[a], kClasses, kClasses, "M_nonN");
    }
    auto issues = validate_params(expand(r), 1e-9);
    if (!issues.empty())
      invalid(std::string(to_string(issues.front().kind)) + " at " + issues.front().where);
    return r;
  } catch (const Json::exception& e) {
    invalid(e.what());
  }
}

ModelParams load_params_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("M_N")) return expand(reduced_from_json(j));
  return params_from_json(j);
}

std::string draw_to_line(const Draw& d) {
  Json j;
  j["iter"] = d.iter;
  j["chain"] = d.chain;
  j["params"] = to_json(d.params);
  j["loglik"] = d.loglik;
  return j.dump();
}

void write_draws(const PosteriorDraws& draws, std::ostream& out) {
  for (const auto& d : draws.draws) out << draw_to_line(d) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing draws");
}

std::vector<Draw> read_draws(std::istream& in) {
  std::vector<Draw> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      Draw d;
      d.iter = j.at("iter").get<int>();
      d.chain = j.at("chain").get<int>();
      d.loglik = j.at("loglik").get<double>();
      d.params = params_from_json(j.at("params"));
      out.push_back(std::move(d));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedDraws,
                  "line " + std::to_string(line_no) + ": " + std::string(e.what()));
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyDraws, "draws file holds no draws");
  return out;
}

std::vector<Draw> read_draws(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_draws(in);
}

void write_latents(const PosteriorDraws& draws, std::span<const EpisodeSequence> data,
                   std::ostream& out) {
  for (const auto& d : draws.draws) {
    if (!d.latents) continue;
    Json marks = Json::array();
    for (std::size_t i = 0; i < d.latents->marks.size(); ++i) {
      Json row = Json::array();
      for (std::size_t j = 0; j < d.latents->marks[i].size(); ++j) {
        const int m = d.latents->marks[i][j];
        if (data[i].episodes[j].phase == Phase::N)
          row.push_back(m + 1);
        else
          row.push_back(class_token(m));
      }
      marks.push_back(std::move(row));
    }
    Json j{{"iter", d.iter}, {"chain", d.chain}, {"marks", std::move(marks)}};
    out << j.dump() << '\n';
  }
}

ModelParams posterior_mean(std::span<const ModelParams> draws) {
  if (draws.empty()) throw Error(ErrorCode::EmptyDraws, "no draws to average");
  ModelParams m = draws.front();
  const double n = double(draws.size());
  for (std::size_t i = 1; i < draws.size(); ++i) {
    const ModelParams& d = draws[i];
    m.beta_N += d.beta_N;
    m.beta_nonN += d.beta_nonN;
    for (int a = 0; a < kArms; ++a) {
      m.to_N[a] += d.to_N[a];
      m.to_nonN[a] += d.to_nonN[a];
    }
    m.init_N += d.init_N;
    m.init_nonN += d.init_nonN;
    m.phase_N += d.phase_N;
  }
  m.beta_N /= n;
  m.beta_N.col(0).setConstant(kAbsorbingIntensity);
  m.beta_nonN /= n;
  for (int a = 0; a < kArms; ++a) {
    m.to_N[a] /= n;
    m.to_nonN[a] /= n;
  }
  m.init_N /= n;
  m.init_nonN /= n;
  m.phase_N /= n;
  return m;
}

}  // namespace recur
