#pragma once

#include "recur/model.hpp"
#include "recur/prediction.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace fixtures {

using namespace recur;

inline VectorXd random_simplex(Rng& rng, int n, double conc = 1.0) {
  return sample_dirichlet(rng, VectorXd::Constant(n, conc));
}

/// Valid parameters with every probability strictly positive.
inline ModelParams random_params(Rng& rng, int k, SharingConfig sharing = {}) {
  ModelParams p = ModelParams::uniform(k, sharing);
  for (Eigen::Index g = 0; g < p.beta_N.rows(); ++g) {
    std::vector<double> b;
    for (int l = 1; l < k; ++l) b.push_back(0.01 + sample_gamma(rng, 2.0, 10.0));
    std::sort(b.begin(), b.end());
    p.beta_N(g, 0) = kAbsorbingIntensity;
    for (int l = 1; l < k; ++l) p.beta_N(g, l) = b[l - 1];
  }
  for (Eigen::Index g = 0; g < p.beta_nonN.rows(); ++g)
    for (int c = 0; c < kClasses; ++c) p.beta_nonN(g, c) = 0.05 + sample_gamma(rng, 2.0, 5.0);
  for (int a = 0; a < kArms; ++a) {
    for (Eigen::Index r = 0; r < p.to_N[a].rows(); ++r)
      p.to_N[a].row(r) = random_simplex(rng, k).transpose();
    for (Eigen::Index r = 0; r < p.to_nonN[a].rows(); ++r)
      p.to_nonN[a].row(r) = random_simplex(rng, kClasses).transpose();
    p.init_N.row(a) = random_simplex(rng, k).transpose();
    p.init_nonN.row(a) = random_simplex(rng, kClasses).transpose();
    p.phase_N[a] = 0.05 + 0.9 * std::generate_canonical<double, 53>(rng);
  }
  return p;
}

/// Random alternating sequence with `n` episodes; the last is censored. When
/// the last episode is non-N its candidate set is drawn from the diary rule
/// or the full set.
inline EpisodeSequence random_sequence(Rng& rng, int n, int treatment = 1) {
  EpisodeSequence seq{"r", treatment, {}};
  std::uniform_int_distribution<int> cls(0, kClasses - 1);
  Phase phase = rng() % 2 ? Phase::N : Phase::NonN;
  for (int j = 0; j < n; ++j) {
    Episode e;
    e.phase = phase;
    e.duration = 1 + double(rng() % 30);
    e.censored = j + 1 == n;
    if (phase == Phase::NonN) {
      const NonNClass c = NonNClass(cls(rng));
      e.observed_class = c;
      if (e.censored) {
        switch (rng() % 3) {
          case 0: e.candidates = ClassSet::all(); e.observed_class.reset(); break;
          case 1: e.candidates = ClassSet::of(NonNClass::SB).with(c); break;
          default: e.candidates = ClassSet::of(c); break;
        }
      }
    }
    seq.episodes.push_back(e);
    phase = other(phase);
  }
  return seq;
}

/// Term-by-term complete-data likelihood written out directly in probability
/// space.
inline double joint_prob(const ModelParams& p, const EpisodeSequence& seq,
                         const std::vector<int>& marks) {
  const int arm = seq.treatment - 1;
  const int k = p.k;
  double prob = seq.episodes[0].phase == Phase::N ? p.phase_N[arm] : 1.0 - p.phase_N[arm];
  for (std::size_t j = 0; j < seq.episodes.size(); ++j) {
    const Episode& e = seq.episodes[j];
    const bool isN = e.phase == Phase::N;
    const int c = marks[j];
    double pc;
    if (j < 2) {
      pc = isN ? p.init_N(arm, c) : p.init_nonN(arm, c);
    } else if (isN) {
      pc = p.to_N[arm](marks[j - 1] * k + marks[j - 2], c);
    } else {
      pc = p.to_nonN[arm](marks[j - 1] * kClasses + marks[j - 2], c);
    }
    const double beta = isN ? p.beta_N(p.sharing.share_beta_N ? 0 : arm, c)
                            : p.beta_nonN(p.sharing.share_beta_nonN ? 0 : arm, c);
    const double surv = std::exp(-beta * e.duration);
    prob *= pc * (e.censored ? surv : beta * surv);
  }
  return prob;
}

/// Marks each episode may take under the data.
inline std::vector<std::vector<int>> allowed_marks(const ModelParams& p,
                                                   const EpisodeSequence& seq) {
  std::vector<std::vector<int>> out;
  for (const auto& e : seq.episodes) {
    std::vector<int> opts;
    if (e.phase == Phase::N) {
      for (int l = 0; l < p.k; ++l) opts.push_back(l);
    } else if (!e.censored) {
      opts.push_back(int(*e.observed_class));
    } else {
      for (int c = 0; c < kClasses; ++c)
        if (e.candidates.contains(NonNClass(c))) opts.push_back(c);
    }
    out.push_back(opts);
  }
  return out;
}

/// Calls `fn` on every mark path allowed by the data.
inline void for_each_path(const std::vector<std::vector<int>>& allowed,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> path(allowed.size());
  std::function<void(std::size_t)> rec = [&](std::size_t j) {
    if (j == allowed.size()) {
      fn(path);
      return;
    }
    for (int m : allowed[j]) {
      path[j] = m;
      rec(j + 1);
    }
  };
  rec(0);
}

}  // namespace fixtures
