#pragma once

#include "recur/model.hpp"
#include "recur/sampler.hpp"

#include <string>
#include <vector>

namespace recur {

/// Names of the stochastic scalars of a parameter set, in `flatten` order.
/// The pinned intensity of latent state 1 is omitted. Arms, latent states
/// and rows are 1-based in names, e.g. `P_toN[2][SB][N3][N1]`.
std::vector<std::string> parameter_names(const ModelParams& params);
VectorXd flatten(const ModelParams& params);

struct ScalarSummary {
  double mean = 0.0;
  double sd = 0.0;
  double mcse = 0.0;
  double ess = 0.0;
  double rhat = 1.0;
};

/// Mean, sd, effective sample size (Geyer initial monotone sequence over the
/// multi-chain autocorrelation), Monte Carlo standard error and split-chain
/// potential scale reduction of one scalar observed in several equal-length
/// chains. A constant chain reports sd 0 and ESS equal to the draw count.
ScalarSummary summarize_chains(const std::vector<VectorXd>& chains);

struct ParamSummary {
  std::string name;
  ScalarSummary stats;
};

/// Requires at least 10 draws (Error TooFewDraws otherwise).
std::vector<ParamSummary> diagnostics(const PosteriorDraws& draws);

}  // namespace recur
