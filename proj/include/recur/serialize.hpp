#pragma once

#include "recur/model.hpp"
#include "recur/prediction.hpp"
#include "recur/sampler.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace recur {

using Json = nlohmann::json;

/// Parameter file layout: `k, sharing, beta_N, beta_nonN, P_toN, P_toNonN,
/// P0_N, P0_nonN, P00`. Tensors are nested arrays indexed
/// [arm][previous mark][mark before that][next mark]; classes in S, SB, B
/// order, latent states 1..k.
Json to_json(const ModelParams& params);
/// Throws Error(InvalidParams) on missing keys, wrong shapes or any
/// validate_params violation.
ModelParams params_from_json(const Json& j);

/// Reduced layout: `k, P00, P0_N, P0_nonN, beta_N, beta_nonN, M_N, M_nonN`.
Json to_json(const ReducedParams& params);
ReducedParams reduced_from_json(const Json& j);

/// Reads either layout; reduced files (those with an `M_N` key) are expanded.
ModelParams load_params_file(const std::filesystem::path& path);

/// One draws-file line: `{"iter":..,"chain":..,"params":{..},"loglik":..}`.
std::string draw_to_line(const Draw& draw);
void write_draws(const PosteriorDraws& draws, std::ostream& out);
/// Throws MalformedDraws naming the offending line, EmptyDraws if none.
std::vector<Draw> read_draws(std::istream& in);
std::vector<Draw> read_draws(const std::filesystem::path& path);

/// Sidecar with one line per stored draw: `{"iter","chain","marks":[[..]..]}`
/// (latent states 1-based, classes as S/SB/B strings).
void write_latents(const PosteriorDraws& draws, std::span<const EpisodeSequence> data,
                   std::ostream& out);

/// Elementwise mean of a set of parameter draws (ordering and simplex
/// constraints are preserved under averaging).
ModelParams posterior_mean(std::span<const ModelParams> draws);

}  // namespace recur
