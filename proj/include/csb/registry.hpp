#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "csb/policy.hpp"
#include "csb/rng.hpp"

namespace csb {

using ParamMap = std::map<std::string, std::string>;

/// A policy name from the registry plus its parameter overrides.
struct PolicySpec {
    std::string name;
    ParamMap params;
};

/// ps-sem-ucb-gr, ps-sem-ucb-lo, ps-sem-ucb-gl, glr-cucb, glr-cucb-lo,
/// glr-cucb-gr, cucb-sw, cts, orc-r
const std::vector<std::string>& registered_policies();

bool is_registered(const std::string& name);

/// Parameter keys accepted by a registered policy.
std::vector<std::string> accepted_params(const std::string& name);

/// Builds a policy. Unknown names or parameters, and malformed values, raise
/// std::invalid_argument.
///
/// Shared defaults: delta = 1/T; p = sqrt(N_G K ln T / T) when the `n_g`
/// parameter is given, else 0.05; practical threshold; stride 1.
/// Graph learning: lambda1 = 1e-6, lambda2 = 0, epsilon = 1e-6, L1 penalty.
/// cucb-sw: window = ceil(sqrt(T ln T)).
std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const PolicyContext& context, Rng rng);

}  // namespace csb
