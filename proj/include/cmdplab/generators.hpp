#pragma once

#include <cstdint>

#include "cmdplab/cmdp.hpp"

namespace cmdplab {

/// Random dense tabular CMDP: Dirichlet(1) transition rows, uniform
/// [0, 1) rewards and costs, uniform initial distribution.  The
/// threshold is set to b = max_pi V_c(rho) - slater_min / (1 - gamma),
/// so the best-case constraint slack equals slater_min horizons; throws
/// ParameterError when even b = 0 cannot reach that margin.  The result
/// is validated before it is returned and is a bit-reproducible
/// function of the arguments.
TabularCmdp random_tabular_cmdp(std::uint64_t seed, int num_states,
                                int num_actions, double gamma,
                                double slater_min);

/// Random feature map with rows on the d-simplex (Dirichlet(1)), except
/// that the first d state-action pairs get the d coordinate vectors,
/// which forces full column rank.
FeatureMap random_feature_map(std::uint64_t seed, int num_states,
                              int num_actions, int dim);

/// Random linearly realizable CMDP: d Dirichlet(1) anchor next-state
/// distributions, simplex features as in random_feature_map, and
/// uniform random psi_r, psi_c in [0, 1)^d.  P = phi * anchors,
/// r = phi * psi_r and c = phi * psi_c hold bitwise by construction.
/// The threshold follows the same slater_min rule as the tabular
/// generator.
LinearCmdp anchor_linear_cmdp(std::uint64_t seed, int num_states,
                              int num_actions, int dim, double gamma,
                              double slater_min);

} // namespace cmdplab
