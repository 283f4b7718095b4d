#pragma once

#include <cstddef>
#include <cstdint>

#include "intent_graph/gradcheck.hpp"
#include "intent_graph/model.hpp"
#include "intent_graph/random.hpp"
#include "intent_graph/scene.hpp"

namespace intent_graph {

/// D = D_e = hidden = 4, T = K = 2: small enough to finite-difference every
/// parameter in well under a second.
ModelConfig tiny_config();

/// A scenario of T+K frames with `objects` objects per frame. Boxes, features
/// and labels are random; categories cycle through the vocabulary starting
/// at a random offset.
Scenario random_scenario(const ModelConfig& cfg, std::size_t objects, Rng& rng);

/// Central-difference check of d(loss)/d(theta) for every parameter of a
/// freshly initialised model on one scenario.
GradCheckReport gradcheck_model(const ModelConfig& cfg, const Scenario& scenario, double h = 1e-5,
                                double tol = 1e-4);

}  // namespace intent_graph
