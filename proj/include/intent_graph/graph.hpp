#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "intent_graph/scene.hpp"
#include "intent_graph/tensor.hpp"

namespace intent_graph {

/// Bias-free projections into a shared edge space of width D_e.
/// proj_center maps the pedestrian+spatial vector ((D+8) x D_e; D x D_e in
/// the location-centric variant), proj_object maps object features.
struct EdgeWeightParams {
    Tensor proj_center;
    Tensor proj_object;
};

/// w = sigmoid(ReLU([v_a, s] * proj_center) . ReLU(v_o * proj_object)), as a
/// 1x1 tensor strictly inside (0,1).
Tensor edge_weight(const Tensor& v_a, const Tensor& spatial, const Tensor& v_o, const EdgeWeightParams& p);
Tensor edge_weight(const Tensor& v_a, const SpatialRelation& s, const Tensor& v_o, const EdgeWeightParams& p);

/// Ego-centred edge: sigmoid of the inner product of the two embeddings.
/// There is no spatial term and no rectification.
Tensor location_centric_edge(const Tensor& v_ego, const Tensor& v_obj, const EdgeWeightParams& p);

enum class AdjacencyMode { star, fully_connected };

/// Object pairs (i, j), 1 <= i < j <= n_objects, in row-major order. This is
/// the order build_adjacency expects for pair weights.
std::vector<std::pair<std::size_t, std::size_t>> object_pairs(std::size_t n_objects);

/// (N+1)x(N+1) adjacency with node 0 the centre. Star mode links node 0 to
/// object j with center_weights[j-1]; fully connected mode additionally links
/// every object pair with pair_weights (object_pairs order). Throws
/// std::domain_error for weights outside (0,1).
Tensor build_adjacency(std::span<const Tensor> center_weights, AdjacencyMode mode = AdjacencyMode::star,
                       std::span<const Tensor> pair_weights = {});

/// Graph convolution weights. With shared = true a single matrix is reused by
/// every layer.
struct GraphConvParams {
    std::vector<Tensor> weights;
    bool shared = true;
    std::size_t num_layers = 2;

    const Tensor& layer(std::size_t l) const { return shared ? weights.at(0) : weights.at(l); }
};

/// Z_0 = X; Z_{l+1} = A Z_l W_l with ReLU between layers and none after the
/// last. num_layers = 0 returns X.
Tensor graph_conv(const Tensor& adjacency, const Tensor& features, const GraphConvParams& p);

/// Mean of the object rows 1..N of Z; zeros when N = 0.
Tensor context_vector(const Tensor& z);

}  // namespace intent_graph
