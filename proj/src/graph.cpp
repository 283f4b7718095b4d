#include "intent_graph/graph.hpp"

#include <stdexcept>
#include <string>

namespace intent_graph {

namespace {

void check_open_unit(const Tensor& w) {
    const double v = w.item();
    if (!(v > 0.0 && v < 1.0)) {
        throw std::domain_error("build_adjacency: edge weight " + std::to_string(v) + " outside (0,1)");
    }
}

}  // namespace

Tensor edge_weight(const Tensor& v_a, const Tensor& spatial, const Tensor& v_o, const EdgeWeightParams& p) {
    const Tensor v_i = concat(v_a, spatial);
    if (v_i.cols() != p.proj_center.rows() || v_o.cols() != p.proj_object.rows()) {
        throw ShapeError("edge_weight: inputs (1x" + std::to_string(v_i.cols()) + "), (1x" +
                         std::to_string(v_o.cols()) + ") do not match projections " +
                         p.proj_center.value().shape_string() + ", " + p.proj_object.value().shape_string());
    }
    const Tensor center = relu(matmul(v_i, p.proj_center));
    const Tensor object = relu(matmul(v_o, p.proj_object));
    return sigmoid(dot(center, object));
}

Tensor edge_weight(const Tensor& v_a, const SpatialRelation& s, const Tensor& v_o, const EdgeWeightParams& p) {
    return edge_weight(v_a, as_vector(s), v_o, p);
}

Tensor location_centric_edge(const Tensor& v_ego, const Tensor& v_obj, const EdgeWeightParams& p) {
    if (v_ego.cols() != p.proj_center.rows() || v_obj.cols() != p.proj_object.rows()) {
        throw ShapeError("location_centric_edge: inputs do not match projections " +
                         p.proj_center.value().shape_string() + ", " + p.proj_object.value().shape_string());
    }
    return sigmoid(dot(matmul(v_ego, p.proj_center), matmul(v_obj, p.proj_object)));
}

std::vector<std::pair<std::size_t, std::size_t>> object_pairs(std::size_t n_objects) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 1; i <= n_objects; ++i) {
        for (std::size_t j = i + 1; j <= n_objects; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
}

Tensor build_adjacency(std::span<const Tensor> center_weights, AdjacencyMode mode,
                       std::span<const Tensor> pair_weights) {
    const std::size_t n = center_weights.size();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<Tensor> values;
    for (std::size_t j = 0; j < n; ++j) {
        check_open_unit(center_weights[j]);
        edges.emplace_back(0, j + 1);
        values.push_back(center_weights[j]);
    }
    if (mode == AdjacencyMode::fully_connected) {
        const auto pairs = object_pairs(n);
        if (pair_weights.size() != pairs.size()) {
            throw ShapeError("build_adjacency: expected " + std::to_string(pairs.size()) + " pair weights, got " +
                             std::to_string(pair_weights.size()));
        }
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            check_open_unit(pair_weights[k]);
            edges.push_back(pairs[k]);
            values.push_back(pair_weights[k]);
        }
    } else if (!pair_weights.empty()) {
        throw std::invalid_argument("build_adjacency: pair weights are only used in fully connected mode");
    }
    if (values.empty()) return Tensor(Matrix::identity(1));
    return symmetric_from_edges(stack_rows(values), n + 1, edges);
}

Tensor graph_conv(const Tensor& adjacency, const Tensor& features, const GraphConvParams& p) {
    if (adjacency.rows() != adjacency.cols() || adjacency.cols() != features.rows()) {
        throw ShapeError("graph_conv: adjacency " + adjacency.value().shape_string() + " does not match features " +
                         features.value().shape_string());
    }
    if (p.num_layers > 0 && p.weights.size() != (p.shared ? 1 : p.num_layers)) {
        throw ShapeError("graph_conv: " + std::to_string(p.weights.size()) + " weight matrices for " +
                         std::to_string(p.num_layers) + (p.shared ? " shared" : " unshared") + " layers");
    }
    Tensor z = features;
    for (std::size_t l = 0; l < p.num_layers; ++l) {
        const Tensor& w = p.layer(l);
        if (w.rows() != z.cols()) throw ShapeError("graph_conv: layer weight " + w.value().shape_string());
        z = matmul(matmul(adjacency, z), w);
        if (l + 1 < p.num_layers) z = relu(z);
    }
    return z;
}

Tensor context_vector(const Tensor& z) {
    if (z.rows() == 0) throw ShapeError("context_vector: empty node matrix");
    if (z.rows() == 1) return Tensor::zeros(1, z.cols());
    return mean_rows(slice_rows(z, 1, z.rows()));
}

}  // namespace intent_graph
