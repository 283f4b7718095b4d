#include "intent_graph/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "intent_graph/graph.hpp"
#include "intent_graph/recurrent.hpp"

namespace intent_graph {

namespace {

using nlohmann::json;

constexpr std::string_view kGraphModeNames[] = {"star", "fully_connected", "concat_baseline", "pedestrian_only"};

// A non-centre node of one frame, before it is placed in the graph.
struct NodeInput {
    Matrix feature;  // 1 x D
    int category = -1;  // -1: pedestrian entity (location-centric only)
    BoundingBox box;
};

struct FrameInput {
    Matrix center_feature;  // 1 x D
    BoundingBox center_box;
    std::vector<NodeInput> nodes;
};

bool node_less(const NodeInput& a, const NodeInput& b) {
    if (a.category != b.category) return a.category < b.category;
    const double ka[] = {a.box.xmin, a.box.ymin, a.box.xmax, a.box.ymax};
    const double kb[] = {b.box.xmin, b.box.ymin, b.box.xmax, b.box.ymax};
    for (int i = 0; i < 4; ++i) {
        if (ka[i] != kb[i]) return ka[i] < kb[i];
    }
    return std::lexicographical_compare(a.feature.data.begin(), a.feature.data.end(), b.feature.data.begin(),
                                        b.feature.data.end());
}

// Objects enter the graph in a canonical order so that outputs do not depend
// on the order of the input list, down to the last bit.
void canonicalize(std::vector<NodeInput>& nodes) {
    std::sort(nodes.begin(), nodes.end(), node_less);
}

Matrix feature_row(const std::vector<double>& values, std::size_t expected, const std::string& what) {
    if (values.size() != expected) {
        throw InputError(what + " has width " + std::to_string(values.size()) + ", expected " +
                         std::to_string(expected));
    }
    return Matrix::row(values);
}

Tensor one_hot(int category) {
    Matrix m(1, kCategoryCount);
    if (category >= 0) m.data[static_cast<std::size_t>(category)] = 1.0;
    return Tensor(std::move(m));
}

void add_gru(ParameterStore& store, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng) {
    store.add_uniform(prefix + ".w_update", input + hidden, hidden, rng);
    store.add_uniform(prefix + ".w_reset", input + hidden, hidden, rng);
    store.add_uniform(prefix + ".w_candidate", input + hidden, hidden, rng);
    store.add_zeros(prefix + ".b_update", 1, hidden);
    store.add_zeros(prefix + ".b_reset", 1, hidden);
    store.add_zeros(prefix + ".b_candidate", 1, hidden);
}

GRUCellParams bind_gru(ParameterBinding& p, const std::string& prefix) {
    return {p[prefix + ".w_update"], p[prefix + ".w_reset"], p[prefix + ".w_candidate"],
            p[prefix + ".b_update"], p[prefix + ".b_reset"], p[prefix + ".b_candidate"]};
}

std::string conv_name(std::size_t l) {
    return "conv.w" + std::to_string(l);
}

class Pipeline {
public:
    Pipeline(const ModelConfig& cfg, ParameterBinding& params) : cfg_(cfg), params_(params) {}

    std::vector<Tensor> run(const std::vector<FrameInput>& frames) {
        const std::size_t hidden = cfg_.hidden_dim;
        const bool temporal = cfg_.temporal.use_temporal;
        const bool ped_gru = temporal && cfg_.temporal.use_ped_gru;
        const bool ctx_gru = temporal && cfg_.temporal.use_ctxt_gru;

        Tensor h_ped = Tensor::zeros(1, hidden);
        Tensor h_ctx = Tensor::zeros(1, hidden);
        Tensor h_agg = Tensor::zeros(1, hidden);
        std::vector<Tensor> frame_vectors;

        for (const FrameInput& f : frames) {
            const Tensor raw_center(f.center_feature);
            Tensor center = raw_center;
            if (ped_gru) {
                h_ped = gru_step(bind_gru(params_, "ped_gru"), raw_center, h_ped);
                center = h_ped;
            }

            Tensor vec;
            switch (cfg_.graph_mode) {
                case GraphMode::pedestrian_only:
                    vec = center;
                    break;
                case GraphMode::concat_baseline:
                    vec = concat(center, pooled_objects(f));
                    break;
                case GraphMode::star:
                case GraphMode::fully_connected: {
                    const Tensor z = graph_conv(adjacency(f, raw_center), node_matrix(f, center), conv_params());
                    Tensor ctx = context_vector(z);
                    if (ctx_gru) {
                        h_ctx = gru_step(bind_gru(params_, "ctx_gru"), ctx, h_ctx);
                        ctx = h_ctx;
                    }
                    vec = concat(slice_rows(z, 0, 1), ctx);
                    break;
                }
            }

            if (temporal) {
                h_agg = gru_step(bind_gru(params_, "agg_gru"), vec, h_agg);
            } else {
                frame_vectors.push_back(std::move(vec));
            }
        }

        Tensor h_init = h_agg;
        if (!temporal) {
            const Tensor summary = mean_of(frame_vectors);
            h_init = tanh(add(matmul(summary, params_["summary.weight"]), params_["summary.bias"]));
        }
        return prediction_rollout(bind_gru(params_, "pred_gru"), h_init, cfg_.predicted_frames,
                                  Readout{params_["readout.weight"], params_["readout.bias"]});
    }

private:
    Tensor edge_input(const NodeInput& n) const {
        const Tensor raw(n.feature);
        return cfg_.include_object_class ? concat(raw, one_hot(n.category)) : raw;
    }

    Tensor node_row(const NodeInput& n) {
        const Tensor raw(n.feature);
        if (!cfg_.include_object_class) return raw;
        return add(raw, matmul(one_hot(n.category), params_["node.class_embedding"]));
    }

    Tensor spatial(const BoundingBox& from, const BoundingBox& to) const {
        SpatialRelation s = spatial_relation(from, to);
        if (cfg_.normalize_spatial) s = s.normalized(cfg_.frame_width, cfg_.frame_height);
        return as_vector(s);
    }

    Tensor pooled_objects(const FrameInput& f) const {
        if (f.nodes.empty()) return Tensor::zeros(1, cfg_.object_input_dim());
        std::vector<Tensor> rows;
        rows.reserve(f.nodes.size());
        for (const auto& n : f.nodes) rows.push_back(edge_input(n));
        return mean_of(rows);
    }

    Tensor adjacency(const FrameInput& f, const Tensor& raw_center) {
        const EdgeWeightParams ep{params_["edge.proj_center"], params_["edge.proj_object"]};
        std::vector<Tensor> center_w;
        center_w.reserve(f.nodes.size());
        for (const auto& n : f.nodes) {
            center_w.push_back(cfg_.location_centric
                                   ? location_centric_edge(raw_center, edge_input(n), ep)
                                   : edge_weight(raw_center, spatial(f.center_box, n.box), edge_input(n), ep));
        }
        std::vector<Tensor> pair_w;
        AdjacencyMode mode = AdjacencyMode::star;
        if (cfg_.graph_mode == GraphMode::fully_connected) {
            mode = AdjacencyMode::fully_connected;
            // Object-object edges reuse the centre machinery with the source
            // object standing in for the centre.
            for (const auto& [i, j] : object_pairs(f.nodes.size())) {
                const NodeInput& src = f.nodes[i - 1];
                const NodeInput& dst = f.nodes[j - 1];
                const Tensor v_src(src.feature);
                pair_w.push_back(cfg_.location_centric
                                     ? location_centric_edge(v_src, edge_input(dst), ep)
                                     : edge_weight(v_src, spatial(src.box, dst.box), edge_input(dst), ep));
            }
        }
        Tensor a = build_adjacency(center_w, mode, pair_w);
        if (cfg_.row_normalize_adjacency) a = row_normalize(a);
        return a;
    }

    Tensor node_matrix(const FrameInput& f, const Tensor& center) {
        std::vector<Tensor> rows;
        rows.reserve(f.nodes.size() + 1);
        rows.push_back(center);
        for (const auto& n : f.nodes) rows.push_back(node_row(n));
        return stack_rows(rows);
    }

    GraphConvParams conv_params() {
        GraphConvParams gp;
        gp.shared = cfg_.shared_weights;
        gp.num_layers = cfg_.num_layers;
        const std::size_t count = cfg_.num_layers == 0 ? 0 : (cfg_.shared_weights ? 1 : cfg_.num_layers);
        for (std::size_t l = 0; l < count; ++l) gp.weights.push_back(params_[conv_name(l)]);
        return gp;
    }

    const ModelConfig& cfg_;
    ParameterBinding& params_;
};

void require_frames(std::size_t available, const ModelConfig& cfg, const std::string& id) {
    const std::size_t need = cfg.observed_frames + cfg.predicted_frames;
    if (available < need) {
        throw InputError("scenario '" + id + "' has " + std::to_string(available) + " frames, needs T+K = " +
                         std::to_string(need));
    }
}

std::vector<FrameInput> prepare(const Scenario& s, const ModelConfig& cfg) {
    if (cfg.location_centric) throw ConfigError("pedestrian-centric scenario given to a location-centric model");
    require_frames(s.frames.size(), cfg, s.id);
    std::vector<FrameInput> frames;
    for (std::size_t t = 0; t < cfg.observed_frames; ++t) {
        const FrameObservation& obs = s.frames[t];
        FrameInput f;
        f.center_feature = feature_row(obs.pedestrian_feature, cfg.feature_dim, "pedestrian feature");
        f.center_box = obs.pedestrian_box;
        for (const auto& o : obs.objects) {
            f.nodes.push_back({feature_row(o.feature, cfg.feature_dim, "object feature"),
                               static_cast<int>(o.category), o.placed_box()});
        }
        canonicalize(f.nodes);
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<FrameInput> prepare(const LocationScenario& s, const ModelConfig& cfg) {
    if (!cfg.location_centric) throw ConfigError("location-centric scenario given to a pedestrian-centric model");
    require_frames(s.frames.size(), cfg, s.id);
    std::vector<FrameInput> frames;
    for (std::size_t t = 0; t < cfg.observed_frames; ++t) {
        const LocationFrame& obs = s.frames[t];
        FrameInput f;
        f.center_feature = feature_row(obs.ego_feature, cfg.feature_dim, "ego feature");
        for (const auto& o : obs.objects) {
            f.nodes.push_back({feature_row(o.feature, cfg.feature_dim, "object feature"),
                               static_cast<int>(o.category), o.placed_box()});
        }
        for (const auto& p : obs.pedestrians) {
            f.nodes.push_back({feature_row(p.feature, cfg.feature_dim, "pedestrian feature"), -1, p.box});
        }
        canonicalize(f.nodes);
        frames.push_back(std::move(f));
    }
    return frames;
}

template <typename T>
T get_as(const json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("model config: key '") + key + "' has the wrong type");
    }
}

}  // namespace

std::string_view to_string(GraphMode m) {
    return kGraphModeNames[static_cast<int>(m)];
}

GraphMode parse_graph_mode(std::string_view s) {
    for (int i = 0; i < 4; ++i) {
        if (kGraphModeNames[i] == s) return static_cast<GraphMode>(i);
    }
    throw ConfigError("unknown graph_mode '" + std::string(s) + "'");
}

std::size_t ModelConfig::object_input_dim() const {
    return feature_dim + (include_object_class ? kCategoryCount : 0);
}

std::size_t ModelConfig::frame_vector_dim() const {
    switch (graph_mode) {
        case GraphMode::pedestrian_only:
            return hidden_dim;
        case GraphMode::concat_baseline:
            return hidden_dim + object_input_dim();
        default:
            return 2 * hidden_dim;
    }
}

void ModelConfig::validate() const {
    if (feature_dim == 0 || edge_dim == 0 || hidden_dim == 0) throw ConfigError("dimensions must be positive");
    if (hidden_dim != feature_dim) {
        throw ConfigError("hidden (" + std::to_string(hidden_dim) + ") must equal D (" + std::to_string(feature_dim) +
                          "): pedestrian and object nodes share the graph width");
    }
    if (num_layers > 3) throw ConfigError("num_layers must be in 0..3");
    if (observed_frames < 1) throw ConfigError("T must be at least 1");
    if (predicted_frames < 1) throw ConfigError("K must be at least 1");
    if (!(frame_width > 0.0) || !(frame_height > 0.0)) throw ConfigError("frame size must be positive");
    if (temporal.use_ctxt_gru && !uses_graph()) {
        throw ConfigError("use_ctxt_gru requires a graph mode (star or fully_connected)");
    }
    if (!temporal.use_temporal && (temporal.use_ctxt_gru || !temporal.use_ped_gru)) {
        // Both switches are meaningless without temporal connections; reject
        // rather than silently ignore them.
        throw ConfigError("use_ped_gru/use_ctxt_gru must keep their defaults when use_temporal is false");
    }
    if (location_centric && include_object_class) {
        throw ConfigError("include_object_class is not supported by the location-centric model");
    }
}

json to_json(const ModelConfig& c) {
    return json{{"D", c.feature_dim},
                {"D_e", c.edge_dim},
                {"hidden", c.hidden_dim},
                {"num_layers", c.num_layers},
                {"shared_weights", c.shared_weights},
                {"graph_mode", std::string(to_string(c.graph_mode))},
                {"temporal",
                 {{"use_temporal", c.temporal.use_temporal},
                  {"use_ped_gru", c.temporal.use_ped_gru},
                  {"use_ctxt_gru", c.temporal.use_ctxt_gru}}},
                {"include_object_class", c.include_object_class},
                {"location_centric", c.location_centric},
                {"normalize_spatial", c.normalize_spatial},
                {"frame_width", c.frame_width},
                {"frame_height", c.frame_height},
                {"row_normalize", c.row_normalize_adjacency},
                {"T", c.observed_frames},
                {"K", c.predicted_frames},
                {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("model config must be a JSON object");
    ModelConfig c;
    for (const auto& [key, v] : j.items()) {
        const char* k = key.c_str();
        if (key == "D") c.feature_dim = get_as<std::size_t>(v, k);
        else if (key == "D_e") c.edge_dim = get_as<std::size_t>(v, k);
        else if (key == "hidden") c.hidden_dim = get_as<std::size_t>(v, k);
        else if (key == "num_layers") c.num_layers = get_as<std::size_t>(v, k);
        else if (key == "shared_weights") c.shared_weights = get_as<bool>(v, k);
        else if (key == "graph_mode") c.graph_mode = parse_graph_mode(get_as<std::string>(v, k));
        else if (key == "temporal") {
            if (!v.is_object()) throw ConfigError("model config: 'temporal' must be an object");
            for (const auto& [tk, tv] : v.items()) {
                if (tk == "use_temporal") c.temporal.use_temporal = get_as<bool>(tv, tk.c_str());
                else if (tk == "use_ped_gru") c.temporal.use_ped_gru = get_as<bool>(tv, tk.c_str());
                else if (tk == "use_ctxt_gru") c.temporal.use_ctxt_gru = get_as<bool>(tv, tk.c_str());
                else throw ConfigError("model config: unknown key 'temporal." + tk + "'");
            }
        }
        else if (key == "include_object_class") c.include_object_class = get_as<bool>(v, k);
        else if (key == "location_centric") c.location_centric = get_as<bool>(v, k);
        else if (key == "normalize_spatial") c.normalize_spatial = get_as<bool>(v, k);
        else if (key == "frame_width") c.frame_width = get_as<double>(v, k);
        else if (key == "frame_height") c.frame_height = get_as<double>(v, k);
        else if (key == "row_normalize") c.row_normalize_adjacency = get_as<bool>(v, k);
        else if (key == "T") c.observed_frames = get_as<std::size_t>(v, k);
        else if (key == "K") c.predicted_frames = get_as<std::size_t>(v, k);
        else if (key == "seed") c.seed = get_as<std::uint64_t>(v, k);
        else throw ConfigError("model config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

PredictionOutput make_output(const std::vector<Tensor>& logits) {
    PredictionOutput out;
    for (const Tensor& l : logits) {
        const double z = l.item();
        out.logits.push_back(z);
        out.probabilities.push_back(sigmoid(z));
    }
    out.confidence = out.probabilities;
    return out;
}

ParameterStore init_parameters(const ModelConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    ParameterStore store;
    const std::size_t d = cfg.feature_dim;
    const std::size_t h = cfg.hidden_dim;
    if (cfg.uses_graph()) {
        const std::size_t center_in = cfg.location_centric ? d : d + 8;
        store.add_uniform("edge.proj_center", center_in, cfg.edge_dim, rng);
        store.add_uniform("edge.proj_object", cfg.object_input_dim(), cfg.edge_dim, rng);
        const std::size_t layers = cfg.num_layers == 0 ? 0 : (cfg.shared_weights ? 1 : cfg.num_layers);
        for (std::size_t l = 0; l < layers; ++l) store.add_uniform(conv_name(l), h, h, rng);
        if (cfg.include_object_class) store.add_uniform("node.class_embedding", kCategoryCount, h, rng);
    }
    const bool temporal = cfg.temporal.use_temporal;
    if (temporal && cfg.temporal.use_ped_gru) add_gru(store, "ped_gru", d, h, rng);
    if (temporal && cfg.temporal.use_ctxt_gru) add_gru(store, "ctx_gru", h, h, rng);
    if (temporal) {
        add_gru(store, "agg_gru", cfg.frame_vector_dim(), h, rng);
    } else {
        store.add_uniform("summary.weight", cfg.frame_vector_dim(), h, rng);
        store.add_zeros("summary.bias", 1, h);
    }
    // The prediction cell only ever sees a zero input, so one input column suffices.
    add_gru(store, "pred_gru", 1, h, rng);
    store.add_uniform("readout.weight", h, 1, rng);
    store.add_zeros("readout.bias", 1, 1);
    return store;
}

std::size_t parameter_count(const ModelConfig& cfg) {
    return init_parameters(cfg).scalar_count();
}

std::vector<int> target_labels(const Scenario& scenario, const ModelConfig& cfg) {
    require_frames(scenario.frames.size(), cfg, scenario.id);
    std::vector<int> labels;
    for (std::size_t k = 0; k < cfg.predicted_frames; ++k) {
        labels.push_back(scenario.frames[cfg.observed_frames + k].crossing_label);
    }
    return labels;
}

std::vector<int> target_labels(const LocationScenario& scenario, const FocusRegion& region, const ModelConfig& cfg) {
    require_frames(scenario.frames.size(), cfg, scenario.id);
    const std::vector<int> all = location_labels(scenario, region);
    const auto first = all.begin() + static_cast<std::ptrdiff_t>(cfg.observed_frames);
    return {first, first + static_cast<std::ptrdiff_t>(cfg.predicted_frames)};
}

std::vector<Tensor> forward_logits(const Scenario& scenario, const ModelConfig& cfg, ParameterBinding& params) {
    return Pipeline(cfg, params).run(prepare(scenario, cfg));
}

std::vector<Tensor> forward_logits(const LocationScenario& scenario, const ModelConfig& cfg,
                                   ParameterBinding& params) {
    return Pipeline(cfg, params).run(prepare(scenario, cfg));
}

PredictionOutput forward(const Scenario& scenario, const ModelConfig& cfg, const ParameterStore& params) {
    ParameterBinding binding(params);
    return make_output(forward_logits(scenario, cfg, binding));
}

PredictionOutput forward_location_centric(const LocationScenario& scenario, const FocusRegion& /*region*/,
                                          const ModelConfig& cfg, const ParameterStore& params) {
    ParameterBinding binding(params);
    return make_output(forward_logits(scenario, cfg, binding));
}

// ---------------------------------------------------------------------------
// Checkpoints

json checkpoint_to_json(const ModelConfig& cfg, const ParameterStore& params) {
    json entries = json::array();
    for (const Parameter& p : params) {
        entries.push_back({{"name", p.name}, {"shape", {p.value.rows, p.value.cols}}, {"values", p.value.data}});
    }
    return json{{"format", "intent-graph-checkpoint"},
                {"version", kCheckpointVersion},
                {"config", to_json(cfg)},
                {"parameters", std::move(entries)}};
}

Checkpoint checkpoint_from_json(const json& j) {
    try {
        if (j.at("format") != "intent-graph-checkpoint") throw ConfigError("not an intent-graph checkpoint");
        if (j.at("version") != kCheckpointVersion) {
            throw ConfigError("unsupported checkpoint version " + j.at("version").dump());
        }
        Checkpoint ck{model_config_from_json(j.at("config")), {}};
        const ParameterStore expected = init_parameters(ck.config);
        const json& entries = j.at("parameters");
        if (!entries.is_array() || entries.size() != expected.size()) {
            throw ConfigError("checkpoint has " + std::to_string(entries.size()) + " parameters, config expects " +
                              std::to_string(expected.size()));
        }
        auto it = expected.begin();
        for (const json& e : entries) {
            const auto name = e.at("name").get<std::string>();
            const auto shape = e.at("shape").get<std::vector<std::size_t>>();
            if (name != it->name || shape.size() != 2 || shape[0] != it->value.rows || shape[1] != it->value.cols) {
                throw ConfigError("checkpoint parameter '" + name + "' does not match expected '" + it->name + "' " +
                                  it->value.shape_string());
            }
            ck.params.add(name, Matrix(shape[0], shape[1], e.at("values").get<std::vector<double>>()));
            ++it;
        }
        return ck;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ShapeError& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ParameterStore& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out << checkpoint_to_json(cfg, params).dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace intent_graph
