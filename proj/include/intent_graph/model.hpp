#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "intent_graph/parameters.hpp"
#include "intent_graph/scene.hpp"

namespace intent_graph {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scenario does not fit the model (too few frames, wrong feature width).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class GraphMode { star, fully_connected, concat_baseline, pedestrian_only };

std::string_view to_string(GraphMode m);
GraphMode parse_graph_mode(std::string_view s);

struct TemporalConfig {
    /// false: observed frames are mean-pooled instead of run through GRUs.
    bool use_temporal = true;
    bool use_ped_gru = true;
    bool use_ctxt_gru = false;

    bool operator==(const TemporalConfig&) const = default;
};

struct ModelConfig {
    std::size_t feature_dim = 32;  // D, width of pedestrian/object encoder features
    std::size_t edge_dim = 32;     // D_e
    std::size_t hidden_dim = 32;   // GRU hidden width = graph node width; must equal feature_dim
    std::size_t num_layers = 2;
    bool shared_weights = true;
    GraphMode graph_mode = GraphMode::star;
    TemporalConfig temporal;
    bool include_object_class = false;
    /// Ego-centred variant: centre node is the ego view and edges use the
    /// common-embedding inner product.
    bool location_centric = false;
    bool normalize_spatial = false;
    double frame_width = 1920.0;
    double frame_height = 1080.0;
    bool row_normalize_adjacency = false;
    std::size_t observed_frames = 4;   // T
    std::size_t predicted_frames = 4;  // K
    std::uint64_t seed = 0;

    /// Throws ConfigError on inconsistent settings.
    void validate() const;

    bool uses_graph() const {
        return graph_mode == GraphMode::star || graph_mode == GraphMode::fully_connected;
    }
    /// Width of an object's raw descriptor as consumed by edges and concat
    /// pooling: D, plus the category one-hot when enabled.
    std::size_t object_input_dim() const;
    /// Width of the per-frame vector fed to the aggregation stage.
    std::size_t frame_vector_dim() const;

    bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
/// Strict: unknown keys and wrongly typed values raise ConfigError. Missing
/// keys keep their defaults.
ModelConfig model_config_from_json(const nlohmann::json& j);

struct PredictionOutput {
    std::vector<double> logits;
    std::vector<double> probabilities;
    /// Uncalibrated confidence, the sigmoid of each logit.
    std::vector<double> confidence;
};

PredictionOutput make_output(const std::vector<Tensor>& logits);

/// Fresh parameters for cfg, drawn from cfg.seed. Weights are
/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ParameterStore init_parameters(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

/// Crossing labels of the K frames that follow the T observed ones.
std::vector<int> target_labels(const Scenario& scenario, const ModelConfig& cfg);
std::vector<int> target_labels(const LocationScenario& scenario, const FocusRegion& region, const ModelConfig& cfg);

/// Full pedestrian-centric pass over the first T frames; returns K logits.
/// Records onto the binding's tape when it has one.
std::vector<Tensor> forward_logits(const Scenario& scenario, const ModelConfig& cfg, ParameterBinding& params);
std::vector<Tensor> forward_logits(const LocationScenario& scenario, const ModelConfig& cfg,
                                   ParameterBinding& params);

PredictionOutput forward(const Scenario& scenario, const ModelConfig& cfg, const ParameterStore& params);
/// The region does not enter the network; it only defines the targets
/// (see target_labels).
PredictionOutput forward_location_centric(const LocationScenario& scenario, const FocusRegion& region,
                                          const ModelConfig& cfg, const ParameterStore& params);

/// Versioned JSON checkpoint: config plus every parameter's shape and
/// row-major values.
struct Checkpoint {
    ModelConfig config;
    ParameterStore params;
};

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const ModelConfig& cfg, const ParameterStore& params);
/// Throws ConfigError when names or shapes disagree with the stored config.
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ParameterStore& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace intent_graph
