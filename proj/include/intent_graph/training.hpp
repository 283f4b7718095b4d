#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "intent_graph/model.hpp"
#include "intent_graph/parameters.hpp"

namespace intent_graph {

/// Non-finite loss or gradient during training.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs = 100;
    std::size_t batch_size = 8;
    double grad_clip_norm = 5.0;
    /// Decoupled weight decay: each step also subtracts
    /// learning_rate * weight_decay * theta. Zero disables it.
    double weight_decay = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Strict: unknown keys raise ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EvalReport {
    /// Accuracy over every predicted frame 1..K of every scenario.
    double avg_accuracy = 0.0;
    /// Accuracy on the K-th predicted frame only.
    double accuracy_at_k = 0.0;
    /// Mean predicted probability at each future step.
    std::vector<double> mean_confidence;
    double loss = 0.0;
    std::size_t scenarios = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    EvalReport report;
};

/// One metrics line: {"epoch","loss","avg_acc","acc_at_K","confidences"}.
nlohmann::json epoch_record_to_json(const EpochRecord& r);
nlohmann::json to_json(const EvalReport& r);

/// Mean per-frame binary cross-entropy over the K logits.
Tensor sequence_loss(std::span<const Tensor> logits, std::span<const int> labels);

/// Adaptive-moment optimizer with bias correction. State is kept per
/// parameter in store order.
class Adam {
public:
    Adam(const ParameterStore& params, const TrainConfig& cfg);
    void step(ParameterStore& params);
    std::size_t steps() const { return t_; }

private:
    TrainConfig cfg_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    std::size_t t_ = 0;
};

/// Scales gradients so their global L2 norm is at most max_norm. Returns the
/// norm before clipping.
double clip_gradients(ParameterStore& params, double max_norm);

/// A labelled training example seen through the model: how to run it and
/// what it should predict. Lets one loop serve both scene kinds.
struct Example {
    std::string id;
    std::function<std::vector<Tensor>(ParameterBinding&)> logits;
    std::vector<int> labels;
};

std::vector<Example> make_examples(const std::vector<Scenario>& data, const ModelConfig& cfg);
std::vector<Example> make_examples(const std::vector<LocationScenario>& data, const FocusRegion& region,
                                   const ModelConfig& cfg);

struct TrainResult {
    ParameterStore params;
    std::vector<EpochRecord> history;
    /// Training-set report of the freshly initialised model.
    EvalReport initial;
};

/// Called after every epoch with the current parameters. Returning false ends
/// training early.
using EpochCallback = std::function<bool(const EpochRecord&, const ParameterStore&)>;

/// Minibatch training. Scenario order is reshuffled every epoch from
/// tcfg.seed; after each epoch the model is evaluated on the training set.
TrainResult train(std::span<const Example> data, const ModelConfig& cfg, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch = {});
TrainResult train(const std::vector<Scenario>& data, const ModelConfig& cfg, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch = {});

/// Per-frame prediction is probability >= threshold. Scenarios are evaluated
/// on up to `threads` workers; reductions run in scenario order, so results
/// do not depend on the thread count.
EvalReport evaluate(std::span<const Example> data, const ModelConfig& cfg, const ParameterStore& params,
                    double threshold = 0.5, std::size_t threads = 1);
EvalReport evaluate(const std::vector<Scenario>& data, const ModelConfig& cfg, const ParameterStore& params,
                    double threshold = 0.5, std::size_t threads = 1);

}  // namespace intent_graph
