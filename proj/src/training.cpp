#include "intent_graph/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "intent_graph/data_io.hpp"
#include "intent_graph/random.hpp"

namespace intent_graph {

namespace {

using nlohmann::json;

struct ScenarioResult {
    std::vector<double> probabilities;
    double loss = 0.0;
};

ScenarioResult run_one(const Example& ex, const ParameterStore& params) {
    ParameterBinding binding(params);
    const std::vector<Tensor> logits = ex.logits(binding);
    ScenarioResult r;
    r.loss = sequence_loss(logits, ex.labels).item();
    for (const Tensor& l : logits) r.probabilities.push_back(sigmoid(l.item()));
    return r;
}

void require_nonempty(std::span<const Example> data) {
    if (data.empty()) throw DataError(DataErrorKind::empty_dataset, 0, "dataset is empty");
}

template <typename T>
void read_key(const json& v, const std::string& key, T& dst) {
    try {
        dst = v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("train config: key '" + key + "' has the wrong type");
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
}

json to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},       {"beta2", c.beta2},
                {"epsilon", c.epsilon},             {"epochs", c.epochs},     {"batch_size", c.batch_size},
                {"grad_clip_norm", c.grad_clip_norm}, {"weight_decay", c.weight_decay}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("train config must be a JSON object");
    TrainConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "learning_rate") read_key(v, key, c.learning_rate);
        else if (key == "beta1") read_key(v, key, c.beta1);
        else if (key == "beta2") read_key(v, key, c.beta2);
        else if (key == "epsilon") read_key(v, key, c.epsilon);
        else if (key == "epochs") read_key(v, key, c.epochs);
        else if (key == "batch_size") read_key(v, key, c.batch_size);
        else if (key == "grad_clip_norm") read_key(v, key, c.grad_clip_norm);
        else if (key == "weight_decay") read_key(v, key, c.weight_decay);
        else if (key == "seed") read_key(v, key, c.seed);
        else throw ConfigError("train config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

json to_json(const EvalReport& r) {
    return json{{"avg_acc", r.avg_accuracy},
                {"acc_at_K", r.accuracy_at_k},
                {"confidences", r.mean_confidence},
                {"loss", r.loss},
                {"scenarios", r.scenarios}};
}

json epoch_record_to_json(const EpochRecord& r) {
    return json{{"epoch", r.epoch},
                {"loss", r.report.loss},
                {"avg_acc", r.report.avg_accuracy},
                {"acc_at_K", r.report.accuracy_at_k},
                {"confidences", r.report.mean_confidence}};
}

Tensor sequence_loss(std::span<const Tensor> logits, std::span<const int> labels) {
    if (logits.empty() || logits.size() != labels.size()) {
        throw ShapeError("sequence_loss: " + std::to_string(logits.size()) + " logits for " +
                         std::to_string(labels.size()) + " labels");
    }
    std::vector<Tensor> terms;
    terms.reserve(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) terms.push_back(bce_loss(logits[k], labels[k]));
    return mean_of(terms);
}

Adam::Adam(const ParameterStore& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (const Parameter& p : params) {
        m_.emplace_back(p.value.rows, p.value.cols);
        v_.emplace_back(p.value.rows, p.value.cols);
    }
}

void Adam::step(ParameterStore& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t k = 0;
    for (Parameter& p : params) {
        Matrix& m = m_.at(k);
        Matrix& v = v_.at(k);
        ++k;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.data[i];
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g;
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            p.value.data[i] -= cfg_.learning_rate *
                               (m_hat / (std::sqrt(v_hat) + cfg_.epsilon) + cfg_.weight_decay * p.value.data[i]);
        }
    }
}

double clip_gradients(ParameterStore& params, double max_norm) {
    const double norm = params.grad_norm();
    if (norm > max_norm) {
        const double s = max_norm / norm;
        for (Parameter& p : params) {
            for (double& g : p.grad.data) g *= s;
        }
    }
    return norm;
}

std::vector<Example> make_examples(const std::vector<Scenario>& data, const ModelConfig& cfg) {
    std::vector<Example> out;
    out.reserve(data.size());
    for (const Scenario& s : data) {
        out.push_back({s.id, [&s, &cfg](ParameterBinding& b) { return forward_logits(s, cfg, b); },
                       target_labels(s, cfg)});
    }
    return out;
}

std::vector<Example> make_examples(const std::vector<LocationScenario>& data, const FocusRegion& region,
                                   const ModelConfig& cfg) {
    std::vector<Example> out;
    out.reserve(data.size());
    for (const LocationScenario& s : data) {
        out.push_back({s.id, [&s, &cfg](ParameterBinding& b) { return forward_logits(s, cfg, b); },
                       target_labels(s, region, cfg)});
    }
    return out;
}

EvalReport evaluate(std::span<const Example> data, const ModelConfig& cfg, const ParameterStore& params,
                    double threshold, std::size_t threads) {
    require_nonempty(data);
    std::vector<ScenarioResult> results(data.size());
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, data.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < data.size(); ++i) results[i] = run_one(data[i], params);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < data.size(); i += workers) results[i] = run_one(data[i], params);
            });
        }
        for (auto& t : pool) t.join();
    }

    const std::size_t k = cfg.predicted_frames;
    EvalReport report;
    report.scenarios = data.size();
    report.mean_confidence.assign(k, 0.0);
    std::size_t correct = 0;
    std::size_t correct_last = 0;
    double loss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ScenarioResult& r = results[i];
        loss += r.loss;
        for (std::size_t t = 0; t < k; ++t) {
            const int predicted = r.probabilities[t] >= threshold ? 1 : 0;
            const bool hit = predicted == data[i].labels[t];
            correct += hit ? 1 : 0;
            if (t + 1 == k) correct_last += hit ? 1 : 0;
            report.mean_confidence[t] += r.probabilities[t];
        }
    }
    const double n = static_cast<double>(data.size());
    report.avg_accuracy = static_cast<double>(correct) / (n * static_cast<double>(k));
    report.accuracy_at_k = static_cast<double>(correct_last) / n;
    for (double& c : report.mean_confidence) c /= n;
    report.loss = loss / n;
    return report;
}

EvalReport evaluate(const std::vector<Scenario>& data, const ModelConfig& cfg, const ParameterStore& params,
                    double threshold, std::size_t threads) {
    const auto examples = make_examples(data, cfg);
    return evaluate(examples, cfg, params, threshold, threads);
}

TrainResult train(std::span<const Example> data, const ModelConfig& cfg, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch) {
    require_nonempty(data);
    cfg.validate();
    tcfg.validate();

    TrainResult result{init_parameters(cfg), {}, {}};
    ParameterStore& params = result.params;
    result.initial = evaluate(data, cfg, params);
    Adam adam(params, tcfg);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Tape tape;
    for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        Rng rng(derive_seed(tcfg.seed, epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i - 1)))]);
        }
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
            const double weight = 1.0 / static_cast<double>(end - start);
            params.zero_grad();
            for (std::size_t b = start; b < end; ++b) {
                const Example& ex = data[order[b]];
                tape.reset();
                ParameterBinding binding(params, &tape);
                const Tensor loss = sequence_loss(ex.logits(binding), ex.labels);
                if (!std::isfinite(loss.item())) {
                    throw NumericError("non-finite loss " + std::to_string(loss.item()) + " at epoch " +
                                       std::to_string(epoch) + " on scenario '" + ex.id + "'");
                }
                tape.backward(loss);
                binding.accumulate_grads(params, weight);
            }
            const double norm = clip_gradients(params, tcfg.grad_clip_norm);
            if (!std::isfinite(norm)) {
                throw NumericError("non-finite gradient norm at epoch " + std::to_string(epoch));
            }
            adam.step(params);
        }
        EpochRecord record{epoch, evaluate(data, cfg, params)};
        if (!std::isfinite(record.report.loss)) {
            throw NumericError("non-finite training loss after epoch " + std::to_string(epoch));
        }
        result.history.push_back(std::move(record));
        if (on_epoch && !on_epoch(result.history.back(), params)) break;
    }
    return result;
}

TrainResult train(const std::vector<Scenario>& data, const ModelConfig& cfg, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch) {
    const auto examples = make_examples(data, cfg);
    return train(examples, cfg, tcfg, on_epoch);
}

}  // namespace intent_graph
