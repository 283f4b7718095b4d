#include <gtest/gtest.h>

#include <cmath>

#include "intent_graph/checks.hpp"
#include "intent_graph/data_io.hpp"
#include "intent_graph/training.hpp"
#include "test_util.hpp"

using namespace intent_graph;

namespace {

// An example whose logits are fixed constants, for exercising the metrics.
Example fixed_example(std::vector<double> logits, std::vector<int> labels) {
    return {"fixed", [logits](ParameterBinding&) {
                std::vector<Tensor> out;
                for (double z : logits) out.push_back(Tensor::scalar(z));
                return out;
            },
            std::move(labels)};
}

ModelConfig k_frames(std::size_t k) {
    ModelConfig c = tiny_config();
    c.predicted_frames = k;
    return c;
}

TEST(SequenceLoss, ZeroLogitsCostLn2) {
    const std::vector<Tensor> logits(4, Tensor::scalar(0.0));
    const std::vector<int> labels(4, 1);
    EXPECT_NEAR(sequence_loss(logits, labels).item(), std::log(2.0), 1e-15);
}

TEST(SequenceLoss, MeanOfFrameTerms) {
    const std::vector<Tensor> logits{Tensor::scalar(2.0), Tensor::scalar(-1.0)};
    const std::vector<int> labels{1, 1};
    const double expected = 0.5 * (std::log1p(std::exp(-2.0)) + std::log1p(std::exp(1.0)));
    EXPECT_NEAR(sequence_loss(logits, labels).item(), expected, 1e-15);
    EXPECT_THROW(sequence_loss(logits, std::vector<int>{1}), ShapeError);
}

TEST(Evaluate, TwoThirdsAccuracy) {
    // Probabilities [0.9, 0.8, 0.1] predict [1,1,0] against labels [1,0,0].
    const std::vector<Example> data{fixed_example({std::log(9.0), std::log(4.0), -std::log(9.0)}, {1, 0, 0})};
    const ParameterStore none;
    const EvalReport r = evaluate(data, k_frames(3), none);
    EXPECT_NEAR(r.avg_accuracy, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(r.accuracy_at_k, 1.0);
    EXPECT_NEAR(r.mean_confidence[0], 0.9, 1e-15);
    EXPECT_NEAR(r.mean_confidence[2], 0.1, 1e-15);
    EXPECT_EQ(r.scenarios, 1u);
}

TEST(Evaluate, HalfProbabilityPredictsCrossing) {
    const std::vector<Example> data{fixed_example({0.0, 0.0}, {1, 0})};
    const ParameterStore none;
    const EvalReport r = evaluate(data, k_frames(2), none);
    EXPECT_EQ(r.avg_accuracy, 0.5);
    EXPECT_EQ(r.accuracy_at_k, 0.0);
}

TEST(Evaluate, AveragesOverScenarios) {
    const std::vector<Example> data{fixed_example({5, 5}, {1, 1}), fixed_example({5, -5}, {0, 0})};
    const ParameterStore none;
    const EvalReport r = evaluate(data, k_frames(2), none);
    EXPECT_EQ(r.avg_accuracy, 0.75);
    EXPECT_EQ(r.accuracy_at_k, 1.0);
}

TEST(Evaluate, EmptyDatasetThrows) {
    const ParameterStore none;
    EXPECT_THROW(evaluate(std::vector<Scenario>{}, tiny_config(), none), DataError);
}

TEST(Evaluate, PureAndThreadCountInvariant) {
    const ModelConfig cfg = tiny_config();
    const ParameterStore params = init_parameters(cfg);
    Rng rng(3);
    std::vector<Scenario> data;
    for (int i = 0; i < 17; ++i) data.push_back(random_scenario(cfg, 3, rng));
    const auto before = checkpoint_to_json(cfg, params);
    const EvalReport one = evaluate(data, cfg, params, 0.5, 1);
    const EvalReport four = evaluate(data, cfg, params, 0.5, 4);
    EXPECT_EQ(to_json(one), to_json(four));
    EXPECT_EQ(checkpoint_to_json(cfg, params), before);
}

TEST(Adam, ZeroLearningRateLeavesParameters) {
    const ModelConfig cfg = tiny_config();
    Rng rng(1);
    const std::vector<Scenario> data{random_scenario(cfg, 2, rng), random_scenario(cfg, 1, rng)};
    TrainConfig tcfg;
    tcfg.learning_rate = 0.0;
    tcfg.epochs = 3;
    const TrainResult r = train(data, cfg, tcfg);
    EXPECT_EQ(checkpoint_to_json(cfg, r.params), checkpoint_to_json(cfg, init_parameters(cfg)));
}

TEST(Adam, FirstStepMovesByLearningRate) {
    // With bias correction, step one is lr * g/(|g| + eps) ~ lr * sign(g).
    ParameterStore store;
    store.add("w", Matrix::row({1.0, -2.0, 0.5}));
    store.at("w").grad = Matrix::row({0.3, -4.0, 0.0});
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    Adam adam(store, cfg);
    adam.step(store);
    const Matrix& w = store.at("w").value;
    EXPECT_NEAR(w(0, 0), 1.0 - 0.01, 1e-9);
    EXPECT_NEAR(w(0, 1), -2.0 + 0.01, 1e-9);
    EXPECT_EQ(w(0, 2), 0.5);
    EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, WeightDecayShrinksWithoutGradient) {
    ParameterStore store;
    store.add("w", Matrix::row({2.0}));
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.5;
    Adam adam(store, cfg);
    adam.step(store);
    EXPECT_DOUBLE_EQ(store.at("w").value(0, 0), 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(ClipGradients, BoundsGlobalNorm) {
    ParameterStore store;
    store.add("a", Matrix::row({0, 0}));
    store.add("b", Matrix::row({0}));
    store.at("a").grad = Matrix::row({3.0, 4.0});
    store.at("b").grad = Matrix::row({12.0});
    EXPECT_DOUBLE_EQ(clip_gradients(store, 5.0), 13.0);
    EXPECT_LE(store.grad_norm(), 5.0 + 1e-9);
    EXPECT_NEAR(store.at("b").grad(0, 0), 12.0 * 5.0 / 13.0, 1e-12);
    // Already inside the ball: untouched.
    EXPECT_DOUBLE_EQ(clip_gradients(store, 100.0), store.grad_norm());
    EXPECT_NEAR(store.at("a").grad(0, 0), 3.0 * 5.0 / 13.0, 1e-12);
}

TEST(Train, SingleScenarioLossDrops) {
    const ModelConfig cfg = tiny_config();
    Rng rng(10);
    const std::vector<Scenario> data{random_scenario(cfg, 2, rng)};
    TrainConfig tcfg;
    tcfg.epochs = 200;
    tcfg.learning_rate = 1e-2;
    const TrainResult r = train(data, cfg, tcfg);
    ASSERT_EQ(r.history.size(), 200u);
    EXPECT_LT(r.history.back().report.loss, r.initial.loss);
    EXPECT_EQ(r.history.back().report.avg_accuracy, 1.0);
}

TEST(Train, Deterministic) {
    const ModelConfig cfg = tiny_config();
    Rng rng(11);
    std::vector<Scenario> data;
    for (int i = 0; i < 10; ++i) data.push_back(random_scenario(cfg, 2, rng));
    TrainConfig tcfg;
    tcfg.epochs = 5;
    tcfg.batch_size = 3;
    tcfg.seed = 42;
    const TrainResult a = train(data, cfg, tcfg);
    const TrainResult b = train(data, cfg, tcfg);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        EXPECT_EQ(epoch_record_to_json(a.history[i]).dump(), epoch_record_to_json(b.history[i]).dump());
    }
    tcfg.seed = 43;
    const TrainResult c = train(data, cfg, tcfg);
    EXPECT_NE(checkpoint_to_json(cfg, a.params), checkpoint_to_json(cfg, c.params));
}

TEST(Train, CallbackStopsEarly) {
    const ModelConfig cfg = tiny_config();
    Rng rng(12);
    const std::vector<Scenario> data{random_scenario(cfg, 1, rng)};
    TrainConfig tcfg;
    tcfg.epochs = 50;
    const TrainResult r = train(data, cfg, tcfg, [](const EpochRecord& e, const ParameterStore&) {
        return e.epoch < 3;
    });
    EXPECT_EQ(r.history.size(), 3u);
}

TEST(Train, RejectsBadInput) {
    const ModelConfig cfg = tiny_config();
    EXPECT_THROW(train(std::vector<Scenario>{}, cfg, TrainConfig{}), DataError);
    Rng rng(1);
    const std::vector<Scenario> data{random_scenario(cfg, 1, rng)};
    TrainConfig bad;
    bad.batch_size = 0;
    EXPECT_THROW(train(data, cfg, bad), ConfigError);
}

TEST(Train, NonFiniteLossAborts) {
    const ModelConfig cfg = tiny_config();
    const std::vector<Example> data{fixed_example({std::nan(""), 0.0}, {1, 0})};
    EXPECT_THROW(train(data, cfg, TrainConfig{}), NumericError);
}

TEST(TrainConfig, JsonRoundTripAndStrictness) {
    TrainConfig c;
    c.learning_rate = 3e-3;
    c.epochs = 7;
    c.weight_decay = 0.1;
    c.seed = 9;
    EXPECT_EQ(train_config_from_json(to_json(c)), c);
    EXPECT_THROW(train_config_from_json({{"momentum", 0.9}}), ConfigError);
    EXPECT_THROW(train_config_from_json({{"epochs", 0}}), ConfigError);
    EXPECT_THROW(train_config_from_json({{"learning_rate", "fast"}}), ConfigError);
}

TEST(EpochRecord, JsonFields) {
    EpochRecord r{3, {0.75, 0.5, {0.6, 0.4}, 0.3, 8}};
    const auto j = epoch_record_to_json(r);
    EXPECT_EQ(j.at("epoch"), 3);
    EXPECT_EQ(j.at("avg_acc"), 0.75);
    EXPECT_EQ(j.at("acc_at_K"), 0.5);
    EXPECT_EQ(j.at("loss"), 0.3);
    EXPECT_EQ(j.at("confidences").size(), 2u);
}

}  // namespace
