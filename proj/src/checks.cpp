#include "intent_graph/checks.hpp"

#include <string>

#include "intent_graph/training.hpp"

namespace intent_graph {

ModelConfig tiny_config() {
    ModelConfig c;
    c.feature_dim = 4;
    c.edge_dim = 4;
    c.hidden_dim = 4;
    c.observed_frames = 2;
    c.predicted_frames = 2;
    c.normalize_spatial = true;
    return c;
}

Scenario random_scenario(const ModelConfig& cfg, std::size_t objects, Rng& rng) {
    auto random_box = [&] {
        const double x = rng.uniform(0.0, 0.8 * cfg.frame_width);
        const double y = rng.uniform(0.0, 0.8 * cfg.frame_height);
        return BoundingBox{x, y, x + rng.uniform(10.0, 0.2 * cfg.frame_width),
                           y + rng.uniform(10.0, 0.2 * cfg.frame_height)};
    };
    auto random_feature = [&] {
        std::vector<double> f(cfg.feature_dim);
        for (double& v : f) v = rng.uniform(-1.0, 1.0);
        return f;
    };
    Scenario s;
    s.id = "random-" + std::to_string(rng.next() % 1000000);
    const auto offset = static_cast<std::size_t>(rng.integer(0, kCategoryCount - 1));
    for (std::size_t t = 0; t < cfg.observed_frames + cfg.predicted_frames; ++t) {
        FrameObservation f;
        f.timestamp_index = static_cast<int>(t);
        f.pedestrian_box = random_box();
        f.pedestrian_feature = random_feature();
        for (std::size_t i = 0; i < objects; ++i) {
            ObjectObservation o;
            o.category = static_cast<ObjectCategory>((offset + i) % kCategoryCount);
            o.box = random_box();
            o.feature = random_feature();
            f.objects.push_back(std::move(o));
        }
        f.crossing_label = rng.bernoulli(0.5) ? 1 : 0;
        s.frames.push_back(std::move(f));
    }
    return s;
}

GradCheckReport gradcheck_model(const ModelConfig& cfg, const Scenario& scenario, double h, double tol) {
    ParameterStore params = init_parameters(cfg);
    const std::vector<int> labels = target_labels(scenario, cfg);

    Tape tape;
    ParameterBinding binding(params, &tape);
    const Tensor loss = sequence_loss(forward_logits(scenario, cfg, binding), labels);
    tape.backward(loss);
    params.zero_grad();
    binding.accumulate_grads(params);

    auto f = [&](const ParameterStore& p) {
        ParameterBinding plain(p);
        return sequence_loss(forward_logits(scenario, cfg, plain), labels).item();
    };
    return finite_diff_check(f, params, h, tol);
}

}  // namespace intent_graph
