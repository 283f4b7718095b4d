#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "intent_graph/checks.hpp"
#include "intent_graph/model.hpp"
#include "test_util.hpp"

using namespace intent_graph;

namespace {

// Plain-double reference implementation, independent of the tensor code.
using Vec = std::vector<double>;

Vec vecmat(const Vec& x, const Matrix& w) {
    EXPECT_EQ(x.size(), w.rows);
    Vec y(w.cols, 0.0);
    for (std::size_t j = 0; j < w.cols; ++j) {
        for (std::size_t i = 0; i < w.rows; ++i) y[j] += x[i] * w(i, j);
    }
    return y;
}

Vec join(const Vec& a, const Vec& b) {
    Vec r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec gru(const ParameterStore& p, const std::string& prefix, const Vec& x, const Vec& h) {
    auto w = [&](const char* n) -> const Matrix& { return p.at(prefix + "." + n).value; };
    const Vec xh = join(x, h);
    Vec z = vecmat(xh, w("w_update")), r = vecmat(xh, w("w_reset"));
    for (std::size_t i = 0; i < h.size(); ++i) {
        z[i] = logistic(z[i] + w("b_update").data[i]);
        r[i] = logistic(r[i] + w("b_reset").data[i]);
    }
    Vec rh(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) rh[i] = r[i] * h[i];
    Vec c = vecmat(join(x, rh), w("w_candidate"));
    Vec out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        c[i] = std::tanh(c[i] + w("b_candidate").data[i]);
        out[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
    }
    return out;
}

Vec relu(Vec v) {
    for (double& x : v) x = std::max(x, 0.0);
    return v;
}

double inner(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Two-node graph (centre plus one object) through the shared two-layer
// convolution; returns [pedestrian row, context].
Vec two_node_graph(const ParameterStore& p, double w, const Vec& center, const Vec& obj) {
    const Matrix& c = p.at("conv.w0").value;
    auto mix = [&](const Vec& a, const Vec& b) {
        Vec r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + w * b[i];
        return r;
    };
    const Vec z0 = relu(vecmat(mix(center, obj), c));
    const Vec z1 = relu(vecmat(mix(obj, center), c));
    return join(vecmat(mix(z0, z1), c), vecmat(mix(z1, z0), c));
}

std::vector<double> rollout(const ParameterStore& p, Vec h, std::size_t k) {
    std::vector<double> logits;
    for (std::size_t i = 0; i < k; ++i) {
        h = gru(p, "pred_gru", {0.0}, h);
        logits.push_back(inner(h, p.at("readout.weight").value.data) + p.at("readout.bias").value.data[0]);
    }
    return logits;
}

std::vector<double> reference_logits(const Scenario& s, const ModelConfig& cfg, const ParameterStore& p) {
    Vec h_ped(cfg.hidden_dim, 0.0), h_agg(cfg.hidden_dim, 0.0);
    for (std::size_t t = 0; t < cfg.observed_frames; ++t) {
        const FrameObservation& f = s.frames[t];
        const ObjectObservation& o = f.objects.at(0);
        h_ped = gru(p, "ped_gru", f.pedestrian_feature, h_ped);
        const BoundingBox& a = f.pedestrian_box;
        const BoundingBox b = o.placed_box();
        const double W = cfg.frame_width, H = cfg.frame_height;
        const Vec spatial{(b.xmin - a.xmin) / W,
                          (b.ymin - a.ymin) / H,
                          (b.xmax - a.xmax) / W,
                          (b.ymax - a.ymax) / H,
                          ((b.xmin + b.xmax) - (a.xmin + a.xmax)) / 2.0 / W,
                          ((b.ymin + b.ymax) - (a.ymin + a.ymax)) / 2.0 / H,
                          (std::max(a.xmax, b.xmax) - std::min(a.xmin, b.xmin)) / W,
                          (std::max(a.ymax, b.ymax) - std::min(a.ymin, b.ymin)) / H};
        const Vec ec = relu(vecmat(join(f.pedestrian_feature, spatial), p.at("edge.proj_center").value));
        const Vec eo = relu(vecmat(o.feature, p.at("edge.proj_object").value));
        const double w = logistic(inner(ec, eo));
        h_agg = gru(p, "agg_gru", two_node_graph(p, w, h_ped, o.feature), h_agg);
    }
    return rollout(p, h_agg, cfg.predicted_frames);
}

void expect_all_near(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

TEST(Model, MatchesReferenceLoops) {
    const ModelConfig cfg = tiny_config();
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        ModelConfig c = cfg;
        c.seed = static_cast<std::uint64_t>(trial);
        const ParameterStore params = init_parameters(c);
        const Scenario s = random_scenario(c, 1, rng);
        expect_all_near(forward(s, c, params).logits, reference_logits(s, c, params), 1e-12);
    }
}

TEST(Model, LocationCentricMatchesReferenceLoops) {
    ModelConfig cfg = tiny_config();
    cfg.location_centric = true;
    const ParameterStore params = init_parameters(cfg);
    EXPECT_EQ(params.at("edge.proj_center").value.rows, cfg.feature_dim);

    Rng rng(3);
    LocationScenario s;
    s.id = "loc";
    for (std::size_t t = 0; t < 4; ++t) {
        LocationFrame f;
        for (std::size_t i = 0; i < cfg.feature_dim; ++i) f.ego_feature.push_back(rng.uniform(-1, 1));
        ObjectObservation o;
        o.category = ObjectCategory::car;
        o.box = {10, 10, 50, 50};
        for (std::size_t i = 0; i < cfg.feature_dim; ++i) o.feature.push_back(rng.uniform(-1, 1));
        f.objects.push_back(o);
        s.frames.push_back(f);
    }

    Vec h_ped(cfg.hidden_dim, 0.0), h_agg(cfg.hidden_dim, 0.0);
    for (std::size_t t = 0; t < 2; ++t) {
        const LocationFrame& f = s.frames[t];
        h_ped = gru(params, "ped_gru", f.ego_feature, h_ped);
        const double w = logistic(inner(vecmat(f.ego_feature, params.at("edge.proj_center").value),
                                        vecmat(f.objects[0].feature, params.at("edge.proj_object").value)));
        h_agg = gru(params, "agg_gru", two_node_graph(params, w, h_ped, f.objects[0].feature), h_agg);
    }
    const FocusRegion region = FocusRegion::make(700, 300, 600, 100, 640);
    expect_all_near(forward_location_centric(s, region, cfg, params).logits, rollout(params, h_agg, 2), 1e-12);
    EXPECT_THROW(forward(random_scenario(tiny_config(), 1, rng), cfg, params), ConfigError);
}

TEST(Model, RunsWithoutObjects) {
    const ModelConfig cfg = tiny_config();
    const ParameterStore params = init_parameters(cfg);
    Rng rng(1);
    const auto out = forward(random_scenario(cfg, 0, rng), cfg, params);
    ASSERT_EQ(out.probabilities.size(), cfg.predicted_frames);
    for (double p : out.probabilities) {
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
    EXPECT_EQ(out.confidence, out.probabilities);
}

TEST(Model, ObjectOrderDoesNotMatter) {
    Rng rng(77);
    for (GraphMode mode : {GraphMode::star, GraphMode::fully_connected, GraphMode::concat_baseline}) {
        ModelConfig cfg = tiny_config();
        cfg.graph_mode = mode;
        cfg.include_object_class = true;
        const ParameterStore params = init_parameters(cfg);
        for (int trial = 0; trial < 20; ++trial) {
            const Scenario s = random_scenario(cfg, 5, rng);
            Scenario shuffled = s;
            for (auto& f : shuffled.frames) {
                for (std::size_t i = f.objects.size(); i > 1; --i) {
                    std::swap(f.objects[i - 1], f.objects[static_cast<std::size_t>(rng.integer(0, i - 1))]);
                }
            }
            EXPECT_EQ(forward(s, cfg, params).logits, forward(shuffled, cfg, params).logits);
        }
    }
}

TEST(Model, EveryVariantRuns) {
    Rng rng(8);
    std::vector<ModelConfig> variants;
    for (GraphMode mode : {GraphMode::star, GraphMode::fully_connected, GraphMode::concat_baseline,
                           GraphMode::pedestrian_only}) {
        for (bool temporal : {true, false}) {
            ModelConfig c = tiny_config();
            c.graph_mode = mode;
            c.temporal.use_temporal = temporal;
            variants.push_back(c);
        }
    }
    ModelConfig ctx = tiny_config();
    ctx.temporal.use_ctxt_gru = true;
    variants.push_back(ctx);
    ModelConfig unshared = tiny_config();
    unshared.shared_weights = false;
    unshared.num_layers = 3;
    unshared.row_normalize_adjacency = true;
    variants.push_back(unshared);
    ModelConfig nolayers = tiny_config();
    nolayers.num_layers = 0;
    variants.push_back(nolayers);
    ModelConfig noped = tiny_config();
    noped.temporal.use_ped_gru = false;
    variants.push_back(noped);

    for (const ModelConfig& c : variants) {
        const ParameterStore params = init_parameters(c);
        const auto out = forward(random_scenario(c, 3, rng), c, params);
        ASSERT_EQ(out.logits.size(), c.predicted_frames);
        for (double z : out.logits) EXPECT_TRUE(std::isfinite(z)) << to_json(c).dump();
    }
}

TEST(Model, GradientsMatchFiniteDifferences) {
    Rng rng(4);
    ModelConfig cfg = tiny_config();
    EXPECT_TRUE(gradcheck_model(cfg, random_scenario(cfg, 3, rng)).passed);
    cfg.graph_mode = GraphMode::fully_connected;
    cfg.include_object_class = true;
    const auto report = gradcheck_model(cfg, random_scenario(cfg, 3, rng));
    EXPECT_TRUE(report.passed) << report.worst_parameter << " " << report.worst_relative_error;
}

TEST(Model, FuzzedInputsStayFinite) {
    const ModelConfig cfg = tiny_config();
    const ParameterStore params = init_parameters(cfg);
    Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        const auto n = static_cast<std::size_t>(rng.integer(0, 6));
        const auto out = forward(random_scenario(cfg, n, rng), cfg, params);
        for (double p : out.probabilities) {
            ASSERT_TRUE(std::isfinite(p));
            ASSERT_GT(p, 0.0);
            ASSERT_LT(p, 1.0);
        }
    }
}

TEST(ParameterCount, SharedWeightsIndependentOfDepth) {
    ModelConfig a;
    a.num_layers = 2;
    ModelConfig b = a;
    b.num_layers = 3;
    EXPECT_EQ(parameter_count(a), parameter_count(b));
}

TEST(ParameterCount, UnsharedAddsOneMatrixPerLayer) {
    ModelConfig a;
    a.shared_weights = false;
    a.num_layers = 2;
    ModelConfig b = a;
    b.num_layers = 3;
    EXPECT_EQ(parameter_count(b) - parameter_count(a), a.hidden_dim * a.hidden_dim);
}

TEST(ParameterCount, PedestrianOnlyIsSmaller) {
    ModelConfig star;
    ModelConfig ped = star;
    ped.graph_mode = GraphMode::pedestrian_only;
    EXPECT_LT(parameter_count(ped), parameter_count(star));
}

TEST(ParameterCount, DefaultConfigByHand) {
    // D = D_e = hidden = 32, shared 2-layer star graph.
    const std::size_t d = 32;
    const std::size_t edges = (d + 8) * d + d * d;
    const std::size_t conv = d * d;
    auto gru = [&](std::size_t in) { return 3 * (in + d) * d + 3 * d; };
    const std::size_t expected = edges + conv + gru(d) + gru(2 * d) + gru(1) + d + 1;
    EXPECT_EQ(parameter_count(ModelConfig{}), expected);
}

TEST(Model, InitialisationIsSeeded) {
    ModelConfig a = tiny_config();
    ModelConfig b = a;
    b.seed = 1;
    const auto pa = init_parameters(a), pa2 = init_parameters(a), pb = init_parameters(b);
    EXPECT_EQ(pa.at("conv.w0").value, pa2.at("conv.w0").value);
    EXPECT_NE(pa.at("conv.w0").value, pb.at("conv.w0").value);
    EXPECT_EQ(pa.at("readout.bias").value, Matrix(1, 1));
    const double bound = 1.0 / std::sqrt(static_cast<double>(a.hidden_dim));
    for (double v : pa.at("conv.w0").value.data) EXPECT_LE(std::abs(v), bound);
}

TEST(Model, RejectsBadInputs) {
    const ModelConfig cfg = tiny_config();
    const ParameterStore params = init_parameters(cfg);
    Rng rng(5);
    Scenario s = random_scenario(cfg, 2, rng);
    Scenario short_one = s;
    short_one.frames.pop_back();
    EXPECT_THROW(forward(short_one, cfg, params), InputError);
    s.frames[0].objects[1].feature.push_back(0.0);
    EXPECT_THROW(forward(s, cfg, params), InputError);
}

TEST(ModelConfig, Validation) {
    ModelConfig c;
    c.hidden_dim = 16;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.num_layers = 4;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.predicted_frames = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.graph_mode = GraphMode::pedestrian_only;
    c.temporal.use_ctxt_gru = true;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.temporal.use_temporal = false;
    c.temporal.use_ctxt_gru = true;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(ModelConfig{}.validate());
}

TEST(ModelConfig, JsonRoundTripAndStrictness) {
    ModelConfig c = tiny_config();
    c.graph_mode = GraphMode::fully_connected;
    c.temporal.use_ctxt_gru = true;
    c.seed = 12;
    EXPECT_EQ(model_config_from_json(to_json(c)), c);
    EXPECT_EQ(model_config_from_json(nlohmann::json::object()), ModelConfig{});
    EXPECT_THROW(model_config_from_json({{"depth", 2}}), ConfigError);
    EXPECT_THROW(model_config_from_json({{"num_layers", "two"}}), ConfigError);
    EXPECT_THROW(model_config_from_json({{"temporal", {{"gru", true}}}}), ConfigError);
    EXPECT_THROW(model_config_from_json({{"graph_mode", "ring"}}), ConfigError);
    EXPECT_THROW(model_config_from_json(nlohmann::json::array()), ConfigError);
}

TEST(Checkpoint, RoundTrip) {
    ModelConfig cfg = tiny_config();
    cfg.include_object_class = true;
    ParameterStore params = init_parameters(cfg);
    params.at("readout.bias").value(0, 0) = 0.1234567890123456789;

    const auto path = std::filesystem::temp_directory_path() / "intent_graph_test_ckpt.json";
    save_checkpoint(path.string(), cfg, params);
    const Checkpoint ck = load_checkpoint(path.string());
    std::filesystem::remove(path);

    EXPECT_EQ(ck.config, cfg);
    ASSERT_EQ(ck.params.size(), params.size());
    auto it = ck.params.begin();
    for (const Parameter& p : params) {
        EXPECT_EQ(it->name, p.name);
        EXPECT_EQ(it->value, p.value);
        ++it;
    }
    Rng rng(1);
    const Scenario s = random_scenario(cfg, 2, rng);
    EXPECT_EQ(forward(s, cfg, params).logits, forward(s, ck.config, ck.params).logits);
}

TEST(Checkpoint, RejectsMismatches) {
    const ModelConfig cfg = tiny_config();
    nlohmann::json j = checkpoint_to_json(cfg, init_parameters(cfg));
    nlohmann::json wrong_shape = j;
    wrong_shape["parameters"][0]["shape"] = {1, 1};
    EXPECT_THROW(checkpoint_from_json(wrong_shape), ConfigError);
    nlohmann::json missing = j;
    missing["parameters"].erase(missing["parameters"].size() - 1);
    EXPECT_THROW(checkpoint_from_json(missing), ConfigError);
    nlohmann::json version = j;
    version["version"] = 99;
    EXPECT_THROW(checkpoint_from_json(version), ConfigError);
    EXPECT_THROW(checkpoint_from_json({{"format", "other"}}), ConfigError);
    EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), ConfigError);
}

}  // namespace
