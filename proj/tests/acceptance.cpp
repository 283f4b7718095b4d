// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "intent_graph/checks.hpp"
#include "intent_graph/cli.hpp"
#include "intent_graph/data_io.hpp"
#include "intent_graph/graph.hpp"
#include "intent_graph/model.hpp"
#include "intent_graph/synthetic.hpp"
#include "intent_graph/training.hpp"

#ifndef INTENT_GRAPH_LEARNABILITY_CONFIG
#error "INTENT_GRAPH_LEARNABILITY_CONFIG must name the learnability config file"
#endif

using namespace intent_graph;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& what) {
    std::printf("AC%-2d %s  %s\n", id, pass ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt("%.3f", v[i]);
    return s + "]";
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
    args.insert(args.begin(), "intent_graph");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out) *out = o.str();
    return code;
}

// The learnability setup, shared by criteria 5 to 9.
struct Setup {
    SynthConfig synth;
    double train_fraction = 0.5;
    std::uint64_t split_seed = 0;
    ModelConfig model;
    TrainConfig train;

    static Setup load(const std::string& path) {
        const json j = read_json(path);
        Setup s;
        s.synth = synth_config_from_json(j.at("synth"));
        s.train_fraction = j.at("split").at("train_fraction").get<double>();
        s.split_seed = j.at("split").at("seed").get<std::uint64_t>();
        s.model = model_config_from_json(j.at("model"));
        s.train = train_config_from_json(j.at("train"));
        return s;
    }

    std::pair<std::vector<Scenario>, std::vector<Scenario>> data() const {
        return split(generate_synthetic(synth), train_fraction, split_seed);
    }
};

struct Run {
    EvalReport train;
    EvalReport test;
    double seconds = 0.0;
};

Run fit(const std::vector<Scenario>& train_set, const std::vector<Scenario>& test_set, const ModelConfig& cfg,
        const TrainConfig& tcfg) {
    const auto start = Clock::now();
    const TrainResult r = train(train_set, cfg, tcfg);
    Run run;
    run.seconds = seconds_since(start);
    run.train = evaluate(train_set, cfg, r.params);
    run.test = evaluate(test_set, cfg, r.params);
    return run;
}

void ac1_gradient_fidelity() {
    std::string out;
    const int code = cli({"gradcheck"}, &out);
    const json r = json::parse(out);
    const double worst = r.at("worst_relative_error").get<double>();
    const double secs = r.at("seconds").get<double>();
    const ModelConfig tiny = tiny_config();
    const bool shape = tiny.feature_dim == 4 && tiny.edge_dim == 4 && tiny.hidden_dim == 4 &&
                       tiny.observed_frames == 2 && tiny.predicted_frames == 2 && r.at("h").get<double>() == 1e-5;
    report(1, code == 0 && shape && worst <= 1e-4 && secs < 30.0,
           "gradcheck over " + std::to_string(r.at("coordinates").get<std::size_t>()) +
               " coordinates: worst relative error " + fmt("%.2e", worst) + " (<= 1e-4), " + fmt("%.2f", secs) +
               " s (< 30 s)");
}

void ac2_adjacency_structure() {
    Rng rng(derive_seed(0, 2));
    std::size_t bad = 0;
    const std::size_t d = 6;
    for (int g = 0; g < 1000; ++g) {
        const auto n = static_cast<std::size_t>(rng.integer(0, 10));
        auto rand_tensor = [&](std::size_t r, std::size_t c, double scale) {
            Matrix m(r, c);
            for (double& v : m.data) v = rng.uniform(-scale, scale);
            return Tensor(std::move(m));
        };
        const EdgeWeightParams p{rand_tensor(d + 8, d, 1.0), rand_tensor(d, d, 1.0)};
        const Tensor ped = rand_tensor(1, d, 3.0);
        std::vector<Tensor> w;
        for (std::size_t j = 0; j < n; ++j) {
            w.push_back(edge_weight(ped, rand_tensor(1, 8, 3.0), rand_tensor(1, d, 3.0), p));
        }
        const Matrix a = build_adjacency(w).value();
        std::size_t nonzero = 0;
        bool ok = a.rows == n + 1 && a.cols == n + 1;
        for (std::size_t i = 0; ok && i <= n; ++i) {
            ok = a(i, i) == 1.0;
            for (std::size_t j = 0; ok && j <= n; ++j) {
                ok = a(i, j) == a(j, i);
                if (i != j && a(i, j) != 0.0) {
                    ++nonzero;
                    ok = ok && a(i, j) > 0.0 && a(i, j) < 1.0;
                }
            }
        }
        if (!ok || nonzero != 2 * n) ++bad;
    }
    report(2, bad == 0, "1000 random star graphs (N in 0..10): " + std::to_string(bad) + " violations");
}

void ac3_permutation_invariance() {
    const ModelConfig cfg;
    const ParameterStore params = init_parameters(cfg);
    Rng rng(derive_seed(0, 3));
    std::size_t bad = 0;
    for (int i = 0; i < 100; ++i) {
        const Scenario s = random_scenario(cfg, static_cast<std::size_t>(rng.integer(2, 8)), rng);
        Scenario p = s;
        for (auto& f : p.frames) {
            for (std::size_t k = f.objects.size(); k > 1; --k) {
                std::swap(f.objects[k - 1], f.objects[static_cast<std::size_t>(rng.integer(0, k - 1))]);
            }
        }
        if (forward(s, cfg, params).logits != forward(p, cfg, params).logits) ++bad;
    }
    report(3, bad == 0, "100 random scenarios with shuffled objects: " + std::to_string(bad) +
                            " differ in any logit bit");
}

void ac4_hand_instance() {
    const Matrix a = build_adjacency(std::vector<Tensor>{Tensor::scalar(0.5), Tensor::scalar(0.25)}).value();
    const double expected_a[3][3] = {{1, 0.5, 0.25}, {0.5, 1, 0}, {0.25, 0, 1}};
    double err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) err = std::max(err, std::abs(a(i, j) - expected_a[i][j]));
    }
    // x_ped = [1, 2], x_obj = [3, -1], W = [[0.5, -1], [2, 0.25]], w = 0.5:
    // (x_ped + 0.5 x_obj) W = [2.5, 1.5] W = [4.25, -2.125].
    GraphConvParams gp;
    gp.weights = {Tensor(Matrix::from_rows({{0.5, -1}, {2, 0.25}}))};
    gp.num_layers = 1;
    const Tensor x(Matrix::from_rows({{1, 2}, {3, -1}}));
    const Matrix z = graph_conv(build_adjacency(std::vector<Tensor>{Tensor::scalar(0.5)}), x, gp).value();
    err = std::max({err, std::abs(z(0, 0) - 4.25), std::abs(z(0, 1) + 2.125)});
    report(4, err <= 1e-12, "hand adjacency and graph-conv pedestrian row: max deviation " + fmt("%.1e", err) +
                                " (<= 1e-12)");
}

void ac5_overfit(const Setup& setup) {
    SynthConfig sc = setup.synth;
    sc.n_scenarios = 1;
    const auto one = generate_synthetic(sc);
    TrainConfig tcfg = setup.train;
    tcfg.epochs = 200;
    tcfg.batch_size = 1;
    const TrainResult r = train(one, setup.model, tcfg);
    const EvalReport& last = r.history.back().report;
    report(5, last.loss < 0.05 && last.avg_accuracy == 1.0,
           "1 scenario, 200 epochs: train loss " + fmt("%.4f", last.loss) + " (< 0.05), accuracy " +
               fmt("%.3f", last.avg_accuracy) + " (= 1)");
}

void ac6_to_8(const Setup& setup) {
    const auto [train_set, test_set] = setup.data();
    const Run base = fit(train_set, test_set, setup.model, setup.train);
    report(6, base.train.avg_accuracy >= 0.95 && base.test.avg_accuracy >= 0.85 && base.seconds < 600.0,
           std::to_string(train_set.size()) + "/" + std::to_string(test_set.size()) +
               " scenarios, generator seed " + std::to_string(setup.synth.seed) + ": train " +
               fmt("%.4f", base.train.avg_accuracy) + " (>= 0.95), test " + fmt("%.4f", base.test.avg_accuracy) +
               " (>= 0.85), " + fmt("%.1f", base.seconds) + " s (< 600 s)");

    std::vector<double> by_layers(4, 0.0);
    for (std::size_t layers = 0; layers <= 3; ++layers) {
        if (layers == setup.model.num_layers) {
            by_layers[layers] = base.test.avg_accuracy;
            continue;
        }
        ModelConfig cfg = setup.model;
        cfg.num_layers = layers;
        by_layers[layers] = fit(train_set, test_set, cfg, setup.train).test.avg_accuracy;
    }
    report(7, by_layers[2] >= by_layers[0],
           "test accuracy by layer count 0..3 " + list(by_layers) + ": 2 layers >= 0 layers");

    SynthConfig long_synth = setup.synth;
    long_synth.frames_per_scenario = std::max(long_synth.frames_per_scenario, setup.model.observed_frames + 8);
    const auto [long_train, long_test] = split(generate_synthetic(long_synth), setup.train_fraction, setup.split_seed);
    ModelConfig k8 = setup.model;
    k8.predicted_frames = 8;
    const Run horizon = fit(long_train, long_test, k8, setup.train);
    const bool ok4 = base.test.accuracy_at_k <= base.test.avg_accuracy;
    const bool ok8 = horizon.test.accuracy_at_k <= horizon.test.avg_accuracy;
    report(8, ok4 && ok8,
           "K=4: acc@K " + fmt("%.4f", base.test.accuracy_at_k) + " <= avg " + fmt("%.4f", base.test.avg_accuracy) +
               ", confidence " + list(base.test.mean_confidence) + "; K=8: acc@K " +
               fmt("%.4f", horizon.test.accuracy_at_k) + " <= avg " + fmt("%.4f", horizon.test.avg_accuracy) +
               ", confidence " + list(horizon.test.mean_confidence));
}

void ac9_determinism(const std::string& config) {
    const fs::path dir = fs::temp_directory_path() / "intent_graph_acceptance";
    fs::remove_all(dir);
    const std::string data = (dir / "data").string();
    bool ok = cli({"synth", "--config", config, "--out", data}) == 0;
    std::string metrics[2];
    for (int i = 0; ok && i < 2; ++i) {
        const fs::path out = dir / ("run" + std::to_string(i));
        ok = cli({"train", "--config", config, "--data", data + "/scenarios.jsonl", "--out", out.string()}) == 0;
        metrics[i] = slurp(out / "metrics.jsonl");
    }
    const bool same = ok && !metrics[0].empty() && metrics[0] == metrics[1];
    const auto lines = std::count(metrics[0].begin(), metrics[0].end(), '\n');
    fs::remove_all(dir);
    report(9, same, "two CLI train+eval runs with equal seeds: metrics files (" + std::to_string(lines) +
                        " lines) " + (same ? "byte-identical" : "differ"));
}

void ac10_parameter_count() {
    ModelConfig two;
    two.num_layers = 2;
    ModelConfig three = two;
    three.num_layers = 3;
    const std::size_t a = parameter_count(two), b = parameter_count(three);
    report(10, a == b, "shared 2-layer " + std::to_string(a) + " vs 3-layer " + std::to_string(b) + " parameters");
}

}  // namespace

int main(int argc, char** argv) {
    const std::string config = argc > 1 ? argv[1] : INTENT_GRAPH_LEARNABILITY_CONFIG;
    const auto start = Clock::now();
    const std::vector<std::function<void()>> steps{
        ac1_gradient_fidelity,
        ac2_adjacency_structure,
        ac3_permutation_invariance,
        ac4_hand_instance,
        [&] { ac5_overfit(Setup::load(config)); },
        [&] { ac6_to_8(Setup::load(config)); },
        [&] { ac9_determinism(config); },
        ac10_parameter_count,
    };
    for (const auto& step : steps) {
        try {
            step();
        } catch (const std::exception& e) {
            std::printf("error: %s\n", e.what());
            ++failures;
        }
    }
    std::printf("%d failed, %.1f s\n", failures, seconds_since(start));
    return failures;
}
