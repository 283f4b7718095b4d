#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "intent_graph/checks.hpp"
#include "intent_graph/cli.hpp"
#include "intent_graph/data_io.hpp"
#include "intent_graph/model.hpp"
#include "intent_graph/synthetic.hpp"
#include "intent_graph/training.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace intent_graph;

namespace {

std::vector<Scenario> parse_jsonl(const std::string& text) {
    std::istringstream in(text);
    return parse_sequences(in);
}

ModelConfig model_from(const std::string& text) {
    return model_config_from_json(json::parse(text));
}

std::string train_jsonl(const std::string& data, const std::string& model, const std::string& train_cfg) {
    const auto scenarios = parse_jsonl(data);
    const ModelConfig cfg = model_from(model);
    const TrainConfig tcfg = train_config_from_json(json::parse(train_cfg));
    TrainResult r;
    {
        py::gil_scoped_release release;
        r = train(scenarios, cfg, tcfg);
    }
    json history = json::array();
    for (const auto& e : r.history) history.push_back(epoch_record_to_json(e));
    return json{{"checkpoint", checkpoint_to_json(cfg, r.params)}, {"history", history}}.dump();
}

std::string evaluate_jsonl(const std::string& checkpoint, const std::string& data) {
    const Checkpoint ck = checkpoint_from_json(json::parse(checkpoint));
    return to_json(evaluate(parse_jsonl(data), ck.config, ck.params)).dump();
}

std::vector<std::vector<double>> predict_jsonl(const std::string& checkpoint, const std::string& data) {
    const Checkpoint ck = checkpoint_from_json(json::parse(checkpoint));
    std::vector<std::vector<double>> out;
    for (const Scenario& s : parse_jsonl(data)) out.push_back(forward(s, ck.config, ck.params).probabilities);
    return out;
}

std::string synth_jsonl(const std::string& config) {
    std::ostringstream out;
    write_sequences(out, generate_synthetic(synth_config_from_json(json::parse(config))));
    return out.str();
}

std::string gradcheck_json(const std::string& model, std::size_t objects, std::uint64_t seed) {
    const ModelConfig cfg = model.empty() ? tiny_config() : model_from(model);
    Rng rng(seed);
    const GradCheckReport r = gradcheck_model(cfg, random_scenario(cfg, objects, rng));
    return json{{"passed", r.passed},
                {"worst_relative_error", r.worst_relative_error},
                {"worst_parameter", r.worst_parameter},
                {"coordinates", r.coordinates}}
        .dump();
}

py::tuple cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"intent_graph"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Crossing-intent prediction with pedestrian-centric scene graphs.";
    m.attr("__version__") = std::string(kToolVersion);

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("default_model_config", [] { return to_json(ModelConfig{}).dump(); });
    m.def("default_train_config", [] { return to_json(TrainConfig{}).dump(); });
    m.def("default_synth_config", [] { return to_json(SynthConfig{}).dump(); });
    m.def("parameter_count", [](const std::string& model) { return parameter_count(model_from(model)); });
    m.def("spatial_relation", [](std::array<double, 4> ped, std::array<double, 4> obj) {
        return spatial_relation(BoundingBox::make(ped[0], ped[1], ped[2], ped[3]),
                                BoundingBox::make(obj[0], obj[1], obj[2], obj[3]))
            .to_array();
    });
    m.def("generate_synthetic", &synth_jsonl, py::arg("config"));
    m.def("train", &train_jsonl, py::arg("data"), py::arg("model"), py::arg("train"));
    m.def("evaluate", &evaluate_jsonl, py::arg("checkpoint"), py::arg("data"));
    m.def("predict", &predict_jsonl, py::arg("checkpoint"), py::arg("data"));
    m.def("gradcheck", &gradcheck_json, py::arg("model") = "", py::arg("objects") = 3, py::arg("seed") = 0);
    m.def("run_cli", &cli, py::arg("args"));
}
