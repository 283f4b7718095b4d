#include "intent_graph/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "intent_graph/checks.hpp"
#include "intent_graph/data_io.hpp"
#include "intent_graph/synthetic.hpp"
#include "intent_graph/training.hpp"

namespace intent_graph {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct SplitConfig {
    double train_fraction = 0.5;
    std::uint64_t seed = 0;
};

struct GradcheckSettings {
    std::size_t objects = 2;
    double h = 1e-5;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
};

struct RunConfig {
    std::optional<ModelConfig> model;
    TrainConfig train;
    SynthConfig synth;
    std::optional<SplitConfig> split;
    GradcheckSettings gradcheck;
};

struct Invocation {
    std::string command;
    std::string config_path;
    json config = json::object();
    std::string data;
    std::string test_data;
    std::string checkpoint;
    std::string grid;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::size_t patience = 0;
};

template <typename T>
T value_as(const json& v, const std::string& where) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + " has the wrong type");
    }
}

SplitConfig split_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("split section must be an object");
    SplitConfig s;
    for (const auto& [key, v] : j.items()) {
        if (key == "train_fraction") s.train_fraction = value_as<double>(v, "split.train_fraction");
        else if (key == "seed") s.seed = value_as<std::uint64_t>(v, "split.seed");
        else throw ConfigError("split: unknown key '" + key + "'");
    }
    if (!(s.train_fraction >= 0.0 && s.train_fraction <= 1.0)) throw ConfigError("split.train_fraction must be in [0,1]");
    return s;
}

GradcheckSettings gradcheck_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("gradcheck section must be an object");
    GradcheckSettings g;
    for (const auto& [key, v] : j.items()) {
        if (key == "objects") g.objects = value_as<std::size_t>(v, "gradcheck.objects");
        else if (key == "h") g.h = value_as<double>(v, "gradcheck.h");
        else if (key == "tolerance") g.tolerance = value_as<double>(v, "gradcheck.tolerance");
        else if (key == "seed") g.seed = value_as<std::uint64_t>(v, "gradcheck.seed");
        else throw ConfigError("gradcheck: unknown key '" + key + "'");
    }
    if (!(g.h > 0.0) || !(g.tolerance > 0.0)) throw ConfigError("gradcheck.h and gradcheck.tolerance must be positive");
    return g;
}

RunConfig parse_run_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig rc;
    for (const auto& [key, v] : doc.items()) {
        if (key == "model") {
            rc.model = model_config_from_json(v);
        } else if (key == "train") {
            rc.train = train_config_from_json(v);
        } else if (key == "synth") {
            try {
                rc.synth = synth_config_from_json(v);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "split") {
            rc.split = split_from_json(v);
        } else if (key == "gradcheck") {
            rc.gradcheck = gradcheck_from_json(v);
        } else {
            throw ConfigError("unknown config section '" + key + "'");
        }
    }
    return rc;
}

void apply_seed(RunConfig& rc, std::uint64_t seed) {
    if (rc.model) rc.model->seed = seed;
    rc.train.seed = seed;
    rc.synth.seed = seed;
    if (rc.split) rc.split->seed = seed;
    rc.gradcheck.seed = seed;
}

json read_json_file(const std::string& path, bool config) {
    std::ifstream in(path);
    if (!in) {
        if (config) throw ConfigError("cannot open config '" + path + "'");
        throw DataError(DataErrorKind::io, 0, "cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        if (config) throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
        throw DataError(DataErrorKind::parse, 0, "'" + path + "' is not valid JSON: " + e.what());
    }
}

// FNV-1a over the file bytes; identifies the exact data a run consumed.
std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(DataErrorKind::io, 0, "cannot open '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::size_t eval_threads() {
    const char* env = std::getenv("INTENT_GRAPH_THREADS");
    if (env == nullptr || *env == '\0') return std::max(1u, std::thread::hardware_concurrency());
    const std::string_view s(env);
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || ptr != s.data() + s.size() || n == 0) {
        throw ConfigError("INTENT_GRAPH_THREADS must be a positive integer, got '" + std::string(s) + "'");
    }
    return n;
}

fs::path require_out(const Invocation& inv) {
    if (inv.out.empty()) throw ConfigError(inv.command + " requires --out");
    fs::create_directories(inv.out);
    return fs::path(inv.out);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError(DataErrorKind::io, 0, "cannot write '" + path.string() + "'");
    out << text;
}

std::optional<std::uint64_t> resolved_seed(const Invocation& inv, const RunConfig& rc) {
    if (inv.seed) return inv.seed;
    if (inv.command == "synth") return rc.synth.seed;
    if (inv.command == "train" || inv.command == "ablate") return rc.train.seed;
    if (inv.command == "gradcheck") return rc.gradcheck.seed;
    return std::nullopt;
}

void write_manifest(const Invocation& inv, const RunConfig& rc, const fs::path& dir) {
    json paths = json::object();
    json digests = json::object();
    for (const auto& [key, path] : {std::pair<const char*, const std::string&>{"data", inv.data},
                                    {"test_data", inv.test_data},
                                    {"checkpoint", inv.checkpoint}}) {
        if (path.empty()) continue;
        paths[key] = path;
        digests[key] = file_digest(path);
    }
    const auto seed = resolved_seed(inv, rc);
    json m{{"tool", "intent_graph"},
           {"tool_version", std::string(kToolVersion)},
           {"command", inv.command},
           {"config_path", inv.config_path},
           {"config", inv.config},
           {"data_paths", paths},
           {"data_digests", digests},
           {"grid", inv.grid},
           {"output_dir", inv.out},
           {"seed_override", inv.seed ? json(*inv.seed) : json(nullptr)},
           {"resolved_seed", seed ? json(*seed) : json(nullptr)},
           {"patience", inv.patience}};
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<Scenario> load_nonempty(const std::string& path, const char* flag) {
    if (path.empty()) throw ConfigError(std::string("missing ") + flag);
    auto data = load_sequence_file(path);
    if (data.empty()) throw DataError(DataErrorKind::empty_dataset, 0, "'" + path + "' contains no scenarios");
    return data;
}

json report_json(const EvalReport& r) {
    return to_json(r);
}

void summarize(std::ostream& err, const char* name, const EvalReport& r) {
    err << std::fixed << std::setprecision(4) << name << ": avg_acc " << r.avg_accuracy << "  acc_at_K "
        << r.accuracy_at_k << "  loss " << r.loss << "  (" << r.scenarios << " scenarios)\n";
    err.unsetf(std::ios::floatfield);
}

// ----------------------------------------------------------------- synth

json cmd_synth(const Invocation& inv, const RunConfig& rc, std::ostream& err) {
    const fs::path dir = require_out(inv);
    write_manifest(inv, rc, dir);
    const auto data = generate_synthetic(rc.synth);
    save_sequence_file((dir / "scenarios.jsonl").string(), data);
    write_text(dir / "synth_config.json", to_json(rc.synth).dump(2) + "\n");

    std::size_t frames = 0;
    std::size_t positive = 0;
    for (const auto& s : data) {
        for (const auto& f : s.frames) {
            ++frames;
            positive += static_cast<std::size_t>(f.crossing_label);
        }
    }
    json files = json::array({(dir / "scenarios.jsonl").string(), (dir / "synth_config.json").string()});
    if (rc.split) {
        const auto [train, test] = split(data, rc.split->train_fraction, rc.split->seed);
        save_sequence_file((dir / "train.jsonl").string(), train);
        save_sequence_file((dir / "test.jsonl").string(), test);
        files.push_back((dir / "train.jsonl").string());
        files.push_back((dir / "test.jsonl").string());
    }
    const double prevalence = frames > 0 ? static_cast<double>(positive) / static_cast<double>(frames) : 0.0;
    err << "synth: " << data.size() << " scenarios, " << frames << " frames, prevalence " << prevalence << "\n";
    return json{{"scenarios", data.size()}, {"frames", frames}, {"prevalence", prevalence}, {"files", files}};
}

// ----------------------------------------------------------------- train

std::pair<std::vector<Scenario>, std::vector<Scenario>> train_test(const Invocation& inv, const RunConfig& rc) {
    auto data = load_nonempty(inv.data, "--data");
    if (rc.split && !inv.test_data.empty()) throw ConfigError("use either a split section or --test-data, not both");
    if (rc.split) {
        auto parts = split(data, rc.split->train_fraction, rc.split->seed);
        if (parts.first.empty()) throw DataError(DataErrorKind::empty_dataset, 0, "split leaves no training scenarios");
        return parts;
    }
    std::vector<Scenario> test;
    if (!inv.test_data.empty()) test = load_nonempty(inv.test_data, "--test-data");
    return {std::move(data), std::move(test)};
}

json cmd_train(const Invocation& inv, const RunConfig& rc, std::ostream& err) {
    const fs::path dir = require_out(inv);
    const ModelConfig cfg = rc.model.value_or(ModelConfig{});
    cfg.validate();
    rc.train.validate();
    const auto [train_set, test_set] = train_test(inv, rc);
    if (inv.patience > 0 && test_set.empty()) throw ConfigError("--patience needs held-out data");
    write_manifest(inv, rc, dir);
    const std::size_t threads = eval_threads();

    const auto train_ex = make_examples(train_set, cfg);
    const auto test_ex = make_examples(test_set, cfg);
    std::ofstream metrics(dir / "metrics.jsonl");
    if (!metrics) throw DataError(DataErrorKind::io, 0, "cannot write metrics in '" + dir.string() + "'");

    std::optional<ParameterStore> best;
    double best_acc = -1.0;
    std::size_t stale = 0;
    auto on_epoch = [&](const EpochRecord& r, const ParameterStore& params) {
        json line = epoch_record_to_json(r);
        bool go_on = true;
        if (!test_ex.empty()) {
            const EvalReport t = evaluate(test_ex, cfg, params, 0.5, threads);
            line["test"] = {{"loss", t.loss},
                            {"avg_acc", t.avg_accuracy},
                            {"acc_at_K", t.accuracy_at_k},
                            {"confidences", t.mean_confidence}};
            if (inv.patience > 0) {
                if (t.avg_accuracy > best_acc) {
                    best_acc = t.avg_accuracy;
                    best = params;
                    stale = 0;
                } else {
                    go_on = ++stale < inv.patience;
                }
            }
        }
        metrics << line.dump() << '\n';
        metrics.flush();
        return go_on;
    };
    TrainResult result = train(train_ex, cfg, rc.train, on_epoch);
    if (best) result.params = *best;

    save_checkpoint((dir / "checkpoint.json").string(), cfg, result.params);
    const EvalReport train_report = evaluate(train_ex, cfg, result.params, 0.5, threads);
    json report{{"epochs_run", result.history.size()},
                {"parameter_count", result.params.scalar_count()},
                {"initial_loss", result.initial.loss},
                {"train", report_json(train_report)},
                {"test", nullptr}};
    summarize(err, "train", train_report);
    if (!test_ex.empty()) {
        const EvalReport test_report = evaluate(test_ex, cfg, result.params, 0.5, threads);
        report["test"] = report_json(test_report);
        summarize(err, "test ", test_report);
    }
    write_text(dir / "report.json", report.dump(2) + "\n");
    return report;
}

// ------------------------------------------------------------ eval/predict

json cmd_eval(const Invocation& inv, const RunConfig& rc, std::ostream& err) {
    if (inv.checkpoint.empty()) throw ConfigError("eval requires --checkpoint");
    const auto data = load_nonempty(inv.data, "--data");
    const Checkpoint ck = load_checkpoint(inv.checkpoint);
    std::optional<fs::path> dir;
    if (!inv.out.empty()) {
        dir = require_out(inv);
        write_manifest(inv, rc, *dir);
    }
    const EvalReport r = evaluate(data, ck.config, ck.params, 0.5, eval_threads());
    summarize(err, "eval", r);
    json j = report_json(r);
    if (dir) write_text(*dir / "eval.json", j.dump(2) + "\n");
    return j;
}

json cmd_predict(const Invocation& inv, const RunConfig& rc, std::ostream& out, std::ostream& err) {
    if (inv.checkpoint.empty()) throw ConfigError("predict requires --checkpoint");
    const auto data = load_nonempty(inv.data, "--data");
    const Checkpoint ck = load_checkpoint(inv.checkpoint);
    std::ofstream file;
    if (!inv.out.empty()) {
        const fs::path dir = require_out(inv);
        write_manifest(inv, rc, dir);
        file.open(dir / "predictions.jsonl");
        if (!file) throw DataError(DataErrorKind::io, 0, "cannot write predictions in '" + dir.string() + "'");
    }
    std::ostream& sink = file.is_open() ? static_cast<std::ostream&>(file) : out;

    const std::size_t threads = std::min(eval_threads(), data.size());
    std::vector<PredictionOutput> outputs(data.size());
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < data.size(); i += threads) outputs[i] = forward(data[i], ck.config, ck.params);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        sink << json{{"id", data[i].id},
                     {"logits", outputs[i].logits},
                     {"probabilities", outputs[i].probabilities},
                     {"confidence", outputs[i].confidence},
                     {"labels", target_labels(data[i], ck.config)}}
                    .dump()
             << '\n';
    }
    err << "predict: " << data.size() << " scenarios\n";
    return json{{"scenarios", data.size()}};
}

// -------------------------------------------------------------- gradcheck

json cmd_gradcheck(const Invocation& inv, const RunConfig& rc, std::ostream& err, bool& passed) {
    ModelConfig cfg = rc.model.value_or(tiny_config());
    if (inv.seed) cfg.seed = *inv.seed;
    cfg.validate();
    if (!inv.out.empty()) write_manifest(inv, rc, require_out(inv));

    Rng rng(derive_seed(rc.gradcheck.seed, 1));
    const Scenario scenario = random_scenario(cfg, rc.gradcheck.objects, rng);
    const auto start = std::chrono::steady_clock::now();
    const GradCheckReport r = gradcheck_model(cfg, scenario, rc.gradcheck.h, rc.gradcheck.tolerance);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    passed = r.passed;
    err << "gradcheck: " << r.coordinates << " coordinates, worst relative error " << r.worst_relative_error << " ("
        << r.worst_parameter << "[" << r.worst_index << "]) " << (r.passed ? "PASS" : "FAIL") << "\n";
    return json{{"passed", r.passed},
                {"worst_relative_error", r.worst_relative_error},
                {"worst_parameter", r.worst_parameter},
                {"worst_index", r.worst_index},
                {"analytic", r.worst_analytic},
                {"numeric", r.worst_numeric},
                {"coordinates", r.coordinates},
                {"tolerance", r.tolerance},
                {"h", rc.gradcheck.h},
                {"seconds", seconds}};
}

// ----------------------------------------------------------------- ablate

struct GridRow {
    std::string label;
    json overrides;
};

json design(const char* mode, std::size_t layers, bool shared, bool temporal, bool ped, bool ctxt) {
    return json{{"graph_mode", mode},
                {"num_layers", layers},
                {"shared_weights", shared},
                {"include_object_class", false},
                {"temporal", {{"use_temporal", temporal}, {"use_ped_gru", ped}, {"use_ctxt_gru", ctxt}}}};
}

std::vector<GridRow> preset_rows(const std::string& name) {
    if (name == "layers") {
        std::vector<GridRow> rows;
        for (std::size_t l = 0; l <= 3; ++l) rows.push_back({std::to_string(l) + " layer", {{"num_layers", l}}});
        return rows;
    }
    if (name == "design") {
        return {{"Concat", design("concat_baseline", 2, true, true, true, false)},
                {"0 layer", design("star", 0, true, true, true, false)},
                {"1 layer", design("star", 1, true, true, true, false)},
                {"2 layer", design("star", 2, true, true, true, false)},
                {"3 layers", design("star", 3, true, true, true, false)},
                {"2 layers, no sharing", design("star", 2, false, true, true, false)},
                {"3 layers, no sharing", design("star", 3, false, true, true, false)},
                {"2 layers, FC", design("fully_connected", 2, true, true, true, false)},
                {"2 layer, no temporal", design("star", 2, true, false, true, false)},
                {"2 layer, no ped GRU", design("star", 2, true, true, false, false)},
                {"2 layer, add ctxt GRU", design("star", 2, true, true, true, true)}};
    }
    if (name == "nodes") {
        json with_class = design("star", 2, true, true, true, false);
        with_class["include_object_class"] = true;
        return {{"Graph - Pedestrian", design("pedestrian_only", 2, true, true, true, false)},
                {"G - Ped + ctxt", design("star", 2, true, true, true, false)},
                {"G - Ped + ctxt + objCls", with_class}};
    }
    throw ConfigError("unknown ablation preset '" + name + "' (expected layers, design, nodes, a JSON file or inline JSON)");
}

// "temporal.use_ctxt_gru" -> {"temporal": {"use_ctxt_gru": v}}; "layers" is
// accepted for num_layers.
json nest_key(const std::string& key, const json& v) {
    const std::string k = key == "layers" ? "num_layers" : key;
    const auto dot = k.find('.');
    if (dot == std::string::npos) return json{{k, v}};
    return json{{k.substr(0, dot), nest_key(k.substr(dot + 1), v)}};
}

std::vector<GridRow> grid_rows(const std::string& grid) {
    json g;
    if (fs::exists(grid)) {
        g = read_json_file(grid, true);
    } else if (!grid.empty() && (grid.front() == '{' || grid.front() == '[')) {
        try {
            g = json::parse(grid);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("--grid is not valid JSON: ") + e.what());
        }
    } else {
        return preset_rows(grid);
    }

    std::vector<GridRow> rows;
    if (g.is_array()) {
        for (const json& o : g) {
            if (!o.is_object()) throw ConfigError("grid rows must be objects");
            json merged = json::object();
            for (const auto& [k, v] : o.items()) merged.merge_patch(nest_key(k, v));
            rows.push_back({o.dump(), merged});
        }
    } else if (g.is_object()) {
        // Cartesian product, first key varying slowest.
        rows.push_back({"", json::object()});
        for (const auto& [k, values] : g.items()) {
            const json vs = values.is_array() ? values : json::array({values});
            if (vs.empty()) throw ConfigError("grid key '" + k + "' has no values");
            std::vector<GridRow> next;
            for (const GridRow& r : rows) {
                for (const json& v : vs) {
                    GridRow n = r;
                    n.overrides.merge_patch(nest_key(k, v));
                    n.label += (n.label.empty() ? "" : ", ") + k + "=" + v.dump();
                    next.push_back(std::move(n));
                }
            }
            rows = std::move(next);
        }
    } else {
        throw ConfigError("--grid must be an object of value lists or an array of override objects");
    }
    if (rows.empty()) throw ConfigError("ablation grid is empty");
    return rows;
}

json cmd_ablate(const Invocation& inv, const RunConfig& rc, std::ostream& err) {
    const fs::path dir = require_out(inv);
    if (inv.grid.empty()) throw ConfigError("ablate requires --grid");
    const ModelConfig base = rc.model.value_or(ModelConfig{});
    base.validate();
    rc.train.validate();

    // Resolve every row before training anything, so a typo fails fast.
    const std::vector<GridRow> grid = grid_rows(inv.grid);
    std::vector<ModelConfig> configs;
    for (const GridRow& row : grid) {
        json j = to_json(base);
        j.merge_patch(row.overrides);
        configs.push_back(model_config_from_json(j));
    }
    const auto [train_set, test_set] = train_test(inv, rc);
    write_manifest(inv, rc, dir);
    const std::size_t threads = eval_threads();

    json rows = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ModelConfig& cfg = configs[i];
        const auto train_ex = make_examples(train_set, cfg);
        const TrainResult result = train(train_ex, cfg, rc.train);
        const EvalReport train_report = evaluate(train_ex, cfg, result.params, 0.5, threads);
        json row{{"label", grid[i].label},
                 {"overrides", grid[i].overrides},
                 {"parameter_count", result.params.scalar_count()},
                 {"train", report_json(train_report)},
                 {"test", nullptr}};
        err << std::left << std::setw(28) << grid[i].label << std::right << std::fixed << std::setprecision(4)
            << " train " << train_report.avg_accuracy;
        if (!test_set.empty()) {
            const EvalReport test_report = evaluate(test_set, cfg, result.params, 0.5, threads);
            row["test"] = report_json(test_report);
            err << "  test " << test_report.avg_accuracy << " / " << test_report.accuracy_at_k;
        }
        err << "  params " << result.params.scalar_count() << "\n";
        err.unsetf(std::ios::floatfield);
        rows.push_back(std::move(row));
    }
    json doc{{"base_model", to_json(base)}, {"train", to_json(rc.train)}, {"grid", inv.grid}, {"rows", rows}};
    write_text(dir / "ablation.json", doc.dump(2) + "\n");
    return doc;
}

// ----------------------------------------------------------------- driver

int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
    RunConfig rc = parse_run_config(inv.config);
    if (inv.seed) apply_seed(rc, *inv.seed);

    if (inv.command == "predict") {
        cmd_predict(inv, rc, out, err);
        return kExitOk;
    }
    json result;
    int code = kExitOk;
    if (inv.command == "synth") {
        result = cmd_synth(inv, rc, err);
    } else if (inv.command == "train") {
        result = cmd_train(inv, rc, err);
    } else if (inv.command == "eval") {
        result = cmd_eval(inv, rc, err);
    } else if (inv.command == "gradcheck") {
        bool passed = false;
        result = cmd_gradcheck(inv, rc, err, passed);
        if (!passed) code = kExitNumeric;
    } else if (inv.command == "ablate") {
        result = cmd_ablate(inv, rc, err);
    } else {
        throw ConfigError("unknown command '" + inv.command + "'");
    }
    out << result.dump() << '\n';
    return code;
}

Invocation from_manifest(const std::string& path, const std::string& out_override) {
    const json m = read_json_file(path, true);
    try {
        if (m.at("tool") != "intent_graph") throw ConfigError("'" + path + "' is not an intent_graph manifest");
        Invocation inv;
        inv.command = m.at("command").get<std::string>();
        if (inv.command == "replay") throw ConfigError("a manifest cannot replay a replay");
        inv.config_path = m.at("config_path").get<std::string>();
        inv.config = m.at("config");
        const json& paths = m.at("data_paths");
        const json& digests = m.at("data_digests");
        for (auto [key, dst] : {std::pair<const char*, std::string*>{"data", &inv.data},
                                {"test_data", &inv.test_data},
                                {"checkpoint", &inv.checkpoint}}) {
            if (!paths.contains(key)) continue;
            *dst = paths.at(key).get<std::string>();
            if (file_digest(*dst) != digests.at(key).get<std::string>()) {
                throw DataError(DataErrorKind::io, 0, "'" + *dst + "' changed since the manifest was written");
            }
        }
        inv.grid = m.at("grid").get<std::string>();
        inv.out = out_override.empty() ? m.at("output_dir").get<std::string>() : out_override;
        if (!m.at("seed_override").is_null()) inv.seed = m.at("seed_override").get<std::uint64_t>();
        inv.patience = m.at("patience").get<std::size_t>();
        return inv;
    } catch (const json::exception& e) {
        throw ConfigError("malformed manifest '" + path + "': " + e.what());
    }
}

json error_document(const char* kind, int code, const std::string& message) {
    return json{{"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pedestrian crossing-intent prediction with spatiotemporal scene graphs", "intent_graph"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Invocation inv;
    std::uint64_t seed = 0;
    std::string manifest;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", inv.config_path, "JSON config with model/train/synth/split/gradcheck sections");
        sub->add_option("--out", inv.out, "output directory");
        sub->add_option("--seed", seed, "override every seed in the config");
    };
    auto* synth = app.add_subcommand("synth", "generate a synthetic scenario file");
    common(synth);
    auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoint + metrics");
    common(train_cmd);
    train_cmd->add_option("--data", inv.data, "training sequence file")->required();
    train_cmd->add_option("--test-data", inv.test_data, "held-out sequence file");
    train_cmd->add_option("--patience", inv.patience, "stop after this many epochs without held-out improvement");
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    common(eval_cmd);
    eval_cmd->add_option("--checkpoint", inv.checkpoint)->required();
    eval_cmd->add_option("--data", inv.data)->required();
    auto* predict_cmd = app.add_subcommand("predict", "per-scenario predictions as JSON lines");
    common(predict_cmd);
    predict_cmd->add_option("--checkpoint", inv.checkpoint)->required();
    predict_cmd->add_option("--data", inv.data)->required();
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of every parameter gradient");
    common(grad_cmd);
    auto* ablate_cmd = app.add_subcommand("ablate", "train one model per grid row and tabulate");
    common(ablate_cmd);
    ablate_cmd->add_option("--data", inv.data)->required();
    ablate_cmd->add_option("--test-data", inv.test_data);
    ablate_cmd->add_option("--grid", inv.grid, "layers | design | nodes | JSON file | inline JSON")->required();
    auto* replay_cmd = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    replay_cmd->add_option("manifest", manifest)->required();
    replay_cmd->add_option("--out", inv.out, "write into this directory instead");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::Success& e) {
            return app.exit(e, out, err);
        } catch (const CLI::ParseError& e) {
            throw ConfigError(e.what());
        }
        if (replay_cmd->parsed()) {
            return run(from_manifest(manifest, inv.out), out, err);
        }
        for (auto* sub : app.get_subcommands()) inv.command = sub->get_name();
        for (auto* sub : {synth, train_cmd, eval_cmd, predict_cmd, grad_cmd, ablate_cmd}) {
            if (sub->parsed() && sub->count("--seed") > 0) inv.seed = seed;
        }
        if (!inv.config_path.empty()) inv.config = read_json_file(inv.config_path, true);
        return run(inv, out, err);
    } catch (const ConfigError& e) {
        out << error_document("config", kExitConfig, e.what()).dump() << '\n';
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        json doc = error_document("data", kExitData, e.what());
        doc["error"]["data_error"] = std::string(to_string(e.kind()));
        if (e.line() > 0) doc["error"]["line"] = e.line();
        out << doc.dump() << '\n';
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const InputError& e) {
        out << error_document("data", kExitData, e.what()).dump() << '\n';
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        out << error_document("numeric", kExitNumeric, e.what()).dump() << '\n';
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        out << error_document("internal", kExitInternal, e.what()).dump() << '\n';
        err << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace intent_graph
