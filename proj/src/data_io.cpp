#include "intent_graph/data_io.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>

#include "intent_graph/random.hpp"

namespace intent_graph {

namespace {

using nlohmann::json;

json box_to_json(const BoundingBox& b) {
    return json::array({b.xmin, b.ymin, b.xmax, b.ymax});
}

BoundingBox box_from_json(const json& j, std::size_t line) {
    if (!j.is_array() || j.size() != 4) throw DataError(DataErrorKind::schema, line, "box must be [xmin,ymin,xmax,ymax]");
    const auto v = j.get<std::vector<double>>();
    BoundingBox b{v[0], v[1], v[2], v[3]};
    if (!b.valid()) throw DataError(DataErrorKind::schema, line, "box corners are out of order or non-finite");
    return b;
}

std::vector<double> features_from_json(const json& j, std::size_t line) {
    if (!j.is_array()) throw DataError(DataErrorKind::schema, line, "feat must be an array of numbers");
    auto v = j.get<std::vector<double>>();
    for (double x : v) {
        if (!std::isfinite(x)) throw DataError(DataErrorKind::schema, line, "feat contains a non-finite value");
    }
    return v;
}

void require_keys(const json& j, std::initializer_list<std::string_view> allowed, std::size_t line,
                  const char* where) {
    if (!j.is_object()) throw DataError(DataErrorKind::schema, line, std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw DataError(DataErrorKind::schema, line, std::string("unknown key '") + key + "' in " + where);
    }
}

}  // namespace

std::string_view to_string(DataErrorKind k) {
    switch (k) {
        case DataErrorKind::io: return "io";
        case DataErrorKind::parse: return "parse";
        case DataErrorKind::schema: return "schema";
        case DataErrorKind::width_mismatch: return "width_mismatch";
        case DataErrorKind::non_monotone_time: return "non_monotone_time";
        case DataErrorKind::invalid_label: return "invalid_label";
        case DataErrorKind::empty_dataset: return "empty_dataset";
    }
    return "unknown";
}

DataError::DataError(DataErrorKind kind, std::size_t line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      kind_(kind),
      line_(line) {}

json scenario_to_json(const Scenario& s) {
    json frames = json::array();
    for (const auto& f : s.frames) {
        json objects = json::array();
        for (const auto& o : f.objects) {
            objects.push_back({{"cat", std::string(to_string(o.category))},
                               {"box", box_to_json(o.box)},
                               {"feat", o.feature},
                               {"cam_dx", o.camera_offset_x}});
        }
        frames.push_back({{"t", f.timestamp_index},
                          {"ped", {{"box", box_to_json(f.pedestrian_box)}, {"feat", f.pedestrian_feature}}},
                          {"objects", std::move(objects)},
                          {"label", f.crossing_label}});
    }
    return json{{"id", s.id}, {"fps", s.fps}, {"frames", std::move(frames)}};
}

Scenario scenario_from_json(const json& j, std::size_t line) {
    try {
        require_keys(j, {"id", "fps", "frames"}, line, "scenario");
        Scenario s;
        s.id = j.at("id").get<std::string>();
        s.fps = j.at("fps").get<double>();
        if (!(s.fps > 0.0)) throw DataError(DataErrorKind::schema, line, "fps must be positive");
        std::optional<int> prev_t;
        for (const json& jf : j.at("frames")) {
            require_keys(jf, {"t", "ped", "objects", "label"}, line, "frame");
            FrameObservation f;
            f.timestamp_index = jf.at("t").get<int>();
            if (prev_t && f.timestamp_index <= *prev_t) {
                throw DataError(DataErrorKind::non_monotone_time, line,
                                "timestamps must strictly increase (" + std::to_string(*prev_t) + " then " +
                                    std::to_string(f.timestamp_index) + ")");
            }
            prev_t = f.timestamp_index;
            const json& ped = jf.at("ped");
            require_keys(ped, {"box", "feat"}, line, "ped");
            f.pedestrian_box = box_from_json(ped.at("box"), line);
            f.pedestrian_feature = features_from_json(ped.at("feat"), line);
            for (const json& jo : jf.at("objects")) {
                require_keys(jo, {"cat", "box", "feat", "cam_dx"}, line, "object");
                ObjectObservation o;
                const auto cat = jo.at("cat").get<std::string>();
                const auto parsed = parse_category(cat);
                if (!parsed) throw DataError(DataErrorKind::schema, line, "unknown object category '" + cat + "'");
                o.category = *parsed;
                o.box = box_from_json(jo.at("box"), line);
                o.feature = features_from_json(jo.at("feat"), line);
                o.camera_offset_x = jo.contains("cam_dx") ? jo.at("cam_dx").get<double>() : 0.0;
                f.objects.push_back(std::move(o));
            }
            f.crossing_label = jf.at("label").get<int>();
            if (f.crossing_label != 0 && f.crossing_label != 1) {
                throw DataError(DataErrorKind::invalid_label, line,
                                "label must be 0 or 1, got " + std::to_string(f.crossing_label));
            }
            s.frames.push_back(std::move(f));
        }
        return s;
    } catch (const json::exception& e) {
        throw DataError(DataErrorKind::schema, line, e.what());
    }
}

std::vector<Scenario> parse_sequences(std::istream& in) {
    std::vector<Scenario> out;
    std::optional<std::size_t> width;
    std::string text;
    std::size_t line = 0;
    auto check_width = [&](std::size_t w, std::size_t at) {
        if (!width) width = w;
        if (w != *width) {
            throw DataError(DataErrorKind::width_mismatch, at,
                            "feature width " + std::to_string(w) + " differs from " + std::to_string(*width));
        }
    };
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw DataError(DataErrorKind::parse, line, e.what());
        }
        Scenario s = scenario_from_json(j, line);
        for (const auto& f : s.frames) {
            check_width(f.pedestrian_feature.size(), line);
            for (const auto& o : f.objects) check_width(o.feature.size(), line);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Scenario> load_sequence_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(DataErrorKind::io, 0, "cannot open '" + path + "'");
    return parse_sequences(in);
}

void write_sequences(std::ostream& out, const std::vector<Scenario>& scenarios) {
    for (const auto& s : scenarios) out << scenario_to_json(s).dump() << '\n';
}

void save_sequence_file(const std::string& path, const std::vector<Scenario>& scenarios) {
    std::ofstream out(path);
    if (!out) throw DataError(DataErrorKind::io, 0, "cannot write '" + path + "'");
    write_sequences(out, scenarios);
}

std::pair<std::vector<Scenario>, std::vector<Scenario>> split(const std::vector<Scenario>& dataset,
                                                              double train_fraction, std::uint64_t seed) {
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
        throw std::invalid_argument("split: train_fraction must be in [0,1]");
    }
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(i - 1)))]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(dataset.size())));
    std::pair<std::vector<Scenario>, std::vector<Scenario>> parts;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (k < n_train ? parts.first : parts.second).push_back(dataset[order[k]]);
    }
    return parts;
}

}  // namespace intent_graph
