#include "intent_graph/synthetic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "intent_graph/random.hpp"
#include "intent_graph/tensor.hpp"

namespace intent_graph {

namespace {

using nlohmann::json;

constexpr double kPedWidth = 40.0;
constexpr double kPedHeight = 100.0;
constexpr double kKerbFraction = 0.7;  // ground line of the pedestrian, fraction of height
constexpr double kVehicleWidth = 160.0;
constexpr double kVehicleHeight = 90.0;
constexpr std::size_t kPedDescriptor = 6;
constexpr std::size_t kObjDescriptor = kCategoryCount + 5;
constexpr std::size_t kMaxRedraws = 256;

// Fixed random projections shared by every scenario of one generator seed.
struct Encoders {
    Matrix pedestrian;  // kPedDescriptor x D
    Matrix object;      // kObjDescriptor x D

    explicit Encoders(const SynthConfig& cfg) : pedestrian(kPedDescriptor, cfg.feature_dim), object(kObjDescriptor, cfg.feature_dim) {
        Rng rng(derive_seed(cfg.seed, 0));
        const double a = std::sqrt(3.0);
        for (double& v : pedestrian.data) v = rng.uniform(-a, a);
        for (double& v : object.data) v = rng.uniform(-a, a);
    }

    static std::vector<double> project(const std::vector<double>& desc, const Matrix& p) {
        std::vector<double> out(p.cols, 0.0);
        for (std::size_t i = 0; i < desc.size(); ++i) {
            for (std::size_t j = 0; j < p.cols; ++j) out[j] += desc[i] * p(i, j);
        }
        return out;
    }
};

std::vector<double> box_descriptor(const BoundingBox& b, const SynthConfig& cfg) {
    return {b.center_x() / cfg.frame_width - 0.5, b.center_y() / cfg.frame_height - 0.5, b.width() / cfg.frame_width,
            b.height() / cfg.frame_height};
}

// Pedestrian appearance carries the walking direction (body/head orientation).
std::vector<double> pedestrian_feature(const BoundingBox& b, double vx, const SynthConfig& cfg, const Encoders& enc) {
    std::vector<double> d = box_descriptor(b, cfg);
    d.push_back(vx > 0.0 ? 1.0 : (vx < 0.0 ? -1.0 : 0.0));
    d.push_back(1.0);
    return Encoders::project(d, enc.pedestrian);
}

std::vector<double> object_feature(ObjectCategory c, const BoundingBox& b, const SynthConfig& cfg,
                                   const Encoders& enc) {
    std::vector<double> d(kCategoryCount, 0.0);
    d[static_cast<std::size_t>(c)] = 1.0;
    const auto geo = box_descriptor(b, cfg);
    d.insert(d.end(), geo.begin(), geo.end());
    d.push_back(1.0);
    return Encoders::project(d, enc.object);
}

BoundingBox box_at(double cx, double bottom, double w, double h) {
    return {cx - 0.5 * w, bottom - h, cx + 0.5 * w, bottom};
}

struct Mover {
    ObjectCategory category;
    double cx;
    double bottom;
    double w;
    double h;
    double vx;

    BoundingBox at(std::size_t t) const { return box_at(cx + vx * static_cast<double>(t), bottom, w, h); }
};

// True when the vehicle-pedestrian centre distance comes within the margin of
// theta_v at any frame.
bool near_vehicle_threshold(const Mover& m, double ped_cx0, double ped_vx, double kerb, const SynthConfig& cfg) {
    const double margin = cfg.boundary_margin * cfg.theta_v();
    if (margin <= 0.0) return false;
    for (std::size_t t = 0; t < cfg.frames_per_scenario; ++t) {
        const BoundingBox ped = box_at(ped_cx0 + ped_vx * static_cast<double>(t), kerb, kPedWidth, kPedHeight);
        const BoundingBox car = m.at(t);
        const double d = std::hypot(car.center_x() - ped.center_x(), car.center_y() - ped.center_y());
        if (std::abs(d - cfg.theta_v()) < margin) return true;
    }
    return false;
}

Scenario simulate(const SynthConfig& cfg, const Encoders& enc, std::size_t index) {
    Rng rng(derive_seed(cfg.seed, index + 1));
    const double W = cfg.frame_width;
    const double kerb = kKerbFraction * cfg.frame_height;

    std::vector<Mover> objects;
    const bool has_crosswalk = rng.bernoulli(cfg.crosswalk_probability);
    const double cw_cx = rng.uniform(cfg.crosswalk_min_x * W, cfg.crosswalk_max_x * W);
    if (has_crosswalk) {
        const auto cat = rng.bernoulli(0.5) ? ObjectCategory::crosswalk_zebra : ObjectCategory::crosswalk_plain;
        objects.push_back({cat, cw_cx, kerb + 80.0, cfg.crosswalk_width, 90.0, 0.0});
    }

    // Whether the pedestrian walks, and in which direction relative to the
    // crosswalk, is drawn once. Position and speed are then redrawn while any
    // frame would sit within the margin of a labelling threshold.
    const bool walking = !rng.bernoulli(cfg.standing_probability);
    const double side = rng.bernoulli(cfg.left_start_probability) ? 1.0 : -1.0;  // +1: crosswalk to the right
    const double heading = rng.bernoulli(cfg.toward_probability) ? side : -side;
    const auto frames = static_cast<double>(cfg.frames_per_scenario - 1);
    const double margin_x = cfg.boundary_margin * cfg.theta_x();
    double ped_cx0 = 0.0;
    double ped_vx = 0.0;
    for (std::size_t attempt = 0; attempt < kMaxRedraws; ++attempt) {
        ped_cx0 = cw_cx - side * rng.uniform(0.0, cfg.spawn_spread * cfg.theta_x());
        ped_vx = walking ? heading * rng.uniform(cfg.pedestrian_speed_min, cfg.pedestrian_speed_max) : 0.0;
        if (!has_crosswalk || !walking) break;
        // |dxc| is piecewise linear in t, so the end points and a sign change
        // bound it over every frame.
        const double dx0 = cw_cx - ped_cx0;
        const double dx1 = dx0 - ped_vx * frames;
        const double lo = dx0 * dx1 <= 0.0 ? 0.0 : std::min(std::abs(dx0), std::abs(dx1));
        const double hi = std::max(std::abs(dx0), std::abs(dx1));
        const bool near_edge = lo < cfg.theta_x() + margin_x && hi > cfg.theta_x() - margin_x;
        if (lo >= margin_x && !near_edge) break;
    }

    const auto n_vehicles = rng.integer(static_cast<std::int64_t>(cfg.vehicles_min),
                                        static_cast<std::int64_t>(cfg.vehicles_max));
    static constexpr ObjectCategory kVehicles[] = {ObjectCategory::car, ObjectCategory::bus, ObjectCategory::truck,
                                                   ObjectCategory::motorcycle};
    for (std::int64_t v = 0; v < n_vehicles; ++v) {
        const auto cat = kVehicles[rng.integer(0, 3)];
        Mover m{cat, 0.0, 0.0, kVehicleWidth, kVehicleHeight, 0.0};
        for (std::size_t attempt = 0; attempt < kMaxRedraws; ++attempt) {
            m.cx = rng.uniform(0.0, W);
            m.bottom = kerb + rng.uniform(-10.0, 60.0);
            m.vx = rng.uniform(-cfg.vehicle_speed_max, cfg.vehicle_speed_max);
            if (!near_vehicle_threshold(m, ped_cx0, ped_vx, kerb, cfg)) break;
        }
        objects.push_back(m);
    }
    if (rng.bernoulli(cfg.traffic_light_probability)) {
        objects.push_back({ObjectCategory::traffic_light, rng.uniform(0.1 * W, 0.9 * W), 0.25 * cfg.frame_height, 30.0,
                           80.0, 0.0});
    }

    Scenario s;
    s.id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(index);
    s.fps = 2.0;
    for (std::size_t t = 0; t < cfg.frames_per_scenario; ++t) {
        FrameObservation f;
        f.timestamp_index = static_cast<int>(t);
        f.pedestrian_box = box_at(ped_cx0 + ped_vx * static_cast<double>(t), kerb, kPedWidth, kPedHeight);
        f.pedestrian_feature = pedestrian_feature(f.pedestrian_box, ped_vx, cfg, enc);
        for (const Mover& m : objects) {
            ObjectObservation o;
            o.category = m.category;
            o.box = m.at(t);
            o.feature = object_feature(o.category, o.box, cfg, enc);
            f.objects.push_back(std::move(o));
        }
        f.crossing_label = oracle_label(f, ped_vx, cfg.theta_x(), cfg.theta_v());
        s.frames.push_back(std::move(f));
    }
    return s;
}

template <typename T>
void read_key(const json& v, const std::string& key, T& dst) {
    try {
        dst = v.get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("synth config: key '" + key + "' has the wrong type");
    }
}

}  // namespace

void SynthConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("synth config: " + m); };
    if (n_scenarios == 0) fail("n_scenarios must be positive");
    if (frames_per_scenario < 2) fail("frames_per_scenario must be at least 2");
    if (feature_dim == 0) fail("feature_dim must be positive");
    if (!(frame_width > 0.0) || !(frame_height > 0.0)) fail("frame size must be positive");
    if (!(crosswalk_min_x <= crosswalk_max_x)) fail("crosswalk_min_x > crosswalk_max_x");
    if (vehicles_min > vehicles_max) fail("vehicles_min > vehicles_max");
    if (!(pedestrian_speed_min > 0.0) || pedestrian_speed_min > pedestrian_speed_max) {
        fail("pedestrian speeds must satisfy 0 < min <= max");
    }
    for (double p : {crosswalk_probability, left_start_probability, toward_probability, standing_probability, traffic_light_probability}) {
        if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0,1]");
    }
    if (!(boundary_margin >= 0.0 && boundary_margin < 1.0)) fail("boundary_margin must lie in [0,1)");
    if (!(theta_x_fraction > 0.0) || !(theta_v_fraction > 0.0)) fail("thresholds must be positive");
}

json to_json(const SynthConfig& c) {
    return json{{"n_scenarios", c.n_scenarios},
                {"frames_per_scenario", c.frames_per_scenario},
                {"D", c.feature_dim},
                {"seed", c.seed},
                {"frame_width", c.frame_width},
                {"frame_height", c.frame_height},
                {"crosswalk_probability", c.crosswalk_probability},
                {"crosswalk_min_x", c.crosswalk_min_x},
                {"crosswalk_max_x", c.crosswalk_max_x},
                {"crosswalk_width", c.crosswalk_width},
                {"spawn_spread", c.spawn_spread},
                {"left_start_probability", c.left_start_probability},
                {"toward_probability", c.toward_probability},
                {"vehicles_min", c.vehicles_min},
                {"vehicles_max", c.vehicles_max},
                {"vehicle_speed_max", c.vehicle_speed_max},
                {"pedestrian_speed_min", c.pedestrian_speed_min},
                {"pedestrian_speed_max", c.pedestrian_speed_max},
                {"standing_probability", c.standing_probability},
                {"traffic_light_probability", c.traffic_light_probability},
                {"theta_x_fraction", c.theta_x_fraction},
                {"theta_v_fraction", c.theta_v_fraction},
                {"boundary_margin", c.boundary_margin}};
}

SynthConfig synth_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("synth config must be a JSON object");
    SynthConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "n_scenarios") read_key(v, key, c.n_scenarios);
        else if (key == "frames_per_scenario") read_key(v, key, c.frames_per_scenario);
        else if (key == "D") read_key(v, key, c.feature_dim);
        else if (key == "seed") read_key(v, key, c.seed);
        else if (key == "frame_width") read_key(v, key, c.frame_width);
        else if (key == "frame_height") read_key(v, key, c.frame_height);
        else if (key == "crosswalk_probability") read_key(v, key, c.crosswalk_probability);
        else if (key == "crosswalk_min_x") read_key(v, key, c.crosswalk_min_x);
        else if (key == "crosswalk_max_x") read_key(v, key, c.crosswalk_max_x);
        else if (key == "crosswalk_width") read_key(v, key, c.crosswalk_width);
        else if (key == "spawn_spread") read_key(v, key, c.spawn_spread);
        else if (key == "left_start_probability") read_key(v, key, c.left_start_probability);
        else if (key == "toward_probability") read_key(v, key, c.toward_probability);
        else if (key == "vehicles_min") read_key(v, key, c.vehicles_min);
        else if (key == "vehicles_max") read_key(v, key, c.vehicles_max);
        else if (key == "vehicle_speed_max") read_key(v, key, c.vehicle_speed_max);
        else if (key == "pedestrian_speed_min") read_key(v, key, c.pedestrian_speed_min);
        else if (key == "pedestrian_speed_max") read_key(v, key, c.pedestrian_speed_max);
        else if (key == "standing_probability") read_key(v, key, c.standing_probability);
        else if (key == "traffic_light_probability") read_key(v, key, c.traffic_light_probability);
        else if (key == "theta_x_fraction") read_key(v, key, c.theta_x_fraction);
        else if (key == "theta_v_fraction") read_key(v, key, c.theta_v_fraction);
        else if (key == "boundary_margin") read_key(v, key, c.boundary_margin);
        else throw std::invalid_argument("synth config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

int oracle_label(const FrameObservation& frame, double pedestrian_vx, double theta_x, double theta_v) {
    if (pedestrian_vx == 0.0) return 0;
    const BoundingBox& ped = frame.pedestrian_box;
    const ObjectObservation* crosswalk = nullptr;
    for (const auto& o : frame.objects) {
        if (is_crosswalk(o.category)) {
            crosswalk = &o;
            break;
        }
    }
    if (crosswalk == nullptr) return 0;

    const double dxc = crosswalk->placed_box().center_x() - ped.center_x();
    if (!(std::abs(dxc) < theta_x)) return 0;
    if (!(dxc * pedestrian_vx > 0.0)) return 0;
    for (const auto& o : frame.objects) {
        if (!is_vehicle(o.category)) continue;
        const BoundingBox b = o.placed_box();
        const double dx = b.center_x() - ped.center_x();
        const double dy = b.center_y() - ped.center_y();
        if (std::hypot(dx, dy) < theta_v) return 0;
    }
    return 1;
}

std::vector<Scenario> generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    const Encoders enc(cfg);
    std::vector<Scenario> out;
    out.reserve(cfg.n_scenarios);
    for (std::size_t i = 0; i < cfg.n_scenarios; ++i) out.push_back(simulate(cfg, enc, i));
    return out;
}

}  // namespace intent_graph
