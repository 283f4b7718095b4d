#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "intent_graph/scene.hpp"

namespace intent_graph {

/// Street scene simulator. One pedestrian walks at constant velocity along the
/// kerb line; an optional crosswalk, a few vehicles and an optional traffic
/// light surround it. All pixel quantities refer to a frame_width x
/// frame_height image.
struct SynthConfig {
    std::size_t n_scenarios = 64;
    std::size_t frames_per_scenario = 8;
    std::size_t feature_dim = 32;
    std::uint64_t seed = 7;

    double frame_width = 1280.0;
    double frame_height = 720.0;

    double crosswalk_probability = 0.75;
    double crosswalk_min_x = 0.4;  // crosswalk centre range, fraction of width
    double crosswalk_max_x = 0.6;
    double crosswalk_width = 240.0;
    /// Pedestrian start offset from the crosswalk centre, as a multiple of theta_x.
    double spawn_spread = 1.6;
    /// Probability that the pedestrian starts left of the crosswalk centre.
    double left_start_probability = 1.0;
    /// Probability that a walking pedestrian heads toward the crosswalk.
    double toward_probability = 0.7;

    std::size_t vehicles_min = 0;
    std::size_t vehicles_max = 1;
    double vehicle_speed_max = 12.0;  // px/frame

    double pedestrian_speed_min = 2.0;  // px/frame
    double pedestrian_speed_max = 5.0;
    double standing_probability = 0.1;
    double traffic_light_probability = 0.5;

    double theta_x_fraction = 0.15;  // theta_x = fraction * frame_width
    double theta_v_fraction = 0.10;  // theta_v = fraction * frame_width

    /// Scenes are redrawn (up to a fixed number of times) while any frame puts
    /// |dxc| within margin * theta_x of theta_x or of zero, or a vehicle
    /// distance within margin * theta_v of theta_v. Labels are unaffected;
    /// only near-threshold geometry becomes rare.
    double boundary_margin = 0.3;

    double theta_x() const { return theta_x_fraction * frame_width; }
    double theta_v() const { return theta_v_fraction * frame_width; }

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;

    bool operator==(const SynthConfig&) const = default;
};

nlohmann::json to_json(const SynthConfig& cfg);
/// Strict: unknown keys raise std::invalid_argument.
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// The labelling rule. A frame is crossing iff
///   |dxc(pedestrian, crosswalk)| < theta_x,
///   the pedestrian's x-velocity points toward the crosswalk centre, and
///   no vehicle box centre lies within theta_v (Euclidean) of the pedestrian's.
/// Frames without a crosswalk, or with a standing pedestrian, are never crossing.
int oracle_label(const FrameObservation& frame, double pedestrian_vx, double theta_x, double theta_v);

std::vector<Scenario> generate_synthetic(const SynthConfig& cfg);

}  // namespace intent_graph
