#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intent_graph/tensor.hpp"

namespace intent_graph {

/// Axis-aligned box in image pixels; y grows downward.
struct BoundingBox {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    /// Throws std::invalid_argument unless xmin <= xmax and ymin <= ymax.
    static BoundingBox make(double xmin, double ymin, double xmax, double ymax);

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double center_x() const { return 0.5 * (xmin + xmax); }
    double center_y() const { return 0.5 * (ymin + ymax); }
    bool valid() const;

    BoundingBox shifted(double dx, double dy = 0.0) const { return {xmin + dx, ymin + dy, xmax + dx, ymax + dy}; }
    static BoundingBox union_of(const BoundingBox& a, const BoundingBox& b);

    bool operator==(const BoundingBox&) const = default;
};

/// Objects of interest: vehicles, road users and environment items, plus a
/// catch-all.
enum class ObjectCategory {
    bike,
    bus,
    car,
    caravan,
    motorcycle,
    trailer,
    truck,
    other_vehicle,
    bicyclist,
    motorcyclist,
    other_rider,
    crosswalk_plain,
    crosswalk_zebra,
    traffic_light,
    other,
};

inline constexpr std::size_t kCategoryCount = 15;

std::string_view to_string(ObjectCategory c);
std::optional<ObjectCategory> parse_category(std::string_view name);
bool is_vehicle(ObjectCategory c);
bool is_crosswalk(ObjectCategory c);

struct ObjectObservation {
    ObjectCategory category = ObjectCategory::other;
    BoundingBox box;
    std::vector<double> feature;
    /// Horizontal shift applied to the box for side-camera objects.
    double camera_offset_x = 0.0;

    /// Box in the shared (front-camera) coordinate frame.
    BoundingBox placed_box() const { return box.shifted(camera_offset_x); }
};

struct FrameObservation {
    int timestamp_index = 0;
    BoundingBox pedestrian_box;
    std::vector<double> pedestrian_feature;
    std::vector<ObjectObservation> objects;
    int crossing_label = 0;
};

struct Scenario {
    std::string id;
    std::vector<FrameObservation> frames;
    double fps = 30.0;
};

/// Pedestrian-to-object spatial relation: object-minus-pedestrian deltas of the
/// box corners and center, then the extent of the union box.
struct SpatialRelation {
    double dxmin = 0.0;
    double dymin = 0.0;
    double dxmax = 0.0;
    double dymax = 0.0;
    double dxc = 0.0;
    double dyc = 0.0;
    double w_union = 0.0;
    double h_union = 0.0;

    std::array<double, 8> to_array() const { return {dxmin, dymin, dxmax, dymax, dxc, dyc, w_union, h_union}; }
    static SpatialRelation from_array(const std::array<double, 8>& v);

    /// Divides x-like fields by frame_width and y-like fields by frame_height.
    SpatialRelation normalized(double frame_width, double frame_height) const;

    bool operator==(const SpatialRelation&) const = default;
};

SpatialRelation spatial_relation(const BoundingBox& ped, const BoundingBox& obj);
/// Row vector [dxmin, dymin, dxmax, dymax, dxc, dyc, w_union, h_union].
Tensor as_vector(const SpatialRelation& s);
SpatialRelation from_vector(const Tensor& v);

/// Trapezoid ahead of the ego vehicle. near_y is the lower (larger y) edge.
struct FocusRegion {
    double near_y = 0.0;
    double far_y = 0.0;
    double near_half_width = 0.0;
    double far_half_width = 0.0;
    double center_x = 0.0;

    static FocusRegion make(double near_y, double far_y, double near_half_width, double far_half_width,
                            double center_x);
    bool contains(double x, double y) const;
};

/// True iff the bottom-center (feet) point of box lies in the closed region.
bool in_focus_region(const BoundingBox& box, const FocusRegion& region);

// Location-centric scenes: an ego view with surrounding objects and pedestrians.

struct PedestrianObservation {
    BoundingBox box;
    std::vector<double> feature;
};

struct LocationFrame {
    int timestamp_index = 0;
    std::vector<double> ego_feature;
    std::vector<ObjectObservation> objects;
    std::vector<PedestrianObservation> pedestrians;
};

struct LocationScenario {
    std::string id;
    std::vector<LocationFrame> frames;
    double fps = 30.0;
};

/// Per-frame target: 1 iff any pedestrian stands in the region at that frame.
std::vector<int> location_labels(const LocationScenario& scenario, const FocusRegion& region);

}  // namespace intent_graph
