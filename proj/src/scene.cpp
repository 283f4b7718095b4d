#include "intent_graph/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace intent_graph {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "bike",          "bus",        "car",         "caravan",         "motorcycle",
    "trailer",       "truck",      "other_vehicle", "bicyclist",     "motorcyclist",
    "other_rider",   "crosswalk_plain", "crosswalk_zebra", "traffic_light", "other",
};

}  // namespace

BoundingBox BoundingBox::make(double xmin, double ymin, double xmax, double ymax) {
    BoundingBox b{xmin, ymin, xmax, ymax};
    if (!b.valid()) throw std::invalid_argument("BoundingBox: expected xmin <= xmax and ymin <= ymax");
    return b;
}

bool BoundingBox::valid() const {
    return std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) && std::isfinite(ymax) &&
           xmin <= xmax && ymin <= ymax;
}

BoundingBox BoundingBox::union_of(const BoundingBox& a, const BoundingBox& b) {
    return {std::min(a.xmin, b.xmin), std::min(a.ymin, b.ymin), std::max(a.xmax, b.xmax), std::max(a.ymax, b.ymax)};
}

std::string_view to_string(ObjectCategory c) {
    return kCategoryNames.at(static_cast<std::size_t>(c));
}

std::optional<ObjectCategory> parse_category(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
        if (kCategoryNames[i] == name) return static_cast<ObjectCategory>(i);
    }
    return std::nullopt;
}

bool is_vehicle(ObjectCategory c) {
    return static_cast<int>(c) <= static_cast<int>(ObjectCategory::other_vehicle);
}

bool is_crosswalk(ObjectCategory c) {
    return c == ObjectCategory::crosswalk_plain || c == ObjectCategory::crosswalk_zebra;
}

SpatialRelation SpatialRelation::from_array(const std::array<double, 8>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

SpatialRelation SpatialRelation::normalized(double frame_width, double frame_height) const {
    if (!(frame_width > 0.0) || !(frame_height > 0.0)) throw std::invalid_argument("normalized: frame size must be positive");
    return {dxmin / frame_width, dymin / frame_height, dxmax / frame_width, dymax / frame_height,
            dxc / frame_width,   dyc / frame_height,   w_union / frame_width, h_union / frame_height};
}

SpatialRelation spatial_relation(const BoundingBox& ped, const BoundingBox& obj) {
    const BoundingBox u = BoundingBox::union_of(ped, obj);
    return {obj.xmin - ped.xmin,
            obj.ymin - ped.ymin,
            obj.xmax - ped.xmax,
            obj.ymax - ped.ymax,
            obj.center_x() - ped.center_x(),
            obj.center_y() - ped.center_y(),
            u.width(),
            u.height()};
}

Tensor as_vector(const SpatialRelation& s) {
    const auto a = s.to_array();
    return Tensor::row(std::vector<double>(a.begin(), a.end()));
}

SpatialRelation from_vector(const Tensor& v) {
    if (v.rows() != 1 || v.cols() != 8) throw ShapeError("from_vector: expected (1x8), got " + v.value().shape_string());
    std::array<double, 8> a{};
    std::copy(v.value().data.begin(), v.value().data.end(), a.begin());
    return SpatialRelation::from_array(a);
}

FocusRegion FocusRegion::make(double near_y, double far_y, double near_half_width, double far_half_width,
                              double center_x) {
    if (!(near_y > far_y)) throw std::invalid_argument("FocusRegion: near_y must be below far_y (near_y > far_y)");
    if (!(near_half_width > 0.0) || !(far_half_width > 0.0)) {
        throw std::invalid_argument("FocusRegion: half-widths must be positive");
    }
    return {near_y, far_y, near_half_width, far_half_width, center_x};
}

bool FocusRegion::contains(double x, double y) const {
    if (y < far_y || y > near_y) return false;
    const double t = (y - far_y) / (near_y - far_y);
    const double half = far_half_width + t * (near_half_width - far_half_width);
    return std::abs(x - center_x) <= half;
}

bool in_focus_region(const BoundingBox& box, const FocusRegion& region) {
    return region.contains(box.center_x(), box.ymax);
}

std::vector<int> location_labels(const LocationScenario& scenario, const FocusRegion& region) {
    std::vector<int> labels;
    labels.reserve(scenario.frames.size());
    for (const auto& f : scenario.frames) {
        const bool any = std::any_of(f.pedestrians.begin(), f.pedestrians.end(),
                                     [&](const PedestrianObservation& p) { return in_focus_region(p.box, region); });
        labels.push_back(any ? 1 : 0);
    }
    return labels;
}

}  // namespace intent_graph
