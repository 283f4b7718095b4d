#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "intent_graph/scene.hpp"

namespace intent_graph {

enum class DataErrorKind {
    io,
    parse,
    schema,
    width_mismatch,
    non_monotone_time,
    invalid_label,
    empty_dataset,
};

std::string_view to_string(DataErrorKind k);

class DataError : public std::runtime_error {
public:
    DataError(DataErrorKind kind, std::size_t line, const std::string& message);

    DataErrorKind kind() const { return kind_; }
    /// 1-based line of the offending record; 0 when not tied to a line.
    std::size_t line() const { return line_; }

private:
    DataErrorKind kind_;
    std::size_t line_;
};

// Sequence files hold one scenario per line:
// {"id":..,"fps":..,"frames":[{"t":..,"ped":{"box":[xmin,ymin,xmax,ymax],"feat":[..]},
//   "objects":[{"cat":..,"box":[..],"feat":[..],"cam_dx":..}],"label":0|1}]}

nlohmann::json scenario_to_json(const Scenario& s);
/// Validates one record; `line` is used for error messages only.
Scenario scenario_from_json(const nlohmann::json& j, std::size_t line = 0);

/// Parses a whole stream. Feature widths must be uniform across the stream.
std::vector<Scenario> parse_sequences(std::istream& in);
std::vector<Scenario> load_sequence_file(const std::string& path);

void write_sequences(std::ostream& out, const std::vector<Scenario>& scenarios);
void save_sequence_file(const std::string& path, const std::vector<Scenario>& scenarios);

/// Deterministic partition by scenario: shuffles indices with `seed` and takes
/// the first round(fraction * n) as the training part.
std::pair<std::vector<Scenario>, std::vector<Scenario>> split(const std::vector<Scenario>& dataset,
                                                              double train_fraction, std::uint64_t seed);

}  // namespace intent_graph
