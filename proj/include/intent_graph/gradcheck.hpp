#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "intent_graph/parameters.hpp"

namespace intent_graph {

struct GradCheckReport {
    double worst_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coordinates = 0;
    double tolerance = 0.0;
    bool passed = true;
};

/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
/// Below it the comparison is effectively absolute.
inline constexpr double kGradCheckFloor = 1e-6;

double relative_error(double analytic, double numeric);

/// Compares the analytic gradients already stored in `params` (Parameter::grad)
/// against central differences of `loss` with step h, one coordinate at a time.
/// Parameter values are restored bit-exactly afterwards.
GradCheckReport finite_diff_check(const std::function<double(const ParameterStore&)>& loss, ParameterStore& params,
                                  double h = 1e-5, double tol = 1e-4);

/// Central-difference gradient of a scalar function of one matrix.
Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-5);

}  // namespace intent_graph
