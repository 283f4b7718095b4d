#include "intent_graph/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace intent_graph {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const std::function<double(const ParameterStore&)>& loss, ParameterStore& params,
                                  double h, double tol) {
    GradCheckReport report;
    report.tolerance = tol;
    bool first = true;
    for (Parameter& p : params) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value.data[i];
            p.value.data[i] = saved + h;
            const double up = loss(params);
            p.value.data[i] = saved - h;
            const double down = loss(params);
            p.value.data[i] = saved;

            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p.grad.data[i];
            const double err = relative_error(analytic, numeric);
            ++report.coordinates;
            if (first || err > report.worst_relative_error) {
                first = false;
                report.worst_relative_error = err;
                report.worst_parameter = p.name;
                report.worst_index = i;
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    report.passed = report.worst_relative_error <= tol;
    return report;
}

Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix x, double h) {
    Matrix g(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x.data[i];
        x.data[i] = saved + h;
        const double up = f(x);
        x.data[i] = saved - h;
        const double down = f(x);
        x.data[i] = saved;
        g.data[i] = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace intent_graph
