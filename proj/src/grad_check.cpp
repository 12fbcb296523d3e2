#include "faopd/grad_check.hpp"

#include <cmath>

namespace faopd {

GradCheckReport grad_check_report(const ScalarFn& f, std::span<const double> point, double h) {
    std::vector<double> x(point.begin(), point.end());
    for (double v : x) {
        if (!std::isfinite(v)) throw ContractError("grad_check: point must be finite");
    }
    std::vector<double> autodiff;
    const double base = f(x, &autodiff);
    if (!std::isfinite(base)) throw NumericError("grad_check: non-finite function value");
    if (autodiff.size() != x.size()) {
        throw ContractError("grad_check: gradient length " + std::to_string(autodiff.size()) +
                            " != point length " + std::to_string(x.size()));
    }
    GradCheckReport rep;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x, nullptr);
        x[i] = xi - h;
        const double fm = f(x, nullptr);
        x[i] = xi;
        const double fd = (fp - fm) / (2.0 * h);
        if (!std::isfinite(fd) || !std::isfinite(autodiff[i])) {
            throw NumericError("grad_check: non-finite derivative estimate at coordinate " +
                               std::to_string(i));
        }
        const double rel = std::abs(autodiff[i] - fd) / (std::abs(fd) + 1e-8);
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst_coord = i;
        }
    }
    return rep;
}

}  // namespace faopd
