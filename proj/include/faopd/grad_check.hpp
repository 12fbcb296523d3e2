#pragma once

#include <functional>
#include <span>
#include <vector>

#include "faopd/errors.hpp"

namespace faopd {

// Scalar function of a flat parameter vector. When grad_out is non-null the
// callee fills it with the reverse-mode gradient at x; the returned value
// must be identical either way for the same x.
using ScalarFn = std::function<double(std::span<const double> x, std::vector<double>* grad_out)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t worst_coord = 0;
};

// Compares the reverse-mode gradient against central finite differences,
// coordinate by coordinate. Relative error uses |fd| + 1e-8 in the
// denominator. Throws NumericError if either estimate is NaN.
GradCheckReport grad_check_report(const ScalarFn& f, std::span<const double> point,
                                  double h = 1e-5);

inline double grad_check(const ScalarFn& f, std::span<const double> point, double h = 1e-5) {
    return grad_check_report(f, point, h).max_rel_err;
}

}  // namespace faopd
