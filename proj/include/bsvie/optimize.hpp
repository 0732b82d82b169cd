#pragma once

#include <functional>

namespace bsvie {

// Golden-section search for a scalar maximiser on [lo, hi].
double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-10);

inline double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                 double tol = 1e-10) {
    return golden_section_max([&](double x) { return -f(x); }, lo, hi, tol);
}

}  // namespace bsvie
