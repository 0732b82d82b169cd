#include "bsvie/optimize.hpp"

#include <cmath>

namespace bsvie {

double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double phi = 0.6180339887498948482;
    double a = lo, b = hi;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace bsvie
