#include "allee/stats.hpp"

#include <cmath>
#include <limits>

namespace allee {

WilsonInterval wilson(int successes, int n, double z) {
    if (n <= 0)
        return {std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0};
    const double nn = n;
    const double p = successes / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

double two_proportion_z(int x1, int n1, int x2, int n2) {
    if (n1 <= 0 || n2 <= 0) return 0.0;
    const double p1 = static_cast<double>(x1) / n1;
    const double p2 = static_cast<double>(x2) / n2;
    const double pooled = static_cast<double>(x1 + x2) / (static_cast<double>(n1) + n2);
    const double var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
    if (var <= 0.0) return 0.0;
    return (p1 - p2) / std::sqrt(var);
}

double difference_se(int x1, int n1, int x2, int n2) {
    if (n1 <= 0 || n2 <= 0) return 0.0;
    const double p1 = static_cast<double>(x1) / n1;
    const double p2 = static_cast<double>(x2) / n2;
    return std::sqrt(p1 * (1.0 - p1) / n1 + p2 * (1.0 - p2) / n2);
}

}  // namespace allee
