#pragma once

namespace allee {

// 95% two-sided z quantile, the only one used in this project.
inline constexpr double kZ95 = 1.959963984540054;

// Wilson score interval for a binomial proportion; well-behaved at 0 and n.
struct WilsonInterval {
    double p_hat = 0.0;
    double lo = 0.0;
    double hi = 1.0;
};

// n == 0 yields p_hat = NaN with the vacuous interval [0, 1].
WilsonInterval wilson(int successes, int n, double z = kZ95);

// Pooled two-proportion z statistic for H0: p1 == p2. Zero pooled variance
// (all successes or all failures combined) yields z = 0.
double two_proportion_z(int x1, int n1, int x2, int n2);

// Standard error of p1_hat - p2_hat without pooling:
// sqrt(p1 q1 / n1 + p2 q2 / n2).
double difference_se(int x1, int n1, int x2, int n2);

}  // namespace allee
