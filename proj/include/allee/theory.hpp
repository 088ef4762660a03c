#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "allee/engine.hpp"
#include "allee/graph.hpp"

namespace allee {

// A probability (or other positive quantity) carried in log space. The linear
// value is exp(log_value) and may round to zero; `underflow` is set when the
// value is below the smallest normal double, and the flag, not the zero, is
// the signal to consumers.
struct LogValue {
    double log_value = 0.0;
    double linear_value = 1.0;
    bool underflow = false;
};

LogValue make_log_value(double log_value) noexcept;

// Smallest n >= 1 with (1-mu)^n < theta (strict), plus the derived time and
// population scales t_n = n ln ln N / N and k_n = 4^{N t_n} = 4^{n ln ln N}.
// Meaningful for large N; requires N >= 3 so ln ln N > 0.
struct DispersionScale {
    int n = 0;
    double t_n = 0.0;
    double k_n = 0.0;
};

DispersionScale dispersion_scale(double theta, double mu, int n_vertices);

// Threshold scale mu^2 (1-mu)^1140 computed in log space; underflows the
// linear range already for mu = 1/2.
LogValue theorem2_threshold(double mu);

// log P(Poisson(lambda) > m) for m >= lambda: log-space terms with lgamma
// factorials, summed by compensated (Kahan) accumulation of the term ratios,
// stopping once a term falls below 1e-30 of the running sum.
double log_poisson_upper_tail(double lambda, double m);

// Complement bound for the good-event probability over one time block:
//   C(T) = 4 e^{-T} + 2 P(Po(T) > 2T) + 2 P(Po(2T) > 4T)
// and the comparison C(T) < 3^{-36}, done in log space.
struct Lemma6Result {
    double t_block = 0.0;
    LogValue pointmass;  // 4 e^{-T}
    LogValue near_tail;  // 2 P(Po(T) > 2T)
    LogValue far_tail;   // 2 P(Po(2T) > 4T)
    LogValue total;
    double log_bound = 0.0;  // -36 ln 3
    bool passes = false;     // total < bound, compared in log space
};

Lemma6Result lemma6_complement(double t_block);

// Event counts behind the good event on a ring segment around `center`:
//   x_*: mixing events during (0, T) on the four edges
//        (-2,-1), (-1,0), (0,+1), (+1,+2) relative to center;
//   y_*: mixing events during (T, 2T) on the two edges adjacent to -1 / +1;
//   z_*: local events during (T, 2T) at -1 / +1.
// The good event asks for at least one inward mixing and one late local snap
// on each side, and not too many disturbing events.
struct GoodEventStats {
    std::int64_t x_m2 = 0, x_m1 = 0, x_p1 = 0, x_p2 = 0;
    std::int64_t y_m1 = 0, y_p1 = 0;
    std::int64_t z_m1 = 0, z_p1 = 0;
    double t_block = 0.0;

    bool omega() const noexcept {
        const auto min4 = std::min(std::min(x_m1, x_p1), std::min(z_m1, z_p1));
        return min4 > 0 && static_cast<double>(std::max(x_m2, x_p2)) <= 2.0 * t_block &&
               static_cast<double>(std::max(y_m1, y_p1)) <= 4.0 * t_block;
    }
};

// `events` must cover (0, 2T): segment_end is the time the stream was
// consumed to, and must be >= 2T. The graph must contain the ring edges
// center-2 .. center+2 (mod N).
GoodEventStats good_event_stats(std::span<const Event> events, const Graph& g, int center,
                                double t_block, double segment_end);

// Hypotheses of the zero-tolerance invasion property on one block:
//   a < (1-mu)^{4T}   and   a mu^2 (1-mu)^{8T} > theta,
// checked in log space.
struct RingCondition {
    double a = 0.0, theta = 0.0, mu = 0.0, t_block = 0.0;
    double log_a = 0.0;
    double log_decay_bound = 0.0;   // 4T log(1-mu)
    double log_invasion_lhs = 0.0;  // log a + 2 log mu + 8T log(1-mu)
    double log_theta = 0.0;
    bool decay_ok = false;
    bool invasion_ok = false;
    bool holds = false;
};

RingCondition ring_condition(double a, double theta, double mu, double t_block);

// Empirical check of the invasion property: run the full process on a ring
// from a unit mass at the center, condition on the good event, and verify
// eta_{2T}(+-1) > a in every conditioned trial. Violations mean a bug, not
// noise. Throws std::invalid_argument when the ring condition fails.
struct Lemma7Report {
    std::uint64_t trials = 0;
    std::uint64_t conditioned = 0;  // trials where the good event occurred
    std::uint64_t violations = 0;
    double min_boundary_density = 0.0;  // min over conditioned trials of min(eta_2T(-1), eta_2T(+1))
    double conditioned_fraction = 0.0;
    RingCondition condition;
    int width = 0;
    std::vector<std::uint64_t> violating_trials;  // at most 8, for reproduction
};

Lemma7Report lemma7_empirical_check(double mu, double theta, double a, double t_block,
                                    std::uint64_t n_trials, std::uint64_t master_seed,
                                    int width = 9);

}  // namespace allee
