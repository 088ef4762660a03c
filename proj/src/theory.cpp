#include "allee/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace allee {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Threshold below which exp() leaves the normal range.
double log_dbl_min() {
    static const double v = std::log(std::numeric_limits<double>::min());
    return v;
}

// log(sum exp(l_i)) without leaving log space.
double log_sum_exp(std::span<const double> logs) {
    double m = -std::numeric_limits<double>::infinity();
    for (const double l : logs) m = std::max(m, l);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (const double l : logs) s += std::exp(l - m);
    return m + std::log(s);
}

}  // namespace

LogValue make_log_value(double log_value) noexcept {
    LogValue v;
    v.log_value = log_value;
    v.linear_value = std::exp(log_value);
    v.underflow = log_value < log_dbl_min();
    return v;
}

DispersionScale dispersion_scale(double theta, double mu, int n_vertices) {
    validate_params({theta, mu});
    if (n_vertices < 3) fail("dispersion scale needs at least 3 vertices");
    // Smallest n >= 1 with (1-mu)^n < theta. Closed-form start, then adjust so
    // the strict inequality is honoured exactly in double arithmetic.
    const double om = 1.0 - mu;
    int n = std::max(1, static_cast<int>(std::floor(std::log(theta) / std::log(om))));
    while (!(std::pow(om, n) < theta)) ++n;
    while (n > 1 && std::pow(om, n - 1) < theta) --n;

    const double lnln = std::log(std::log(static_cast<double>(n_vertices)));
    DispersionScale s;
    s.n = n;
    s.t_n = static_cast<double>(n) * lnln / static_cast<double>(n_vertices);
    s.k_n = std::pow(4.0, static_cast<double>(n) * lnln);
    return s;
}

LogValue theorem2_threshold(double mu) {
    if (!std::isfinite(mu) || !(mu > 0.0) || !(mu <= 0.5))
        fail("mu must be in (0, 0.5], got " + std::to_string(mu));
    return make_log_value(2.0 * std::log(mu) + 1140.0 * std::log1p(-mu));
}

double log_poisson_upper_tail(double lambda, double m) {
    if (!std::isfinite(lambda) || !(lambda > 0.0)) fail("lambda must be positive");
    if (!std::isfinite(m)) fail("tail point must be finite");
    if (m < 0.0) return 0.0;  // P(X > m) = 1
    if (m < lambda)
        fail("log_poisson_upper_tail expects m >= lambda (tail beyond the mean)");

    // P(X > m) = sum_{k > m} e^-lambda lambda^k / k!, first index floor(m)+1.
    const double k0 = std::floor(m) + 1.0;
    const double log_t0 = k0 * std::log(lambda) - lambda - std::lgamma(k0 + 1.0);

    // Terms relative to the first one decay at least geometrically
    // (lambda/k < 1 for every k in the tail), so sum the ratios with Kahan
    // compensation until they stop mattering at the 1e-30 level.
    double sum = 1.0, comp = 0.0, rel = 1.0;
    for (double k = k0 + 1.0;; k += 1.0) {
        rel *= lambda / k;
        const double y = rel - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (rel < sum * 1e-30) break;
    }
    return log_t0 + std::log(sum);
}

Lemma6Result lemma6_complement(double t_block) {
    if (!std::isfinite(t_block) || !(t_block > 0.0)) fail("block length must be positive");
    const double T = t_block;
    Lemma6Result r;
    r.t_block = T;
    r.pointmass = make_log_value(std::log(4.0) - T);
    r.near_tail = make_log_value(std::log(2.0) + log_poisson_upper_tail(T, 2.0 * T));
    r.far_tail = make_log_value(std::log(2.0) + log_poisson_upper_tail(2.0 * T, 4.0 * T));
    const double logs[3] = {r.pointmass.log_value, r.near_tail.log_value, r.far_tail.log_value};
    r.total = make_log_value(log_sum_exp(logs));
    r.log_bound = -36.0 * std::log(3.0);
    r.passes = r.total.log_value < r.log_bound;
    return r;
}

GoodEventStats good_event_stats(std::span<const Event> events, const Graph& g, int center,
                                double t_block, double segment_end) {
    if (!(t_block > 0.0)) fail("block length must be positive");
    if (segment_end < 2.0 * t_block)
        fail("event segment covers only t < " + std::to_string(segment_end) +
             ", needs 2T = " + std::to_string(2.0 * t_block));
    const int n = g.n_vertices();
    if (n < 5) fail("good-event window needs at least 5 vertices");
    const auto rel = [&](int offset) { return ((center + offset) % n + n) % n; };
    const int vm2 = rel(-2), vm1 = rel(-1), v0 = rel(0), vp1 = rel(1), vp2 = rel(2);

    const int e_m2 = g.edge_index(vm2, vm1);
    const int e_m1 = g.edge_index(vm1, v0);
    const int e_p1 = g.edge_index(v0, vp1);
    const int e_p2 = g.edge_index(vp1, vp2);
    if (e_m2 < 0 || e_m1 < 0 || e_p1 < 0 || e_p2 < 0)
        fail("graph lacks the ring edges around the window center");

    GoodEventStats s;
    s.t_block = t_block;
    const double T = t_block;
    for (const Event& e : events) {
        const double t = e.time;
        if (e.kind == EventKind::mixing) {
            const int idx = e.target;
            if (t > 0.0 && t < T) {
                s.x_m2 += idx == e_m2;
                s.x_m1 += idx == e_m1;
                s.x_p1 += idx == e_p1;
                s.x_p2 += idx == e_p2;
            } else if (t > T && t < 2.0 * T) {
                s.y_m1 += (idx == e_m2) + (idx == e_m1);
                s.y_p1 += (idx == e_p1) + (idx == e_p2);
            }
        } else {
            if (t > T && t < 2.0 * T) {
                s.z_m1 += e.target == vm1;
                s.z_p1 += e.target == vp1;
            }
        }
    }
    return s;
}

RingCondition ring_condition(double a, double theta, double mu, double t_block) {
    validate_params({theta, mu});
    if (!std::isfinite(a) || !(a > 0.0) || !(a < 1.0))
        fail("a must be in (0, 1), got " + std::to_string(a));
    if (!(t_block > 0.0)) fail("block length must be positive");

    RingCondition c;
    c.a = a;
    c.theta = theta;
    c.mu = mu;
    c.t_block = t_block;
    c.log_a = std::log(a);
    c.log_decay_bound = 4.0 * t_block * std::log1p(-mu);
    c.log_invasion_lhs = c.log_a + 2.0 * std::log(mu) + 8.0 * t_block * std::log1p(-mu);
    c.log_theta = std::log(theta);
    c.decay_ok = c.log_a < c.log_decay_bound;
    c.invasion_ok = c.log_invasion_lhs > c.log_theta;
    c.holds = c.decay_ok && c.invasion_ok;
    return c;
}

Lemma7Report lemma7_empirical_check(double mu, double theta, double a, double t_block,
                                    std::uint64_t n_trials, std::uint64_t master_seed,
                                    int width) {
    const RingCondition cond = ring_condition(a, theta, mu, t_block);
    if (width < 7) fail("ring width must be at least 7, got " + std::to_string(width));
    if (!cond.holds)
        fail(std::string("ring condition fails: ") +
             (cond.decay_ok ? "" : "a >= (1-mu)^{4T}; ") +
             (cond.invasion_ok ? "" : "a mu^2 (1-mu)^{8T} <= theta; ") +
             "the invasion property is not guaranteed under these parameters");

    const Graph g = Graph::ring(width);
    const Params p{theta, mu};
    const int vm1 = width - 1, vp1 = 1;

    Lemma7Report rep;
    rep.condition = cond;
    rep.width = width;
    rep.min_boundary_density = std::numeric_limits<double>::infinity();

    std::vector<Event> events;
    for (std::uint64_t k = 0; k < n_trials; ++k) {
        events.clear();
        EventStream stream(g, split_seed(master_seed, k), StreamMode::full);
        RunOptions opt;
        opt.stop = StoppingRule::time(2.0 * t_block);
        opt.observer = [&events](const Event& e, const Configuration&) { events.push_back(e); };
        const TrajectoryRecord rec = run(g, p, SingleOccupied{0}, stream, opt);

        ++rep.trials;
        const GoodEventStats stats = good_event_stats(events, g, 0, t_block, 2.0 * t_block);
        if (!stats.omega()) continue;
        ++rep.conditioned;
        const double boundary =
            std::min(rec.final_config[static_cast<std::size_t>(vm1)],
                     rec.final_config[static_cast<std::size_t>(vp1)]);
        rep.min_boundary_density = std::min(rep.min_boundary_density, boundary);
        if (!(boundary > a)) {
            ++rep.violations;
            if (rep.violating_trials.size() < 8) rep.violating_trials.push_back(k);
        }
    }
    rep.conditioned_fraction =
        rep.trials ? static_cast<double>(rep.conditioned) / static_cast<double>(rep.trials) : 0.0;
    if (rep.conditioned == 0) rep.min_boundary_density = 0.0;
    return rep;
}

}  // namespace allee
