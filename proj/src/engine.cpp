#include "allee/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace allee {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void validate_density(double v, const char* what) {
    if (!(v >= 0.0) || !(v <= 1.0)) fail(std::string(what) + " density outside [0,1]");
}

// Mixing update. Computed as (1-mu)*a + mu*b with two separate products so the
// result is a monotone function of (a, b) in floating point exactly: each
// product and the final sum round monotonically, which is what makes coupled
// replicas comparable with zero tolerance. Both results stay inside [0,1]
// automatically (each term is bounded by its coefficient and
// RN((1-mu) + mu) = 1), so the clamp branches below never fire in practice;
// they are kept as armor and the nudge magnitude is recorded.
struct MixResult {
    double a, b;
    double clamp = 0.0;
};

inline MixResult mix_values(double a, double b, double mu, double om) noexcept {
    MixResult r{om * a + mu * b, om * b + mu * a, 0.0};
    if (r.a > 1.0) { r.clamp = std::max(r.clamp, r.a - 1.0); r.a = 1.0; }
    if (r.a < 0.0) { r.clamp = std::max(r.clamp, -r.a); r.a = 0.0; }
    if (r.b > 1.0) { r.clamp = std::max(r.clamp, r.b - 1.0); r.b = 1.0; }
    if (r.b < 0.0) { r.clamp = std::max(r.clamp, -r.b); r.b = 0.0; }
    return r;
}

// Local update: snap up above theta, down below theta, fair coin on an exact tie.
inline double local_value(double v, double theta, int bit) noexcept {
    if (v > theta) return 1.0;
    if (v < theta) return 0.0;
    return bit ? 1.0 : 0.0;
}

}  // namespace

void validate_params(const Params& p) {
    if (!std::isfinite(p.theta) || !(p.theta > 0.0) || !(p.theta < 1.0))
        fail("theta must be in (0, 1), got " + std::to_string(p.theta));
    if (!std::isfinite(p.mu) || !(p.mu > 0.0) || !(p.mu <= 0.5))
        fail("mu must be in (0, 0.5], got " + std::to_string(p.mu));
}

std::vector<double> bernoulli_uniforms(int n_vertices, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> u(static_cast<std::size_t>(n_vertices));
    for (auto& x : u) x = rng.uniform01();
    return u;
}

Configuration bernoulli_from_uniforms(const std::vector<double>& u, double rho) {
    if (!(rho > 0.0) || !(rho < 1.0)) fail("rho must be in (0, 1), got " + std::to_string(rho));
    Configuration c(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) c[i] = u[i] < rho ? 1.0 : 0.0;
    return c;
}

Configuration materialize(const InitialCondition& init, int n_vertices) {
    return std::visit(
        Overloaded{
            [&](const SingleOccupied& s) {
                if (s.vertex < 0 || s.vertex >= n_vertices)
                    fail("initial vertex " + std::to_string(s.vertex) + " out of range");
                Configuration c(static_cast<std::size_t>(n_vertices), 0.0);
                c[static_cast<std::size_t>(s.vertex)] = 1.0;
                return c;
            },
            [&](const ProductBernoulli& b) {
                return bernoulli_from_uniforms(bernoulli_uniforms(n_vertices, b.seed), b.rho);
            },
            [&](const Configuration& c) {
                if (static_cast<int>(c.size()) != n_vertices)
                    fail("explicit configuration has " + std::to_string(c.size()) +
                         " entries for " + std::to_string(n_vertices) + " vertices");
                for (const double v : c) validate_density(v, "initial");
                return c;
            },
        },
        init);
}

EventStream::EventStream(const Graph& g, std::uint64_t seed, StreamMode mode)
    : graph_(&g),
      seed_(seed),
      mode_(mode),
      rng_(seed),
      n_edges_(static_cast<std::uint64_t>(g.n_edges())),
      n_clocks_(mode == StreamMode::full
                    ? n_edges_ + static_cast<std::uint64_t>(g.n_vertices())
                    : n_edges_),
      rate_(static_cast<double>(n_clocks_)) {
    if (n_clocks_ == 0) fail("event stream over a graph with no clocks");
}

Event EventStream::next() {
    t_ += rng_.exp1() / rate_;
    const std::uint64_t idx = rng_.below(n_clocks_);
    if (idx < n_edges_)
        return {t_, EventKind::mixing, static_cast<std::int32_t>(idx), 0};
    return {t_, EventKind::local, static_cast<std::int32_t>(idx - n_edges_),
            static_cast<std::int8_t>(rng_.bit())};
}

Configuration apply_mixing(const Configuration& c, const Edge& e, double mu) {
    if (!(mu > 0.0) || !(mu <= 0.5)) fail("mu must be in (0, 0.5]");
    const auto n = static_cast<int>(c.size());
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n || e.u == e.v) fail("invalid edge");
    Configuration out = c;
    const auto r = mix_values(out[static_cast<std::size_t>(e.u)],
                              out[static_cast<std::size_t>(e.v)], mu, 1.0 - mu);
    out[static_cast<std::size_t>(e.u)] = r.a;
    out[static_cast<std::size_t>(e.v)] = r.b;
    return out;
}

Configuration apply_local(const Configuration& c, int vertex, double theta, int bit) {
    if (!(theta > 0.0) || !(theta < 1.0)) fail("theta must be in (0, 1)");
    if (vertex < 0 || vertex >= static_cast<int>(c.size())) fail("vertex out of range");
    Configuration out = c;
    auto& v = out[static_cast<std::size_t>(vertex)];
    v = local_value(v, theta, bit);
    return out;
}

namespace {

TrajectoryRecord run_impl(const Graph& g, const Params& p, const InitialCondition& init,
                          EventStream& stream, const RunOptions& opt, bool mixing_only) {
    validate_params(p);
    if ((stream.mode() == StreamMode::mixing_only) != mixing_only)
        fail("event stream mode does not match the runner");
    if (stream.graph().n_vertices() != g.n_vertices() || stream.graph().n_edges() != g.n_edges())
        fail("event stream was built over a different graph");

    const int n = g.n_vertices();
    Configuration c = materialize(init, n);
    const double theta = p.theta;
    const double mu = p.mu;
    const double om = 1.0 - mu;

    TrajectoryRecord rec;
    int above = 0, below = 0, occupied = 0;
    for (const double v : c) {
        above += v > theta;
        below += v < theta;
        occupied += v != 0.0;
    }

    const auto note_absorption = [&](double t) {
        if (!rec.t_absorb) {
            rec.t_absorb = t;
            rec.outcome = above == n ? Outcome::expansion : Outcome::extinction;
        }
        if (mixing_only && below == n && !rec.tau_dispersion) rec.tau_dispersion = t;
    };
    if (above == n || below == n) note_absorption(0.0);
    if (opt.occupancy_stride != 0) rec.occupancy.emplace_back(0.0, occupied);

    const StoppingRule stop = opt.stop;
    const bool stop_on_absorption = stop.kind == StoppingRule::Kind::absorption;
    bool done = stop_on_absorption && rec.outcome != Outcome::undecided;

    while (!done && rec.event_count < stop.event_cap) {
        const Event e = stream.next();
        if (e.time > stop.time_cap) {
            rec.t_final = stop.time_cap;
            rec.final_config = std::move(c);
            return rec;
        }
        if (e.kind == EventKind::mixing) {
            const Edge ed = g.edge(e.target);
            double& a = c[static_cast<std::size_t>(ed.u)];
            double& b = c[static_cast<std::size_t>(ed.v)];
            const bool oa = a != 0.0, ob = b != 0.0;
            if (mixing_only && oa && ob && !rec.tau_collision) rec.tau_collision = e.time;
            above -= (a > theta) + (b > theta);
            below -= (a < theta) + (b < theta);
            const MixResult m = mix_values(a, b, mu, om);
            if (m.clamp > 0.0) {
                ++rec.clamp_count;
                rec.max_clamp = std::max(rec.max_clamp, m.clamp);
            }
            if (mixing_only) {
                const bool na = m.a != 0.0, nb = m.b != 0.0;
                rec.underflow_count += (oa && !na) + (ob && !nb);
                occupied += (na - oa) + (nb - ob);
            }
            a = m.a;
            b = m.b;
            above += (a > theta) + (b > theta);
            below += (a < theta) + (b < theta);
        } else {
            double& v = c[static_cast<std::size_t>(e.target)];
            above -= v > theta;
            below -= v < theta;
            v = local_value(v, theta, e.bit);
            above += v > theta;
            below += v < theta;
        }
        ++rec.event_count;
        if (above == n || below == n) {
            note_absorption(e.time);
            if (stop_on_absorption) done = true;
        }
        if (opt.occupancy_stride != 0 && rec.event_count % opt.occupancy_stride == 0)
            rec.occupancy.emplace_back(e.time, occupied);
        if (opt.observer) opt.observer(e, c);
    }
    rec.t_final = stream.time();
    rec.final_config = std::move(c);
    return rec;
}

}  // namespace

TrajectoryRecord run(const Graph& g, const Params& p, const InitialCondition& init,
                     EventStream& stream, const RunOptions& opt) {
    return run_impl(g, p, init, stream, opt, false);
}

TrajectoryRecord run_mixing_only(const Graph& g, const Params& p, const InitialCondition& init,
                                 EventStream& stream, const RunOptions& opt) {
    return run_impl(g, p, init, stream, opt, true);
}

std::vector<TrajectoryRecord> run_coupled(const Graph& g, double mu,
                                          std::span<const CoupledReplica> replicas,
                                          EventStream& stream, const CoupledOptions& opt) {
    if (replicas.empty()) fail("run_coupled needs at least one replica");
    if (!std::isfinite(mu) || !(mu > 0.0) || !(mu <= 0.5))
        fail("mu must be in (0, 0.5], got " + std::to_string(mu));
    if (stream.graph().n_vertices() != g.n_vertices() || stream.graph().n_edges() != g.n_edges())
        fail("event stream was built over a different graph");

    const int n = g.n_vertices();
    const std::size_t n_rep = replicas.size();
    const double om = 1.0 - mu;

    std::vector<Configuration> cfg(n_rep);
    std::vector<double> theta(n_rep);
    std::vector<char> flip(n_rep), decided(n_rep, 0);
    std::vector<int> above(n_rep, 0), below(n_rep, 0);
    std::vector<TrajectoryRecord> rec(n_rep);

    std::size_t undecided = n_rep;
    for (std::size_t r = 0; r < n_rep; ++r) {
        validate_params({replicas[r].theta, mu});
        if (static_cast<int>(replicas[r].init.size()) != n)
            fail("replica " + std::to_string(r) + " init has wrong size");
        for (const double v : replicas[r].init) validate_density(v, "replica");
        cfg[r] = replicas[r].init;
        theta[r] = replicas[r].theta;
        flip[r] = replicas[r].flip_bits;
        for (const double v : cfg[r]) {
            above[r] += v > theta[r];
            below[r] += v < theta[r];
        }
        if (above[r] == n || below[r] == n) {
            rec[r].t_absorb = 0.0;
            rec[r].outcome = above[r] == n ? Outcome::expansion : Outcome::extinction;
            decided[r] = 1;
            --undecided;
        }
    }

    const StoppingRule stop = opt.stop;
    const bool stop_on_absorption = stop.kind == StoppingRule::Kind::absorption;
    std::uint64_t generated = 0;
    double t_end = 0.0;

    while (!(stop_on_absorption && undecided == 0) && generated < stop.event_cap) {
        const Event e = stream.next();
        if (e.time > stop.time_cap) {
            t_end = stop.time_cap;
            break;
        }
        t_end = e.time;
        ++generated;
        if (e.kind == EventKind::mixing) {
            const Edge ed = g.edge(e.target);
            for (std::size_t r = 0; r < n_rep; ++r) {
                if (opt.freeze_decided && decided[r]) continue;
                double& a = cfg[r][static_cast<std::size_t>(ed.u)];
                double& b = cfg[r][static_cast<std::size_t>(ed.v)];
                const double th = theta[r];
                above[r] -= (a > th) + (b > th);
                below[r] -= (a < th) + (b < th);
                const MixResult m = mix_values(a, b, mu, om);
                if (m.clamp > 0.0) {
                    ++rec[r].clamp_count;
                    rec[r].max_clamp = std::max(rec[r].max_clamp, m.clamp);
                }
                a = m.a;
                b = m.b;
                above[r] += (a > th) + (b > th);
                below[r] += (a < th) + (b < th);
                ++rec[r].event_count;
            }
        } else {
            for (std::size_t r = 0; r < n_rep; ++r) {
                if (opt.freeze_decided && decided[r]) continue;
                double& v = cfg[r][static_cast<std::size_t>(e.target)];
                const double th = theta[r];
                const int bit = flip[r] ? 1 - e.bit : e.bit;
                above[r] -= v > th;
                below[r] -= v < th;
                v = local_value(v, th, bit);
                above[r] += v > th;
                below[r] += v < th;
                ++rec[r].event_count;
            }
        }
        for (std::size_t r = 0; r < n_rep; ++r) {
            if (decided[r]) continue;
            if (above[r] == n || below[r] == n) {
                rec[r].t_absorb = e.time;
                rec[r].outcome = above[r] == n ? Outcome::expansion : Outcome::extinction;
                decided[r] = 1;
                --undecided;
            }
        }
        if (opt.observer) opt.observer(e, cfg);
    }

    for (std::size_t r = 0; r < n_rep; ++r) {
        rec[r].t_final =
            (opt.freeze_decided && decided[r] && rec[r].t_absorb) ? *rec[r].t_absorb : t_end;
        rec[r].final_config = std::move(cfg[r]);
    }
    return rec;
}

std::pair<TrajectoryRecord, TrajectoryRecord> run_mirror_coupled(const Graph& g, const Params& p,
                                                                 const Configuration& init,
                                                                 EventStream& stream,
                                                                 const CoupledOptions& opt) {
    validate_params(p);
    Configuration mirror(init.size());
    for (std::size_t i = 0; i < init.size(); ++i) mirror[i] = 1.0 - init[i];
    const CoupledReplica reps[2] = {
        {init, p.theta, false},
        {std::move(mirror), 1.0 - p.theta, true},
    };
    auto out = run_coupled(g, p.mu, reps, stream, opt);
    return {std::move(out[0]), std::move(out[1])};
}

}  // namespace allee
