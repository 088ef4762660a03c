#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "allee/graph.hpp"
#include "allee/observables.hpp"
#include "allee/rng.hpp"
#include "allee/types.hpp"

namespace allee {

// Model parameters. theta is the survival threshold, mu the fraction of the
// density difference exchanged by one mixing event.
struct Params {
    double theta = 0.5;  // in (0, 1)
    double mu = 0.2;     // in (0, 1/2]
};

// Throws std::invalid_argument with a message naming the offending parameter.
void validate_params(const Params& p);

// ---------------------------------------------------------------------------
// Initial conditions

struct SingleOccupied {
    int vertex = 0;  // density 1 there, 0 elsewhere
};

// Independent Bernoulli(rho) patches: vertex x gets density 1 iff u_x < rho
// with u_x ~ U(0,1) drawn from Rng(seed) in vertex order.
struct ProductBernoulli {
    double rho = 0.5;
    std::uint64_t seed = 0;
};

using InitialCondition = std::variant<SingleOccupied, ProductBernoulli, Configuration>;

Configuration materialize(const InitialCondition& init, int n_vertices);

// The per-vertex uniforms behind ProductBernoulli, exposed so sweeps can reuse
// one draw across a rho-grid (coupled initial conditions).
std::vector<double> bernoulli_uniforms(int n_vertices, std::uint64_t seed);
Configuration bernoulli_from_uniforms(const std::vector<double>& u, double rho);

// ---------------------------------------------------------------------------
// Graphical representation: the superposed Poisson event stream

enum class EventKind : std::uint8_t { mixing, local };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::mixing;
    std::int32_t target = 0;  // edge index for mixing, vertex index for local
    std::int8_t bit = 0;      // fair coin, local events only
};

enum class StreamMode : std::uint8_t { full, mixing_only };

// Rate-(|E|+|V|) superposition race: the wait to the next event is
// Exp(total rate), the ringing clock is uniform over edge clocks first, then
// vertex clocks in index order. mixing_only races the |E| edge clocks alone.
// The fair bit is drawn only when a local event fires, so the mixing-event
// subsequence of a full stream does not depend on theta.
class EventStream {
public:
    EventStream(const Graph& g, std::uint64_t seed, StreamMode mode);

    Event next();

    double time() const noexcept { return t_; }
    StreamMode mode() const noexcept { return mode_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Graph& graph() const noexcept { return *graph_; }
    double total_rate() const noexcept { return rate_; }

private:
    const Graph* graph_;
    std::uint64_t seed_;
    StreamMode mode_;
    Rng rng_;
    std::uint64_t n_edges_;
    std::uint64_t n_clocks_;
    double rate_;
    double t_ = 0.0;
};

// ---------------------------------------------------------------------------
// Single-event updates (value-returning forms used by tests and examples; the
// runners below use the in-place equivalents)

Configuration apply_mixing(const Configuration& c, const Edge& e, double mu);
Configuration apply_local(const Configuration& c, int vertex, double theta, int bit);

// ---------------------------------------------------------------------------
// Trajectory runners

struct StoppingRule {
    enum class Kind : std::uint8_t { absorption, event_cap, time_cap };

    Kind kind = Kind::absorption;
    // Safety cap in every mode; a run that exhausts it stays undecided unless
    // absorption happened earlier.
    std::uint64_t event_cap = 100'000'000;
    double time_cap = std::numeric_limits<double>::infinity();

    static StoppingRule absorption(std::uint64_t safety_cap = 100'000'000) {
        return {Kind::absorption, safety_cap, std::numeric_limits<double>::infinity()};
    }
    static StoppingRule events(std::uint64_t n) {
        return {Kind::event_cap, n, std::numeric_limits<double>::infinity()};
    }
    static StoppingRule time(double horizon, std::uint64_t safety_cap = 100'000'000) {
        return {Kind::time_cap, safety_cap, horizon};
    }
};

struct TrajectoryRecord {
    Outcome outcome = Outcome::undecided;
    std::optional<double> t_absorb;      // first absorption time, even if the run continued
    std::optional<double> tau_collision; // mixing-only: first occupied-occupied mixing
    std::optional<double> tau_dispersion;// mixing-only: first entry into the lower set
    std::uint64_t event_count = 0;
    double t_final = 0.0;
    Configuration final_config;
    // (time, occupied patches) samples, mixing-only, every `occupancy_stride` events
    std::vector<std::pair<double, int>> occupancy;
    std::uint64_t underflow_count = 0;  // occupied patch mixed to exactly 0
    std::uint64_t clamp_count = 0;      // mixing result nudged back into [0,1]
    double max_clamp = 0.0;             // largest such nudge (should be ~1 ulp)
};

// Called after each applied event with the post-event configuration.
using Observer = std::function<void(const Event&, const Configuration&)>;

struct RunOptions {
    StoppingRule stop = StoppingRule::absorption();
    Observer observer;              // optional
    std::uint64_t occupancy_stride = 0;  // 0 = don't sample
};

// Full process (mixing + local events). `stream` must be a full-mode stream
// over the same graph.
TrajectoryRecord run(const Graph& g, const Params& p, const InitialCondition& init,
                     EventStream& stream, const RunOptions& opt = {});

// Mixing-only process; theta plays no dynamical role but still defines the
// lower set used for tau_dispersion.
TrajectoryRecord run_mixing_only(const Graph& g, const Params& p, const InitialCondition& init,
                                 EventStream& stream, const RunOptions& opt = {});

// ---------------------------------------------------------------------------
// Coupled runners: several replicas driven by one event stream (shared clocks
// and shared fair bits). With theta_1 <= theta_2 and init_1 >= init_2
// pointwise, replica 1 dominates replica 2 pointwise after every event.

struct CoupledReplica {
    Configuration init;
    double theta = 0.5;
    bool flip_bits = false;  // mirror replicas consume the complement bit
};

struct CoupledOptions {
    StoppingRule stop = StoppingRule::absorption();  // absorption = all replicas decided
    bool freeze_decided = false;  // stop updating a replica once absorbed
    std::function<void(const Event&, std::span<const Configuration>)> observer;
};

std::vector<TrajectoryRecord> run_coupled(const Graph& g, double mu,
                                          std::span<const CoupledReplica> replicas,
                                          EventStream& stream, const CoupledOptions& opt = {});

// Mirror pair: replica B starts at 1 - init, thresholds 1 - theta, and sees
// flipped bits; B's trajectory is the pointwise complement of A's.
std::pair<TrajectoryRecord, TrajectoryRecord> run_mirror_coupled(
    const Graph& g, const Params& p, const Configuration& init, EventStream& stream,
    const CoupledOptions& opt = {});

}  // namespace allee
