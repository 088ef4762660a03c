#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "allee/engine.hpp"
#include "allee/graph.hpp"
#include "allee/stats.hpp"
#include "allee/theory.hpp"

namespace allee {

// ---------------------------------------------------------------------------
// Expansion-probability estimation
//
// Seed discipline (part of the output contract): replicate k of a plain
// estimate uses base = split_seed(master_seed, k), the event stream runs on
// split_seed(base, 0) and a Bernoulli initial condition redraws its patches
// from split_seed(base, 1). Results are therefore independent of worker count
// and of the order replicates are scheduled in.

struct EstimateOptions {
    int replicates = 100;
    std::uint64_t master_seed = 1;
    StoppingRule stop = StoppingRule::absorption();
    int workers = 1;
};

struct EstimateResult {
    int n_rep = 0;
    int n_expand = 0;
    int n_extinct = 0;
    int n_undecided = 0;
    double p_hat = 0.0;  // expansion fraction among decided replicates (Wilson)
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    double mean_extinction_time = 0.0;  // NaN when nothing went extinct
    std::uint64_t total_events = 0;

    int decided() const noexcept { return n_expand + n_extinct; }
};

EstimateResult estimate_expansion(const Graph& g, const Params& p, const InitialCondition& init,
                                  const EstimateOptions& opt);

// ---------------------------------------------------------------------------
// Threshold/initial-density sweep (phase diagram)

// Cell centers (i + 0.5) / cells, strictly inside (0, 1).
std::vector<double> centered_grid(int cells);

struct SweepGrid {
    std::vector<double> thetas;  // ascending
    std::vector<double> rhos;    // ascending
    int replicates = 100;
    std::uint64_t master_seed = 1;
    std::uint64_t event_cap = 100'000'000;
    // Coupled mode drives every theta cell of one (replicate, rho) row with
    // the same event stream and shares the per-vertex uniforms behind the
    // Bernoulli initial condition across rho rows. Estimates stay unbiased,
    // variance drops, and monotonicity in theta and rho holds exactly
    // cell-by-cell, not just in expectation. Independent mode draws a fresh
    // stream per cell and replicate instead.
    bool coupled = true;
    int workers = 1;
};

struct SweepCellCounts {
    int n_expand = 0;
    int n_extinct = 0;
    int n_undecided = 0;
};

struct SweepResult {
    std::vector<double> thetas;
    std::vector<double> rhos;
    int replicates = 0;
    double mu = 0.0;
    std::uint64_t total_events = 0;      // replica-events applied across the grid
    std::vector<SweepCellCounts> cells;  // [rho_index * thetas.size() + theta_index]

    const SweepCellCounts& cell(int rho_index, int theta_index) const {
        return cells[static_cast<std::size_t>(rho_index) * thetas.size() +
                     static_cast<std::size_t>(theta_index)];
    }
    SweepCellCounts& cell(int rho_index, int theta_index) {
        return cells[static_cast<std::size_t>(rho_index) * thetas.size() +
                     static_cast<std::size_t>(theta_index)];
    }
};

SweepResult sweep_expansion(const Graph& g, double mu, const SweepGrid& grid);

// Header exactly: theta,rho,n_rep,n_expand,n_extinct,n_undecided,p_hat,ci_lo,ci_hi
// Rows ordered rho-major (theta varies fastest) so plotting tools can treat
// the file as scanlines of a theta x rho image.
void write_sweep_csv(std::ostream& out, const SweepResult& r);

// Companion gnuplot script rendering column 7 (p_hat) as a heatmap.
void write_heatmap_script(std::ostream& out, const std::string& csv_name,
                          const std::string& png_name);

// Interpolated theta at which p_hat crosses `level` along ascending theta at
// fixed rho; nullopt when the row never crosses (or has no decided cells).
std::optional<double> level_crossing_theta(const SweepResult& r, int rho_index, double level);

// ---------------------------------------------------------------------------
// Scaling studies in N

struct ScalingRow {
    int n_vertices = 0;
    double t_n = 0.0;  // dispersion time scale, for reference
    EstimateResult est;
};

struct ScalingResult {
    std::vector<ScalingRow> rows;
    bool strictly_decreasing = false;  // p_hat strictly decreasing across rows
                                       // (ties allowed only at the exact-0 floor)
    bool flat_3se = false;             // all pairwise |dp| <= 3 * difference SE
    double z_first_last = 0.0;         // (p_first - p_last) / pooled SE
    bool significant_decrease = false; // z_first_last > kZ95
};

struct ScalingOptions {
    std::vector<int> sizes;
    int replicates = 200;
    std::uint64_t master_seed = 1;
    StoppingRule stop = StoppingRule::absorption();
    int workers = 1;
};

// Complete graphs, single occupied patch: expansion probability should fall
// toward zero as N grows.
ScalingResult scaling_complete(const Params& p, const ScalingOptions& opt);

// Rings, single occupied patch: expansion probability should stay bounded
// away from zero, flat in N.
ScalingResult scaling_ring(const Params& p, const ScalingOptions& opt);

// n,n_rep,n_expand,n_extinct,n_undecided,p_hat,ci_lo,ci_hi,mean_extinction_time
void write_scaling_csv(std::ostream& out, const ScalingResult& r);

// Mixing-only diagnostic: fraction of replicates whose first collision /
// dispersion happens before the t_n horizon.
struct MixingDiagnosticRow {
    int n_vertices = 0;
    double t_n = 0.0;
    int replicates = 0;
    double frac_collision_by_tn = 0.0;
    double frac_dispersion_by_tn = 0.0;
};

MixingDiagnosticRow mixing_diagnostic(const Graph& g, const Params& p, int replicates,
                                      std::uint64_t master_seed, int workers);

// n,t_n,n_rep,frac_collision_le_tn,frac_dispersion_le_tn
void write_diagnostic_csv(std::ostream& out, std::span<const MixingDiagnosticRow> rows);

// ---------------------------------------------------------------------------
// Coupling invariant battery (domination / mirror / mass conservation)

struct CouplingCheckReport {
    std::uint64_t seeds = 0;
    std::uint64_t events_per_seed = 0;
    std::uint64_t domination_violations = 0;  // exact pointwise comparison
    double max_mirror_error = 0.0;            // sup |eta + eta_mirror - 1|
    double max_mass_drift = 0.0;              // mixing-only, sup |sum - sum_0|
    double max_clamp = 0.0;

    bool ok(double mirror_tol = 1e-12, double mass_tol = 1e-9) const noexcept {
        return domination_violations == 0 && max_mirror_error <= mirror_tol &&
               max_mass_drift <= mass_tol;
    }
};

struct CouplingCheckOptions {
    double theta_low = 0.3;   // dominating replica's threshold
    double theta_high = 0.6;  // dominated replica's threshold
    double rho_high = 0.7;    // dominating replica's initial density
    double rho_low = 0.4;     // dominated replica's initial density
    std::uint64_t n_seeds = 10;
    std::uint64_t events = 100'000;
    std::uint64_t master_seed = 1;
    int workers = 1;
};

CouplingCheckReport coupling_checks(const Graph& g, double mu, const CouplingCheckOptions& opt);

// ---------------------------------------------------------------------------
// Deterministic worker pool: runs body(0..n-1) on `workers` threads. Results
// must be written to preallocated per-job slots; any job throwing stops the
// pool and rethrows with the lowest failing job index.
void parallel_for(std::uint64_t n_jobs, int workers,
                  const std::function<void(std::uint64_t)>& body);

}  // namespace allee
