#include "allee/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <variant>

namespace allee {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_grid_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) fail(std::string(name) + " grid is empty");
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!(axis[i] > 0.0) || !(axis[i] < 1.0))
            fail(std::string(name) + " grid value " + g17(axis[i]) + " outside (0, 1)");
        if (i > 0 && !(axis[i] > axis[i - 1]))
            fail(std::string(name) + " grid must be strictly ascending");
    }
}

}  // namespace

void parallel_for(std::uint64_t n_jobs, int workers,
                  const std::function<void(std::uint64_t)>& body) {
    if (n_jobs == 0) return;
    if (workers < 1) fail("workers must be >= 1, got " + std::to_string(workers));
    if (workers == 1 || n_jobs == 1) {
        for (std::uint64_t i = 0; i < n_jobs; ++i) body(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex err_mutex;
    bool have_error = false;
    std::uint64_t error_job = 0;
    std::string error_what;

    const auto work = [&] {
        for (;;) {
            if (abort.load(std::memory_order_relaxed)) return;
            const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n_jobs) return;
            try {
                body(i);
            } catch (const std::exception& e) {
                const std::lock_guard<std::mutex> lock(err_mutex);
                if (!have_error || i < error_job) {
                    have_error = true;
                    error_job = i;
                    error_what = e.what();
                }
                abort.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    const auto n_threads = static_cast<int>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), n_jobs));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (have_error)
        throw std::runtime_error("worker job " + std::to_string(error_job) +
                                 " failed: " + error_what);
}

EstimateResult estimate_expansion(const Graph& g, const Params& p, const InitialCondition& init,
                                  const EstimateOptions& opt) {
    validate_params(p);
    if (opt.replicates < 1) fail("replicates must be >= 1");

    const auto n_rep = static_cast<std::uint64_t>(opt.replicates);
    std::vector<Outcome> outcome(n_rep, Outcome::undecided);
    std::vector<double> ext_time(n_rep, 0.0);
    std::vector<char> went_extinct(n_rep, 0);
    std::vector<std::uint64_t> events(n_rep, 0);

    parallel_for(n_rep, opt.workers, [&](std::uint64_t k) {
        const std::uint64_t base = split_seed(opt.master_seed, k);
        try {
            InitialCondition local = init;
            if (auto* pb = std::get_if<ProductBernoulli>(&local))
                pb->seed = split_seed(base, 1);
            EventStream stream(g, split_seed(base, 0), StreamMode::full);
            RunOptions ro;
            ro.stop = opt.stop;
            const TrajectoryRecord rec = run(g, p, local, stream, ro);
            outcome[k] = rec.outcome;
            events[k] = rec.event_count;
            if (rec.outcome == Outcome::extinction && rec.t_absorb) {
                ext_time[k] = *rec.t_absorb;
                went_extinct[k] = 1;
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + std::to_string(k) + " (seed " +
                                     std::to_string(base) + "): " + e.what());
        }
    });

    EstimateResult r;
    r.n_rep = opt.replicates;
    double ext_sum = 0.0;
    int ext_n = 0;
    for (std::uint64_t k = 0; k < n_rep; ++k) {
        switch (outcome[k]) {
            case Outcome::expansion: ++r.n_expand; break;
            case Outcome::extinction: ++r.n_extinct; break;
            case Outcome::undecided: ++r.n_undecided; break;
        }
        if (went_extinct[k]) {
            ext_sum += ext_time[k];
            ++ext_n;
        }
        r.total_events += events[k];
    }
    const WilsonInterval w = wilson(r.n_expand, r.decided());
    r.p_hat = w.p_hat;
    r.ci_lo = w.lo;
    r.ci_hi = w.hi;
    r.mean_extinction_time =
        ext_n > 0 ? ext_sum / ext_n : std::numeric_limits<double>::quiet_NaN();
    return r;
}

std::vector<double> centered_grid(int cells) {
    if (cells < 1) fail("grid needs at least one cell");
    std::vector<double> v(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i)
        v[static_cast<std::size_t>(i)] = (i + 0.5) / static_cast<double>(cells);
    return v;
}

SweepResult sweep_expansion(const Graph& g, double mu, const SweepGrid& grid) {
    validate_params({0.5, mu});  // dummy theta; cells carry their own
    require_grid_axis(grid.thetas, "theta");
    require_grid_axis(grid.rhos, "rho");
    if (grid.replicates < 1) fail("replicates must be >= 1");

    const int n = g.n_vertices();
    const std::size_t nt = grid.thetas.size();
    const std::size_t nr = grid.rhos.size();
    const auto reps = static_cast<std::uint64_t>(grid.replicates);

    SweepResult res;
    res.thetas = grid.thetas;
    res.rhos = grid.rhos;
    res.replicates = grid.replicates;
    res.mu = mu;
    res.cells.assign(nt * nr, {});

    if (grid.coupled) {
        // One event stream and one uniform draw per replicate; rho rows reuse
        // the uniforms, theta cells share the stream within a row.
        std::vector<std::uint8_t> slot(nr * nt * reps);
        std::vector<std::uint64_t> job_events(nr * reps, 0);
        parallel_for(reps * nr, grid.workers, [&](std::uint64_t j) {
            const std::uint64_t k = j / nr;
            const auto ri = static_cast<std::size_t>(j % nr);
            const std::uint64_t base = split_seed(grid.master_seed, k);
            try {
                const auto u = bernoulli_uniforms(n, split_seed(base, 1));
                const Configuration init = bernoulli_from_uniforms(u, grid.rhos[ri]);
                std::vector<CoupledReplica> replicas(nt);
                for (std::size_t ti = 0; ti < nt; ++ti)
                    replicas[ti] = {init, grid.thetas[ti], false};
                EventStream stream(g, split_seed(base, 0), StreamMode::full);
                CoupledOptions co;
                co.stop = StoppingRule::absorption(grid.event_cap);
                co.freeze_decided = true;
                const auto recs = run_coupled(g, mu, replicas, stream, co);
                std::uint64_t ev = 0;
                for (std::size_t ti = 0; ti < nt; ++ti) {
                    slot[(ri * nt + ti) * reps + k] =
                        static_cast<std::uint8_t>(recs[ti].outcome);
                    ev += recs[ti].event_count;
                }
                job_events[j] = ev;
            } catch (const std::exception& e) {
                throw std::runtime_error("rho row " + std::to_string(ri) + ", replicate " +
                                         std::to_string(k) + " (seed " + std::to_string(base) +
                                         "): " + e.what());
            }
        });
        for (std::size_t ri = 0; ri < nr; ++ri)
            for (std::size_t ti = 0; ti < nt; ++ti) {
                auto& c = res.cell(static_cast<int>(ri), static_cast<int>(ti));
                for (std::uint64_t k = 0; k < reps; ++k) {
                    switch (static_cast<Outcome>(slot[(ri * nt + ti) * reps + k])) {
                        case Outcome::expansion: ++c.n_expand; break;
                        case Outcome::extinction: ++c.n_extinct; break;
                        case Outcome::undecided: ++c.n_undecided; break;
                    }
                }
            }
        for (const std::uint64_t ev : job_events) res.total_events += ev;
    } else {
        std::vector<std::uint64_t> cell_events(nr * nt, 0);
        parallel_for(static_cast<std::uint64_t>(nr * nt), grid.workers, [&](std::uint64_t cell) {
            const auto ri = static_cast<std::size_t>(cell / nt);
            const auto ti = static_cast<std::size_t>(cell % nt);
            const std::uint64_t cell_base = split_seed(grid.master_seed, cell);
            SweepCellCounts counts;
            for (std::uint64_t k = 0; k < reps; ++k) {
                const std::uint64_t rep_base = split_seed(cell_base, k);
                try {
                    EventStream stream(g, split_seed(rep_base, 0), StreamMode::full);
                    const ProductBernoulli init{grid.rhos[ri], split_seed(rep_base, 1)};
                    RunOptions ro;
                    ro.stop = StoppingRule::absorption(grid.event_cap);
                    const TrajectoryRecord rec = run(g, {grid.thetas[ti], mu}, init, stream, ro);
                    cell_events[cell] += rec.event_count;
                    switch (rec.outcome) {
                        case Outcome::expansion: ++counts.n_expand; break;
                        case Outcome::extinction: ++counts.n_extinct; break;
                        case Outcome::undecided: ++counts.n_undecided; break;
                    }
                } catch (const std::exception& e) {
                    throw std::runtime_error("cell (" + std::to_string(ri) + "," +
                                             std::to_string(ti) + "), replicate " +
                                             std::to_string(k) + " (seed " +
                                             std::to_string(rep_base) + "): " + e.what());
                }
            }
            res.cell(static_cast<int>(ri), static_cast<int>(ti)) = counts;
        });
        for (const std::uint64_t ev : cell_events) res.total_events += ev;
    }
    return res;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
    out << "theta,rho,n_rep,n_expand,n_extinct,n_undecided,p_hat,ci_lo,ci_hi\n";
    for (std::size_t ri = 0; ri < r.rhos.size(); ++ri) {
        for (std::size_t ti = 0; ti < r.thetas.size(); ++ti) {
            const auto& c = r.cell(static_cast<int>(ri), static_cast<int>(ti));
            const WilsonInterval w = wilson(c.n_expand, c.n_expand + c.n_extinct);
            out << g17(r.thetas[ti]) << ',' << g17(r.rhos[ri]) << ',' << r.replicates << ','
                << c.n_expand << ',' << c.n_extinct << ',' << c.n_undecided << ','
                << g17(w.p_hat) << ',' << g17(w.lo) << ',' << g17(w.hi) << '\n';
        }
    }
}

void write_heatmap_script(std::ostream& out, const std::string& csv_name,
                          const std::string& png_name) {
    out << "# Render the sweep as a p_hat heatmap: gnuplot <this file>\n"
           "set datafile separator comma\n"
           "set terminal pngcairo size 900,720\n"
           "set output '" << png_name << "'\n"
           "set xlabel 'theta'\n"
           "set ylabel 'rho'\n"
           "set cblabel 'expansion probability'\n"
           "set xrange [0:1]\n"
           "set yrange [0:1]\n"
           "set cbrange [0:1]\n"
           "plot '" << csv_name << "' skip 1 using 1:2:7 with image notitle\n";
}

std::optional<double> level_crossing_theta(const SweepResult& r, int rho_index, double level) {
    if (rho_index < 0 || static_cast<std::size_t>(rho_index) >= r.rhos.size())
        fail("rho index out of range");
    bool have_prev = false;
    double prev_theta = 0.0, prev_p = 0.0;
    for (std::size_t ti = 0; ti < r.thetas.size(); ++ti) {
        const auto& c = r.cell(rho_index, static_cast<int>(ti));
        const int decided = c.n_expand + c.n_extinct;
        if (decided == 0) continue;
        const double p = static_cast<double>(c.n_expand) / decided;
        const double theta = r.thetas[ti];
        if (have_prev && prev_p >= level && p < level) {
            const double span = prev_p - p;
            if (span <= 0.0) return theta;
            return prev_theta + (theta - prev_theta) * (prev_p - level) / span;
        }
        have_prev = true;
        prev_theta = theta;
        prev_p = p;
    }
    return std::nullopt;
}

namespace {

ScalingResult scaling_impl(const Params& p, const ScalingOptions& opt, bool complete_graph) {
    validate_params(p);
    if (opt.sizes.empty()) fail("no graph sizes given");
    ScalingResult res;
    res.rows.reserve(opt.sizes.size());
    for (std::size_t si = 0; si < opt.sizes.size(); ++si) {
        const int n = opt.sizes[si];
        const Graph g = complete_graph ? Graph::complete(n) : Graph::ring(n);
        EstimateOptions eo;
        eo.replicates = opt.replicates;
        eo.master_seed = split_seed(opt.master_seed, si);
        eo.stop = opt.stop;
        eo.workers = opt.workers;
        ScalingRow row;
        row.n_vertices = n;
        row.t_n = dispersion_scale(p.theta, p.mu, n).t_n;
        row.est = estimate_expansion(g, p, SingleOccupied{0}, eo);
        res.rows.push_back(std::move(row));
    }

    // Strict decrease wherever the estimator can resolve it.  p_hat lives on a
    // 1/n_rep lattice, so once the true probability drops far below 1/n_rep the
    // estimate floors at exactly 0; consecutive exact zeros are consistent with
    // a decreasing trend and do not break it.  Ties anywhere else do.
    res.strictly_decreasing = res.rows.size() >= 2;
    for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
        const double a = res.rows[i].est.p_hat;
        const double b = res.rows[i + 1].est.p_hat;
        if (!(b < a || (a == 0.0 && b == 0.0))) res.strictly_decreasing = false;
    }

    res.flat_3se = true;
    for (std::size_t i = 0; i < res.rows.size(); ++i)
        for (std::size_t j = i + 1; j < res.rows.size(); ++j) {
            const auto& a = res.rows[i].est;
            const auto& b = res.rows[j].est;
            const double se = difference_se(a.n_expand, a.decided(), b.n_expand, b.decided());
            if (std::abs(a.p_hat - b.p_hat) > 3.0 * se) res.flat_3se = false;
        }

    const auto& first = res.rows.front().est;
    const auto& last = res.rows.back().est;
    res.z_first_last =
        two_proportion_z(first.n_expand, first.decided(), last.n_expand, last.decided());
    res.significant_decrease = res.z_first_last > kZ95;
    return res;
}

}  // namespace

ScalingResult scaling_complete(const Params& p, const ScalingOptions& opt) {
    return scaling_impl(p, opt, true);
}

ScalingResult scaling_ring(const Params& p, const ScalingOptions& opt) {
    return scaling_impl(p, opt, false);
}

void write_scaling_csv(std::ostream& out, const ScalingResult& r) {
    out << "n,n_rep,n_expand,n_extinct,n_undecided,p_hat,ci_lo,ci_hi,mean_extinction_time\n";
    for (const auto& row : r.rows) {
        const auto& e = row.est;
        out << row.n_vertices << ',' << e.n_rep << ',' << e.n_expand << ',' << e.n_extinct
            << ',' << e.n_undecided << ',' << g17(e.p_hat) << ',' << g17(e.ci_lo) << ','
            << g17(e.ci_hi) << ',' << g17(e.mean_extinction_time) << '\n';
    }
}

MixingDiagnosticRow mixing_diagnostic(const Graph& g, const Params& p, int replicates,
                                      std::uint64_t master_seed, int workers) {
    validate_params(p);
    if (replicates < 1) fail("replicates must be >= 1");
    const DispersionScale scale = dispersion_scale(p.theta, p.mu, g.n_vertices());

    const auto n_rep = static_cast<std::uint64_t>(replicates);
    std::vector<char> collided(n_rep, 0), dispersed(n_rep, 0);
    parallel_for(n_rep, workers, [&](std::uint64_t k) {
        const std::uint64_t base = split_seed(master_seed, k);
        EventStream stream(g, split_seed(base, 0), StreamMode::mixing_only);
        RunOptions ro;
        ro.stop = StoppingRule::time(scale.t_n);
        const TrajectoryRecord rec = run_mixing_only(g, p, SingleOccupied{0}, stream, ro);
        collided[k] = rec.tau_collision.has_value();
        dispersed[k] = rec.tau_dispersion.has_value();
    });

    MixingDiagnosticRow row;
    row.n_vertices = g.n_vertices();
    row.t_n = scale.t_n;
    row.replicates = replicates;
    int nc = 0, nd = 0;
    for (std::uint64_t k = 0; k < n_rep; ++k) {
        nc += collided[k];
        nd += dispersed[k];
    }
    row.frac_collision_by_tn = static_cast<double>(nc) / static_cast<double>(n_rep);
    row.frac_dispersion_by_tn = static_cast<double>(nd) / static_cast<double>(n_rep);
    return row;
}

void write_diagnostic_csv(std::ostream& out, std::span<const MixingDiagnosticRow> rows) {
    out << "n,t_n,n_rep,frac_collision_le_tn,frac_dispersion_le_tn\n";
    for (const auto& r : rows)
        out << r.n_vertices << ',' << g17(r.t_n) << ',' << r.replicates << ','
            << g17(r.frac_collision_by_tn) << ',' << g17(r.frac_dispersion_by_tn) << '\n';
}

CouplingCheckReport coupling_checks(const Graph& g, double mu, const CouplingCheckOptions& opt) {
    validate_params({opt.theta_low, mu});
    validate_params({opt.theta_high, mu});
    if (!(opt.theta_low <= opt.theta_high)) fail("theta_low must be <= theta_high");
    if (!(opt.rho_low <= opt.rho_high)) fail("rho_low must be <= rho_high");
    if (opt.n_seeds == 0) fail("need at least one seed");

    const int n = g.n_vertices();
    std::vector<std::uint64_t> dom_viol(opt.n_seeds, 0);
    std::vector<double> mirror_err(opt.n_seeds, 0.0), mass_drift(opt.n_seeds, 0.0),
        clamp(opt.n_seeds, 0.0);

    parallel_for(opt.n_seeds, opt.workers, [&](std::uint64_t s) {
        const std::uint64_t base = split_seed(opt.master_seed, s);

        {  // threshold/initial-density domination, exact comparison
            const auto u = bernoulli_uniforms(n, split_seed(base, 1));
            const Configuration hi = bernoulli_from_uniforms(u, opt.rho_high);
            const Configuration lo = bernoulli_from_uniforms(u, opt.rho_low);
            const CoupledReplica replicas[2] = {
                {hi, opt.theta_low, false},
                {lo, opt.theta_high, false},
            };
            EventStream stream(g, split_seed(base, 0), StreamMode::full);
            CoupledOptions co;
            co.stop = StoppingRule::events(opt.events);
            std::uint64_t viol = 0;
            co.observer = [&](const Event&, std::span<const Configuration> c) {
                const Configuration& a = c[0];
                const Configuration& b = c[1];
                for (std::size_t i = 0; i < a.size(); ++i)
                    if (a[i] < b[i]) ++viol;
            };
            const auto recs = run_coupled(g, mu, replicas, stream, co);
            dom_viol[s] = viol;
            clamp[s] = std::max(recs[0].max_clamp, recs[1].max_clamp);
        }

        {  // mirror coupling
            const auto u = bernoulli_uniforms(n, split_seed(base, 3));
            const Configuration init = bernoulli_from_uniforms(u, 0.5);
            EventStream stream(g, split_seed(base, 2), StreamMode::full);
            CoupledOptions co;
            co.stop = StoppingRule::events(opt.events);
            double err = 0.0;
            co.observer = [&](const Event&, std::span<const Configuration> c) {
                const Configuration& a = c[0];
                const Configuration& b = c[1];
                for (std::size_t i = 0; i < a.size(); ++i)
                    err = std::max(err, std::abs(a[i] + b[i] - 1.0));
            };
            run_mirror_coupled(g, {opt.theta_low, mu}, init, stream, co);
            mirror_err[s] = err;
        }

        {  // mass conservation, mixing-only
            const auto u = bernoulli_uniforms(n, split_seed(base, 5));
            const Configuration init = bernoulli_from_uniforms(u, 0.5);
            double sum0 = 0.0;
            for (const double v : init) sum0 += v;
            EventStream stream(g, split_seed(base, 4), StreamMode::mixing_only);
            RunOptions ro;
            ro.stop = StoppingRule::events(opt.events);
            double drift = 0.0;
            ro.observer = [&](const Event&, const Configuration& c) {
                double sum = 0.0;
                for (const double v : c) sum += v;
                drift = std::max(drift, std::abs(sum - sum0));
            };
            const TrajectoryRecord rec = run_mixing_only(g, {opt.theta_low, mu}, init, stream, ro);
            mass_drift[s] = drift;
            clamp[s] = std::max(clamp[s], rec.max_clamp);
        }
    });

    CouplingCheckReport rep;
    rep.seeds = opt.n_seeds;
    rep.events_per_seed = opt.events;
    for (std::uint64_t s = 0; s < opt.n_seeds; ++s) {
        rep.domination_violations += dom_viol[s];
        rep.max_mirror_error = std::max(rep.max_mirror_error, mirror_err[s]);
        rep.max_mass_drift = std::max(rep.max_mass_drift, mass_drift[s]);
        rep.max_clamp = std::max(rep.max_clamp, clamp[s]);
    }
    return rep;
}

}  // namespace allee
