#include "allee/cli.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "allee/engine.hpp"
#include "allee/experiments.hpp"
#include "allee/graph.hpp"
#include "allee/observables.hpp"
#include "allee/theory.hpp"

namespace allee::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string default_out_dir() {
    const char* env = std::getenv("ALLEESIM_OUT");
    return (env != nullptr && *env != '\0') ? env : "out";
}

// ---------------------------------------------------------------------------
// Validators with messages that name the parameter and its admissible range.

CLI::Validator open_unit(const std::string& name) {
    return CLI::Validator(
        [name](std::string& s) -> std::string {
            double v{};
            if (!CLI::detail::lexical_cast(s, v)) return name + ": expected a number, got '" + s + "'";
            if (!(v > 0.0 && v < 1.0)) return name + " must be in (0, 1), got " + s;
            return {};
        },
        name + " in (0,1)");
}

CLI::Validator mu_range() {
    return CLI::Validator(
        [](std::string& s) -> std::string {
            double v{};
            if (!CLI::detail::lexical_cast(s, v)) return "mu: expected a number, got '" + s + "'";
            if (!(v > 0.0 && v <= 0.5)) return "mu must be in (0, 0.5], got " + s;
            return {};
        },
        "mu in (0,0.5]");
}

std::vector<double> parse_double_list(const std::string& csv, const std::string& what) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        double v{};
        if (!CLI::detail::lexical_cast(item, v))
            throw std::invalid_argument(what + ": bad number '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(what + ": empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& csv, const std::string& what) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        int v{};
        if (!CLI::detail::lexical_cast(item, v))
            throw std::invalid_argument(what + ": bad integer '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(what + ": empty list");
    return out;
}

std::string join_g17(std::span<const double> values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        s += g17(values[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Manifest: flat key=value lines, loadable back through --config. Every key
// is a long option of the subcommand that wrote it.

struct Manifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
    void add(const std::string& key, double value) { add(key, g17(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }
    void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, bool value) { add(key, value ? std::string("true") : std::string("false")); }

    std::string text() const {
        std::string s = "# alleesim run manifest; rerun with: alleesim " + command +
                        " --config <this file>\ncommand=" + command + "\n";
        for (const auto& [k, v] : entries) s += k + "=" + v + "\n";
        return s;
    }
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

fs::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
    return {dir};
}

void write_stats(const fs::path& dir, double wall_seconds, std::uint64_t events) {
    std::string s = "wall_seconds=" + g17(wall_seconds) + "\n";
    s += "replica_events=" + std::to_string(events) + "\n";
    if (wall_seconds > 0.0)
        s += "events_per_second=" + g17(static_cast<double>(events) / wall_seconds) + "\n";
    write_file(dir / "stats.txt", s);
}

// ---------------------------------------------------------------------------
// Config file: '#' comments, blank lines, key=value. "command" names the
// subcommand and is checked against the one invoked.

struct ConfigFile {
    std::string command;
    std::vector<std::string> tokens;
};

ConfigFile load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    ConfigFile cfg;
    std::string line;
    int line_no = 0;
    const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": empty key");
        if (key == "command")
            cfg.command = value;
        else if (key == "config")
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": config files cannot nest");
        else
            cfg.tokens.push_back("--" + key + "=" + value);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Topology options shared by the simulation-facing subcommands.

struct TopologyOpts {
    std::string kind = "ring";
    int n = 100;
    int degree = 4;
    std::string edge_file;
};

void add_topology_options(CLI::App* cmd, TopologyOpts& t) {
    cmd->add_option("--topology", t.kind, "graph family: ring|complete|circulant|file")
        ->check(CLI::IsMember({"ring", "complete", "circulant", "file"}))
        ->capture_default_str();
    cmd->add_option("--n", t.n, "number of vertices")->capture_default_str();
    cmd->add_option("--degree", t.degree, "circulant degree (even, or n-1)")->capture_default_str();
    cmd->add_option("--edge-file", t.edge_file, "edge list file (for --topology file)");
}

Graph build_graph(const TopologyOpts& t) {
    if (t.kind == "ring") return Graph::ring(t.n);
    if (t.kind == "complete") return Graph::complete(t.n);
    if (t.kind == "circulant") return Graph::circulant(t.n, t.degree);
    if (t.edge_file.empty())
        throw std::invalid_argument("--topology file requires --edge-file");
    return Graph::load_edge_list(t.edge_file);
}

void echo_topology(Manifest& m, const TopologyOpts& t) {
    m.add("topology", t.kind);
    if (t.kind == "file") {
        m.add("edge-file", t.edge_file);
    } else {
        m.add("n", t.n);
        if (t.kind == "circulant") m.add("degree", t.degree);
    }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
    TopologyOpts topo;
    double theta = 0.5;
    double mu = 0.2;
    std::string mode = "full";
    std::string init = "single";
    int vertex = 0;
    double rho = 0.5;
    std::uint64_t seed = 1;
    std::string stop = "absorption";
    std::uint64_t events = 1'000'000;
    double time_horizon = 1.0;
    std::uint64_t event_cap = 100'000'000;
    std::uint64_t occupancy_stride = 0;
    bool dump = false;
    std::string out = default_out_dir();
};

int run_simulate(const SimulateOpts& o) {
    const Graph g = build_graph(o.topo);
    const Params p{o.theta, o.mu};
    const StreamMode mode = o.mode == "mixing-only" ? StreamMode::mixing_only : StreamMode::full;

    InitialCondition init;
    if (o.init == "single")
        init = SingleOccupied{o.vertex};
    else
        init = ProductBernoulli{o.rho, split_seed(o.seed, 1)};

    RunOptions ro;
    if (o.stop == "absorption")
        ro.stop = StoppingRule::absorption(o.event_cap);
    else if (o.stop == "events")
        ro.stop = StoppingRule::events(o.events);
    else
        ro.stop = StoppingRule::time(o.time_horizon, o.event_cap);
    ro.occupancy_stride = o.occupancy_stride;

    std::ofstream dump_out;
    std::uint64_t dump_index = 0;
    fs::path dir;
    if (o.dump) {
        dir = prepare_out_dir(o.out);
        dump_out.open(dir / "trajectory.csv", std::ios::binary);
        if (!dump_out) throw std::runtime_error("cannot open trajectory.csv in " + o.out);
        dump_out << "event_index,time,kind,target,n_occupied,class\n";
        ro.observer = [&](const Event& e, const Configuration& c) {
            ++dump_index;
            dump_out << dump_index << ',' << g17(e.time) << ','
                     << (e.kind == EventKind::mixing ? "mixing" : "local") << ',' << e.target
                     << ',' << n_occupied(c) << ',' << to_string(classify(c, o.theta)) << '\n';
        };
    }

    EventStream stream(g, split_seed(o.seed, 0), mode);
    const auto t0 = Clock::now();
    const TrajectoryRecord rec = mode == StreamMode::full
                                     ? run(g, p, init, stream, ro)
                                     : run_mixing_only(g, p, init, stream, ro);
    const double wall = seconds_since(t0);

    std::cout << "outcome=" << to_string(rec.outcome);
    if (rec.t_absorb) std::cout << " t_absorb=" << g6(*rec.t_absorb);
    std::cout << " events=" << rec.event_count << " t_final=" << g6(rec.t_final)
              << " occupied=" << n_occupied(rec.final_config);
    if (mode == StreamMode::mixing_only) {
        if (rec.tau_collision) std::cout << " tau_collision=" << g6(*rec.tau_collision);
        if (rec.tau_dispersion) std::cout << " tau_dispersion=" << g6(*rec.tau_dispersion);
        std::cout << " underflows=" << rec.underflow_count;
    }
    std::cout << " max_clamp=" << g6(rec.max_clamp);
    if (wall > 0.0)
        std::cout << " events_per_second=" << g6(static_cast<double>(rec.event_count) / wall);
    std::cout << "\n";

    if (o.dump) {
        dump_out.flush();
        if (!dump_out) throw std::runtime_error("write failed: trajectory.csv");
        Manifest m;
        m.command = "simulate";
        echo_topology(m, o.topo);
        m.add("theta", o.theta);
        m.add("mu", o.mu);
        m.add("mode", o.mode);
        m.add("init", o.init);
        if (o.init == "single")
            m.add("vertex", o.vertex);
        else
            m.add("rho", o.rho);
        m.add("seed", o.seed);
        m.add("stop", o.stop);
        if (o.stop == "events") m.add("events", o.events);
        if (o.stop == "time") m.add("time", o.time_horizon);
        m.add("event-cap", o.event_cap);
        if (o.occupancy_stride) m.add("occupancy-stride", o.occupancy_stride);
        m.add("dump", true);
        m.add("out", o.out);
        write_file(dir / "manifest.txt", m.text());
        write_stats(dir, wall, rec.event_count);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
    TopologyOpts topo;
    double mu = 0.2;
    int theta_cells = 50;
    int rho_cells = 50;
    std::string theta_list;
    std::string rho_list;
    int replicates = 100;
    std::uint64_t seed = 1;
    std::uint64_t event_cap = 100'000'000;
    bool coupled = true;
    int workers = 1;
    std::string out = default_out_dir();
};

int run_sweep(const SweepOpts& o) {
    const Graph g = build_graph(o.topo);
    SweepGrid grid;
    grid.thetas = o.theta_list.empty() ? centered_grid(o.theta_cells)
                                       : parse_double_list(o.theta_list, "theta-list");
    grid.rhos = o.rho_list.empty() ? centered_grid(o.rho_cells)
                                   : parse_double_list(o.rho_list, "rho-list");
    grid.replicates = o.replicates;
    grid.master_seed = o.seed;
    grid.event_cap = o.event_cap;
    grid.coupled = o.coupled;
    grid.workers = o.workers;

    const auto t0 = Clock::now();
    const SweepResult res = sweep_expansion(g, o.mu, grid);
    const double wall = seconds_since(t0);

    const fs::path dir = prepare_out_dir(o.out);
    {
        std::ostringstream csv;
        write_sweep_csv(csv, res);
        write_file(dir / "sweep.csv", csv.str());
    }
    {
        std::ostringstream gp;
        write_heatmap_script(gp, "sweep.csv", "sweep.png");
        write_file(dir / "heatmap.gp", gp.str());
    }

    Manifest m;
    m.command = "sweep";
    echo_topology(m, o.topo);
    m.add("mu", o.mu);
    m.add("theta-list", join_g17(res.thetas));
    m.add("rho-list", join_g17(res.rhos));
    m.add("replicates", o.replicates);
    m.add("seed", o.seed);
    m.add("event-cap", o.event_cap);
    m.add("coupled", o.coupled);
    m.add("workers", o.workers);
    m.add("out", o.out);
    write_file(dir / "manifest.txt", m.text());
    write_stats(dir, wall, res.total_events);

    std::uint64_t undecided = 0;
    for (const auto& c : res.cells) undecided += static_cast<std::uint64_t>(c.n_undecided);
    std::cout << "sweep " << o.topo.kind << " n=" << g.n_vertices() << " mu=" << g6(o.mu) << ": "
              << res.thetas.size() << "x" << res.rhos.size() << " cells, " << o.replicates
              << " replicates, " << (o.coupled ? "coupled" : "independent") << "\n";
    std::cout << "undecided=" << undecided << " of "
              << res.cells.size() * static_cast<std::size_t>(o.replicates) << " runs\n";
    for (const double q : {0.25, 0.5, 0.75}) {
        const int ri = std::min<int>(static_cast<int>(res.rhos.size()) - 1,
                                     static_cast<int>(q * static_cast<double>(res.rhos.size())));
        if (const auto cross = level_crossing_theta(res, ri, 0.5))
            std::cout << "p=0.5 crossing at rho=" << g6(res.rhos[static_cast<std::size_t>(ri)])
                      << ": theta=" << g6(*cross) << "\n";
    }
    std::cout << "wall=" << g6(wall) << "s events=" << res.total_events;
    if (wall > 0.0)
        std::cout << " events_per_second=" << g6(static_cast<double>(res.total_events) / wall);
    std::cout << "\nwrote " << (dir / "sweep.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// scaling

struct ScalingOpts {
    double theta = 0.1;
    double mu = 0.2;
    std::string sizes = "10,50,200,1000";
    int replicates = 200;
    std::uint64_t seed = 1;
    std::uint64_t event_cap = 100'000'000;
    int workers = 1;
    bool diagnostic = false;
    int diag_replicates = 200;
    std::string out = default_out_dir();
};

int run_scaling(const ScalingOpts& o, bool complete_graph) {
    const char* name = complete_graph ? "scaling-complete" : "scaling-ring";
    ScalingOptions so;
    so.sizes = parse_int_list(o.sizes, "sizes");
    so.replicates = o.replicates;
    so.master_seed = o.seed;
    so.stop = StoppingRule::absorption(o.event_cap);
    so.workers = o.workers;
    const Params p{o.theta, o.mu};

    const auto t0 = Clock::now();
    const ScalingResult res = complete_graph ? scaling_complete(p, so) : scaling_ring(p, so);

    std::vector<MixingDiagnosticRow> diag;
    if (o.diagnostic) {
        for (std::size_t si = 0; si < so.sizes.size(); ++si) {
            const int n = so.sizes[si];
            const Graph g = complete_graph ? Graph::complete(n) : Graph::ring(n);
            diag.push_back(mixing_diagnostic(g, p, o.diag_replicates,
                                             split_seed(o.seed ^ 0xd1a6u, si), o.workers));
        }
    }
    const double wall = seconds_since(t0);

    std::uint64_t events = 0;
    for (const auto& row : res.rows) events += row.est.total_events;

    const fs::path dir = prepare_out_dir(o.out);
    {
        std::ostringstream csv;
        write_scaling_csv(csv, res);
        write_file(dir / (complete_graph ? "scaling_complete.csv" : "scaling_ring.csv"),
                   csv.str());
    }
    if (o.diagnostic) {
        std::ostringstream csv;
        write_diagnostic_csv(csv, diag);
        write_file(dir / "mixing_diagnostic.csv", csv.str());
    }

    Manifest m;
    m.command = name;
    m.add("theta", o.theta);
    m.add("mu", o.mu);
    m.add("sizes", o.sizes);
    m.add("replicates", o.replicates);
    m.add("seed", o.seed);
    m.add("event-cap", o.event_cap);
    m.add("workers", o.workers);
    m.add("diagnostic", o.diagnostic);
    if (o.diagnostic) m.add("diag-replicates", o.diag_replicates);
    m.add("out", o.out);
    write_file(dir / "manifest.txt", m.text());
    write_stats(dir, wall, events);

    for (const auto& row : res.rows) {
        std::cout << "n=" << row.n_vertices << " p_hat=" << g6(row.est.p_hat) << " ["
                  << g6(row.est.ci_lo) << "," << g6(row.est.ci_hi) << "]"
                  << " undecided=" << row.est.n_undecided
                  << " mean_extinction_time=" << g6(row.est.mean_extinction_time) << "\n";
    }
    for (const auto& d : diag)
        std::cout << "diagnostic n=" << d.n_vertices << " t_n=" << g6(d.t_n)
                  << " frac_collision=" << g6(d.frac_collision_by_tn)
                  << " frac_dispersion=" << g6(d.frac_dispersion_by_tn) << "\n";
    if (complete_graph) {
        std::cout << "p_hat strictly decreasing (zero floor ties ok): "
                  << (res.strictly_decreasing ? "yes" : "no") << "\n";
    } else {
        std::cout << "flat within 3 SE: " << (res.flat_3se ? "yes" : "no")
                  << "; significant decrease (z=" << g6(res.z_first_last)
                  << "): " << (res.significant_decrease ? "yes" : "no") << "\n";
    }
    std::cout << "wall=" << g6(wall) << "s events=" << events << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// theory

struct TheoryOpts {
    double t_block = 95.0;
    double mu = 0.2;
    double theta = 0.0;  // with --n: dispersion scale
    int n = 0;
    double a = 0.0;  // with t_block: ring condition
    std::string out = default_out_dir();
};

int run_theory(const TheoryOpts& o) {
    const Lemma6Result l6 = lemma6_complement(o.t_block);
    const LogValue thr = theorem2_threshold(o.mu);

    std::string csv = "component,log_value,linear_value,flag\n";
    const auto row = [&csv](const std::string& name, const LogValue& v) {
        csv += name + "," + g17(v.log_value) + "," + g17(v.linear_value) + "," +
               (v.underflow ? "1" : "0") + "\n";
    };
    row("lemma6_pointmass", l6.pointmass);
    row("lemma6_near_tail", l6.near_tail);
    row("lemma6_far_tail", l6.far_tail);
    row("lemma6_total", l6.total);
    row("lemma6_bound", make_log_value(l6.log_bound));
    row("theorem2_threshold", thr);

    std::cout << "block T=" << g6(o.t_block) << ": C(T)=" << g6(l6.total.linear_value)
              << " (log " << g6(l6.total.log_value) << ") vs 3^-36="
              << g6(std::exp(l6.log_bound)) << " -> " << (l6.passes ? "PASS" : "FAIL") << "\n";
    std::cout << "threshold scale mu=" << g6(o.mu) << ": log=" << g6(thr.log_value)
              << " linear=" << g6(thr.linear_value) << (thr.underflow ? " [underflow]" : "")
              << "\n";

    if (o.n > 0) {
        if (!(o.theta > 0.0))
            throw std::invalid_argument("--n needs --theta for the dispersion scale");
        const DispersionScale s = dispersion_scale(o.theta, o.mu, o.n);
        csv += "dispersion_n," + g17(std::log(static_cast<double>(s.n))) + "," +
               std::to_string(s.n) + ",0\n";
        row("dispersion_t_n", make_log_value(std::log(s.t_n)));
        row("dispersion_k_n", make_log_value(std::log(s.k_n)));
        std::cout << "dispersion scale theta=" << g6(o.theta) << " mu=" << g6(o.mu)
                  << " n_vertices=" << o.n << ": n=" << s.n << " t_n=" << g6(s.t_n)
                  << " k_n=" << g6(s.k_n) << "\n";
    }
    if (o.a > 0.0) {
        if (!(o.theta > 0.0))
            throw std::invalid_argument("--a needs --theta for the ring condition");
        const RingCondition c = ring_condition(o.a, o.theta, o.mu, o.t_block);
        csv += "ring_condition_holds," + std::string(c.holds ? "0" : "-inf") + "," +
               (c.holds ? "1" : "0") + ",0\n";
        std::cout << "ring condition a=" << g6(o.a) << " theta=" << g6(o.theta)
                  << " T=" << g6(o.t_block) << ": " << (c.holds ? "holds" : "fails") << "\n";
    }

    const fs::path dir = prepare_out_dir(o.out);
    write_file(dir / "theory.csv", csv);

    Manifest m;
    m.command = "theory";
    m.add("T", o.t_block);
    m.add("mu", o.mu);
    if (o.theta > 0.0) m.add("theta", o.theta);
    if (o.n > 0) m.add("n", o.n);
    if (o.a > 0.0) m.add("a", o.a);
    m.add("out", o.out);
    write_file(dir / "manifest.txt", m.text());
    return 0;
}

// ---------------------------------------------------------------------------
// lemma7

struct Lemma7Opts {
    double mu = 0.2;
    double t_block = 5.0;
    double a = 0.01;
    double theta = 4e-8;
    std::uint64_t trials = 10'000;
    int width = 9;
    std::uint64_t seed = 1;
    std::string out = default_out_dir();
};

int run_lemma7(const Lemma7Opts& o) {
    const auto t0 = Clock::now();
    const Lemma7Report rep =
        lemma7_empirical_check(o.mu, o.theta, o.a, o.t_block, o.trials, o.seed, o.width);
    const double wall = seconds_since(t0);

    std::cout << "invasion check on ring(" << o.width << "): trials=" << rep.trials
              << " conditioned=" << rep.conditioned << " (fraction "
              << g6(rep.conditioned_fraction) << ")"
              << " violations=" << rep.violations
              << " min_boundary_density=" << g6(rep.min_boundary_density) << " (a=" << g6(o.a)
              << ")\n";
    if (rep.violations) {
        std::cout << "violating trials:";
        for (const auto k : rep.violating_trials) std::cout << ' ' << k;
        std::cout << "\n";
    }

    const fs::path dir = prepare_out_dir(o.out);
    std::string csv = "metric,value\n";
    csv += "trials," + std::to_string(rep.trials) + "\n";
    csv += "conditioned," + std::to_string(rep.conditioned) + "\n";
    csv += "conditioned_fraction," + g17(rep.conditioned_fraction) + "\n";
    csv += "violations," + std::to_string(rep.violations) + "\n";
    csv += "min_boundary_density," + g17(rep.min_boundary_density) + "\n";
    write_file(dir / "lemma7.csv", csv);

    Manifest m;
    m.command = "lemma7";
    m.add("mu", o.mu);
    m.add("T", o.t_block);
    m.add("a", o.a);
    m.add("theta", o.theta);
    m.add("trials", o.trials);
    m.add("width", o.width);
    m.add("seed", o.seed);
    m.add("out", o.out);
    write_file(dir / "manifest.txt", m.text());
    write_stats(dir, wall, 0);

    if (rep.violations) {
        std::cerr << "error: " << rep.violations
                  << " conditioned trials violated the invasion property\n";
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// couple-test

struct CoupleTestOpts {
    TopologyOpts topo;
    double mu = 0.2;
    double theta = 0.3;
    double theta2 = 0.6;
    double rho = 0.7;
    double rho2 = 0.4;
    std::uint64_t seeds = 10;
    std::uint64_t events = 100'000;
    std::uint64_t seed = 1;
    int workers = 1;
};

int run_couple_test(const CoupleTestOpts& o) {
    const Graph g = build_graph(o.topo);
    CouplingCheckOptions co;
    co.theta_low = std::min(o.theta, o.theta2);
    co.theta_high = std::max(o.theta, o.theta2);
    co.rho_high = std::max(o.rho, o.rho2);
    co.rho_low = std::min(o.rho, o.rho2);
    co.n_seeds = o.seeds;
    co.events = o.events;
    co.master_seed = o.seed;
    co.workers = o.workers;

    const auto t0 = Clock::now();
    const CouplingCheckReport rep = coupling_checks(g, o.mu, co);
    const double wall = seconds_since(t0);

    const bool dom_ok = rep.domination_violations == 0;
    const bool mir_ok = rep.max_mirror_error <= 1e-12;
    const bool mass_ok = rep.max_mass_drift <= 1e-9;
    std::cout << "domination: " << (dom_ok ? "PASS" : "FAIL") << " ("
              << rep.domination_violations << " violations over " << rep.seeds << " seeds x "
              << rep.events_per_seed << " events)\n";
    std::cout << "mirror:     " << (mir_ok ? "PASS" : "FAIL")
              << " (max |eta + eta' - 1| = " << g6(rep.max_mirror_error) << ", tol 1e-12)\n";
    std::cout << "mass:       " << (mass_ok ? "PASS" : "FAIL")
              << " (max drift = " << g6(rep.max_mass_drift) << ", tol 1e-9)\n";
    std::cout << "max clamp nudge: " << g6(rep.max_clamp) << "\n";
    std::cout << "wall=" << g6(wall) << "s\n";
    return rep.ok() ? 0 : 3;
}

}  // namespace

int main(int argc, const char* const* argv) {
    try {
        std::vector<std::string> args;
        args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
        for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

        // Peel off --config and splice the file's key=value pairs in front of
        // the remaining flags, so explicit flags override the file.
        std::string config_path;
        for (auto it = args.begin(); it != args.end();) {
            if (*it == "--config") {
                if (std::next(it) == args.end()) {
                    std::cerr << "error: --config needs a file path\n";
                    return 2;
                }
                config_path = *std::next(it);
                it = args.erase(it, std::next(it, 2));
            } else if (it->rfind("--config=", 0) == 0) {
                config_path = it->substr(9);
                it = args.erase(it);
            } else {
                ++it;
            }
        }
        ConfigFile cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (args.empty() && !cfg.command.empty()) args.push_back(cfg.command);
        if (!args.empty() && !cfg.command.empty() && args.front() != cfg.command) {
            std::cerr << "error: config file was written by '" << cfg.command << "' but '"
                      << args.front() << "' was invoked\n";
            return 2;
        }
        std::vector<std::string> full;
        full.emplace_back("alleesim");
        if (!args.empty()) {
            full.push_back(args.front());
            full.insert(full.end(), cfg.tokens.begin(), cfg.tokens.end());
            full.insert(full.end(), args.begin() + 1, args.end());
        }

        CLI::App app{"stochastic patch dynamics with a hard survival threshold"};
        app.require_subcommand(1);
        app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

        SimulateOpts sim;
        auto* c_sim = app.add_subcommand("simulate", "run a single trajectory");
        add_topology_options(c_sim, sim.topo);
        c_sim->add_option("--theta", sim.theta, "survival threshold")
            ->check(open_unit("theta"))->capture_default_str();
        c_sim->add_option("--mu", sim.mu, "mixing fraction")->check(mu_range())
            ->capture_default_str();
        c_sim->add_option("--mode", sim.mode, "full|mixing-only")
            ->check(CLI::IsMember({"full", "mixing-only"}))->capture_default_str();
        c_sim->add_option("--init", sim.init, "single|bernoulli")
            ->check(CLI::IsMember({"single", "bernoulli"}))->capture_default_str();
        c_sim->add_option("--vertex", sim.vertex, "occupied vertex for --init single")
            ->capture_default_str();
        c_sim->add_option("--rho", sim.rho, "occupation probability for --init bernoulli")
            ->check(open_unit("rho"))->capture_default_str();
        c_sim->add_option("--seed", sim.seed, "master seed")->capture_default_str();
        c_sim->add_option("--stop", sim.stop, "absorption|events|time")
            ->check(CLI::IsMember({"absorption", "events", "time"}))->capture_default_str();
        c_sim->add_option("--events", sim.events, "event count for --stop events")
            ->capture_default_str();
        c_sim->add_option("--time", sim.time_horizon, "horizon for --stop time")
            ->capture_default_str();
        c_sim->add_option("--event-cap", sim.event_cap, "safety cap on events")
            ->capture_default_str();
        c_sim->add_option("--occupancy-stride", sim.occupancy_stride,
                          "sample occupied-patch count every k events (mixing-only)")
            ->capture_default_str();
        c_sim->add_flag("--dump", sim.dump, "write trajectory.csv");
        c_sim->add_option("--out", sim.out, "output directory")->capture_default_str();

        SweepOpts swp;
        auto* c_swp = app.add_subcommand("sweep", "theta x rho expansion-probability grid");
        add_topology_options(c_swp, swp.topo);
        c_swp->add_option("--mu", swp.mu, "mixing fraction")->check(mu_range())
            ->capture_default_str();
        c_swp->add_option("--theta-cells", swp.theta_cells, "theta grid resolution")
            ->capture_default_str();
        c_swp->add_option("--rho-cells", swp.rho_cells, "rho grid resolution")
            ->capture_default_str();
        c_swp->add_option("--theta-list", swp.theta_list, "explicit theta grid (comma list)");
        c_swp->add_option("--rho-list", swp.rho_list, "explicit rho grid (comma list)");
        c_swp->add_option("--replicates", swp.replicates, "replicates per cell")
            ->capture_default_str();
        c_swp->add_option("--seed", swp.seed, "master seed")->capture_default_str();
        c_swp->add_option("--event-cap", swp.event_cap, "per-run event cap")
            ->capture_default_str();
        c_swp->add_option("--coupled", swp.coupled,
                          "share event streams across cells (exact monotonicity)")
            ->capture_default_str();
        c_swp->add_option("--workers", swp.workers, "worker threads")->capture_default_str();
        c_swp->add_option("--out", swp.out, "output directory")->capture_default_str();

        ScalingOpts sc_complete, sc_ring;
        sc_ring.theta = 0.05;
        sc_ring.sizes = "50,100,200,400";
        sc_ring.replicates = 500;
        auto* c_sc = app.add_subcommand("scaling-complete",
                                        "expansion probability vs N on complete graphs");
        auto* c_sr = app.add_subcommand("scaling-ring", "expansion probability vs N on rings");
        for (auto [cmd, opts] : {std::pair{c_sc, &sc_complete}, std::pair{c_sr, &sc_ring}}) {
            cmd->add_option("--theta", opts->theta, "survival threshold")
                ->check(open_unit("theta"))->capture_default_str();
            cmd->add_option("--mu", opts->mu, "mixing fraction")->check(mu_range())
                ->capture_default_str();
            cmd->add_option("--sizes", opts->sizes, "graph sizes (comma list)")
                ->capture_default_str();
            cmd->add_option("--replicates", opts->replicates, "replicates per size")
                ->capture_default_str();
            cmd->add_option("--seed", opts->seed, "master seed")->capture_default_str();
            cmd->add_option("--event-cap", opts->event_cap, "per-run event cap")
                ->capture_default_str();
            cmd->add_option("--workers", opts->workers, "worker threads")->capture_default_str();
            cmd->add_flag("--diagnostic", opts->diagnostic,
                          "also run the mixing-only collision/dispersion diagnostic");
            cmd->add_option("--diag-replicates", opts->diag_replicates,
                            "replicates for the diagnostic")->capture_default_str();
            cmd->add_option("--out", opts->out, "output directory")->capture_default_str();
        }

        TheoryOpts thy;
        auto* c_thy = app.add_subcommand("theory", "closed-form quantities and bounds");
        c_thy->add_option("--T", thy.t_block, "block length")->capture_default_str();
        c_thy->add_option("--mu", thy.mu, "mixing fraction")->check(mu_range())
            ->capture_default_str();
        c_thy->add_option("--theta", thy.theta, "survival threshold (for --n / --a)")
            ->check(open_unit("theta"));
        c_thy->add_option("--n", thy.n, "vertices for the dispersion scale");
        c_thy->add_option("--a", thy.a, "invasion mass for the ring condition")
            ->check(open_unit("a"));
        c_thy->add_option("--out", thy.out, "output directory")->capture_default_str();

        Lemma7Opts l7;
        auto* c_l7 = app.add_subcommand("lemma7", "empirical zero-tolerance invasion check");
        c_l7->add_option("--mu", l7.mu, "mixing fraction")->check(mu_range())
            ->capture_default_str();
        c_l7->add_option("--T", l7.t_block, "block length")->capture_default_str();
        c_l7->add_option("--a", l7.a, "invasion mass")->check(open_unit("a"))
            ->capture_default_str();
        c_l7->add_option("--theta", l7.theta, "survival threshold")->check(open_unit("theta"))
            ->capture_default_str();
        c_l7->add_option("--trials", l7.trials, "number of trials")->capture_default_str();
        c_l7->add_option("--width", l7.width, "ring width (>= 7)")->capture_default_str();
        c_l7->add_option("--seed", l7.seed, "master seed")->capture_default_str();
        c_l7->add_option("--out", l7.out, "output directory")->capture_default_str();

        CoupleTestOpts ct;
        auto* c_ct = app.add_subcommand("couple-test",
                                        "domination / mirror / mass-conservation invariants");
        add_topology_options(c_ct, ct.topo);
        c_ct->add_option("--mu", ct.mu, "mixing fraction")->check(mu_range())
            ->capture_default_str();
        c_ct->add_option("--theta", ct.theta, "first threshold")->check(open_unit("theta"))
            ->capture_default_str();
        c_ct->add_option("--theta2", ct.theta2, "second threshold")->check(open_unit("theta2"))
            ->capture_default_str();
        c_ct->add_option("--rho", ct.rho, "first initial density")->check(open_unit("rho"))
            ->capture_default_str();
        c_ct->add_option("--rho2", ct.rho2, "second initial density")->check(open_unit("rho2"))
            ->capture_default_str();
        c_ct->add_option("--seeds", ct.seeds, "number of seeds")->capture_default_str();
        c_ct->add_option("--events", ct.events, "events per seed")->capture_default_str();
        c_ct->add_option("--seed", ct.seed, "master seed")->capture_default_str();
        c_ct->add_option("--workers", ct.workers, "worker threads")->capture_default_str();

        std::vector<const char*> cargv;
        cargv.reserve(full.size());
        for (const auto& s : full) cargv.push_back(s.c_str());
        try {
            app.parse(static_cast<int>(cargv.size()), cargv.data());
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        if (c_sim->parsed()) return run_simulate(sim);
        if (c_swp->parsed()) return run_sweep(swp);
        if (c_sc->parsed()) return run_scaling(sc_complete, true);
        if (c_sr->parsed()) return run_scaling(sc_ring, false);
        if (c_thy->parsed()) return run_theory(thy);
        if (c_l7->parsed()) return run_lemma7(l7);
        if (c_ct->parsed()) return run_couple_test(ct);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace allee::cli
