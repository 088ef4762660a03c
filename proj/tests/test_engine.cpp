#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "allee/engine.hpp"
#include "allee/graph.hpp"
#include "allee/observables.hpp"
#include "allee/rng.hpp"

using namespace allee;

TEST_CASE("parameter validation names the offender") {
    CHECK_NOTHROW(validate_params({0.5, 0.5}));
    CHECK_NOTHROW(validate_params({0.999, 1e-9}));
    CHECK_THROWS_WITH_AS(validate_params({0.0, 0.2}), doctest::Contains("theta"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(validate_params({1.0, 0.2}), doctest::Contains("theta"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(validate_params({0.5, 0.0}), doctest::Contains("mu"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(validate_params({0.5, 0.6}), doctest::Contains("mu"),
                         std::invalid_argument);
}

TEST_CASE("materialize builds and validates initial configurations") {
    const int n = 5;
    const Configuration single = materialize(SingleOccupied{2}, n);
    CHECK(single == Configuration{0.0, 0.0, 1.0, 0.0, 0.0});
    CHECK_THROWS_AS(materialize(SingleOccupied{5}, n), std::invalid_argument);
    CHECK_THROWS_AS(materialize(SingleOccupied{-1}, n), std::invalid_argument);

    const Configuration b1 = materialize(ProductBernoulli{0.5, 7}, n);
    const Configuration b2 = materialize(ProductBernoulli{0.5, 7}, n);
    CHECK(b1 == b2);  // same seed, same patches
    for (const double v : b1) CHECK((v == 0.0 || v == 1.0));
    CHECK_THROWS_AS(materialize(ProductBernoulli{0.0, 7}, n), std::invalid_argument);
    CHECK_THROWS_AS(materialize(ProductBernoulli{1.0, 7}, n), std::invalid_argument);

    const Configuration ok{0.1, 0.2, 0.3, 0.4, 0.5};
    CHECK(materialize(InitialCondition{ok}, n) == ok);
    CHECK_THROWS_AS(materialize(InitialCondition{Configuration{0.1, 0.2}}, n),
                    std::invalid_argument);
    CHECK_THROWS_AS(materialize(InitialCondition{Configuration{0.1, 0.2, 0.3, 0.4, 1.5}}, n),
                    std::invalid_argument);
}

TEST_CASE("bernoulli initial conditions are monotone in rho") {
    const auto u = bernoulli_uniforms(200, 42);
    const Configuration lo = bernoulli_from_uniforms(u, 0.3);
    const Configuration hi = bernoulli_from_uniforms(u, 0.7);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(hi[i] >= lo[i]);
    CHECK(n_occupied(hi) > n_occupied(lo));  // 200 patches, gap 0.4: ties are impossible here
}

TEST_CASE("event stream races |E|+|V| unit-rate clocks") {
    const Graph g = Graph::ring(10);
    EventStream full(g, 1, StreamMode::full);
    CHECK(full.total_rate() == 20.0);
    EventStream mix(g, 1, StreamMode::mixing_only);
    CHECK(mix.total_rate() == 10.0);

    // mean inter-arrival time = 1/20; sd of the mean over 1e6 events = 5e-5
    const int n = 1'000'000;
    int n_mixing = 0;
    for (int i = 0; i < n; ++i) {
        const Event e = full.next();
        CHECK(e.time == full.time());
        if (e.kind == EventKind::mixing) {
            ++n_mixing;
            CHECK(e.target >= 0);
            CHECK(e.target < g.n_edges());
        } else {
            CHECK(e.target >= 0);
            CHECK(e.target < g.n_vertices());
            CHECK((e.bit == 0 || e.bit == 1));
        }
    }
    CHECK(std::abs(full.time() / n - 0.05) < 4.0 * 0.05 / std::sqrt(static_cast<double>(n)));
    // half the clocks are edge clocks: sd = sqrt(0.25 * n) = 500
    CHECK(std::abs(n_mixing - n / 2) < 5 * 500);
}

TEST_CASE("first-event kind follows the clock-count ratio") {
    // complete(2): one edge clock vs two vertex clocks -> P(mixing first) = 1/3
    const Graph g = Graph::complete(2);
    const int trials = 100'000;
    int mixing_first = 0;
    for (int k = 0; k < trials; ++k) {
        EventStream s(g, split_seed(9001, static_cast<std::uint64_t>(k)), StreamMode::full);
        if (s.next().kind == EventKind::mixing) ++mixing_first;
    }
    const double p = static_cast<double>(mixing_first) / trials;
    const double sd = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / trials);
    CHECK(std::abs(p - 1.0 / 3.0) < 5.0 * sd);
}

TEST_CASE("mixing-only streams emit only mixing events") {
    const Graph g = Graph::ring(6);
    EventStream s(g, 3, StreamMode::mixing_only);
    for (int i = 0; i < 1000; ++i) CHECK(s.next().kind == EventKind::mixing);
}

TEST_CASE("streams are deterministic in the seed") {
    const Graph g = Graph::ring(8);
    EventStream a(g, 77, StreamMode::full), b(g, 77, StreamMode::full);
    for (int i = 0; i < 10'000; ++i) {
        const Event ea = a.next(), eb = b.next();
        CHECK(ea.time == eb.time);
        CHECK(ea.kind == eb.kind);
        CHECK(ea.target == eb.target);
        CHECK(ea.bit == eb.bit);
    }
}

TEST_CASE("an edgeless graph cannot drive a mixing-only stream") {
    const Graph g(3, {});
    CHECK_THROWS_AS(EventStream(g, 1, StreamMode::mixing_only), std::invalid_argument);
    CHECK_NOTHROW(EventStream(g, 1, StreamMode::full));
}

TEST_CASE("apply_mixing computes the exact two-product update") {
    const Configuration c{1.0, 0.0};
    const Configuration m = apply_mixing(c, Edge{0, 1}, 0.2);
    CHECK(m[0] == 0.8 * 1.0 + 0.2 * 0.0);
    CHECK(m[1] == 0.8 * 0.0 + 0.2 * 1.0);
    CHECK(m[0] == 0.8);
    CHECK(m[1] == 0.2);

    // symmetric exchange: both endpoints move toward each other
    const Configuration d{0.25, 0.75};
    const Configuration md = apply_mixing(d, Edge{0, 1}, 0.5);
    CHECK(md[0] == md[1]);  // mu = 1/2 equalizes
    CHECK(md[0] == 0.5 * 0.25 + 0.5 * 0.75);

    CHECK_THROWS_AS(apply_mixing(c, Edge{0, 0}, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(apply_mixing(c, Edge{0, 1}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(apply_mixing(c, Edge{0, 1}, 0.7), std::invalid_argument);
}

TEST_CASE("apply_local snaps by threshold and breaks ties with the bit") {
    const Configuration c{0.6, 0.4, 0.5};
    CHECK(apply_local(c, 0, 0.5, 0)[0] == 1.0);  // above
    CHECK(apply_local(c, 1, 0.5, 1)[1] == 0.0);  // below, bit ignored
    CHECK(apply_local(c, 2, 0.5, 1)[2] == 1.0);  // tie, bit 1
    CHECK(apply_local(c, 2, 0.5, 0)[2] == 0.0);  // tie, bit 0
    CHECK_THROWS_AS(apply_local(c, 3, 0.5, 0), std::invalid_argument);
}

TEST_CASE("two patches, high threshold: extinction is certain") {
    // From (1,0) with theta = 0.95: local events cannot change (1,0), and the
    // first mixing produces exactly (0.8, 0.2) -- both below theta, so the
    // run absorbs into the lower class right there.
    const Graph g = Graph::complete(2);
    const Params p{0.95, 0.2};
    RunOptions opt;
    opt.stop = StoppingRule::absorption(100'000);
    for (std::uint64_t k = 0; k < 50; ++k) {
        EventStream s(g, split_seed(100, k), StreamMode::full);
        const auto rec = run(g, p, SingleOccupied{0}, s, opt);
        CHECK(rec.outcome == Outcome::extinction);
        CHECK(rec.final_config == Configuration{0.8, 0.2});
        CHECK(rec.t_absorb.has_value());
    }
}

TEST_CASE("two patches, low threshold: expansion is certain") {
    // Same trajectory, theta = 0.05: (0.8, 0.2) is above theta everywhere,
    // so the very same first mixing absorbs into the upper class instead.
    const Graph g = Graph::complete(2);
    const Params p{0.05, 0.2};
    RunOptions opt;
    opt.stop = StoppingRule::absorption(100'000);
    for (std::uint64_t k = 0; k < 50; ++k) {
        EventStream s(g, split_seed(200, k), StreamMode::full);
        const auto rec = run(g, p, SingleOccupied{0}, s, opt);
        CHECK(rec.outcome == Outcome::expansion);
        CHECK(rec.final_config == Configuration{0.8, 0.2});
    }
}

TEST_CASE("absorbing states are closed under the dynamics") {
    const Graph g = Graph::complete(3);
    const Params p{0.5, 0.2};
    RunOptions opt;
    opt.stop = StoppingRule::events(5000);

    EventStream s1(g, 5, StreamMode::full);
    const auto up = run(g, p, InitialCondition{Configuration{1.0, 1.0, 1.0}}, s1, opt);
    CHECK(up.outcome == Outcome::expansion);
    CHECK(up.t_absorb == 0.0);
    CHECK(up.final_config == Configuration{1.0, 1.0, 1.0});
    CHECK(up.event_count == 5000);  // events mode keeps going after absorption

    EventStream s2(g, 5, StreamMode::full);
    const auto down = run(g, p, InitialCondition{Configuration{0.0, 0.0, 0.0}}, s2, opt);
    CHECK(down.outcome == Outcome::extinction);
    CHECK(down.t_absorb == 0.0);
    CHECK(down.final_config == Configuration{0.0, 0.0, 0.0});
}

TEST_CASE("absorption stopping returns at the first absorbing state") {
    const Graph g = Graph::complete(2);
    EventStream s(g, 8, StreamMode::full);
    RunOptions opt;
    opt.stop = StoppingRule::absorption();
    const auto rec = run(g, {0.95, 0.2}, SingleOccupied{0}, s, opt);
    REQUIRE(rec.t_absorb.has_value());
    CHECK(rec.t_final == *rec.t_absorb);
    CHECK(classify(rec.final_config, 0.95) == ConfigClass::lower);
}

TEST_CASE("event-cap stopping applies exactly that many events") {
    const Graph g = Graph::ring(10);
    EventStream s(g, 11, StreamMode::mixing_only);
    std::uint64_t seen = 0;
    RunOptions opt;
    opt.stop = StoppingRule::events(1234);
    opt.observer = [&seen](const Event&, const Configuration&) { ++seen; };
    const auto rec = run_mixing_only(g, {0.5, 0.2}, SingleOccupied{0}, s, opt);
    CHECK(rec.event_count == 1234);
    CHECK(seen == 1234);
    CHECK(rec.t_final == s.time());
}

TEST_CASE("time-cap stopping leaves the state strictly before the horizon") {
    const Graph g = Graph::ring(10);
    const double horizon = 3.0;
    EventStream s(g, 13, StreamMode::full);
    double last_event_time = 0.0;
    RunOptions opt;
    opt.stop = StoppingRule::time(horizon);
    opt.observer = [&last_event_time](const Event& e, const Configuration&) {
        last_event_time = e.time;
    };
    const auto rec = run(g, {0.5, 0.2}, ProductBernoulli{0.5, 99}, s, opt);
    CHECK(rec.t_final == horizon);
    CHECK(last_event_time <= horizon);
    CHECK(rec.event_count > 0);
}

TEST_CASE("runs are reproducible from the seed") {
    const Graph g = Graph::ring(12);
    const Params p{0.3, 0.25};
    RunOptions opt;
    opt.stop = StoppingRule::events(20'000);
    EventStream s1(g, 21, StreamMode::full), s2(g, 21, StreamMode::full);
    const auto a = run(g, p, ProductBernoulli{0.4, 5}, s1, opt);
    const auto b = run(g, p, ProductBernoulli{0.4, 5}, s2, opt);
    CHECK(a.final_config == b.final_config);
    CHECK(a.event_count == b.event_count);
    CHECK(a.t_final == b.t_final);
    CHECK(a.outcome == b.outcome);
}

TEST_CASE("mixing-only runs conserve total mass") {
    const Graph g = Graph::ring(20);
    EventStream s(g, 31, StreamMode::mixing_only);
    const Configuration init = materialize(ProductBernoulli{0.5, 17}, 20);
    const double mass0 = [&] {
        double m = 0.0;
        for (const double v : init) m += v;
        return m;
    }();
    double max_drift = 0.0;
    RunOptions opt;
    opt.stop = StoppingRule::events(100'000);
    opt.observer = [&](const Event&, const Configuration& c) {
        double m = 0.0;
        for (const double v : c) m += v;
        max_drift = std::max(max_drift, std::abs(m - mass0));
    };
    const auto rec = run_mixing_only(g, {0.5, 0.2}, InitialCondition{init}, s, opt);
    CHECK(max_drift <= 1e-9);
    CHECK(rec.clamp_count == 0);  // the two-product form never leaves [0,1]
}

TEST_CASE("mixing-only records collision and dispersion times") {
    const Graph g = Graph::complete(3);
    EventStream s(g, 41, StreamMode::mixing_only);
    RunOptions opt;
    opt.stop = StoppingRule::events(200);
    const auto rec =
        run_mixing_only(g, {0.9, 0.2}, InitialCondition{Configuration{1.0, 0.0, 1.0}}, s, opt);
    REQUIRE(rec.tau_collision.has_value());
    CHECK(*rec.tau_collision > 0.0);
    // theta = 0.9: once a mixing touches every unit patch the maximum is <= 0.8
    REQUIRE(rec.tau_dispersion.has_value());
    CHECK(*rec.tau_dispersion > 0.0);
}

TEST_CASE("occupancy sampling follows the stride") {
    const Graph g = Graph::ring(10);
    EventStream s(g, 51, StreamMode::mixing_only);
    RunOptions opt;
    opt.stop = StoppingRule::events(1000);
    opt.occupancy_stride = 100;
    const auto rec = run_mixing_only(g, {0.5, 0.2}, SingleOccupied{0}, s, opt);
    // one sample for the initial state at t = 0, then one per 100 events
    CHECK(rec.occupancy.size() == 11);
    CHECK(rec.occupancy.front() == std::pair{0.0, 1});
    for (std::size_t i = 1; i < rec.occupancy.size(); ++i) {
        CHECK(rec.occupancy[i].first > rec.occupancy[i - 1].first);
        CHECK(rec.occupancy[i].second >= rec.occupancy[i - 1].second);  // mixing only spreads
    }
}

TEST_CASE("runner rejects mismatched streams") {
    const Graph g = Graph::ring(5), h = Graph::ring(6);
    EventStream mix(g, 1, StreamMode::mixing_only);
    CHECK_THROWS_AS(run(g, {0.5, 0.2}, SingleOccupied{0}, mix, {}), std::invalid_argument);
    EventStream full(g, 1, StreamMode::full);
    CHECK_THROWS_AS(run_mixing_only(g, {0.5, 0.2}, SingleOccupied{0}, full, {}),
                    std::invalid_argument);
    EventStream other(h, 1, StreamMode::full);
    CHECK_THROWS_AS(run(g, {0.5, 0.2}, SingleOccupied{0}, other, {}), std::invalid_argument);
}

TEST_CASE("a single coupled replica reproduces the plain runner") {
    const Graph g = Graph::ring(10);
    const Params p{0.35, 0.2};
    const Configuration init = materialize(ProductBernoulli{0.5, 23}, 10);

    EventStream s1(g, 61, StreamMode::full);
    RunOptions opt;
    opt.stop = StoppingRule::events(30'000);
    const auto plain = run(g, p, InitialCondition{init}, s1, opt);

    EventStream s2(g, 61, StreamMode::full);
    const std::vector<CoupledReplica> reps{{init, p.theta, false}};
    CoupledOptions copt;
    copt.stop = StoppingRule::events(30'000);
    const auto coupled = run_coupled(g, p.mu, reps, s2, copt);

    REQUIRE(coupled.size() == 1);
    CHECK(coupled[0].final_config == plain.final_config);
    CHECK(coupled[0].outcome == plain.outcome);
    CHECK(coupled[0].event_count == plain.event_count);
    CHECK(coupled[0].t_absorb == plain.t_absorb);
}

TEST_CASE("coupled absorption stop waits for every replica") {
    const Graph g = Graph::complete(2);
    // theta 0.95 forces extinction, theta 0.05 forces expansion; both must
    // absorb before the coupled run returns.
    const std::vector<CoupledReplica> reps{
        {materialize(SingleOccupied{0}, 2), 0.95, false},
        {materialize(SingleOccupied{0}, 2), 0.05, false},
    };
    EventStream s(g, 71, StreamMode::full);
    CoupledOptions copt;
    copt.stop = StoppingRule::absorption(1'000'000);
    const auto recs = run_coupled(g, 0.2, reps, s, copt);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].outcome == Outcome::extinction);
    CHECK(recs[1].outcome == Outcome::expansion);
    CHECK(recs[0].t_absorb.has_value());
    CHECK(recs[1].t_absorb.has_value());
}

TEST_CASE("freezing decided replicas does not change their record") {
    const Graph g = Graph::ring(8);
    const Configuration init = materialize(ProductBernoulli{0.5, 3}, 8);
    const std::vector<CoupledReplica> reps{{init, 0.2, false}, {init, 0.8, false}};

    EventStream s1(g, 81, StreamMode::full);
    CoupledOptions a;
    a.stop = StoppingRule::absorption(1'000'000);
    const auto ra = run_coupled(g, 0.2, reps, s1, a);

    EventStream s2(g, 81, StreamMode::full);
    CoupledOptions b;
    b.stop = StoppingRule::absorption(1'000'000);
    b.freeze_decided = true;
    const auto rb = run_coupled(g, 0.2, reps, s2, b);

    for (std::size_t i = 0; i < reps.size(); ++i) {
        CHECK(ra[i].outcome == rb[i].outcome);
        CHECK(ra[i].t_absorb == rb[i].t_absorb);
    }
}

TEST_CASE("mirror runs complement each other") {
    const Graph g = Graph::ring(10);
    const Params p{0.4, 0.2};
    const Configuration init = materialize(ProductBernoulli{0.5, 13}, 10);
    EventStream s(g, 91, StreamMode::full);
    CoupledOptions copt;
    copt.stop = StoppingRule::events(50'000);
    double max_err = 0.0;
    copt.observer = [&max_err](const Event&, std::span<const Configuration> cs) {
        for (std::size_t i = 0; i < cs[0].size(); ++i)
            max_err = std::max(max_err, std::abs(cs[0][i] + cs[1][i] - 1.0));
    };
    const auto [fwd, mirror] = run_mirror_coupled(g, p, init, s, copt);
    CHECK(max_err <= 1e-12);
    for (std::size_t i = 0; i < init.size(); ++i)
        CHECK(std::abs(fwd.final_config[i] + mirror.final_config[i] - 1.0) <= 1e-12);
}
