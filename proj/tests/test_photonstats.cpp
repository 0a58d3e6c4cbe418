#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "plasim/errors.hpp"
#include "plasim/noise.hpp"
#include "plasim/photonstats.hpp"
#include "plasim/rng.hpp"

using namespace plasim;

namespace {

std::vector<double> random_times(Rng& rng, int n, double span_ns) {
    std::vector<double> t(n);
    for (auto& v : t) v = rng.uniform() * span_ns;
    std::sort(t.begin(), t.end());
    return t;
}

bool counts_equal(const CoincidenceCounts& a, const CoincidenceCounts& b) {
    return a.n1 == b.n1 && a.n2 == b.n2 && a.n3 == b.n3 && a.n12 == b.n12 &&
           a.n13 == b.n13 && a.n123 == b.n123;
}

} // namespace

TEST_CASE("fast counter equals brute force on random streams") {
    // includes duplicate timestamps and events exactly on window edges
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        Rng rng(seed);
        EventStream ev;
        ev.d1 = random_times(rng, 334, 1e5);
        ev.d2 = random_times(rng, 333, 1e5);
        ev.d3 = random_times(rng, 333, 1e5);
        // force exact-boundary and tied cases
        if (ev.d1.size() > 10) {
            ev.d2.push_back(ev.d1[5] + 6.0);  // exactly +window/2 for w=12
            ev.d2.push_back(ev.d1[7]);        // tie
            ev.d3.push_back(ev.d1[5] - 6.0);  // exactly -window/2
            std::sort(ev.d2.begin(), ev.d2.end());
            std::sort(ev.d3.begin(), ev.d3.end());
        }
        for (double w : {12.0, 7.3, 120.0}) {
            const auto fast = count_coincidences(ev, w);
            const auto slow = brute_force_coincidences(ev, w);
            CHECK(counts_equal(fast, slow));
            CHECK(fast.n123 <= std::min(fast.n12, fast.n13));
            CHECK(fast.n12 <= fast.n1);
            CHECK(fast.n13 <= fast.n1);
        }
    }
}

TEST_CASE("window edges are inclusive and each herald counts once") {
    EventStream ev;
    ev.d1 = {1000.0};
    ev.d2 = {994.0, 1003.0, 1006.0}; // -6, +3, +6 for window 12
    ev.d3 = {993.9};                 // just outside
    const auto c = count_coincidences(ev, 12.0);
    CHECK(c.n1 == 1);
    CHECK(c.n12 == 1); // three partners still count one herald
    CHECK(c.n13 == 0);
    CHECK(c.n123 == 0);

    EventStream both;
    both.d1 = {1000.0, 5000.0};
    both.d2 = {1004.0};
    both.d3 = {996.0, 5005.9};
    const auto cb = count_coincidences(both, 12.0);
    CHECK(cb.n12 == 1);
    CHECK(cb.n13 == 2);
    CHECK(cb.n123 == 1);
}

TEST_CASE("empty streams produce zero counts and an undefined estimate") {
    EventStream ev;
    const auto c = count_coincidences(ev, 12.0);
    CHECK(c.n1 == 0);
    CHECK(c.n12 == 0);
    CHECK(c.n123 == 0);
    const auto g = g2_from_counts(c);
    CHECK_FALSE(g.defined);
}

TEST_CASE("heralded source with detector dead time has no triples") {
    SourceConfig cfg;
    cfg.kind = SourceKind::HeraldedSingle;
    cfg.rate_hz = 1e4;
    cfg.duration_s = 5.0;
    cfg.dead_time_ns = 12.0;
    Rng rng(917);
    const auto ev = simulate_source(cfg, rng);
    CHECK(ev.d1.size() > 40000);
    CHECK(ev.d2.size() + ev.d3.size() == ev.d1.size());

    const auto c = count_coincidences(ev, 12.0);
    CHECK(c.n12 + c.n13 == c.n1); // every herald finds its partner
    CHECK(c.n123 == 0);
    const auto g = g2_from_counts(c);
    CHECK(g.defined);
    CHECK(g.g2 == 0.0);
}

TEST_CASE("partial efficiencies thin the streams") {
    SourceConfig cfg;
    cfg.kind = SourceKind::HeraldedSingle;
    cfg.rate_hz = 1e4;
    cfg.duration_s = 2.0;
    cfg.herald_efficiency = 0.5;
    cfg.signal_efficiency = 0.8;
    Rng rng(31);
    const auto ev = simulate_source(cfg, rng);
    const double n_pairs = 2e4;
    // 5 sigma bands around the thinned means
    CHECK(std::abs(static_cast<double>(ev.d1.size()) - 0.5 * n_pairs) <
          5.0 * std::sqrt(0.5 * n_pairs));
    const double signal = static_cast<double>(ev.d2.size() + ev.d3.size());
    CHECK(std::abs(signal - 0.8 * n_pairs) < 5.0 * std::sqrt(0.8 * n_pairs));
    // splitter is fair
    const double half = 0.5 * signal;
    CHECK(std::abs(static_cast<double>(ev.d2.size()) - half) <
          5.0 * std::sqrt(half));
}

TEST_CASE("coherent source estimates g2 = 1") {
    SourceConfig cfg;
    cfg.kind = SourceKind::Coherent;
    cfg.rate_hz = 1e4;
    cfg.duration_s = 5.0;
    // window sized for ~20 expected triples per trial; at the physical
    // 12 ns window a 1e4 Hz coherent beam yields none in 5 s
    const double window = 4000.0;
    std::vector<G2Result> trials;
    for (int t = 0; t < 12; ++t) {
        Rng rng(trial_seed(400, static_cast<std::uint64_t>(t)));
        const auto ev = simulate_source(cfg, rng);
        trials.push_back(g2_from_counts(count_coincidences(ev, window)));
    }
    const auto stats = g2_over_trials(trials);
    CHECK(stats.n_defined == 12);
    CHECK(stats.sigma > 0.0);
    CHECK(std::abs(stats.mean - 1.0) <= 3.0 * stats.sigma);
    CHECK(stats.mean == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("thermal source estimates g2 = 2") {
    SourceConfig cfg;
    cfg.kind = SourceKind::Thermal;
    cfg.rate_hz = 1e4;
    cfg.duration_s = 5.0;
    cfg.coherence_time_ns = 20000.0; // bunching visible inside the window
    const double window = 4000.0;
    std::vector<G2Result> trials;
    for (int t = 0; t < 12; ++t) {
        Rng rng(trial_seed(500, static_cast<std::uint64_t>(t)));
        const auto ev = simulate_source(cfg, rng);
        trials.push_back(g2_from_counts(count_coincidences(ev, window)));
    }
    const auto stats = g2_over_trials(trials);
    CHECK(stats.n_defined == 12);
    CHECK(std::abs(stats.mean - 2.0) <= 4.0 * stats.sigma);
}

TEST_CASE("background events land only on the signal arms") {
    SourceConfig cfg;
    cfg.kind = SourceKind::HeraldedSingle;
    cfg.rate_hz = 1e3;
    cfg.duration_s = 1.0;
    cfg.background_rate_hz = 5e3;
    Rng rng(8);
    const auto ev = simulate_source(cfg, rng);
    CHECK(std::abs(static_cast<double>(ev.d1.size()) - 1e3) <
          5.0 * std::sqrt(1e3));
    // each signal arm: half the pairs plus its own background
    const double expect2 = 0.5 * 1e3 + 5e3;
    CHECK(std::abs(static_cast<double>(ev.d2.size()) - expect2) <
          5.0 * std::sqrt(expect2));
    CHECK(std::is_sorted(ev.d2.begin(), ev.d2.end()));
}

TEST_CASE("simulation is deterministic under the seed") {
    SourceConfig cfg;
    cfg.kind = SourceKind::Thermal;
    cfg.duration_s = 0.5;
    Rng a(99), b(99);
    const auto ea = simulate_source(cfg, a);
    const auto eb = simulate_source(cfg, b);
    CHECK(ea.d1 == eb.d1);
    CHECK(ea.d2 == eb.d2);
    CHECK(ea.d3 == eb.d3);
}

TEST_CASE("source configuration is validated") {
    SourceConfig cfg;
    Rng rng(1);
    cfg.jitter_ns = 5.0; // beyond the coherence bound
    CHECK_THROWS_AS(simulate_source(cfg, rng), Error);
    cfg.jitter_ns = 3.0;
    cfg.rate_hz = -1.0;
    CHECK_THROWS_AS(simulate_source(cfg, rng), Error);
    cfg.rate_hz = 1e4;
    cfg.herald_efficiency = 1.5;
    CHECK_THROWS_AS(simulate_source(cfg, rng), Error);
}

TEST_CASE("g2 statistics pool only the defined trials") {
    CoincidenceCounts c;
    c.n1 = 100;
    c.n12 = 10;
    c.n13 = 10;
    c.n123 = 2;
    auto g = g2_from_counts(c);
    CHECK(g.defined);
    CHECK(g.g2 == doctest::Approx(100.0 * 2.0 / (10.0 * 10.0)));

    G2Result undef;
    undef.defined = false;
    std::vector<G2Result> trials;
    for (double v : {1.0, 2.0, 3.0}) {
        G2Result r;
        r.defined = true;
        r.g2 = v;
        trials.push_back(r);
    }
    trials.push_back(undef);
    const auto stats = g2_over_trials(trials);
    CHECK(stats.n_trials == 4);
    CHECK(stats.n_defined == 3);
    CHECK(stats.mean == doctest::Approx(2.0));
    // SE = sample sd / sqrt(3) = 1 / sqrt(3)
    CHECK(stats.sigma == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("event stream text round trip is byte identical") {
    SourceConfig cfg;
    cfg.kind = SourceKind::HeraldedSingle;
    cfg.rate_hz = 2e3;
    cfg.duration_s = 0.2;
    Rng rng(4242);
    const auto ev = simulate_source(cfg, rng);

    std::ostringstream first;
    write_event_stream(first, ev);
    std::istringstream back(first.str());
    const auto again = read_event_stream(back);
    std::ostringstream second;
    write_event_stream(second, again);
    CHECK(first.str() == second.str());
    CHECK(again.d1.size() == ev.d1.size());
    CHECK(again.d2.size() == ev.d2.size());
}

TEST_CASE("event stream reader rejects malformed input") {
    {
        std::istringstream bad("4\t100.0\n");
        CHECK_THROWS_AS(read_event_stream(bad), ConfigError);
    }
    {
        std::istringstream unsorted("1\t200.0\n1\t100.0\n");
        CHECK_THROWS_AS(read_event_stream(unsorted), ConfigError);
    }
    {
        std::istringstream garbage("1\tnot_a_number\n");
        CHECK_THROWS_AS(read_event_stream(garbage), ConfigError);
    }
    {
        std::istringstream fine("# comment\n\n1\t100.0\n2\t105.5\n");
        const auto ev = read_event_stream(fine);
        CHECK(ev.d1.size() == 1);
        CHECK(ev.d2.size() == 1);
        CHECK(ev.d2[0] == doctest::Approx(105.5));
    }
}
