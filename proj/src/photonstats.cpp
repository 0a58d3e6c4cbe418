#include "plasim/photonstats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "plasim/errors.hpp"

namespace plasim {

namespace {

// Poisson process on [0, duration): draw the count, then order uniform times.
std::vector<double> poisson_times_ns(double rate_hz, double duration_s,
                                     Rng& rng) {
    const double mean = rate_hz * duration_s;
    const std::uint64_t n = rng.poisson(mean);
    std::vector<double> times(n);
    const double duration_ns = duration_s * 1e9;
    for (auto& t : times) t = rng.uniform() * duration_ns;
    std::sort(times.begin(), times.end());
    return times;
}

void apply_dead_time(std::vector<double>& times, double dead_ns) {
    if (dead_ns <= 0.0 || times.empty()) return;
    std::vector<double> kept;
    kept.reserve(times.size());
    double last = -dead_ns;
    for (const double t : times) {
        if (t - last >= dead_ns) {
            kept.push_back(t);
            last = t;
        }
    }
    times.swap(kept);
}

double jittered(double t, double jitter_ns, Rng& rng) {
    if (jitter_ns <= 0.0) return t;
    return t + (rng.uniform() - 0.5) * jitter_ns;
}

void append_background(std::vector<double>& stream, double rate_hz,
                       double duration_s, double jitter_ns, Rng& rng) {
    if (rate_hz <= 0.0) return;
    for (const double t : poisson_times_ns(rate_hz, duration_s, rng))
        stream.push_back(jittered(t, jitter_ns, rng));
}

// Shared predicate for both counters; the test contract is exact agreement,
// so the boundary comparison must be literally the same expression.
inline bool in_window(double t_ref, double t, double half) {
    return t >= t_ref - half && t <= t_ref + half;
}

bool sweep_hit(const std::vector<double>& stream, double t_ref, double half,
               std::size_t& cursor) {
    while (cursor < stream.size() && stream[cursor] < t_ref - half) ++cursor;
    return cursor < stream.size() && in_window(t_ref, stream[cursor], half);
}

} // namespace

EventStream simulate_source(const SourceConfig& config, Rng& rng) {
    if (!(config.rate_hz > 0.0)) throw Error("simulate_source: rate must be positive");
    if (!(config.duration_s > 0.0))
        throw Error("simulate_source: duration must be positive");
    if (config.herald_efficiency < 0.0 || config.herald_efficiency > 1.0 ||
        config.signal_efficiency < 0.0 || config.signal_efficiency > 1.0)
        throw Error("simulate_source: efficiencies must lie in [0,1]");
    if (config.jitter_ns < 0.0 || config.jitter_ns > 3.0)
        throw Error("simulate_source: jitter must lie in [0,3] ns");

    EventStream events;
    switch (config.kind) {
    case SourceKind::HeraldedSingle: {
        std::vector<double> pairs =
            poisson_times_ns(config.rate_hz, config.duration_s, rng);
        apply_dead_time(pairs, config.dead_time_ns);
        for (const double t : pairs) {
            if (rng.uniform() < config.herald_efficiency)
                events.d1.push_back(jittered(t, config.jitter_ns, rng));
            // The signal photon takes exactly one splitter arm.
            const bool to_d2 = rng.uniform() < 0.5;
            if (rng.uniform() < config.signal_efficiency) {
                auto& arm = to_d2 ? events.d2 : events.d3;
                arm.push_back(jittered(t, config.jitter_ns, rng));
            }
        }
        break;
    }
    case SourceKind::Coherent: {
        auto stream = [&](double rate) {
            std::vector<double> times =
                poisson_times_ns(rate, config.duration_s, rng);
            apply_dead_time(times, config.dead_time_ns);
            for (auto& t : times) t = jittered(t, config.jitter_ns, rng);
            return times;
        };
        events.d1 = stream(config.rate_hz * config.herald_efficiency);
        events.d2 = stream(0.5 * config.rate_hz * config.signal_efficiency);
        events.d3 = stream(0.5 * config.rate_hz * config.signal_efficiency);
        break;
    }
    case SourceKind::Thermal: {
        // Exponential intensity held constant per coherence cell, shared by
        // D2 and D3; the herald is an independent Poisson stream. The shared
        // intensity is what drives the bunching: <I^2>/<I>^2 = 2.
        if (!(config.coherence_time_ns > 0.0))
            throw Error("simulate_source: coherence time must be positive");
        events.d1 = poisson_times_ns(config.rate_hz * config.herald_efficiency,
                                     config.duration_s, rng);
        for (auto& t : events.d1) t = jittered(t, config.jitter_ns, rng);
        const double duration_ns = config.duration_s * 1e9;
        const double arm_rate_per_ns =
            0.5 * config.rate_hz * config.signal_efficiency * 1e-9;
        for (double cell = 0.0; cell < duration_ns;
             cell += config.coherence_time_ns) {
            const double width =
                std::min(config.coherence_time_ns, duration_ns - cell);
            const double intensity = rng.exponential(1.0);
            const double mean = arm_rate_per_ns * intensity * width;
            for (auto* arm : {&events.d2, &events.d3}) {
                const std::uint64_t n = rng.poisson(mean);
                for (std::uint64_t i = 0; i < n; ++i)
                    arm->push_back(jittered(cell + rng.uniform() * width,
                                            config.jitter_ns, rng));
            }
        }
        break;
    }
    }

    append_background(events.d2, config.background_rate_hz, config.duration_s,
                      config.jitter_ns, rng);
    append_background(events.d3, config.background_rate_hz, config.duration_s,
                      config.jitter_ns, rng);
    std::sort(events.d1.begin(), events.d1.end());
    std::sort(events.d2.begin(), events.d2.end());
    std::sort(events.d3.begin(), events.d3.end());
    return events;
}

CoincidenceCounts count_coincidences(const EventStream& events,
                                     double window_ns) {
    if (!(window_ns > 0.0))
        throw Error("count_coincidences: window must be positive");
    CoincidenceCounts counts;
    counts.window_ns = window_ns;
    counts.n1 = events.d1.size();
    counts.n2 = events.d2.size();
    counts.n3 = events.d3.size();
    const double half = 0.5 * window_ns;
    std::size_t c2 = 0, c3 = 0;
    for (const double t1 : events.d1) {
        const bool hit2 = sweep_hit(events.d2, t1, half, c2);
        const bool hit3 = sweep_hit(events.d3, t1, half, c3);
        counts.n12 += hit2;
        counts.n13 += hit3;
        counts.n123 += hit2 && hit3;
    }
    return counts;
}

CoincidenceCounts brute_force_coincidences(const EventStream& events,
                                           double window_ns) {
    if (!(window_ns > 0.0))
        throw Error("brute_force_coincidences: window must be positive");
    CoincidenceCounts counts;
    counts.window_ns = window_ns;
    counts.n1 = events.d1.size();
    counts.n2 = events.d2.size();
    counts.n3 = events.d3.size();
    const double half = 0.5 * window_ns;
    auto any_hit = [&](const std::vector<double>& stream, double t1) {
        for (const double t : stream)
            if (in_window(t1, t, half)) return true;
        return false;
    };
    for (const double t1 : events.d1) {
        const bool hit2 = any_hit(events.d2, t1);
        const bool hit3 = any_hit(events.d3, t1);
        counts.n12 += hit2;
        counts.n13 += hit3;
        counts.n123 += hit2 && hit3;
    }
    return counts;
}

G2Result g2_from_counts(const CoincidenceCounts& counts) {
    G2Result result;
    result.counts = counts;
    result.defined = counts.n12 > 0 && counts.n13 > 0;
    if (result.defined)
        result.g2 = static_cast<double>(counts.n1) *
                    static_cast<double>(counts.n123) /
                    (static_cast<double>(counts.n12) *
                     static_cast<double>(counts.n13));
    return result;
}

G2Statistics g2_over_trials(const std::vector<G2Result>& trials) {
    G2Statistics stats;
    stats.n_trials = static_cast<int>(trials.size());
    double sum = 0.0;
    for (const auto& t : trials) {
        if (!t.defined) continue;
        ++stats.n_defined;
        sum += t.g2;
    }
    if (stats.n_defined == 0) return stats;
    stats.mean = sum / stats.n_defined;
    if (stats.n_defined >= 2) {
        double ss = 0.0;
        for (const auto& t : trials) {
            if (!t.defined) continue;
            const double d = t.g2 - stats.mean;
            ss += d * d;
        }
        stats.sigma = std::sqrt(ss / (stats.n_defined - 1)) /
                      std::sqrt(static_cast<double>(stats.n_defined));
    }
    return stats;
}

void write_event_stream(std::ostream& out, const EventStream& events) {
    struct Tagged {
        int id;
        double t;
    };
    std::vector<Tagged> merged;
    merged.reserve(events.d1.size() + events.d2.size() + events.d3.size());
    for (const double t : events.d1) merged.push_back({1, t});
    for (const double t : events.d2) merged.push_back({2, t});
    for (const double t : events.d3) merged.push_back({3, t});
    std::stable_sort(merged.begin(), merged.end(),
                     [](const Tagged& a, const Tagged& b) {
                         if (a.t != b.t) return a.t < b.t;
                         return a.id < b.id;
                     });
    char line[64];
    for (const auto& e : merged) {
        std::snprintf(line, sizeof line, "%d\t%.6f\n", e.id, e.t);
        out << line;
    }
}

EventStream read_event_stream(std::istream& in) {
    EventStream events;
    std::string line;
    double last = -1e300;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int id = 0;
        double t = 0.0;
        if (!(ls >> id >> t))
            throw ConfigError("event stream: malformed line " +
                              std::to_string(line_no));
        if (id < 1 || id > 3)
            throw ConfigError("event stream: detector id out of range at line " +
                              std::to_string(line_no));
        if (!std::isfinite(t))
            throw ConfigError("event stream: non-finite timestamp at line " +
                              std::to_string(line_no));
        if (t < last)
            throw ConfigError("event stream: timestamps not sorted at line " +
                              std::to_string(line_no));
        last = t;
        (id == 1 ? events.d1 : id == 2 ? events.d2 : events.d3).push_back(t);
    }
    return events;
}

} // namespace plasim
