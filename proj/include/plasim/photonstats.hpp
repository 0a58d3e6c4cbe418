#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "plasim/rng.hpp"

namespace plasim {

// Timestamps in nanoseconds, each detector's list sorted ascending.
// D1 is the herald; D2 and D3 sit behind the splitter.
struct EventStream {
    std::vector<double> d1, d2, d3;
};

enum class SourceKind { HeraldedSingle, Coherent, Thermal };

struct SourceConfig {
    SourceKind kind = SourceKind::HeraldedSingle;
    double rate_hz = 1e4;       // pair rate (heralded) / herald rate
    double duration_s = 5.0;
    double herald_efficiency = 1.0;
    double signal_efficiency = 1.0;
    double jitter_ns = 3.0;     // detection time jitter, uniform +-jitter/2
    // Minimum separation enforced between source emissions. A dead time at
    // or above the coincidence window makes accidental triple coincidences
    // impossible for the heralded source, which is what "ideal single
    // photons" means operationally.
    double dead_time_ns = 0.0;
    double background_rate_hz = 0.0; // accidentals added to D2 and D3
    double coherence_time_ns = 100.0; // thermal intensity cell
};

// Heralded: Poisson pair emissions; the signal photon goes to exactly one of
// D2/D3. Coherent: three independent Poisson streams (splitter halves the
// signal rate). Thermal: D2/D3 share a common exponentially-distributed
// intensity, piecewise constant per coherence cell, herald independent.
// Heralded g2 -> 0, coherent -> 1, thermal -> <I^2>/<I>^2 = 2.
EventStream simulate_source(const SourceConfig& config, Rng& rng);

struct CoincidenceCounts {
    std::uint64_t n1 = 0, n2 = 0, n3 = 0;
    std::uint64_t n12 = 0, n13 = 0, n123 = 0;
    double window_ns = 0.0;
};

// Heralded coincidences: a D1 event counts toward N12 when at least one D2
// event lies within +-window/2 (inclusive), toward N13 likewise, and toward
// N123 when both do. Each D1 event contributes at most once per counter.
// Linear two-pointer sweep over the sorted streams.
CoincidenceCounts count_coincidences(const EventStream& events,
                                     double window_ns = 12.0);

// Same definition by exhaustive pairwise comparison; O(n1 * (n2 + n3)).
// Exists to pin the fast counter down in tests.
CoincidenceCounts brute_force_coincidences(const EventStream& events,
                                           double window_ns = 12.0);

struct G2Result {
    double g2 = 0.0;
    bool defined = false; // false when N12 * N13 == 0
    CoincidenceCounts counts;
};

// Heralded second-order correlation g2 = N1 * N123 / (N12 * N13).
G2Result g2_from_counts(const CoincidenceCounts& counts);

struct G2Statistics {
    double mean = 0.0;
    double sigma = 0.0; // standard error of the mean over defined trials
    int n_defined = 0;
    int n_trials = 0;
};

G2Statistics g2_over_trials(const std::vector<G2Result>& trials);

// Text form: one event per line, "detector_id<TAB>timestamp_ns" with the
// merged stream sorted by timestamp. Timestamps carry six decimals, so a
// write/read/write round trip is byte-identical.
void write_event_stream(std::ostream& out, const EventStream& events);
EventStream read_event_stream(std::istream& in);

} // namespace plasim
