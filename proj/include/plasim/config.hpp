#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plasim/core.hpp"
#include "plasim/evolution.hpp"
#include "plasim/kernels.hpp"
#include "plasim/noise.hpp"
#include "plasim/photonstats.hpp"

namespace plasim {

enum class AxisMode { Final, Initial, Both };
enum class AlignmentMode { LeastSquares, SinglePoint };
enum class PhaseProfile { None, Vee };

// Everything a run needs, resolved and validated. Loaded from an INI-style
// file: [section] headers, key = value lines, '#' or ';' comments. Unknown
// sections or keys are errors, not warnings; a typo must not silently fall
// back to a default.
struct RunConfig {
    // [physics]
    PhysicalParams physics;
    double x_packet = 0.0;

    // [grid]
    Eigen::Index n = 4096;
    double dx = 2.67e-3;
    double x0 = 0.0;

    // [potential]
    Potential potential = Potential::free_space();

    // [evolution]
    int steps = 0; // 0 = per-segment default
    BandLimit band;

    // [geometry]
    Endpoints ends{0.0, 0.0, 0.043, 10.0};

    // [scan]
    std::vector<double> z_list;
    bool window_auto = true; // center = (x_a + x_b)/2
    double window_center = 0.0;
    double window_half_width = 0.075;
    AxisMode axis = AxisMode::Final;

    // [analysis]
    int smooth_window = 5;
    bool refine = true;
    double mask_floor = 1e-8;
    double division_floor = 1e-6;
    AlignmentMode alignment = AlignmentMode::LeastSquares;
    long alignment_pivot = -1; // -1 = window center sample

    // [detector]
    bool detector_enabled = false;
    DetectorModel detector;

    // [robustness]
    double eps_fraction = 0.003;
    bool robustness_z_auto = true; // z = 1.1*pi/omega (harmonic only)
    double robustness_z = 0.0;
    std::vector<double> spans; // default 0.05:1.0:0.05 when empty
    bool robustness_protocol = false;

    // [g2]
    SourceConfig source;
    int g2_trials = 12;
    double window_ns = 12.0;
    std::string events_in;
    bool export_events = false;

    // [wavefunction]
    double theta = pi / 2;
    double p0 = 0.0;
    PhaseProfile phase_profile = PhaseProfile::None;
    double phase_coefficient = 0.0; // rad/mm for the vee profile

    // [run]
    std::uint64_t seed = 1;
    std::string out = "plasim_out";
    int threads = 0;

    SpatialGrid grid() const { return make_grid(n, dx, x0); }
    double scan_center() const {
        return window_auto ? 0.5 * (ends.x_a + ends.x_b) : window_center;
    }
    std::vector<double> effective_spans() const;
};

// Throws ConfigError with a line/key diagnostic on any problem.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// FNV-1a over the canonical dump of every physics-relevant value ([run] is
// excluded: seed, output path and thread count must not change the hash).
std::uint64_t fnv1a64(const std::string& data);
std::string canonical_dump(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

} // namespace plasim
