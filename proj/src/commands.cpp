#include "plasim/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "plasim/errors.hpp"
#include "plasim/least_action.hpp"
#include "plasim/noise.hpp"
#include "plasim/photonstats.hpp"
#include "plasim/protocol.hpp"

namespace plasim {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_hash(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

// All tables share the same comment-header block so any file can be traced
// back to the exact configuration and seed that produced it.
class TableWriter {
  public:
    TableWriter(const fs::path& path, const std::string& command,
                const RunConfig& config) {
        out_.open(path);
        if (!out_) throw Error("cannot open output file: " + path.string());
        out_ << "# plasim " << command << "\n";
        out_ << "# config_hash: " << fmt_hash(config_hash(config)) << "\n";
        out_ << "# seed: " << config.seed << "\n";
        out_ << "# units: x mm, z mm, t ns\n";
    }

    void meta(const std::string& key, const std::string& value) {
        out_ << "# " << key << ": " << value << "\n";
    }

    void columns(const std::string& names) {
        out_ << "# columns: " << names << "\n" << names << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream& stream() { return out_; }

  private:
    std::ofstream out_;
};

class SummaryWriter {
  public:
    SummaryWriter(const fs::path& dir, const std::string& command,
                  const RunConfig& config)
        : writer_(dir / "summary.txt", command, config) {}

    void line(const std::string& key, const std::string& value) {
        writer_.stream() << key << " = " << value << "\n";
    }
    void line(const std::string& key, double value) { line(key, fmt(value)); }

  private:
    TableWriter writer_;
};

fs::path prepare_out_dir(const RunConfig& config) {
    fs::path dir(config.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory: " + config.out);
    return dir;
}

RealArray window_positions(const SpatialGrid& grid, double center,
                           double half_width) {
    std::vector<double> xs;
    const double tol = 1e-12 * std::max(1.0, std::abs(half_width));
    for (Eigen::Index j = 0; j < grid.n; ++j)
        if (std::abs(grid.x_at(j) - center) <= half_width + tol)
            xs.push_back(grid.x_at(j));
    if (xs.empty()) throw EmptyScan("scan window contains no grid samples");
    return Eigen::Map<const RealArray>(xs.data(),
                                       static_cast<Eigen::Index>(xs.size()));
}

ScanSetup base_setup(const RunConfig& config, const ComplexField& psi0,
                     double z, ScanAxis axis) {
    ScanSetup setup;
    setup.psi0 = psi0;
    setup.k = config.physics.k();
    setup.potential = config.potential;
    setup.ends = config.ends;
    setup.z = z;
    setup.axis = axis;
    setup.window = {config.scan_center(), config.window_half_width};
    setup.evolve_steps = config.steps;
    setup.band = config.band;
    setup.threads = config.threads;
    return setup;
}

struct ScanErrorStats {
    double max_rel_err = 0.0; // over valid samples with |K| >= 1% of peak
    int n_compared = 0;
};

ScanErrorStats scan_error(const ReconstructedKernel& rec,
                          const ComplexArray& theory) {
    ScanErrorStats stats;
    const double peak = theory.abs().maxCoeff();
    for (Eigen::Index i = 0; i < rec.kernel.size(); ++i) {
        if (!rec.valid[i]) continue;
        const double mag = std::abs(theory[i]);
        if (mag < 0.01 * peak) continue;
        const double err = std::abs(rec.kernel[i] - theory[i]) / mag;
        if (err > stats.max_rel_err) stats.max_rel_err = err;
        ++stats.n_compared;
    }
    return stats;
}

void write_scan_csv(const fs::path& dir, const std::string& name,
                    const RunConfig& config, double z,
                    const PropagatorScan& scan, const ReconstructedKernel& rec,
                    const ComplexArray& theory) {
    TableWriter csv(dir / name, "propagator-scan", config);
    csv.meta("z", fmt(z));
    csv.meta("axis", scan.axis == ScanAxis::FinalPosition ? "final" : "initial");
    csv.columns("x,kpp_re,kpp_im,krec_re,krec_im,ktheory_re,ktheory_im,valid");
    for (Eigen::Index i = 0; i < scan.x.size(); ++i)
        csv.row({fmt(scan.x[i]), fmt(scan.kpp[i].real()),
                 fmt(scan.kpp[i].imag()), fmt(rec.kernel[i].real()),
                 fmt(rec.kernel[i].imag()), fmt(theory[i].real()),
                 fmt(theory[i].imag()), rec.valid[i] ? "1" : "0"});
}

} // namespace

int run_propagator_scan(const RunConfig& config) {
    if (config.z_list.empty())
        throw ConfigError("propagator-scan: scan.z_list is required");
    const bool want_final = config.axis != AxisMode::Initial;
    const bool want_initial = config.axis != AxisMode::Final;
    for (const double z : config.z_list) {
        if (want_final && !(z > config.ends.z_a))
            throw ConfigError("propagator-scan: z must exceed geometry.z_a");
        if (want_initial &&
            !(z >= config.ends.z_a && z < config.ends.z_b))
            throw ConfigError(
                "propagator-scan: initial-slit z must lie in [z_a, z_b)");
    }
    const SpatialGrid grid = config.grid();
    const ComplexField psi0 =
        gaussian_packet(grid, config.physics.a_x, config.x_packet);
    const double k = config.physics.k();

    const fs::path dir = prepare_out_dir(config);
    SummaryWriter summary(dir, "propagator-scan", config);
    summary.line("n_planes", fmt(static_cast<double>(config.z_list.size())));

    for (std::size_t i = 0; i < config.z_list.size(); ++i) {
        const double z = config.z_list[i];
        if (want_final) {
            PropagatorScan scan = scan_propagator(
                base_setup(config, psi0, z, ScanAxis::FinalPosition));
            if (config.detector_enabled) {
                Rng rng(trial_seed(config.seed, 2 * i));
                scan = with_intensities(
                    scan,
                    sample_intensities(scan.intensities, config.detector, rng));
            }
            const ReconstructedKernel rec =
                reconstruct_propagator(scan, config.division_floor);
            const ComplexArray theory = propagator_from(
                k, config.potential, config.ends.x_a, config.ends.z_a, scan.x,
                z);
            write_scan_csv(dir, "scan_final_" + std::to_string(i) + ".csv",
                           config, z, scan, rec, theory);
            const ScanErrorStats stats = scan_error(rec, theory);
            summary.line("final_" + std::to_string(i) + "_z", z);
            summary.line("final_" + std::to_string(i) + "_max_rel_err",
                         stats.max_rel_err);
            summary.line("final_" + std::to_string(i) + "_n_compared",
                         fmt(static_cast<double>(stats.n_compared)));
        }
        if (want_initial) {
            PropagatorScan scan = scan_propagator(
                base_setup(config, psi0, z, ScanAxis::InitialSlit));
            if (config.detector_enabled) {
                Rng rng(trial_seed(config.seed, 2 * i + 1));
                scan = with_intensities(
                    scan,
                    sample_intensities(scan.intensities, config.detector, rng));
            }
            const ReconstructedKernel rec =
                reconstruct_propagator(scan, config.division_floor);
            const ComplexArray theory =
                propagator_to(k, config.potential, scan.x, z, config.ends.x_b,
                              config.ends.z_b);
            write_scan_csv(dir, "scan_initial_" + std::to_string(i) + ".csv",
                           config, z, scan, rec, theory);
            const ScanErrorStats stats = scan_error(rec, theory);
            summary.line("initial_" + std::to_string(i) + "_z", z);
            summary.line("initial_" + std::to_string(i) + "_max_rel_err",
                         stats.max_rel_err);
            summary.line("initial_" + std::to_string(i) + "_n_compared",
                         fmt(static_cast<double>(stats.n_compared)));
        }
    }
    return 0;
}

int run_trajectory(const RunConfig& config) {
    if (config.z_list.empty())
        throw ConfigError("trajectory: scan.z_list is required");
    for (const double z : config.z_list)
        if (!(z > config.ends.z_a && z < config.ends.z_b))
            throw ConfigError("trajectory: every z must lie in (z_a, z_b)");
    const SpatialGrid grid = config.grid();
    const ComplexField psi0 =
        gaussian_packet(grid, config.physics.a_x, config.x_packet);

    TrajectoryOptions options;
    options.smooth_window = config.smooth_window;
    options.refine = config.refine;
    options.mask_floor_rel = config.mask_floor;
    options.evolve_steps = config.steps;
    options.band = config.band;
    options.threads = config.threads;
    if (config.detector_enabled) {
        // One sampling stream for the whole run; scans arrive in a fixed
        // order, so the result is reproducible from the seed alone.
        auto rng = std::make_shared<Rng>(trial_seed(config.seed, 0));
        const DetectorModel model = config.detector;
        options.filter = [rng, model](const PropagatorScan& scan) {
            return with_intensities(
                scan, sample_intensities(scan.intensities, model, *rng));
        };
    }

    const fs::path dir = prepare_out_dir(config);
    const TrajectoryEstimate estimate = extract_trajectory(
        psi0, config.physics.k(), config.potential, config.ends, config.z_list,
        {config.scan_center(), config.window_half_width}, options);

    TableWriter csv(dir / "trajectory.csv", "trajectory", config);
    csv.columns("z,x_cl,x_refined,g_min,x_classical,ok,error");
    double sum_z = 0.0, sum_x = 0.0, sum_zz = 0.0, sum_zx = 0.0;
    double max_dev = 0.0;
    int n_fit = 0;
    for (const auto& point : estimate.points) {
        double x_classical = std::nan("");
        try {
            x_classical =
                classical_trajectory(config.potential, config.ends, point.z);
        } catch (const Error&) {
        }
        csv.row({fmt(point.z), fmt(point.x_cl), fmt(point.x_refined),
                 fmt(point.g_min), fmt(x_classical), point.ok ? "1" : "0",
                 point.ok ? "" : point.error});
        if (point.ok) {
            sum_z += point.z;
            sum_x += point.x_refined;
            sum_zz += point.z * point.z;
            sum_zx += point.z * point.x_refined;
            ++n_fit;
            if (std::isfinite(x_classical))
                max_dev =
                    std::max(max_dev, std::abs(point.x_cl - x_classical));
        }
    }

    SummaryWriter summary(dir, "trajectory", config);
    summary.line("n_planes", fmt(static_cast<double>(estimate.points.size())));
    summary.line("n_ok", fmt(static_cast<double>(estimate.n_ok)));
    summary.line("max_abs_dev_from_classical", max_dev);
    if (n_fit >= 2) {
        const double denom = n_fit * sum_zz - sum_z * sum_z;
        const double slope = (n_fit * sum_zx - sum_z * sum_x) / denom;
        const double intercept = (sum_x - slope * sum_z) / n_fit;
        summary.line("fit_slope", slope);
        summary.line("fit_intercept", intercept);
    }
    const double success = estimate.points.empty()
                               ? 0.0
                               : static_cast<double>(estimate.n_ok) /
                                     static_cast<double>(estimate.points.size());
    summary.line("success_rate", success);
    return success < 0.8 ? 3 : 0;
}

int run_robustness(const RunConfig& config) {
    if (config.robustness_z_auto &&
        config.potential.kind != Potential::Kind::Harmonic)
        throw ConfigError(
            "robustness: z = auto needs a harmonic potential; set robustness.z");
    const double z = config.robustness_z_auto
                         ? 1.1 * pi / config.potential.omega
                         : config.robustness_z;
    const double eps = config.eps_fraction * config.ends.z_span();
    if (!(config.ends.z_a < z - eps && z < config.ends.z_b))
        throw ConfigError("robustness: need z_a < z - eps and z < z_b");
    const SpatialGrid grid = config.grid();
    const double center = config.scan_center();
    const RealArray xs =
        window_positions(grid, center, config.window_half_width);
    const double k = config.physics.k();

    PerturbedPair pair;
    if (config.robustness_protocol) {
        const ComplexField psi0 =
            gaussian_packet(grid, config.physics.a_x, config.x_packet);
        auto scan_at = [&](double z_left, ScanAxis axis) {
            ScanSetup setup = base_setup(config, psi0, z_left, axis);
            return scan_propagator(setup);
        };
        const PropagatorScan right = scan_at(z, ScanAxis::InitialSlit);
        pair.base = build_mpp(scan_at(z, ScanAxis::FinalPosition), right,
                              config.mask_floor);
        pair.shifted =
            build_mpp(scan_at(z - eps, ScanAxis::FinalPosition), right,
                      config.mask_floor, true);
        pair.eps = eps;
    } else {
        pair = perturbed_mpp(k, config.potential, config.ends, z, eps, xs,
                             config.mask_floor);
    }

    const PositionEstimate base_pos =
        find_classical_position(pair.base, {config.refine});
    const PositionEstimate shifted_pos =
        find_classical_position(pair.shifted, {config.refine});

    double max_diff = 0.0;
    for (Eigen::Index i = 0; i < pair.base.m.size(); ++i)
        if (pair.base.valid[i] && pair.shifted.valid[i])
            max_diff = std::max(max_diff,
                                std::abs(pair.base.m[i] - pair.shifted.m[i]));
    const double diff_at_xcl =
        std::abs(pair.base.m[base_pos.index] - pair.shifted.m[base_pos.index]);

    const std::vector<std::pair<double, double>> sweep =
        fidelity_sweep(pair.base, pair.shifted, config.effective_spans(),
                       center);

    const fs::path dir = prepare_out_dir(config);
    {
        TableWriter csv(dir / "fidelity.csv", "robustness", config);
        csv.meta("z", fmt(z));
        csv.meta("eps", fmt(eps));
        csv.columns("span,fidelity");
        for (const auto& [span, f] : sweep) csv.row({fmt(span), fmt(f)});
    }
    {
        TableWriter csv(dir / "mpp_pair.csv", "robustness", config);
        csv.meta("z", fmt(z));
        csv.meta("eps", fmt(eps));
        csv.columns("x,base_re,base_im,shifted_re,shifted_im,abs_diff,valid");
        for (Eigen::Index i = 0; i < pair.base.m.size(); ++i) {
            const bool both = pair.base.valid[i] && pair.shifted.valid[i];
            csv.row({fmt(pair.base.x[i]), fmt(pair.base.m[i].real()),
                     fmt(pair.base.m[i].imag()),
                     fmt(pair.shifted.m[i].real()),
                     fmt(pair.shifted.m[i].imag()),
                     fmt(std::abs(pair.base.m[i] - pair.shifted.m[i])),
                     both ? "1" : "0"});
        }
    }
    SummaryWriter summary(dir, "robustness", config);
    summary.line("z", z);
    summary.line("eps", eps);
    summary.line("mode",
                 config.robustness_protocol ? "protocol" : "analytic");
    summary.line("x_cl_base", base_pos.x_refined);
    summary.line("x_cl_shifted", shifted_pos.x_refined);
    summary.line("x_cl_shift_abs",
                 std::abs(base_pos.x_refined - shifted_pos.x_refined));
    summary.line("max_abs_curve_diff", max_diff);
    summary.line("curve_diff_at_x_cl", diff_at_xcl);
    summary.line("curve_diff_at_x_cl_rel",
                 max_diff > 0.0 ? diff_at_xcl / max_diff : 0.0);
    return 0;
}

int run_g2(const RunConfig& config) {
    std::vector<EventStream> streams;
    if (!config.events_in.empty()) {
        std::ifstream in(config.events_in);
        if (!in)
            throw ConfigError("g2: cannot open events file: " +
                              config.events_in);
        streams.push_back(read_event_stream(in));
    } else {
        streams.reserve(config.g2_trials);
        for (int t = 0; t < config.g2_trials; ++t) {
            Rng rng(trial_seed(config.seed, static_cast<std::uint64_t>(t)));
            streams.push_back(simulate_source(config.source, rng));
        }
    }

    std::vector<G2Result> results;
    results.reserve(streams.size());
    for (const auto& s : streams)
        results.push_back(g2_from_counts(count_coincidences(s, config.window_ns)));
    const G2Statistics stats = g2_over_trials(results);

    const fs::path dir = prepare_out_dir(config);
    {
        TableWriter csv(dir / "g2_trials.csv", "g2", config);
        csv.meta("window_ns", fmt(config.window_ns));
        csv.columns("trial,n1,n2,n3,n12,n13,n123,g2,defined");
        for (std::size_t t = 0; t < results.size(); ++t) {
            const auto& c = results[t].counts;
            csv.row({fmt(static_cast<double>(t)),
                     fmt(static_cast<double>(c.n1)),
                     fmt(static_cast<double>(c.n2)),
                     fmt(static_cast<double>(c.n3)),
                     fmt(static_cast<double>(c.n12)),
                     fmt(static_cast<double>(c.n13)),
                     fmt(static_cast<double>(c.n123)), fmt(results[t].g2),
                     results[t].defined ? "1" : "0"});
        }
    }
    if (config.export_events) {
        for (std::size_t t = 0; t < streams.size(); ++t) {
            std::ofstream out(dir /
                              ("events_trial" + std::to_string(t) + ".tsv"));
            if (!out) throw Error("g2: cannot write events file");
            write_event_stream(out, streams[t]);
        }
    }
    SummaryWriter summary(dir, "g2", config);
    summary.line("n_trials", fmt(static_cast<double>(stats.n_trials)));
    summary.line("n_defined", fmt(static_cast<double>(stats.n_defined)));
    summary.line("g2_mean", stats.mean);
    summary.line("g2_sigma", stats.sigma);
    summary.line("classification",
                 stats.n_defined == 0       ? "undefined"
                 : stats.mean < 0.5         ? "nonclassical"
                                            : "classical");
    return 0;
}

int run_wavefunction(const RunConfig& config) {
    const SpatialGrid grid = config.grid();
    ComplexField psi =
        gaussian_packet(grid, config.physics.a_x, config.x_packet);
    if (config.phase_profile == PhaseProfile::Vee) {
        const RealArray x = grid.positions();
        for (Eigen::Index j = 0; j < grid.n; ++j)
            psi.amp[j] *= std::polar(
                1.0, config.phase_coefficient * std::abs(x[j] - config.x_packet));
    }

    const WavefunctionMeasurement wf =
        measure_wavefunction(psi, config.theta, config.p0);
    PhaseAlignment alignment;
    if (config.alignment == AlignmentMode::LeastSquares) {
        alignment = align_global_phase(wf.psi_rec, psi.amp);
    } else {
        const Eigen::Index pivot = config.alignment_pivot < 0
                                       ? grid.n / 2
                                       : static_cast<Eigen::Index>(
                                             config.alignment_pivot);
        alignment = align_global_phase(wf.psi_rec, psi.amp, pivot);
    }

    const fs::path dir = prepare_out_dir(config);
    const double peak = psi.amp.abs().maxCoeff();
    double max_err = 0.0;
    {
        TableWriter csv(dir / "wavefunction.csv", "wavefunction", config);
        csv.columns("x,psi_re,psi_im,rec_re,rec_im,abs_err");
        for (Eigen::Index j = 0; j < grid.n; ++j) {
            const double err = std::abs(alignment.aligned[j] - psi.amp[j]);
            max_err = std::max(max_err, err);
            csv.row({fmt(wf.x[j]), fmt(psi.amp[j].real()),
                     fmt(psi.amp[j].imag()), fmt(alignment.aligned[j].real()),
                     fmt(alignment.aligned[j].imag()), fmt(err)});
        }
    }
    SummaryWriter summary(dir, "wavefunction", config);
    summary.line("max_abs_err", max_err);
    summary.line("max_err_rel_peak", peak > 0.0 ? max_err / peak : 0.0);
    summary.line("phase_delta", alignment.delta);
    summary.line("phi0_re", wf.phi0.real());
    summary.line("phi0_im", wf.phi0.imag());
    summary.line("ill_conditioned", alignment.ill_conditioned ? "1" : "0");
    return 0;
}

int dispatch_command(const std::string& name, const RunConfig& config) {
    if (name == "propagator-scan") return run_propagator_scan(config);
    if (name == "trajectory") return run_trajectory(config);
    if (name == "robustness") return run_robustness(config);
    if (name == "g2") return run_g2(config);
    if (name == "wavefunction") return run_wavefunction(config);
    throw ConfigError("unknown command: " + name);
}

} // namespace plasim
