#include "plasim/protocol.hpp"

#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "plasim/errors.hpp"
#include "plasim/parallel.hpp"

namespace plasim {

namespace {

const Complex iu(0.0, 1.0);
const double inv_sqrt2 = 0.7071067811865475244008443621048490;

Eigen::Index require_on_grid(const SpatialGrid& grid, double x,
                             const char* what) {
    const Eigen::Index j = grid.index_of(x);
    const double tol = 1e-9 * std::max(1.0, std::abs(x));
    if (std::abs(grid.x_at(j) - x) > tol)
        throw Error(std::string(what) + " must lie on a grid sample");
    return j;
}

std::vector<Eigen::Index> window_indices(const SpatialGrid& grid,
                                         const ScanWindow& window) {
    std::vector<Eigen::Index> idx;
    const double tol = 1e-12 * std::max(1.0, std::abs(window.half_width));
    for (Eigen::Index j = 0; j < grid.n; ++j)
        if (std::abs(grid.x_at(j) - window.center) <=
            window.half_width + tol)
            idx.push_back(j);
    if (idx.empty()) throw EmptyScan("scan window contains no grid samples");
    return idx;
}

PointerIntensities intensities_from(const ComplexArray& c0,
                                    const ComplexArray& c1) {
    PointerIntensities out;
    out.p_plus = 0.5 * (c0 + c1).abs2();
    out.p_minus = 0.5 * (c0 - c1).abs2();
    out.p_right = 0.5 * (c0 + iu * c1).abs2();
    out.p_left = 0.5 * (c0 - iu * c1).abs2();
    out.p_one = c1.abs2();
    return out;
}

template <typename Selector>
ComplexArray gather(const ComplexArray& a, const Selector& idx) {
    ComplexArray out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = a[idx[i]];
    return out;
}

} // namespace

JointState joint_from(const ComplexField& field) {
    return JointState{field.grid, field.amp,
                      ComplexArray::Zero(field.grid.n)};
}

JointState apply_slit_coupling(const JointState& state, double x_a,
                               double theta) {
    const Eigen::Index j = require_on_grid(state.grid, x_a, "slit position");
    JointState out = state;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Complex a0 = state.c0[j];
    const Complex a1 = state.c1[j];
    out.c0[j] = a0 * c + a1 * s;
    out.c1[j] = -a0 * s + a1 * c;
    return out;
}

PointerIntensities pointer_intensities(const JointState& state) {
    return intensities_from(state.c0, state.c1);
}

PointerReadout pointer_expectations(const PointerIntensities& intensities) {
    return PointerReadout{intensities.p_plus - intensities.p_minus,
                          intensities.p_right - intensities.p_left,
                          intensities.p_one};
}

PointerReadout pointer_expectations(const JointState& state) {
    return pointer_expectations(pointer_intensities(state));
}

ComplexArray readout_kpp(const PointerReadout& readout) {
    return (-readout.sx).cast<Complex>() + iu * readout.sy.cast<Complex>();
}

ComplexArray kpp_from_intensities(const PointerIntensities& intensities) {
    return readout_kpp(pointer_expectations(intensities));
}

JointState run_two_branch(const ComplexField& psi0, double x_a,
                          const EvolutionPlan& plan_probe,
                          const EvolutionPlan& plan_ref, double theta) {
    const JointState coupled = apply_slit_coupling(joint_from(psi0), x_a, theta);
    // Probe spike is broadband by construction; its band-limit handling is
    // the solver's job, not something to warn about per slit.
    const EvolveOptions probe_options{false, true};
    const ComplexField probe =
        split_step_evolve({psi0.grid, coupled.c1}, plan_probe, probe_options);
    const ComplexField reference = split_step_evolve(
        {psi0.grid, (coupled.c0 - coupled.c1).eval()}, plan_ref);
    return JointState{psi0.grid, reference.amp * inv_sqrt2, probe.amp};
}

PropagatorScan scan_propagator(const ScanSetup& setup) {
    const SpatialGrid& grid = setup.psi0.grid;
    const std::vector<Eigen::Index> idx = window_indices(grid, setup.window);
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());

    PropagatorScan scan;
    scan.axis = setup.axis;
    scan.dx = grid.dx;
    scan.x = RealArray(m);
    for (Eigen::Index i = 0; i < m; ++i) scan.x[i] = grid.x_at(idx[i]);

    if (setup.axis == ScanAxis::FinalPosition) {
        if (!(setup.ends.z_a < setup.z))
            throw Error("scan_propagator: needs z > z_a");
        scan.z_slit = setup.ends.z_a;
        scan.z_read = setup.z;
        scan.x_fixed = setup.ends.x_a;
        const EvolutionPlan plan =
            make_plan(grid, setup.k, setup.potential, setup.ends.z_a, setup.z,
                      setup.evolve_steps, setup.band);
        const JointState merged =
            run_two_branch(setup.psi0, setup.ends.x_a, plan, plan);
        scan.intensities = intensities_from(gather(merged.c0, idx),
                                            gather(merged.c1, idx));
        scan.kpp = kpp_from_intensities(scan.intensities);
        // sqrt(2)*c0 is the full transported reference arm.
        scan.reference = gather(merged.c0, idx) * std::sqrt(2.0);
        scan.fixed_value =
            setup.psi0.amp[require_on_grid(grid, setup.ends.x_a, "slit position")];
        return scan;
    }

    // InitialSlit: transport to the slit plane once, then one probe
    // evolution per slit sample. The reference arm is slit-independent at
    // theta = pi/2 (coupled c0 - c1 == psi at the slit plane identically),
    // so it is evolved once and shared.
    if (!(setup.z < setup.ends.z_b))
        throw Error("scan_propagator: needs z < z_b");
    if (setup.z < setup.ends.z_a)
        throw Error("scan_propagator: needs z >= z_a");
    scan.z_slit = setup.z;
    scan.z_read = setup.ends.z_b;
    scan.x_fixed = setup.ends.x_b;

    ComplexField psi_mid = setup.psi0;
    if (setup.z > setup.ends.z_a) {
        const EvolutionPlan to_mid =
            make_plan(grid, setup.k, setup.potential, setup.ends.z_a, setup.z,
                      setup.evolve_steps, setup.band);
        psi_mid = split_step_evolve(setup.psi0, to_mid);
    }

    const EvolutionPlan to_read =
        make_plan(grid, setup.k, setup.potential, setup.z, setup.ends.z_b,
                  setup.evolve_steps, setup.band);
    const Eigen::Index b =
        require_on_grid(grid, setup.ends.x_b, "readout pixel");
    const ComplexField reference = split_step_evolve(psi_mid, to_read);
    const Complex c0_b = reference.amp[b] * inv_sqrt2;

    ComplexArray c1_b(m);
    const EvolveOptions probe_options{false, false};
    parallel_for(static_cast<std::size_t>(m), setup.threads,
                 [&](std::size_t i) {
                     ComplexField spike{grid, ComplexArray::Zero(grid.n)};
                     spike.amp[idx[i]] = -psi_mid.amp[idx[i]];
                     c1_b[static_cast<Eigen::Index>(i)] =
                         split_step_evolve(spike, to_read, probe_options)
                             .amp[b];
                 });

    scan.intensities =
        intensities_from(ComplexArray::Constant(m, c0_b), c1_b);
    scan.kpp = kpp_from_intensities(scan.intensities);
    scan.reference = gather(psi_mid.amp, idx);
    scan.fixed_value = reference.amp[b];
    return scan;
}

PropagatorScan with_intensities(const PropagatorScan& scan,
                                PointerIntensities intensities) {
    PropagatorScan out = scan;
    out.intensities = std::move(intensities);
    out.kpp = kpp_from_intensities(out.intensities);
    return out;
}

namespace {

ReconstructedKernel reconstruct_impl(const PropagatorScan& scan,
                                     const ComplexArray& field,
                                     Complex fixed, double floor_rel) {
    // K'' = sqrt(2)*conj(readout-plane reference)*(slit amplitude)*K*dx; the
    // readout-plane factor is the scanned field for FinalPosition and the
    // fixed pixel for InitialSlit.
    ComplexArray denom(scan.x.size());
    if (scan.axis == ScanAxis::FinalPosition)
        denom = field.conjugate() * fixed;
    else
        denom = std::conj(fixed) * field;
    denom *= std::sqrt(2.0) * scan.dx;

    const RealArray mag = field.abs();
    const double floor = floor_rel * mag.maxCoeff();

    ReconstructedKernel out;
    out.x = scan.x;
    out.kernel = ComplexArray::Zero(scan.x.size());
    out.valid = BoolArray::Constant(scan.x.size(), false);
    bool any = false;
    for (Eigen::Index i = 0; i < scan.x.size(); ++i) {
        if (mag[i] <= floor || std::abs(fixed) == 0.0) continue;
        out.kernel[i] = scan.kpp[i] / denom[i];
        out.valid[i] = true;
        any = true;
    }
    if (!any)
        throw DivisionFloor(
            "reconstruct_propagator: every sample fell below the division floor");
    return out;
}

} // namespace

ReconstructedKernel reconstruct_propagator(const PropagatorScan& scan,
                                           double floor_rel) {
    return reconstruct_impl(scan, scan.reference, scan.fixed_value, floor_rel);
}

ReconstructedKernel reconstruct_propagator(const PropagatorScan& scan,
                                           const ComplexField& psi_at_ta,
                                           Complex psi_fixed,
                                           double floor_rel) {
    ComplexArray field(scan.x.size());
    for (Eigen::Index i = 0; i < scan.x.size(); ++i)
        field[i] = psi_at_ta.amp[psi_at_ta.grid.index_of(scan.x[i])];
    return reconstruct_impl(scan, field, psi_fixed, floor_rel);
}

WavefunctionMeasurement measure_wavefunction(const ComplexField& psi,
                                             double theta, double p0) {
    const Eigen::Index n = psi.grid.n;
    thread_local Eigen::FFT<double> engine;
    Eigen::VectorXcd spectrum;
    engine.fwd(spectrum, psi.amp.matrix().eval());

    // Unitary DFT normalization so |Phi|^2 sums to the discrete norm.
    const double root_n = std::sqrt(static_cast<double>(n));
    const RealArray kx = psi.grid.wavenumbers();
    Eigen::Index bin = 0;
    for (Eigen::Index m = 1; m < n; ++m)
        if (std::abs(kx[m] - p0) < std::abs(kx[bin] - p0)) bin = m;
    const Complex phi0 = spectrum[bin] / root_n;

    const double norm = std::sqrt(psi.amp.abs2().sum());
    if (std::abs(phi0) < 1e-10 * norm)
        throw ZeroMomentumReference(
            "measure_wavefunction: reference momentum amplitude vanishes");

    // Position representation of the reference mode, u_j = e^{i k_bin x_j}
    // with the DFT's own origin (sample j = 0), modulus 1/sqrt(n).
    ComplexArray u(n);
    for (Eigen::Index j = 0; j < n; ++j)
        u[j] = std::polar(1.0 / root_n,
                          2.0 * pi * static_cast<double>(bin) *
                              static_cast<double>(j) / static_cast<double>(n));

    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const ComplexArray c0 = psi.amp + (c - 1.0) * phi0 * u;
    const ComplexArray c1 = -s * phi0 * u;

    const PointerReadout readout =
        pointer_expectations(intensities_from(c0, c1));
    const ComplexArray numerator =
        0.5 * (readout.sx.cast<Complex>() + iu * readout.sy.cast<Complex>()) -
        readout.p1.cast<Complex>();

    WavefunctionMeasurement out;
    out.x = psi.grid.positions();
    out.phi0 = phi0;
    // The sqrt(n) restores the reference mode's unit modulus; for p0 = 0 the
    // result is then psi itself, otherwise psi times conj of the reference
    // plane wave.
    out.psi_rec = -numerator / std::conj(phi0) * root_n;
    return out;
}

} // namespace plasim
