#pragma once

#include "plasim/core.hpp"
#include "plasim/evolution.hpp"
#include "plasim/kernels.hpp"

namespace plasim {

// Field amplitude entangled with a two-level pointer: the full state is
// c0(x)|0> + c1(x)|1>. The protocol keeps the pointer algebra in the
// sigma-minus = |0><1| convention throughout: with it the complex readout
// -sx + i*sy collapses to -2*conj(c0)*c1 exactly.
struct JointState {
    SpatialGrid grid;
    ComplexArray c0;
    ComplexArray c1;
};

JointState joint_from(const ComplexField& field);

// Pointer rotation by theta applied at the single grid cell nearest x_a:
//   (c0, c1) -> (c0*cos + c1*sin, -c0*sin + c1*cos).
// theta = pi/2 tags the amplitude at the slit into the |1> branch with a
// minus sign, c1(x_a) = -c0(x_a); that sign is what makes the downstream
// reconstruction formulas close without stray conjugates. x_a must lie on a
// grid sample (within 1e-9 relative). Unitary cell by cell.
JointState apply_slit_coupling(const JointState& state, double x_a,
                               double theta = pi / 2);

// The four projective pointer images plus the |1>-branch intensity:
//   p_plus/p_minus = (1/2)|c0 +- c1|^2,
//   p_right = (1/2)|c0 + i c1|^2, p_left = (1/2)|c0 - i c1|^2,
//   p_one = |c1|^2.
// These are what a camera records; everything else is arithmetic on them.
struct PointerIntensities {
    RealArray p_plus, p_minus, p_right, p_left, p_one;
};

PointerIntensities pointer_intensities(const JointState& state);

// sx = p_plus - p_minus = 2*Re(conj(c0)*c1),
// sy = p_right - p_left = -2*Im(conj(c0)*c1), p1 = p_one.
struct PointerReadout {
    RealArray sx, sy, p1;
};

PointerReadout pointer_expectations(const PointerIntensities& intensities);
PointerReadout pointer_expectations(const JointState& state);

// The complex pointer readout K'' = -sx + i*sy = -2*conj(c0)*c1.
ComplexArray readout_kpp(const PointerReadout& readout);
ComplexArray kpp_from_intensities(const PointerIntensities& intensities);

// Slit coupling at x_a, then both pointer branches transported by plan_probe
// (the |1> probe spike) and plan_ref (the |0> reference), then the recombiner
// rotation by -pi/4 and projection onto |0> folded in analytically:
//   merged c0 = evolve(c0_coupled - c1_coupled) / sqrt(2)   (reference arm)
//   merged c1 = evolve(c1_coupled)                          (probe arm)
// For theta = pi/2 the reference input is exactly the uncoupled psi0.
JointState run_two_branch(const ComplexField& psi0, double x_a,
                          const EvolutionPlan& plan_probe,
                          const EvolutionPlan& plan_ref,
                          double theta = pi / 2);

enum class ScanAxis {
    FinalPosition, // slit fixed at x_a, readout plane scanned in x
    InitialSlit    // slit scanned in x, readout fixed at pixel x_b
};

struct ScanWindow {
    double center = 0.0;
    double half_width = 0.0;
};

// One propagator scan. psi0 is the prepared packet at z_a. FinalPosition
// measures K''(x, z; x_a, z_a) over the window; InitialSlit first transports
// psi0 to the intermediate plane z, then measures K''(x_b, z_b; x, z) with
// the slit stepped across the window. Both axes sample the same window index
// set, so a left/right pair shares its x grid exactly.
struct ScanSetup {
    ComplexField psi0;
    double k = 0.0;
    Potential potential;
    Endpoints ends;
    double z = 0.0;
    ScanAxis axis = ScanAxis::FinalPosition;
    ScanWindow window;
    int evolve_steps = 0; // 0 => default per segment
    BandLimit band;
    int threads = 1;
};

struct PropagatorScan {
    ScanAxis axis = ScanAxis::FinalPosition;
    RealArray x;      // scanned coordinate
    double z_slit = 0.0;
    double z_read = 0.0;
    double x_fixed = 0.0; // the endpoint that is not scanned
    double dx = 0.0;      // grid step; kernel reconstruction divides by it
    PointerIntensities intensities;
    ComplexArray kpp;       // -sx + i*sy per scan sample
    ComplexArray reference; // transported reference field on the scan samples
    Complex fixed_value{};  // reference value paired with x_fixed
};

PropagatorScan scan_propagator(const ScanSetup& setup);

// Replace the intensity images (e.g. by detector-sampled ones) and rebuild
// the derived kpp readout.
PropagatorScan with_intensities(const PropagatorScan& scan,
                                PointerIntensities intensities);

struct ReconstructedKernel {
    RealArray x;
    ComplexArray kernel;
    BoolArray valid; // false where the reference fell below the division floor
};

// Kernel estimate from the pointer readout,
//   K(x) = kpp / (sqrt(2) * conj(reference arm) * slit amplitude * dx),
// with the conjugate on whichever factor plays the readout-plane role
// (the scanned reference for FinalPosition, the fixed pixel for InitialSlit).
// This overload divides by the scan's own simulated reference arm, which is
// what the physical normalization arm provides; it cancels the transported
// field exactly. Samples where the reference modulus is below
// floor_rel * max are dropped; throws DivisionFloor if nothing survives.
ReconstructedKernel reconstruct_propagator(const PropagatorScan& scan,
                                           double floor_rel = 1e-6);

// Idealized variant dividing by the prepared state psi_at_ta sampled at the
// scan positions (stationary-reference assumption) and the given fixed-point
// amplitude. Near-stationary packets make this a good approximation; its
// real use is invariance checks, where the swap multiplies the modulus by a
// positive factor and provably cannot move the action-stationarity point.
ReconstructedKernel reconstruct_propagator(const PropagatorScan& scan,
                                           const ComplexField& psi_at_ta,
                                           Complex psi_fixed,
                                           double floor_rel = 1e-6);

struct WavefunctionMeasurement {
    RealArray x;
    ComplexArray psi_rec;
    Complex phi0; // amplitude of the reference momentum mode
};

// Direct wavefunction measurement: couple the pointer to the single
// momentum mode nearest p0 (via the unitary DFT), read the pointer images,
// and invert
//   psi_rec = -((sx + i*sy)/2 - p1) / conj(Phi(p0)) * sqrt(n).
// At theta = pi/2 the p1 subtraction removes the quadratic pointer term
// exactly and psi_rec equals psi times the conjugate reference plane wave
// (identically psi for p0 = 0). Throws ZeroMomentumReference when the p0
// component is below 1e-10 of the state's norm (e.g. any odd psi at p0 = 0).
WavefunctionMeasurement measure_wavefunction(const ComplexField& psi,
                                             double theta = pi / 2,
                                             double p0 = 0.0);

} // namespace plasim
