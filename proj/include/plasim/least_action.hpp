#pragma once

#include <functional>
#include <string>
#include <vector>

#include "plasim/protocol.hpp"

namespace plasim {

// Unit-modulus phase curve M(x) = Pi(x)/|Pi(x)| at one intermediate plane z,
// where Pi is the two-segment propagator product. The argument of M is the
// two-leg action profile; its stationary point is the classical trajectory.
struct MppCurve {
    RealArray x;
    ComplexArray m;
    BoolArray valid; // false where |Pi| fell below the modulus mask
    double z = 0.0;
};

// Pair a final-position scan (K''(x,z;a)) with an initial-slit scan
// (K''(b;x,z)) into M. The scans must share their x samples and meet at the
// same plane: left.z_read == right.z_slit (allow_plane_mismatch exists for
// deliberately inconsistent pairs, e.g. stability probes with one leg
// shifted). Samples with |Pi| < mask_floor_rel * max are masked out; the
// wavefunction and normalization factors in the two readouts cancel in the
// product's phase, which is the point of the construction.
MppCurve build_mpp(const PropagatorScan& left, const PropagatorScan& right,
                   double mask_floor_rel = 1e-8,
                   bool allow_plane_mismatch = false);

// Same curve taken straight from the analytic kernels.
MppCurve mpp_from_kernels(double k, const Potential& pot,
                          const Endpoints& ends, double z, const RealArray& xs,
                          double mask_floor_rel = 1e-8);

// Boxcar average of Re and Im separately (odd window), renormalized back to
// unit modulus. The window shrinks at the curve edges and next to masked
// samples; masked samples stay masked. window == 1 is the identity.
MppCurve smooth_mpp(const MppCurve& curve, int window = 5);

// Five-point Richardson first derivative
//   f' = [-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)] / (12 h),
// exact through cubics. The two samples at each margin have no stencil and
// are returned as NaN. Throws InsufficientSamples below 5 samples.
RealArray richardson_derivative(const RealArray& samples, double h);

struct PositionEstimate {
    double x = 0.0;        // grid sample at the argmin
    Eigen::Index index = 0;
    double g_min = 0.0;    // |dM/dx|^2 at the argmin
    bool refined = false;
    double x_refined = 0.0; // parabolic sub-grid position (x when !refined)
};

struct FindOptions {
    bool refine = false;
};

// Least-action point: argmin over the interior of g = |dRe M|^2 + |dIm M|^2,
// which for unit-modulus M equals the squared action slope. Works on the
// longest contiguous valid run; ties resolve toward the scan center, then to
// the lower index. Optional parabolic refinement through the argmin's
// neighbors (clamped to half a step).
PositionEstimate find_classical_position(const MppCurve& curve,
                                         const FindOptions& options = {});

struct PhaseAlignment {
    ComplexArray aligned;
    double delta = 0.0; // applied phase, aligned = measured * e^{i delta}
    bool ill_conditioned = false;
};

// Global phase chosen to maximize Re<aligned, reference>; the least-squares
// answer is delta = arg(sum conj(measured)*reference). Flagged
// ill-conditioned when the overlap is ~1e-12 of the norms (phase then
// meaningless).
PhaseAlignment align_global_phase(const ComplexArray& measured,
                                  const ComplexArray& reference);

// Single-sample variant: delta from one pivot sample's phase difference.
// Cheaper and noisier; kept as an option.
PhaseAlignment align_global_phase(const ComplexArray& measured,
                                  const ComplexArray& reference,
                                  Eigen::Index pivot);

struct TrajectoryPoint {
    double z = 0.0;
    double x_cl = 0.0;
    double x_refined = 0.0;
    double g_min = 0.0;
    bool ok = false;
    std::string error;
};

struct TrajectoryEstimate {
    std::vector<TrajectoryPoint> points;
    std::size_t n_ok = 0;
};

// Hook applied to each simulated scan before the product is formed; the
// detector model plugs in here.
using ScanFilter = std::function<PropagatorScan(const PropagatorScan&)>;

struct TrajectoryOptions {
    int smooth_window = 5;
    bool refine = true;
    double mask_floor_rel = 1e-8;
    int evolve_steps = 0;
    BandLimit band;
    int threads = 1;
    ScanFilter filter;
};

// Full measured-trajectory pipeline: for each z, simulate the two scans,
// form M, smooth, locate the stationary point. Failures at one plane are
// recorded and do not abort the rest.
TrajectoryEstimate extract_trajectory(const ComplexField& psi0, double k,
                                      const Potential& pot,
                                      const Endpoints& ends,
                                      const std::vector<double>& z_list,
                                      const ScanWindow& window,
                                      const TrajectoryOptions& options = {});

struct PerturbedPair {
    MppCurve base;
    MppCurve shifted;
    double eps = 0.0;
};

// Stability probe: the base curve plus a deliberately inconsistent variant
// whose final-position leg is evaluated at z - eps while the initial-slit
// leg stays at z. Analytic kernels.
PerturbedPair perturbed_mpp(double k, const Potential& pot,
                            const Endpoints& ends, double z, double eps,
                            const RealArray& xs,
                            double mask_floor_rel = 1e-8);

// Overlap fidelity |(1/L)*integral conj(a.m)*b.m dx|^2 over the sub-window
// |x - center| <= span/2 (trapezoid, jointly valid samples, L = covered
// length). Equal curves give exactly 1 regardless of span.
double fidelity(const MppCurve& a, const MppCurve& b, double span,
                double center);

std::vector<std::pair<double, double>> fidelity_sweep(
    const MppCurve& a, const MppCurve& b, const std::vector<double>& spans,
    double center);

} // namespace plasim
