#pragma once

#include "plasim/core.hpp"

namespace plasim {

// Boundary-value data for a propagation segment: amplitude launched at
// (x_a, z_a), interrogated or detected at (x_b, z_b), with z_b > z_a.
struct Endpoints {
    double x_a = 0.0;
    double z_a = 0.0;
    double x_b = 0.0;
    double z_b = 0.0;

    double z_span() const { return z_b - z_a; }
};

// Free-space kernel K = sqrt(k/(2*pi*i*z)) * exp(i*k*(x_b-x_a)^2 / (2*z)),
// z = z_b - z_a > 0. The branch is the principal square root of the complex
// radicand, i.e. a constant -pi/4 phase for the free kernel.
Complex free_propagator(double k, double x_a, double z_a, double x_b,
                        double z_b);

// Harmonic-channel kernel
//   K = sqrt(k*omega / (2*pi*i*sin(omega*z)))
//       * exp{ i*k*omega/(2*sin(omega*z)) *
//              [(x_a^2+x_b^2)*cos(omega*z) - 2*x_a*x_b] }.
// Same principal branch: -pi/4 phase while sin > 0, +pi/4 after the focus.
// Throws FocalSingularity when |sin(omega*z)| < 1e-9.
Complex harmonic_propagator(double k, double omega, double x_a, double z_a,
                            double x_b, double z_b);

Complex propagator(double k, const Potential& pot, double x_a, double z_a,
                   double x_b, double z_b);

// K(x, z; x_a, z_a) for every x in xs (scanned final point).
ComplexArray propagator_from(double k, const Potential& pot, double x_a,
                             double z_a, const RealArray& xs, double z);

// K(x_b, z_b; x, z) for every x in xs (scanned initial point).
ComplexArray propagator_to(double k, const Potential& pot, const RealArray& xs,
                           double z, double x_b, double z_b);

// Two-segment product Pi(x) = K(x_b,z_b; x,z) * K(x,z; x_a,z_a) over the
// intermediate plane z, z_a < z < z_b. Its phase is stationary at the
// classical trajectory point; everything downstream rests on that.
ComplexArray pi_product(double k, const Potential& pot, const Endpoints& ends,
                        double z, const RealArray& xs);

// Classical boundary-value trajectory evaluated at z in [z_a, z_b]:
// a straight line in free space, the sine-weighted chord
//   x(z) = [x_a*sin(omega*(z_b-z)) + x_b*sin(omega*(z-z_a))] / sin(omega*(z_b-z_a))
// in the harmonic channel. Degenerate exactly where the kernel focuses
// (|sin(omega*(z_b-z_a))| < 1e-9), and throws the same FocalSingularity.
double classical_trajectory(const Potential& pot, const Endpoints& ends,
                            double z);

// Width of the stationary-phase zone sqrt(2*pi/|phi''|) for a single kernel
// over a z-span dz. Sets the resolution scale of every interference feature.
double stationary_width_kernel(double k, const Potential& pot, double dz);

// Same for the two-segment product at intermediate plane z; this is the
// x-scale that the Chapman-Kolmogorov integrand oscillates on.
double stationary_width_product(double k, const Potential& pot,
                                const Endpoints& ends, double z);

// Relative residual | integral dx K(b;x,z) K(x,z;a) - K(b;a) | / |K(b;a)|,
// with the integral taken as a plain Riemann sum over the grid. The grid must
// out-resolve the chirp at its edges (chirp wavenumber below Nyquist) or the
// sum aliases; see stationary_width_product for sizing.
double chapman_kolmogorov_residual(double k, const Potential& pot,
                                   const Endpoints& ends, double z,
                                   const SpatialGrid& grid);

} // namespace plasim
