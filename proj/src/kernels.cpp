#include "plasim/kernels.hpp"

#include <cmath>

#include "plasim/errors.hpp"

namespace plasim {

namespace {

constexpr double sin_floor = 1e-9;

double require_span(double z_a, double z_b) {
    const double z = z_b - z_a;
    if (!(z > 0.0)) throw Error("propagator: requires z_b > z_a");
    return z;
}

// Principal sqrt of r/i = -i*r. For r > 0 this is sqrt(r)*exp(-i*pi/4); for
// r < 0 (harmonic kernel past a focus) it lands on +pi/4. Gouy phase jumps
// fall out of the branch automatically.
Complex root_over_i(double r) { return std::sqrt(Complex(0.0, -r)); }

ComplexArray chirp(const RealArray& phase, Complex amplitude) {
    return phase.unaryExpr(
        [amplitude](double p) { return amplitude * std::polar(1.0, p); });
}

} // namespace

Complex free_propagator(double k, double x_a, double z_a, double x_b,
                        double z_b) {
    const double z = require_span(z_a, z_b);
    const double d = x_b - x_a;
    return root_over_i(k / (2.0 * pi * z)) *
           std::polar(1.0, k * d * d / (2.0 * z));
}

Complex harmonic_propagator(double k, double omega, double x_a, double z_a,
                            double x_b, double z_b) {
    const double z = require_span(z_a, z_b);
    const double s = std::sin(omega * z);
    if (std::abs(s) < sin_floor)
        throw FocalSingularity("harmonic propagator at a focal plane");
    const double c = std::cos(omega * z);
    const double phase =
        k * omega / (2.0 * s) * ((x_a * x_a + x_b * x_b) * c - 2.0 * x_a * x_b);
    return root_over_i(k * omega / (2.0 * pi * s)) * std::polar(1.0, phase);
}

Complex propagator(double k, const Potential& pot, double x_a, double z_a,
                   double x_b, double z_b) {
    if (pot.kind == Potential::Kind::Free)
        return free_propagator(k, x_a, z_a, x_b, z_b);
    return harmonic_propagator(k, pot.omega, x_a, z_a, x_b, z_b);
}

ComplexArray propagator_from(double k, const Potential& pot, double x_a,
                             double z_a, const RealArray& xs, double z) {
    const double dz = require_span(z_a, z);
    if (pot.kind == Potential::Kind::Free) {
        const Complex amp = root_over_i(k / (2.0 * pi * dz));
        const RealArray phase = k / (2.0 * dz) * (xs - x_a).square();
        return chirp(phase, amp);
    }
    const double s = std::sin(pot.omega * dz);
    if (std::abs(s) < sin_floor)
        throw FocalSingularity("harmonic propagator at a focal plane");
    const double c = std::cos(pot.omega * dz);
    const Complex amp = root_over_i(k * pot.omega / (2.0 * pi * s));
    const RealArray phase =
        k * pot.omega / (2.0 * s) *
        ((xs.square() + x_a * x_a) * c - 2.0 * x_a * xs);
    return chirp(phase, amp);
}

ComplexArray propagator_to(double k, const Potential& pot, const RealArray& xs,
                           double z, double x_b, double z_b) {
    // Both kernels are symmetric under endpoint exchange at fixed z-span.
    return propagator_from(k, pot, x_b, z, xs, z_b);
}

ComplexArray pi_product(double k, const Potential& pot, const Endpoints& ends,
                        double z, const RealArray& xs) {
    if (!(ends.z_a < z && z < ends.z_b))
        throw Error("pi_product: intermediate plane must satisfy z_a < z < z_b");
    return propagator_to(k, pot, xs, z, ends.x_b, ends.z_b) *
           propagator_from(k, pot, ends.x_a, ends.z_a, xs, z);
}

double classical_trajectory(const Potential& pot, const Endpoints& ends,
                            double z) {
    const double z_ba = require_span(ends.z_a, ends.z_b);
    if (!(z >= ends.z_a && z <= ends.z_b))
        throw Error("classical_trajectory: z outside [z_a, z_b]");
    if (pot.kind == Potential::Kind::Free)
        return ends.x_a + (ends.x_b - ends.x_a) * (z - ends.z_a) / z_ba;
    const double s = std::sin(pot.omega * z_ba);
    if (std::abs(s) < sin_floor)
        throw FocalSingularity(
            "classical endpoint problem degenerate at a focal span");
    return (ends.x_a * std::sin(pot.omega * (ends.z_b - z)) +
            ends.x_b * std::sin(pot.omega * (z - ends.z_a))) /
           s;
}

double stationary_width_kernel(double k, const Potential& pot, double dz) {
    if (!(dz > 0.0)) throw Error("stationary_width_kernel: dz must be positive");
    if (pot.kind == Potential::Kind::Free) return std::sqrt(2.0 * pi * dz / k);
    const double t = std::tan(pot.omega * dz);
    if (std::abs(t) < sin_floor)
        throw FocalSingularity("stationary width undefined at a focal span");
    return std::sqrt(2.0 * pi * std::abs(t) / (k * pot.omega));
}

double stationary_width_product(double k, const Potential& pot,
                                const Endpoints& ends, double z) {
    const double z1 = z - ends.z_a;
    const double z2 = ends.z_b - z;
    if (!(z1 > 0.0 && z2 > 0.0))
        throw Error("stationary_width_product: z outside (z_a, z_b)");
    double curvature;
    if (pot.kind == Potential::Kind::Free) {
        curvature = k * (1.0 / z1 + 1.0 / z2);
    } else {
        const double s1 = std::sin(pot.omega * z1);
        const double s2 = std::sin(pot.omega * z2);
        if (std::abs(s1) < sin_floor || std::abs(s2) < sin_floor)
            throw FocalSingularity("stationary width undefined at a focal span");
        curvature = k * pot.omega * (std::cos(pot.omega * z1) / s1 +
                                     std::cos(pot.omega * z2) / s2);
    }
    if (std::abs(curvature) < 1e-300)
        throw Error("stationary_width_product: flat phase, width unbounded");
    return std::sqrt(2.0 * pi / std::abs(curvature));
}

double chapman_kolmogorov_residual(double k, const Potential& pot,
                                   const Endpoints& ends, double z,
                                   const SpatialGrid& grid) {
    const RealArray xs = grid.positions();
    const ComplexArray integrand = pi_product(k, pot, ends, z, xs);
    const Complex quad = integrand.sum() * grid.dx;
    const Complex direct =
        propagator(k, pot, ends.x_a, ends.z_a, ends.x_b, ends.z_b);
    return std::abs(quad - direct) / std::abs(direct);
}

} // namespace plasim
