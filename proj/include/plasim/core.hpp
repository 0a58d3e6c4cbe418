#pragma once

#include <complex>
#include <optional>

#include <Eigen/Core>

namespace plasim {

using Real = double;
using Complex = std::complex<double>;
using RealArray = Eigen::ArrayXd;
using ComplexArray = Eigen::ArrayXcd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Reduced units used throughout: lengths in mm, the propagation coordinate z
// plays the role of time, and the optical wavenumber k = 2*pi/lambda plays
// the role of the particle mass (hbar = c = 1). Paraxial optics then obeys a
// Schrodinger equation i dpsi/dz = [-(1/2k) d^2/dx^2 + V(x)] psi.
struct PhysicalParams {
    double wavelength = 795e-6; // mm
    double a_x = 0.4;           // 1/e^2 intensity half-width, mm

    double k() const { return 2.0 * pi / wavelength; }
};

struct ParaxialReport {
    double ratio; // k * a_x
    bool ok;
};

// Paraxiality figure of merit. The dimensionless product k*a_x must be large
// for the beam to stay paraxial; ~3161 for the default parameters.
ParaxialReport check_paraxial(const PhysicalParams& params,
                              double threshold = 100.0);

// Uniform grid x_j = x0 + (j - n/2)*dx, j = 0..n-1. Cheap value type; the
// coordinate and wavenumber arrays are materialized on demand.
struct SpatialGrid {
    Eigen::Index n = 0;
    double dx = 0.0;
    double x0 = 0.0; // center of the grid (sample j = n/2 sits exactly here)

    RealArray positions() const;
    // Angular wavenumbers in standard FFT order: index m holds 2*pi*m/(n*dx)
    // for m < n/2 and 2*pi*(m-n)/(n*dx) above.
    RealArray wavenumbers() const;
    double nyquist() const { return pi / dx; }
    double span() const { return static_cast<double>(n) * dx; }
    double x_at(Eigen::Index j) const {
        return x0 + (static_cast<double>(j) - static_cast<double>(n / 2)) * dx;
    }
    // Nearest sample index; clamped to the grid.
    Eigen::Index index_of(double x) const;

    bool operator==(const SpatialGrid& other) const {
        return n == other.n && dx == other.dx && x0 == other.x0;
    }
};

// n must be a power of two >= 8 (the evolution kernel lives on the FFT grid).
SpatialGrid make_grid(Eigen::Index n, double dx, double x0 = 0.0);

struct ComplexField {
    SpatialGrid grid;
    ComplexArray amp;
};

// Discrete L2 norm squared, sum |amp|^2 dx.
double norm2(const ComplexField& field);
// Sum conj(a)*b dx.
Complex inner(const ComplexField& a, const ComplexField& b);

// Gaussian packet with |psi|^2 proportional to exp(-(x-center)^2 / a_x^2),
// renormalized so the discrete norm2 is exactly 1. Warns when the grid span
// is below 6*a_x (tails visibly clipped).
ComplexField gaussian_packet(const SpatialGrid& grid, double a_x,
                             double center = 0.0);

struct Potential {
    enum class Kind { Free, Harmonic };
    Kind kind = Kind::Free;
    double omega = 0.0; // rad/mm, used only for Harmonic

    static Potential free_space() { return {Kind::Free, 0.0}; }
    static Potential harmonic(double omega);
};

// Phase accumulation rate V(x) = (1/2) k omega^2 x^2 (zero for free space),
// in rad/mm. This multiplies z directly in the split-step phase factors.
double phase_rate(const Potential& pot, double k, double x);
RealArray phase_rate(const Potential& pot, double k, const RealArray& x);

// Angular frequency of a graded-index channel. With a period T given (mm),
// omega = 2*pi/T; without one, omega = sqrt(A) from the quadratic index
// coefficient A (1/mm^2). The defaults describe the same physical channel
// two ways and differ by 0.14%.
double grin_omega(double A = 0.043, std::optional<double> T = 30.26);

} // namespace plasim
