#include "plasim/core.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include "plasim/errors.hpp"
#include "plasim/warnings.hpp"

namespace plasim {

namespace {

std::mutex warn_mutex;
WarnHandler warn_handler; // empty => default stderr sink

bool is_pow2(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

WarnHandler set_warning_handler(WarnHandler handler) {
    std::lock_guard<std::mutex> lock(warn_mutex);
    WarnHandler previous = std::move(warn_handler);
    warn_handler = std::move(handler);
    return previous;
}

void warn(const std::string& message) {
    WarnHandler handler;
    {
        std::lock_guard<std::mutex> lock(warn_mutex);
        handler = warn_handler;
    }
    if (handler) {
        handler(message);
    } else {
        std::fprintf(stderr, "plasim: warning: %s\n", message.c_str());
    }
}

ParaxialReport check_paraxial(const PhysicalParams& params, double threshold) {
    const double ratio = params.k() * params.a_x;
    ParaxialReport report{ratio, ratio >= threshold};
    if (!report.ok) {
        std::ostringstream oss;
        oss << "paraxial figure k*a_x = " << ratio << " below threshold "
            << threshold;
        warn(oss.str());
    }
    return report;
}

RealArray SpatialGrid::positions() const {
    RealArray x(n);
    for (Eigen::Index j = 0; j < n; ++j) x[j] = x_at(j);
    return x;
}

RealArray SpatialGrid::wavenumbers() const {
    RealArray k(n);
    const double dk = 2.0 * pi / span();
    for (Eigen::Index m = 0; m < n; ++m) {
        const Eigen::Index shifted = m < n / 2 ? m : m - n;
        k[m] = dk * static_cast<double>(shifted);
    }
    return k;
}

Eigen::Index SpatialGrid::index_of(double x) const {
    const double j = (x - x0) / dx + static_cast<double>(n / 2);
    Eigen::Index idx = static_cast<Eigen::Index>(std::lround(j));
    if (idx < 0) idx = 0;
    if (idx >= n) idx = n - 1;
    return idx;
}

SpatialGrid make_grid(Eigen::Index n, double dx, double x0) {
    if (!is_pow2(n) || n < 8)
        throw Error("grid size must be a power of two >= 8");
    if (!(dx > 0.0)) throw Error("grid step must be positive");
    return SpatialGrid{n, dx, x0};
}

double norm2(const ComplexField& field) {
    return field.amp.abs2().sum() * field.grid.dx;
}

Complex inner(const ComplexField& a, const ComplexField& b) {
    if (!(a.grid == b.grid)) throw Error("inner: fields on different grids");
    return (a.amp.conjugate() * b.amp).sum() * a.grid.dx;
}

ComplexField gaussian_packet(const SpatialGrid& grid, double a_x,
                             double center) {
    if (!(a_x > 0.0)) throw Error("gaussian_packet: a_x must be positive");
    if (grid.span() < 6.0 * a_x) {
        std::ostringstream oss;
        oss << "gaussian_packet: grid span " << grid.span()
            << " below 6*a_x = " << 6.0 * a_x << ", tails clipped";
        warn(oss.str());
    }
    const RealArray x = grid.positions();
    ComplexField field{grid, ComplexArray(grid.n)};
    const double amp0 = std::pow(pi * a_x * a_x, -0.25);
    field.amp =
        (amp0 * (-((x - center) * (x - center)) / (2.0 * a_x * a_x)).exp())
            .cast<Complex>();
    field.amp /= std::sqrt(norm2(field));
    return field;
}

Potential Potential::harmonic(double omega) {
    if (!(omega > 0.0)) throw Error("harmonic potential needs omega > 0");
    return {Kind::Harmonic, omega};
}

double phase_rate(const Potential& pot, double k, double x) {
    if (pot.kind == Potential::Kind::Free) return 0.0;
    return 0.5 * k * pot.omega * pot.omega * x * x;
}

RealArray phase_rate(const Potential& pot, double k, const RealArray& x) {
    if (pot.kind == Potential::Kind::Free) return RealArray::Zero(x.size());
    return 0.5 * k * pot.omega * pot.omega * x * x;
}

double grin_omega(double A, std::optional<double> T) {
    if (T) {
        if (!(*T > 0.0)) throw Error("grin_omega: period must be positive");
        return 2.0 * pi / *T;
    }
    if (!(A > 0.0)) throw Error("grin_omega: index coefficient must be positive");
    return std::sqrt(A);
}

} // namespace plasim
