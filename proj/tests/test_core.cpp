#include "doctest.h"

#include <cmath>
#include <vector>

#include "plasim/core.hpp"
#include "plasim/errors.hpp"
#include "plasim/warnings.hpp"

using namespace plasim;

namespace {

// Collects warnings for the duration of a scope instead of printing them.
struct WarningTrap {
    std::vector<std::string> messages;
    WarnHandler previous;
    WarningTrap() {
        previous = set_warning_handler(
            [this](const std::string& m) { messages.push_back(m); });
    }
    ~WarningTrap() { set_warning_handler(previous); }
};

} // namespace

TEST_CASE("wavenumber scale of the default beam") {
    PhysicalParams p;
    CHECK(p.wavelength == doctest::Approx(795e-6));
    CHECK(p.a_x == doctest::Approx(0.4));
    const double k = 2.0 * pi / p.wavelength;
    CHECK(p.k() == doctest::Approx(k).epsilon(1e-15));
    // dimensionless action scale of the experiment
    CHECK(p.k() * p.a_x == doctest::Approx(3161.0).epsilon(1e-3));
}

TEST_CASE("paraxial check flags a wide-angle configuration") {
    PhysicalParams fine;
    {
        WarningTrap trap;
        const auto rep = check_paraxial(fine);
        CHECK(rep.ok);
        CHECK(rep.ratio > 100.0);
        CHECK(trap.messages.empty());
    }
    PhysicalParams coarse;
    coarse.wavelength = 0.1;
    coarse.a_x = 0.1;
    {
        WarningTrap trap;
        const auto rep = check_paraxial(coarse);
        CHECK_FALSE(rep.ok);
        // k*a = 2*pi*a/lambda = 2*pi
        CHECK(rep.ratio == doctest::Approx(2.0 * pi).epsilon(1e-12));
        CHECK(trap.messages.size() == 1);
    }
}

TEST_CASE("grid geometry and wavenumber ordering") {
    const auto g = make_grid(256, 0.01, 0.5);
    CHECK(g.n == 256);
    CHECK(g.span() == doctest::Approx(2.56).epsilon(1e-15));

    const auto x = g.positions();
    CHECK(x.size() == 256);
    CHECK(x[128] == doctest::Approx(0.5).epsilon(1e-15)); // center sample
    CHECK(x[129] - x[128] == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(g.x_at(0) == doctest::Approx(0.5 - 128 * 0.01).epsilon(1e-15));

    // FFT-ordered wavenumbers: 0, +dk, ..., -dk with dk = 2*pi/(n*dx)
    const auto kx = g.wavenumbers();
    const double dk = 2.0 * pi / (256 * 0.01);
    CHECK(kx[0] == 0.0);
    CHECK(kx[1] == doctest::Approx(dk).epsilon(1e-14));
    CHECK(kx[128] == doctest::Approx(-pi / 0.01).epsilon(1e-14));
    CHECK(kx[255] == doctest::Approx(-dk).epsilon(1e-14));
    CHECK(g.nyquist() == doctest::Approx(pi / 0.01).epsilon(1e-15));

    // index_of inverts x_at and clamps outside the span
    for (Eigen::Index j : {0, 17, 128, 255})
        CHECK(g.index_of(g.x_at(j)) == j);
    CHECK(g.index_of(-1e6) == 0);
    CHECK(g.index_of(1e6) == 255);
}

TEST_CASE("grid construction rejects bad shapes") {
    CHECK_THROWS_AS(make_grid(100, 0.01), Error);  // not a power of two
    CHECK_THROWS_AS(make_grid(4, 0.01), Error);    // too small
    CHECK_THROWS_AS(make_grid(256, 0.0), Error);
    CHECK_THROWS_AS(make_grid(256, -0.1), Error);
}

TEST_CASE("gaussian packet is normalized and has the stated width") {
    const auto g = make_grid(4096, 2.5e-3); // 0.4 sits exactly on this grid
    const auto psi = gaussian_packet(g, 0.4);
    CHECK(norm2(psi) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(inner(psi, psi).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(inner(psi, psi).imag()) < 1e-15);

    // |psi(a_x)|^2 / |psi(0)|^2 = exp(-1): a_x is the 1/e half width of
    // the intensity profile
    const auto j0 = g.index_of(0.0);
    const auto ja = g.index_of(0.4);
    CHECK(g.x_at(ja) == doctest::Approx(0.4).epsilon(1e-12));
    const double ratio =
        std::norm(psi.amp[ja]) / std::norm(psi.amp[j0]);
    CHECK(ratio == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(psi.amp[j0].imag() == 0.0);

    // centered variant
    const auto shifted = gaussian_packet(g, 0.4, 0.1);
    const auto jc = g.index_of(0.1);
    const double peak = std::abs(shifted.amp[jc]);
    CHECK(std::abs(shifted.amp[jc - 1]) < peak);
    CHECK(std::abs(shifted.amp[jc + 1]) < peak);
}

TEST_CASE("gaussian packet warns when the grid is too narrow") {
    const auto g = make_grid(64, 0.01); // span 0.64 < 6 * a_x
    WarningTrap trap;
    (void)gaussian_packet(g, 0.4);
    CHECK(trap.messages.size() == 1);
}

TEST_CASE("harmonic phase rate matches the potential formula") {
    const auto pot = Potential::harmonic(0.3);
    const double k = 100.0;
    // dphi/dz = k * omega^2 * x^2 / 2
    CHECK(phase_rate(pot, k, 0.7) ==
          doctest::Approx(0.5 * 100.0 * 0.09 * 0.49).epsilon(1e-14));
    CHECK(phase_rate(Potential::free_space(), k, 0.7) == 0.0);

    RealArray xs(3);
    xs << -1.0, 0.0, 2.0;
    const auto rates = phase_rate(pot, k, xs);
    CHECK(rates[0] == doctest::Approx(phase_rate(pot, k, -1.0)));
    CHECK(rates[1] == 0.0);
    CHECK(rates[2] == doctest::Approx(phase_rate(pot, k, 2.0)));

    CHECK_THROWS_AS(Potential::harmonic(0.0), Error);
    CHECK_THROWS_AS(Potential::harmonic(-1.0), Error);
}

TEST_CASE("channel frequency from period or index profile") {
    // period takes precedence when given
    CHECK(grin_omega() == doctest::Approx(2.0 * pi / 30.26).epsilon(1e-15));
    CHECK(grin_omega(0.043, std::nullopt) ==
          doctest::Approx(std::sqrt(0.043)).epsilon(1e-15));
    CHECK(grin_omega(0.05, 20.0) ==
          doctest::Approx(2.0 * pi / 20.0).epsilon(1e-15));
    CHECK_THROWS_AS(grin_omega(-0.01, std::nullopt), Error);
    CHECK_THROWS_AS(grin_omega(0.043, 0.0), Error);
}
