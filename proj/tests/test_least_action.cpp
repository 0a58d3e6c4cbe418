#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "plasim/core.hpp"
#include "plasim/errors.hpp"
#include "plasim/kernels.hpp"
#include "plasim/least_action.hpp"
#include "plasim/protocol.hpp"

using namespace plasim;

namespace {

const double k_beam = 2.0 * pi / 795e-6;

// Minimal hand-built scan pair sharing an x set, with prescribed kpp.
std::pair<PropagatorScan, PropagatorScan> scan_pair(const RealArray& xs,
                                                    const ComplexArray& left,
                                                    const ComplexArray& right) {
    PropagatorScan a;
    a.axis = ScanAxis::FinalPosition;
    a.x = xs;
    a.z_slit = 0.0;
    a.z_read = 5.0;
    a.dx = xs[1] - xs[0];
    a.kpp = left;
    a.reference = ComplexArray::Constant(xs.size(), Complex(1.0, 0.0));
    a.fixed_value = Complex(1.0, 0.0);

    PropagatorScan b = a;
    b.axis = ScanAxis::InitialSlit;
    b.z_slit = 5.0;
    b.z_read = 10.0;
    b.kpp = right;
    return {a, b};
}

MppCurve quadratic_phase_curve(double beta, double x0, double h, int n) {
    MppCurve c;
    c.x = RealArray::LinSpaced(n, x0 - h * (n / 2), x0 + h * (n - 1 - n / 2));
    // re-center so a sample need not sit exactly on x0
    for (int j = 0; j < n; ++j) c.x[j] = c.x[0] + h * j;
    c.m = ComplexArray(n);
    for (int j = 0; j < n; ++j)
        c.m[j] = std::polar(1.0, beta * (c.x[j] - x0) * (c.x[j] - x0));
    c.valid = BoolArray::Constant(n, true);
    c.z = 5.0;
    return c;
}

} // namespace

TEST_CASE("product curve is the normalized kernel product") {
    const auto g = make_grid(256, 1e-2);
    const RealArray xs = g.positions();
    ComplexArray left(g.n), right(g.n);
    for (Eigen::Index j = 0; j < g.n; ++j) {
        left[j] = Complex(0.3 + 0.1 * std::sin(0.2 * j), 0.4);
        right[j] = std::polar(2.0, 0.01 * j * j * 1e-2);
    }
    auto [a, b] = scan_pair(xs, left, right);
    const auto curve = build_mpp(a, b);

    for (Eigen::Index j = 0; j < g.n; ++j) {
        REQUIRE(curve.valid[j]);
        const Complex prod = left[j] * right[j];
        CHECK(std::abs(curve.m[j] - prod / std::abs(prod)) < 1e-13);
        CHECK(std::abs(std::abs(curve.m[j]) - 1.0) < 1e-13);
    }
}

TEST_CASE("product pairing is validated") {
    const auto g = make_grid(64, 1e-2);
    const RealArray xs = g.positions();
    const ComplexArray ones = ComplexArray::Constant(g.n, Complex(1.0, 0.0));
    auto [a, b] = scan_pair(xs, ones, ones);

    // wrong axis order
    CHECK_THROWS_AS(build_mpp(b, a), Error);
    // meeting plane mismatch
    auto b_off = b;
    b_off.z_slit = 4.0;
    CHECK_THROWS_AS(build_mpp(a, b_off), Error);
    CHECK_NOTHROW(build_mpp(a, b_off, 1e-8, true));
    // x sets must match exactly
    auto b_shift = b;
    b_shift.x = xs + 1e-6;
    CHECK_THROWS_AS(build_mpp(a, b_shift), Error);
}

TEST_CASE("modulus mask drops low-product samples") {
    const auto g = make_grid(64, 1e-2);
    const RealArray xs = g.positions();
    ComplexArray left = ComplexArray::Constant(g.n, Complex(1.0, 0.0));
    ComplexArray right = ComplexArray::Constant(g.n, Complex(1.0, 0.0));
    left[10] = Complex(1e-12, 0.0);
    auto [a, b] = scan_pair(xs, left, right);
    const auto curve = build_mpp(a, b, 1e-8);
    CHECK_FALSE(curve.valid[10]);
    CHECK(curve.valid[11]);
}

TEST_CASE("analytic curve matches the protocol-free construction") {
    Endpoints ends{0.0, 0.0, 0.043, 10.0};
    const auto pot = Potential::free_space();
    const RealArray xs = RealArray::LinSpaced(201, -0.1, 0.1);
    const auto curve = mpp_from_kernels(k_beam, pot, ends, 5.0, xs);
    const auto prod = pi_product(k_beam, pot, ends, 5.0, xs);
    for (int j = 0; j < xs.size(); ++j) {
        CHECK(std::abs(std::abs(curve.m[j]) - 1.0) < 1e-13);
        CHECK(std::abs(curve.m[j] - prod[j] / std::abs(prod[j])) < 1e-12);
    }
}

TEST_CASE("smoothing: identity window, phase preservation, validation") {
    auto curve = quadratic_phase_curve(3.0, 0.0, 0.01, 41);

    const auto same = smooth_mpp(curve, 1);
    CHECK((same.m - curve.m).abs().maxCoeff() == 0.0);

    // boxcar of a linear-phase curve keeps the phase at interior samples
    MppCurve lin;
    lin.x = RealArray::LinSpaced(31, 0.0, 0.3);
    lin.m = ComplexArray(31);
    for (int j = 0; j < 31; ++j) lin.m[j] = std::polar(1.0, 0.4 * lin.x[j]);
    lin.valid = BoolArray::Constant(31, true);
    const auto sm = smooth_mpp(lin, 5);
    for (int j = 2; j < 29; ++j) {
        CHECK(std::abs(std::arg(sm.m[j] / lin.m[j])) < 1e-12);
        CHECK(std::abs(std::abs(sm.m[j]) - 1.0) < 1e-12);
    }

    CHECK_THROWS_AS(smooth_mpp(curve, 4), Error);  // even window
    CHECK_THROWS_AS(smooth_mpp(curve, -1), Error);

    // masked samples stay masked and do not pollute neighbors
    curve.valid[20] = false;
    curve.m[20] = Complex(1e6, 1e6);
    const auto masked = smooth_mpp(curve, 5);
    CHECK_FALSE(masked.valid[20]);
    for (int j = 18; j < 23; ++j) {
        if (j == 20) continue;
        CHECK(std::abs(masked.m[j]) < 2.0); // the garbage sample is excluded
    }
}

TEST_CASE("five-point derivative is exact through cubics") {
    const double h = 0.1;
    const int n = 21;
    RealArray f(n), expect(n);
    for (int j = 0; j < n; ++j) {
        const double x = -1.0 + h * j;
        f[j] = x * x * x - 2.0 * x * x + x;
        expect[j] = 3.0 * x * x - 4.0 * x + 1.0;
    }
    const auto d = richardson_derivative(f, h);
    for (int j = 0; j < n; ++j) {
        if (j < 2 || j >= n - 2) {
            CHECK(std::isnan(d[j]));
        } else {
            CHECK(d[j] == doctest::Approx(expect[j]).epsilon(1e-12));
        }
    }

    // fourth-order accuracy on a smooth oscillation
    const double hh = 0.01;
    RealArray s(101);
    for (int j = 0; j < 101; ++j) s[j] = std::sin(10.0 * (-0.5 + hh * j));
    const auto ds = richardson_derivative(s, hh);
    double worst = 0.0;
    for (int j = 2; j < 99; ++j) {
        const double x = -0.5 + hh * j;
        worst = std::max(worst, std::abs(ds[j] - 10.0 * std::cos(10.0 * x)));
    }
    CHECK(worst < 1e-4); // |f^(5)| h^4 / 30 = 3.3e-5

    RealArray tiny(4);
    tiny << 1.0, 2.0, 3.0, 4.0;
    CHECK_THROWS_AS(richardson_derivative(tiny, 0.1), InsufficientSamples);
    CHECK_THROWS_AS(richardson_derivative(f, 0.0), Error);
}

TEST_CASE("stationary point of a quadratic-action curve") {
    // M = exp(i beta (x - x0)^2): the action slope vanishes at x0
    const double x0 = 0.237;
    const auto curve = quadratic_phase_curve(40.0, x0, 0.01, 101);

    const auto est = find_classical_position(curve);
    CHECK(std::abs(est.x - x0) <= 0.005 + 1e-12); // nearest sample
    CHECK_FALSE(est.refined);
    CHECK(est.x_refined == est.x);

    FindOptions refine;
    refine.refine = true;
    const auto fine = find_classical_position(curve, refine);
    CHECK(fine.refined);
    CHECK(std::abs(fine.x_refined - x0) < 1e-3);
    CHECK(std::abs(fine.x_refined - fine.x) <= 0.005);
}

TEST_CASE("stationary point ties resolve toward the window center") {
    // symmetric curve about the center sample: exact tie between mirror
    // samples resolves to the one nearest the center, i.e. the center
    const auto curve = quadratic_phase_curve(40.0, 0.0, 0.01, 41);
    const auto est = find_classical_position(curve);
    CHECK(est.index == 20);
    CHECK(est.x == doctest::Approx(0.0));
}

TEST_CASE("stationary point needs a long enough valid run") {
    auto curve = quadratic_phase_curve(40.0, 0.0, 0.01, 41);
    // break the curve into runs shorter than the stencil
    for (int j = 0; j < 41; j += 4) curve.valid[j] = false;
    CHECK_THROWS_AS(find_classical_position(curve), InsufficientSamples);

    // five samples is the stencil minimum; four must throw
    MppCurve tiny = quadratic_phase_curve(40.0, 0.0, 0.01, 4);
    CHECK_THROWS_AS(find_classical_position(tiny), InsufficientSamples);
    MppCurve edge = quadratic_phase_curve(40.0, 0.0, 0.01, 5);
    CHECK_NOTHROW(find_classical_position(edge));
}

TEST_CASE("stationary point works on the longest valid run") {
    auto curve = quadratic_phase_curve(40.0, 0.1, 0.01, 81);
    // mask a block left of the minimum; the right run holds the answer
    for (int j = 0; j < 20; ++j) curve.valid[j] = false;
    const auto est = find_classical_position(curve);
    CHECK(std::abs(est.x - 0.1) <= 0.005 + 1e-12);
}

TEST_CASE("free and harmonic analytic curves locate the classical point") {
    Endpoints ends{0.0, 0.0, 0.043, 10.0};
    const double h = 2.67e-3;
    for (double z : {2.0, 5.0, 8.0}) {
        const double x_cl =
            classical_trajectory(Potential::free_space(), ends, z);
        RealArray xs(57);
        for (int j = 0; j < 57; ++j) xs[j] = 0.0215 + h * (j - 28);
        const auto curve =
            mpp_from_kernels(k_beam, Potential::free_space(), ends, z, xs);
        const auto est = find_classical_position(curve);
        CHECK(std::abs(est.x - x_cl) <= h);
    }

    const double om = 2.0 * pi / 30.26;
    Endpoints eh{0.040, 0.0, 0.016, 10.0};
    for (double z : {2.0, 5.0, 8.0}) {
        const double x_cl =
            classical_trajectory(Potential::harmonic(om), eh, z);
        RealArray xs(57);
        for (int j = 0; j < 57; ++j) xs[j] = 0.040 + h * (j - 28);
        const auto curve =
            mpp_from_kernels(k_beam, Potential::harmonic(om), eh, z, xs);
        const auto est = find_classical_position(curve);
        CHECK(std::abs(est.x - x_cl) <= h);
    }
}

TEST_CASE("global phase alignment recovers a known rotation") {
    const auto g = make_grid(128, 1e-2);
    ComplexArray r(g.n);
    for (Eigen::Index j = 0; j < g.n; ++j)
        r[j] = std::polar(std::exp(-1e-3 * j), 0.01 * j);
    const ComplexArray m = r * std::polar(1.0, -0.7);

    const auto al = align_global_phase(m, r);
    CHECK(al.delta == doctest::Approx(0.7).epsilon(1e-12));
    CHECK_FALSE(al.ill_conditioned);
    CHECK((al.aligned - r).abs().maxCoeff() < 1e-12);

    // single-point pivot variant
    const auto alp = align_global_phase(m, r, 17);
    CHECK(alp.delta == doctest::Approx(0.7).epsilon(1e-12));
    CHECK((alp.aligned - r).abs().maxCoeff() < 1e-12);
}

TEST_CASE("alignment flags an orthogonal pair") {
    const int n = 64;
    ComplexArray a(n), b(n);
    for (int j = 0; j < n; ++j) {
        a[j] = Complex(1.0, 0.0);
        b[j] = std::polar(1.0, 2.0 * pi * j / n); // zero overlap with a
    }
    const auto al = align_global_phase(a, b);
    CHECK(al.ill_conditioned);
}

TEST_CASE("trajectory pipeline on a short free flight") {
    const auto g = make_grid(1024, 2.67e-3);
    const auto psi = gaussian_packet(g, 0.4);
    const double x_b = g.x_at(512 + 16); // on-grid target
    Endpoints ends{0.0, 0.0, x_b, 10.0};

    TrajectoryOptions opt;
    opt.threads = 2;
    const ScanWindow window{x_b / 2.0, 0.075};
    const auto est =
        extract_trajectory(psi, k_beam, Potential::free_space(), ends,
                           {3.0, 5.0, 7.0}, window, opt);
    CHECK(est.n_ok == 3);
    for (const auto& p : est.points) {
        REQUIRE(p.ok);
        const double x_line =
            classical_trajectory(Potential::free_space(), ends, p.z);
        CHECK(std::abs(p.x_cl - x_line) <= g.dx);
        CHECK(std::abs(p.x_refined - x_line) <= g.dx);
    }
}

TEST_CASE("trajectory pipeline records failures per plane") {
    const auto g = make_grid(512, 2.67e-3);
    const auto psi = gaussian_packet(g, 0.4);
    Endpoints ends{0.0, 0.0, g.x_at(300), 10.0};

    // a window narrower than the derivative stencil fails every plane
    const ScanWindow window{0.2, 2.0 * g.dx};
    const auto est = extract_trajectory(psi, k_beam, Potential::free_space(),
                                        ends, {5.0}, window);
    CHECK(est.n_ok == 0);
    REQUIRE(est.points.size() == 1);
    CHECK_FALSE(est.points[0].ok);
    CHECK_FALSE(est.points[0].error.empty());
}

TEST_CASE("perturbed pair: zero eps reproduces the base curve") {
    Endpoints ends{0.0, 0.0, 0.0, 20.0};
    const double om = 2.0 * pi / 30.26;
    const RealArray xs = RealArray::LinSpaced(301, -0.75, 0.75);
    const double z = 1.1 * pi / om;

    const auto pair0 =
        perturbed_mpp(k_beam, Potential::harmonic(om), ends, z, 0.0, xs);
    CHECK((pair0.base.m - pair0.shifted.m).abs().maxCoeff() < 1e-13);
    CHECK(fidelity(pair0.base, pair0.shifted, 0.5, 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const auto pair =
        perturbed_mpp(k_beam, Potential::harmonic(om), ends, z, 0.06, xs);
    CHECK(pair.eps == doctest::Approx(0.06));
    // the perturbation leaves the stationary point put (symmetric scenario)
    const auto e0 = find_classical_position(pair.base);
    const auto e1 = find_classical_position(pair.shifted);
    CHECK(e0.x == e1.x);
    // but decoheres the curve away from it
    CHECK(fidelity(pair.base, pair.shifted, 1.0, 0.0) < 0.9);
}

TEST_CASE("fidelity is an overlap on the jointly valid sub-window") {
    // curves equal inside |x| < 0.2, orthogonal-ish outside
    MppCurve a, b;
    a.x = RealArray::LinSpaced(201, -0.5, 0.5);
    b.x = a.x;
    a.m = ComplexArray::Constant(201, Complex(1.0, 0.0));
    b.m = ComplexArray(201);
    for (int j = 0; j < 201; ++j)
        b.m[j] = std::abs(a.x[j]) < 0.2
                     ? Complex(1.0, 0.0)
                     : std::polar(1.0, 20.0 * (std::abs(a.x[j]) - 0.2));
    a.valid = BoolArray::Constant(201, true);
    b.valid = a.valid;
    a.z = b.z = 5.0;

    CHECK(fidelity(a, b, 0.3, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fidelity(a, b, 0.9, 0.0) < 0.9);
    CHECK(fidelity(a, a, 0.9, 0.0) == doctest::Approx(1.0).epsilon(1e-14));

    const auto sweep = fidelity_sweep(a, b, {0.1, 0.3, 0.6, 0.9}, 0.0);
    REQUIRE(sweep.size() == 4);
    CHECK(sweep[0].second == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sweep[3].second < sweep[2].second);

    MppCurve empty = a;
    empty.valid = BoolArray::Constant(201, false);
    CHECK_THROWS_AS(fidelity(a, empty, 0.3, 0.0), InsufficientSamples);
}
