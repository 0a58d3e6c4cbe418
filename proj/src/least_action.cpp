#include "plasim/least_action.hpp"

#include <cmath>
#include <limits>

#include "plasim/errors.hpp"
#include "plasim/warnings.hpp"

namespace plasim {

namespace {

const double nan = std::numeric_limits<double>::quiet_NaN();

MppCurve mask_and_normalize(RealArray x, ComplexArray pi_values, double z,
                            double mask_floor_rel) {
    MppCurve curve;
    curve.x = std::move(x);
    curve.z = z;
    const RealArray mag = pi_values.abs();
    const double floor = mask_floor_rel * mag.maxCoeff();
    curve.m = ComplexArray::Zero(pi_values.size());
    curve.valid = BoolArray::Constant(pi_values.size(), false);
    for (Eigen::Index i = 0; i < pi_values.size(); ++i) {
        if (mag[i] <= floor) continue;
        curve.m[i] = pi_values[i] / mag[i];
        curve.valid[i] = true;
    }
    return curve;
}

// Longest contiguous valid run [begin, end).
std::pair<Eigen::Index, Eigen::Index> longest_run(const BoolArray& valid) {
    Eigen::Index best_begin = 0, best_len = 0, begin = 0, len = 0;
    for (Eigen::Index i = 0; i <= valid.size(); ++i) {
        if (i < valid.size() && valid[i]) {
            if (len == 0) begin = i;
            ++len;
        } else {
            if (len > best_len) {
                best_len = len;
                best_begin = begin;
            }
            len = 0;
        }
    }
    return {best_begin, best_begin + best_len};
}

} // namespace

MppCurve build_mpp(const PropagatorScan& left, const PropagatorScan& right,
                   double mask_floor_rel, bool allow_plane_mismatch) {
    if (left.axis != ScanAxis::FinalPosition ||
        right.axis != ScanAxis::InitialSlit)
        throw Error("build_mpp: expects a (FinalPosition, InitialSlit) pair");
    if (left.x.size() != right.x.size())
        throw Error("build_mpp: scans sample different window sizes");
    if (((left.x - right.x).abs() > 1e-12).any())
        throw Error("build_mpp: scans sample different x positions");
    if (!allow_plane_mismatch &&
        std::abs(left.z_read - right.z_slit) > 1e-12)
        throw Error("build_mpp: scans meet at different planes");
    return mask_and_normalize(left.x, (right.kpp * left.kpp).eval(),
                              left.z_read, mask_floor_rel);
}

MppCurve mpp_from_kernels(double k, const Potential& pot,
                          const Endpoints& ends, double z, const RealArray& xs,
                          double mask_floor_rel) {
    return mask_and_normalize(xs, pi_product(k, pot, ends, z, xs), z,
                              mask_floor_rel);
}

MppCurve smooth_mpp(const MppCurve& curve, int window) {
    if (window < 1 || window % 2 == 0)
        throw Error("smooth_mpp: window must be odd and >= 1");
    MppCurve out = curve;
    if (window == 1) return out;
    const int half = window / 2;
    for (Eigen::Index i = 0; i < curve.m.size(); ++i) {
        if (!curve.valid[i]) continue;
        Complex acc(0.0, 0.0);
        int count = 0;
        for (Eigen::Index j = std::max<Eigen::Index>(0, i - half);
             j <= std::min<Eigen::Index>(curve.m.size() - 1, i + half); ++j) {
            if (!curve.valid[j]) continue;
            acc += curve.m[j];
            ++count;
        }
        const double mag = std::abs(acc);
        if (count == 0 || mag == 0.0) {
            out.valid[i] = false;
            out.m[i] = Complex(0.0, 0.0);
            continue;
        }
        out.m[i] = acc / mag; // back to unit modulus
    }
    return out;
}

RealArray richardson_derivative(const RealArray& samples, double h) {
    const Eigen::Index n = samples.size();
    if (n < 5)
        throw InsufficientSamples(
            "richardson_derivative: needs at least 5 samples");
    if (!(h > 0.0)) throw Error("richardson_derivative: h must be positive");
    RealArray d = RealArray::Constant(n, nan);
    for (Eigen::Index i = 2; i < n - 2; ++i)
        d[i] = (-samples[i + 2] + 8.0 * samples[i + 1] - 8.0 * samples[i - 1] +
                samples[i - 2]) /
               (12.0 * h);
    return d;
}

PositionEstimate find_classical_position(const MppCurve& curve,
                                         const FindOptions& options) {
    const auto [begin, end] = longest_run(curve.valid);
    const Eigen::Index len = end - begin;
    if (len < 5)
        throw InsufficientSamples(
            "find_classical_position: needs a valid run of at least 5 samples");
    const double h = curve.x[begin + 1] - curve.x[begin];

    RealArray re(len), im(len);
    for (Eigen::Index i = 0; i < len; ++i) {
        re[i] = curve.m[begin + i].real();
        im[i] = curve.m[begin + i].imag();
    }
    const RealArray dre = richardson_derivative(re, h);
    const RealArray dim = richardson_derivative(im, h);

    // For unit-modulus M = e^{i phi}, |M'|^2 = phi'^2: the squared slope of
    // the action profile. Interior excludes the 2-sample stencil margins.
    const double center = 0.5 * (curve.x[0] + curve.x[curve.x.size() - 1]);
    Eigen::Index best = -1;
    double best_g = nan;
    for (Eigen::Index i = 2; i < len - 2; ++i) {
        const double g = dre[i] * dre[i] + dim[i] * dim[i];
        if (best < 0 || g < best_g) {
            best = i;
            best_g = g;
        } else if (g == best_g) {
            const double xi = curve.x[begin + i];
            const double xb = curve.x[begin + best];
            if (std::abs(xi - center) < std::abs(xb - center)) best = i;
        }
    }
    if (best < 0)
        throw InsufficientSamples(
            "find_classical_position: no interior samples");

    PositionEstimate est;
    est.index = begin + best;
    est.x = curve.x[est.index];
    est.g_min = best_g;
    est.x_refined = est.x;
    if (options.refine && best >= 3 && best < len - 3) {
        const double gm = dre[best - 1] * dre[best - 1] +
                          dim[best - 1] * dim[best - 1];
        const double gp = dre[best + 1] * dre[best + 1] +
                          dim[best + 1] * dim[best + 1];
        const double denom = gm - 2.0 * best_g + gp;
        if (denom > 0.0) {
            double offset = 0.5 * (gm - gp) / denom;
            if (offset > 0.5) offset = 0.5;
            if (offset < -0.5) offset = -0.5;
            est.x_refined = est.x + offset * h;
            est.refined = true;
        }
    }
    return est;
}

PhaseAlignment align_global_phase(const ComplexArray& measured,
                                  const ComplexArray& reference) {
    if (measured.size() != reference.size())
        throw Error("align_global_phase: size mismatch");
    const Complex overlap = (measured.conjugate() * reference).sum();
    const double scale = std::sqrt(measured.abs2().sum()) *
                         std::sqrt(reference.abs2().sum());
    PhaseAlignment out;
    out.ill_conditioned = !(std::abs(overlap) > 1e-12 * scale);
    if (out.ill_conditioned)
        warn("align_global_phase: near-zero overlap, phase ill-conditioned");
    out.delta = out.ill_conditioned ? 0.0 : std::arg(overlap);
    out.aligned = measured * std::polar(1.0, out.delta);
    return out;
}

PhaseAlignment align_global_phase(const ComplexArray& measured,
                                  const ComplexArray& reference,
                                  Eigen::Index pivot) {
    if (measured.size() != reference.size())
        throw Error("align_global_phase: size mismatch");
    if (pivot < 0 || pivot >= measured.size())
        throw Error("align_global_phase: pivot out of range");
    const double floor = 1e-12 * std::max(measured.abs().maxCoeff(),
                                          reference.abs().maxCoeff());
    PhaseAlignment out;
    out.ill_conditioned = std::abs(measured[pivot]) < floor ||
                          std::abs(reference[pivot]) < floor;
    if (out.ill_conditioned)
        warn("align_global_phase: pivot sample near zero, phase "
             "ill-conditioned");
    out.delta = out.ill_conditioned
                    ? 0.0
                    : std::arg(reference[pivot]) - std::arg(measured[pivot]);
    out.aligned = measured * std::polar(1.0, out.delta);
    return out;
}

TrajectoryEstimate extract_trajectory(const ComplexField& psi0, double k,
                                      const Potential& pot,
                                      const Endpoints& ends,
                                      const std::vector<double>& z_list,
                                      const ScanWindow& window,
                                      const TrajectoryOptions& options) {
    TrajectoryEstimate estimate;
    estimate.points.reserve(z_list.size());
    for (const double z : z_list) {
        TrajectoryPoint point;
        point.z = z;
        try {
            ScanSetup setup;
            setup.psi0 = psi0;
            setup.k = k;
            setup.potential = pot;
            setup.ends = ends;
            setup.z = z;
            setup.window = window;
            setup.evolve_steps = options.evolve_steps;
            setup.band = options.band;
            setup.threads = options.threads;

            setup.axis = ScanAxis::FinalPosition;
            PropagatorScan left = scan_propagator(setup);
            setup.axis = ScanAxis::InitialSlit;
            PropagatorScan right = scan_propagator(setup);
            if (options.filter) {
                left = options.filter(left);
                right = options.filter(right);
            }

            const MppCurve curve = smooth_mpp(
                build_mpp(left, right, options.mask_floor_rel),
                options.smooth_window);
            const PositionEstimate est =
                find_classical_position(curve, {options.refine});
            point.x_cl = est.x;
            point.x_refined = est.x_refined;
            point.g_min = est.g_min;
            point.ok = true;
            ++estimate.n_ok;
        } catch (const Error& e) {
            point.error = e.what();
        }
        estimate.points.push_back(std::move(point));
    }
    return estimate;
}

PerturbedPair perturbed_mpp(double k, const Potential& pot,
                            const Endpoints& ends, double z, double eps,
                            const RealArray& xs, double mask_floor_rel) {
    if (!(eps >= 0.0)) throw Error("perturbed_mpp: eps must be >= 0");
    if (!(ends.z_a < z - eps))
        throw Error("perturbed_mpp: z - eps must stay above z_a");
    PerturbedPair pair;
    pair.eps = eps;
    pair.base = mpp_from_kernels(k, pot, ends, z, xs, mask_floor_rel);
    const ComplexArray shifted =
        propagator_to(k, pot, xs, z, ends.x_b, ends.z_b) *
        propagator_from(k, pot, ends.x_a, ends.z_a, xs, z - eps);
    pair.shifted =
        mask_and_normalize(xs, shifted, z, mask_floor_rel);
    return pair;
}

double fidelity(const MppCurve& a, const MppCurve& b, double span,
                double center) {
    if (a.x.size() != b.x.size() || ((a.x - b.x).abs() > 1e-12).any())
        throw Error("fidelity: curves sample different x positions");
    if (!(span > 0.0)) throw Error("fidelity: span must be positive");
    // Trapezoid over the jointly valid samples inside the sub-window,
    // normalized by the covered length: identical curves give exactly 1.
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < a.x.size(); ++i)
        if (a.valid[i] && b.valid[i] &&
            std::abs(a.x[i] - center) <= 0.5 * span + 1e-12)
            idx.push_back(i);
    if (idx.size() < 2)
        throw InsufficientSamples("fidelity: sub-window has < 2 samples");
    Complex acc(0.0, 0.0);
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        const Eigen::Index l = idx[i];
        const Eigen::Index r = idx[i + 1];
        const double dx = a.x[r] - a.x[l];
        const Complex fl = std::conj(a.m[l]) * b.m[l];
        const Complex fr = std::conj(a.m[r]) * b.m[r];
        acc += 0.5 * (fl + fr) * dx;
        length += dx;
    }
    const double value = std::abs(acc / length);
    return value * value;
}

std::vector<std::pair<double, double>> fidelity_sweep(
    const MppCurve& a, const MppCurve& b, const std::vector<double>& spans,
    double center) {
    std::vector<std::pair<double, double>> out;
    out.reserve(spans.size());
    for (const double span : spans)
        out.emplace_back(span, fidelity(a, b, span, center));
    return out;
}

} // namespace plasim
