#include "plasim/evolution.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "plasim/errors.hpp"
#include "plasim/parallel.hpp"
#include "plasim/warnings.hpp"

namespace plasim {

namespace {

// One FFT engine per thread; kissfft caches plans per length inside it.
Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine;
    return engine;
}

ComplexArray fft_forward(const ComplexArray& in) {
    Eigen::VectorXcd out;
    fft_engine().fwd(out, in.matrix().eval());
    return out.array();
}

ComplexArray fft_inverse(const ComplexArray& in) {
    // Eigen's inv applies the 1/n normalization.
    Eigen::VectorXcd out;
    fft_engine().inv(out, in.matrix().eval());
    return out.array();
}

ComplexArray phase_factor(const RealArray& phase) {
    return phase.unaryExpr([](double p) { return std::polar(1.0, -p); });
}

} // namespace

double BandLimit::transmission(double abs_k, double k_nyquist) const {
    if (!enabled) return 1.0;
    const double edge = plateau * k_nyquist;
    if (abs_k <= edge) return 1.0;
    if (abs_k >= k_nyquist) return 0.0;
    const double t = (abs_k - edge) / ((1.0 - plateau) * k_nyquist);
    return 0.5 * (1.0 + std::cos(pi * t));
}

RealArray BandLimit::transmission(const RealArray& abs_k,
                                  double k_nyquist) const {
    return abs_k.unaryExpr(
        [&](double v) { return transmission(v, k_nyquist); });
}

double EvolutionPlan::dz() const {
    return n_steps > 0 ? z_span() / n_steps : 0.0;
}

int default_step_count(const Potential& pot, double z_span) {
    if (z_span == 0.0) return 0;
    if (pot.kind == Potential::Kind::Free) return 1;
    const int n = static_cast<int>(std::ceil(10.0 * pot.omega * z_span / pi));
    return n > 0 ? n : 1;
}

EvolutionPlan make_plan(const SpatialGrid& grid, double k,
                        const Potential& pot, double z_start, double z_end,
                        int n_steps, BandLimit band) {
    if (!(k > 0.0)) throw Error("make_plan: k must be positive");
    if (z_end < z_start) throw Error("make_plan: z_end must be >= z_start");
    if (n_steps < 0) throw Error("make_plan: n_steps must be >= 0");
    if (!(band.plateau > 0.0 && band.plateau < 1.0))
        throw Error("make_plan: band plateau must lie in (0,1)");
    EvolutionPlan plan{grid, k, pot, z_start, z_end, n_steps, band};
    if (plan.n_steps == 0) plan.n_steps = default_step_count(pot, plan.z_span());
    if (plan.z_span() == 0.0) plan.n_steps = 0;
    return plan;
}

ComplexField split_step_evolve(const ComplexField& field,
                               const EvolutionPlan& plan,
                               const EvolveOptions& options) {
    if (!(field.grid == plan.grid))
        throw Error("split_step_evolve: field grid does not match plan grid");
    if (field.amp.size() != field.grid.n)
        throw Error("split_step_evolve: field amplitude size mismatch");

    if (options.warn_boundary) {
        const double peak = field.amp.abs().maxCoeff();
        const double edge = std::max(std::abs(field.amp[0]),
                                     std::abs(field.amp[field.grid.n - 1]));
        if (peak > 0.0 && edge > 1e-8 * peak) {
            std::ostringstream oss;
            oss << "split_step_evolve: boundary amplitude " << edge / peak
                << " of peak, periodic wraparound may contaminate the result";
            warn(oss.str());
        }
    }

    ComplexField out{field.grid, field.amp};
    if (plan.n_steps == 0) return out;

    const double dz = plan.dz();
    const RealArray kx = plan.grid.wavenumbers();
    const RealArray window =
        plan.band.transmission(kx.abs().eval(), plan.grid.nyquist());
    const ComplexArray kinetic =
        phase_factor((kx.square() * (dz / (2.0 * plan.k))).eval()) *
        window.cast<Complex>();

    const bool has_potential = plan.potential.kind != Potential::Kind::Free;
    ComplexArray half_potential;
    if (has_potential) {
        const RealArray v =
            phase_rate(plan.potential, plan.k, plan.grid.positions());
        half_potential = phase_factor((v * (0.5 * dz)).eval());
    }

    for (int step = 0; step < plan.n_steps; ++step) {
        if (has_potential) out.amp *= half_potential;
        ComplexArray spectrum = fft_forward(out.amp);
        if (step == 0 && options.warn_aliasing) {
            const double total = spectrum.abs2().sum();
            const double tail =
                (kx.abs() >= plan.band.plateau * plan.grid.nyquist())
                    .select(spectrum.abs2(), RealArray::Zero(kx.size()))
                    .sum();
            if (total > 0.0 && tail > 1e-6 * total) {
                std::ostringstream oss;
                oss << "split_step_evolve: spectral tail mass " << tail / total
                    << " beyond the band-limit plateau";
                warn(oss.str());
            }
        }
        spectrum *= kinetic;
        out.amp = fft_inverse(spectrum);
        if (has_potential) out.amp *= half_potential;
    }
    return out;
}

Eigen::MatrixXcd propagator_matrix(const EvolutionPlan& plan, int threads) {
    const Eigen::Index n = plan.grid.n;
    if (n > 2048)
        throw Error("propagator_matrix: guarded to n <= 2048");
    Eigen::MatrixXcd matrix(n, n);
    // Delta columns are deliberately broadband and edge columns deliberately
    // touch the boundary; the per-column checks would only add noise here.
    const EvolveOptions options{false, false};
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t j) {
        ComplexField delta{plan.grid, ComplexArray::Zero(n)};
        delta.amp[static_cast<Eigen::Index>(j)] = Complex(1.0 / plan.grid.dx, 0.0);
        matrix.col(static_cast<Eigen::Index>(j)) =
            split_step_evolve(delta, plan, options).amp.matrix();
    });
    return matrix;
}

} // namespace plasim
