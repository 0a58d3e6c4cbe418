#include "plasim/noise.hpp"

#include "plasim/errors.hpp"

namespace plasim {

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
    std::uint64_t state = master ^ (0x9e3779b97f4a7c15ull * (trial + 1));
    return splitmix64(state);
}

namespace {

RealArray sample_image(const RealArray& intensity, double gain,
                       double readout, Rng& rng) {
    RealArray out(intensity.size());
    for (Eigen::Index i = 0; i < intensity.size(); ++i) {
        const double expected = gain * std::max(0.0, intensity[i]);
        double counts = static_cast<double>(rng.poisson(expected)) +
                        rng.normal(0.0, readout);
        if (counts < 0.0) counts = 0.0;
        out[i] = counts / gain;
    }
    return out;
}

} // namespace

PointerIntensities sample_intensities(const PointerIntensities& ideal,
                                      const DetectorModel& model, Rng& rng) {
    if (!(model.quantum_efficiency > 0.0 && model.quantum_efficiency <= 1.0))
        throw Error("sample_intensities: quantum efficiency must be in (0,1]");
    if (!(model.readout_noise >= 0.0))
        throw Error("sample_intensities: readout noise must be >= 0");
    if (!(model.photons_per_exposure > 0.0))
        throw Error("sample_intensities: photon budget must be positive");

    const double total = ideal.p_plus.sum() + ideal.p_minus.sum() +
                         ideal.p_right.sum() + ideal.p_left.sum();
    if (!(total > 0.0))
        throw Error("sample_intensities: pointer images carry no intensity");
    const double exposure = model.photons_per_exposure / total;
    const double gain = model.quantum_efficiency * exposure;

    PointerIntensities out;
    out.p_plus = sample_image(ideal.p_plus, gain, model.readout_noise, rng);
    out.p_minus = sample_image(ideal.p_minus, gain, model.readout_noise, rng);
    out.p_right = sample_image(ideal.p_right, gain, model.readout_noise, rng);
    out.p_left = sample_image(ideal.p_left, gain, model.readout_noise, rng);
    out.p_one = sample_image(ideal.p_one, gain, model.readout_noise, rng);
    return out;
}

} // namespace plasim
