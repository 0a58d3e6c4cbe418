#pragma once

#include "plasim/protocol.hpp"
#include "plasim/rng.hpp"

namespace plasim {

// EMCCD-style detector: photoelectron shot noise Poisson(QE * counts) plus
// Gaussian readout noise per pixel per image, clamped at zero.
struct DetectorModel {
    double quantum_efficiency = 0.32;
    double readout_noise = 4.68;       // RMS electrons, per pixel per image
    double photons_per_exposure = 1e6; // expected total over the four
                                       // pointer images of one scan
};

// Per-trial stream seed derived from one master seed; distinct trials give
// statistically independent streams, and the mapping is fixed so runs are
// reproducible from (master, trial) alone.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

// Sample camera counts for every image and divide the calibration back out,
// so the result is an unbiased noisy estimate of the input intensities and
// slots straight back into with_intensities(). The exposure scale C is set
// from the summed four pointer images: photons_per_exposure = C * sum.
PointerIntensities sample_intensities(const PointerIntensities& ideal,
                                      const DetectorModel& model, Rng& rng);

} // namespace plasim
