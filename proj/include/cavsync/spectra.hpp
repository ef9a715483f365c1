// spectra.hpp: deterministic discretization of an inhomogeneous line into
// frequency classes.

#pragma once

#include "cavsync/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cavsync {

enum class SpectrumKind { Gaussian, PowerLaw };

struct SpectrumSpec {
    SpectrumKind kind = SpectrumKind::Gaussian;
    int n_classes = 1;
    std::int64_t total_emitters = 1;

    // Gaussian: equally spaced classes on center +- span_sigmas * sigma.
    double center = 0.0;
    double sigma = 0.0;
    double span_sigmas = 2.5;

    // PowerLaw: N(Delta) ~ 1/|Delta| on +-(delta_min .. delta_max]; the
    // classes are the midpoints of n_classes equal bins, so the innermost
    // class sits at delta_max / n_classes. Detunings are taken relative to
    // cavity_detuning: class delta = cavity_detuning - Delta.
    double delta_max = 0.0;
    double cavity_detuning = 0.0;

    // When set, classes that would round to zero emitters receive one probe
    // emitter, taken from the most populous classes.
    bool probe_floor = false;

    void validate() const;
};

// Integer apportionment of `total` proportional to `weights` by the largest
// remainder method. Ties are broken toward the larger weight, then the lower
// index.
std::vector<std::int64_t> largest_remainder(std::span<const double> weights,
                                            std::int64_t total);

std::vector<FrequencyClass> discretize_gaussian(const SpectrumSpec& spec, double g);
std::vector<FrequencyClass> discretize_power_law(const SpectrumSpec& spec, double g);
std::vector<FrequencyClass> discretize(const SpectrumSpec& spec, double g);

// Full width at half maximum of a Gaussian with standard deviation sigma.
double gaussian_fwhm(double sigma);

}  // namespace cavsync
