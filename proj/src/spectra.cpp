#include "cavsync/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

namespace cavsync {

void SpectrumSpec::validate() const {
    if (n_classes < 1) throw ValidationError("spectrum needs n_classes >= 1");
    if (total_emitters < n_classes) {
        throw ValidationError("total_emitters must be >= n_classes");
    }
    if (kind == SpectrumKind::Gaussian) {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw ValidationError("gaussian sigma must be > 0");
        }
        if (!(span_sigmas >= 0.0) || !std::isfinite(span_sigmas)) {
            throw ValidationError("span_sigmas must be >= 0");
        }
        if (!std::isfinite(center)) throw ValidationError("center must be finite");
    } else {
        if (!(delta_max > 0.0) || !std::isfinite(delta_max)) {
            throw ValidationError("power-law delta_max must be > 0");
        }
        if (n_classes % 2 != 0) {
            throw ValidationError("power-law spectrum needs an even number of classes");
        }
    }
}

double gaussian_fwhm(double sigma) { return 2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma; }

std::vector<std::int64_t> largest_remainder(std::span<const double> weights,
                                            std::int64_t total) {
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(wsum > 0.0)) throw ValidationError("spectral weights sum to zero");
    std::vector<std::int64_t> counts(weights.size());
    std::vector<double> rem(weights.size());
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = static_cast<double>(total) * weights[i] / wsum;
        const double fl = std::floor(quota);
        counts[i] = static_cast<std::int64_t>(fl);
        rem[i] = quota - fl;
        assigned += counts[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Remainders that agree to rounding are treated as ties so that mirror
    // classes of a symmetric spectrum are handled identically.
    constexpr double tie_eps = 1e-9;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (std::abs(rem[a] - rem[b]) > tie_eps) return rem[a] > rem[b];
        return weights[a] > weights[b];
    });
    std::int64_t left = total - assigned;
    for (std::size_t j = 0; left > 0 && j < order.size(); ++j, --left) {
        ++counts[order[j]];
    }
    return counts;
}

namespace {

std::vector<FrequencyClass> make_classes(const SpectrumSpec& spec, double g,
                                         const std::vector<double>& deltas,
                                         const std::vector<double>& weights) {
    auto counts = largest_remainder(weights, spec.total_emitters);
    std::size_t zeros = 0;
    for (auto c : counts) zeros += (c == 0);
    if (zeros > 0) {
        if (!spec.probe_floor) {
            throw ValidationError(fmt::format(
                "{} frequency classes round to zero emitters; reduce the span or the "
                "class count, or enable probe_floor",
                zeros));
        }
        // Each empty class takes one emitter from the currently fullest class.
        for (auto& c : counts) {
            if (c != 0) continue;
            auto donor = std::max_element(counts.begin(), counts.end());
            if (*donor <= 1) {
                throw ValidationError("not enough emitters to populate every class");
            }
            --*donor;
            c = 1;
        }
    }
    std::vector<FrequencyClass> out(deltas.size());
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        out[i] = FrequencyClass{deltas[i], counts[i], g};
        out[i].validate();
    }
    return out;
}

}  // namespace

std::vector<FrequencyClass> discretize_gaussian(const SpectrumSpec& spec, double g) {
    if (spec.kind != SpectrumKind::Gaussian) {
        throw ValidationError("discretize_gaussian called with a non-gaussian spec");
    }
    spec.validate();
    const int K = spec.n_classes;
    std::vector<double> deltas(static_cast<std::size_t>(K));
    std::vector<double> weights(deltas.size());
    const double half = spec.span_sigmas * spec.sigma;
    for (int i = 0; i < K; ++i) {
        // Mirror-symmetric node placement: x_i = -x_{K-1-i} exactly.
        const double frac = K == 1 ? 0.0 : (2.0 * i - (K - 1)) / static_cast<double>(K - 1);
        const double x = frac * half;
        deltas[static_cast<std::size_t>(i)] = spec.center + x;
        const double u = x / spec.sigma;
        weights[static_cast<std::size_t>(i)] = std::exp(-0.5 * u * u);
    }
    return make_classes(spec, g, deltas, weights);
}

std::vector<FrequencyClass> discretize_power_law(const SpectrumSpec& spec, double g) {
    if (spec.kind != SpectrumKind::PowerLaw) {
        throw ValidationError("discretize_power_law called with a non-power-law spec");
    }
    spec.validate();
    const int half = spec.n_classes / 2;
    const double bin = spec.delta_max / half;
    const double delta_min = 0.5 * bin;
    if (!(delta_min > 0.0)) throw ValidationError("power-law delta_min must be > 0");
    std::vector<double> deltas;
    std::vector<double> weights;
    deltas.reserve(static_cast<std::size_t>(spec.n_classes));
    // Ascending emitter detuning: Delta from +max down to -max.
    for (int side = 0; side < 2; ++side) {
        for (int j = 0; j < half; ++j) {
            const int jj = side == 0 ? half - 1 - j : j;
            const double mag = delta_min + jj * bin;
            const double Delta = side == 0 ? mag : -mag;
            deltas.push_back(spec.cavity_detuning - Delta);
            weights.push_back(1.0 / mag);
        }
    }
    return make_classes(spec, g, deltas, weights);
}

std::vector<FrequencyClass> discretize(const SpectrumSpec& spec, double g) {
    return spec.kind == SpectrumKind::Gaussian ? discretize_gaussian(spec, g)
                                               : discretize_power_law(spec, g);
}

}  // namespace cavsync
