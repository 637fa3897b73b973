#pragma once

// Seeded synthetic generators for shuffled sparse-regression instances.
// Every function here is a pure function of its arguments (seed included).

#include <cstdint>
#include <string>
#include <vector>

#include "unshuffle/model.hpp"

namespace unshuffle {

enum class DesignLaw { standard_normal, uniform_pm1 };

enum class SignalLaw {
    rademacher_scaled,  // random signs, magnitudes scaled so ||beta||^2 = k
    unit,               // all nonzeros equal to +1
    custom,             // GenSpec::custom_values placed on the sorted support
};

/// How the overall scale of an instance is fixed once snr is chosen.
enum class NoiseScale {
    unit_signal,  // ||beta||^2 as drawn (k for the default law), sigma = ||beta|| / sqrt(snr)
    unit_noise,   // sigma = 1, beta rescaled so that ||beta||^2 = snr
};

struct GenSpec {
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t k = 0;
    std::size_t h = 0;
    DesignLaw design_law = DesignLaw::standard_normal;
    double snr = 1.0;  // may be +infinity for a noiseless instance
    SignalLaw signal_law = SignalLaw::rademacher_scaled;
    std::vector<double> custom_values;
    NoiseScale noise_scale = NoiseScale::unit_signal;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;
};

DesignLaw parse_design_law(const std::string& s);  // "gauss" | "unif"
std::string to_string(DesignLaw law);
NoiseScale parse_noise_scale(const std::string& s);  // "unit-signal" | "unit-noise"
std::string to_string(NoiseScale scale);
SignalLaw parse_signal_law(const std::string& s);  // "rademacher" | "unit" | "custom"
std::string to_string(SignalLaw law);

/// n x p matrix with i.i.d. entries, drawn in row-major order.
Matrix sample_design(const GenSpec& spec);

/// Uniformly chosen h rows, moved by a uniformly random derangement among
/// themselves, so hamming_distance(identity, result) == h exactly.
/// Requires h == 0 or 2 <= h <= n.
Permutation sample_permutation_with_hamming(std::size_t n, std::size_t h, std::uint64_t seed);

/// Exactly k nonzeros on a uniformly random support.
SparseSignal sample_sparse_signal(std::size_t p, std::size_t k, SignalLaw law, std::uint64_t seed,
                                  const std::vector<double>& custom_values = {});

/// sigma = ||signal|| / sqrt(snr). snr = +infinity gives 0.
double sigma_from_snr(const SparseSignal& signal, double snr);

/// y = Pi X beta + w, w ~ N(0, sigma^2 I), truth attached.
ProblemInstance generate_instance(const GenSpec& spec);

}  // namespace unshuffle
