#include "unshuffle/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "unshuffle/rng.hpp"

namespace unshuffle {

namespace {

// First `count` entries of a Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> sample_subset(std::size_t n, std::size_t count, Rng& rng) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t t = 0; t < count; ++t) {
        const auto pick = t + static_cast<std::size_t>(rng.below(n - t));
        std::swap(pool[t], pool[pick]);
    }
    pool.resize(count);
    return pool;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t t = v.size(); t > 1; --t) {
        const auto pick = static_cast<std::size_t>(rng.below(t));
        std::swap(v[t - 1], v[pick]);
    }
}

}  // namespace

void GenSpec::validate() const {
    if (n < 1 || p < 1) throw std::invalid_argument("GenSpec: n and p must be positive");
    if (k > p) throw std::invalid_argument("GenSpec: k must not exceed p");
    if (h > n) throw std::invalid_argument("GenSpec: h must not exceed n");
    if (h == 1) throw std::invalid_argument("GenSpec: h = 1 is not achievable by a permutation");
    if (!(snr > 0.0)) throw std::invalid_argument("GenSpec: snr must be positive");
    if (signal_law == SignalLaw::custom && custom_values.size() != k)
        throw std::invalid_argument("GenSpec: custom signal law needs exactly k values");
}

DesignLaw parse_design_law(const std::string& s) {
    if (s == "gauss" || s == "standard-normal") return DesignLaw::standard_normal;
    if (s == "unif" || s == "uniform") return DesignLaw::uniform_pm1;
    throw std::invalid_argument("unknown design law '" + s + "' (expected gauss or unif)");
}

std::string to_string(DesignLaw law) {
    return law == DesignLaw::standard_normal ? "gauss" : "unif";
}

NoiseScale parse_noise_scale(const std::string& s) {
    if (s == "unit-signal") return NoiseScale::unit_signal;
    if (s == "unit-noise") return NoiseScale::unit_noise;
    throw std::invalid_argument("unknown noise scale '" + s + "' (expected unit-signal or unit-noise)");
}

std::string to_string(NoiseScale scale) {
    return scale == NoiseScale::unit_signal ? "unit-signal" : "unit-noise";
}

SignalLaw parse_signal_law(const std::string& s) {
    if (s == "rademacher") return SignalLaw::rademacher_scaled;
    if (s == "unit") return SignalLaw::unit;
    if (s == "custom") return SignalLaw::custom;
    throw std::invalid_argument("unknown signal law '" + s + "' (expected rademacher, unit or custom)");
}

std::string to_string(SignalLaw law) {
    switch (law) {
        case SignalLaw::rademacher_scaled: return "rademacher";
        case SignalLaw::unit: return "unit";
        case SignalLaw::custom: return "custom";
    }
    return "rademacher";
}

Matrix sample_design(const GenSpec& spec) {
    spec.validate();
    Rng rng(stream_seed(spec.seed, Stream::design));
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto p = static_cast<Eigen::Index>(spec.p);
    Matrix x(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            x(i, j) = spec.design_law == DesignLaw::standard_normal ? rng.normal() : rng.uniform(-1.0, 1.0);
    return x;
}

Permutation sample_permutation_with_hamming(std::size_t n, std::size_t h, std::uint64_t seed) {
    if (h == 1 || h > n)
        throw std::invalid_argument("sample_permutation_with_hamming: need h = 0 or 2 <= h <= n, got h = " +
                                    std::to_string(h) + ", n = " + std::to_string(n));
    Rng rng(stream_seed(seed, Stream::permutation));
    auto moved = sample_subset(n, h, rng);
    std::sort(moved.begin(), moved.end());

    // Rejection-sample a derangement of 0..h-1; acceptance rate tends to 1/e.
    std::vector<std::size_t> order(h);
    for (;;) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, rng);
        bool fixed_point = false;
        for (std::size_t t = 0; t < h && !fixed_point; ++t) fixed_point = order[t] == t;
        if (!fixed_point) break;
    }

    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    for (std::size_t t = 0; t < h; ++t) map[moved[t]] = moved[order[t]];
    return Permutation::from_map(std::move(map));
}

SparseSignal sample_sparse_signal(std::size_t p, std::size_t k, SignalLaw law, std::uint64_t seed,
                                  const std::vector<double>& custom_values) {
    if (k > p)
        throw std::invalid_argument("sample_sparse_signal: k = " + std::to_string(k) + " exceeds p = " +
                                    std::to_string(p));
    if (law == SignalLaw::custom) {
        if (custom_values.size() != k)
            throw std::invalid_argument("sample_sparse_signal: custom law needs exactly k values");
        for (double v : custom_values)
            if (v == 0.0 || !std::isfinite(v))
                throw std::invalid_argument("sample_sparse_signal: custom values must be finite and nonzero");
    }
    Rng rng(stream_seed(seed, Stream::signal));
    auto support = sample_subset(p, k, rng);
    std::sort(support.begin(), support.end());

    Vector beta = Vector::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t t = 0; t < k; ++t) {
        const auto j = static_cast<Eigen::Index>(support[t]);
        switch (law) {
            case SignalLaw::rademacher_scaled: beta[j] = rng.rademacher(); break;
            case SignalLaw::unit: beta[j] = 1.0; break;
            case SignalLaw::custom: beta[j] = custom_values[t]; break;
        }
    }
    if (law == SignalLaw::rademacher_scaled && k > 0)
        beta *= std::sqrt(static_cast<double>(k)) / beta.norm();
    return SparseSignal::from_entries(std::move(beta), k);
}

double sigma_from_snr(const SparseSignal& signal, double snr) {
    if (!(snr > 0.0)) throw std::invalid_argument("sigma_from_snr: snr must be positive");
    const double norm = signal.entries().norm();
    if (norm == 0.0) throw std::invalid_argument("sigma_from_snr: zero signal has no defined snr");
    if (std::isinf(snr)) return 0.0;
    return norm / std::sqrt(snr);
}

ProblemInstance generate_instance(const GenSpec& spec) {
    spec.validate();
    Matrix x = sample_design(spec);
    SparseSignal signal = sample_sparse_signal(spec.p, spec.k, spec.signal_law, spec.seed, spec.custom_values);
    Permutation perm = sample_permutation_with_hamming(spec.n, spec.h, spec.seed);

    double sigma = 0.0;
    if (spec.noise_scale == NoiseScale::unit_noise && std::isfinite(spec.snr)) {
        const double norm = signal.entries().norm();
        if (norm == 0.0) throw std::invalid_argument("generate_instance: zero signal has no defined snr");
        signal = SparseSignal::from_entries(signal.entries() * (std::sqrt(spec.snr) / norm), spec.k);
        sigma = 1.0;
    } else if (!(std::isinf(spec.snr) && spec.k == 0)) {
        sigma = sigma_from_snr(signal, spec.snr);
    }

    Vector y = apply_permutation(perm, x * signal.entries());
    if (sigma > 0.0) {
        Rng rng(stream_seed(spec.seed, Stream::noise));
        for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sigma * rng.normal();
    }
    return ProblemInstance{std::move(x), std::move(y), GroundTruth{std::move(perm), std::move(signal), sigma}};
}

}  // namespace unshuffle
