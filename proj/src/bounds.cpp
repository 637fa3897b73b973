#include "unshuffle/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace unshuffle {

namespace {

// ln(m!) for m <= 20 from the exact integer factorials.
constexpr std::array<unsigned long long, 21> kFactorials = [] {
    std::array<unsigned long long, 21> f{};
    f[0] = 1;
    for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] * i;
    return f;
}();

}  // namespace

void BoundQuery::validate() const {
    if (n < 1 || p < 1) throw std::invalid_argument("BoundQuery: n and p must be positive");
    if (k > p) throw std::invalid_argument("BoundQuery: k must not exceed p");
    if (distortion > n + k) throw std::invalid_argument("BoundQuery: D must not exceed n + k");
    if (!(snr >= 0.0)) throw std::invalid_argument("BoundQuery: snr must be >= 0");
}

double log_factorial(std::size_t m) {
    if (m < kFactorials.size()) return std::log(static_cast<double>(kFactorials[m]));
    return std::lgamma(static_cast<double>(m) + 1.0);
}

double log_binomial(std::size_t p, std::size_t k) {
    if (k > p) throw std::invalid_argument("log_binomial: k > p");
    return log_factorial(p) - log_factorial(k) - log_factorial(p - k);
}

bool exact_recovery_infeasible(const BoundQuery& q) {
    q.validate();
    if (std::isinf(q.snr)) return false;
    const double lhs = static_cast<double>(q.n) * std::log1p(q.snr) + 2.0;
    return lhs <= log_factorial(q.n) + log_binomial(q.p, q.k);
}

double log_zeta(const BoundQuery& q) {
    q.validate();
    if (q.distortion == 0) return log_factorial(q.n) + log_binomial(q.p, q.k);

    // log-sum-exp over the feasible (i, j) grid.
    std::vector<double> terms;
    for (std::size_t i = 1; i <= q.distortion; ++i) {
        if (i > q.n) break;
        const std::size_t j_max = std::min(q.distortion - i, q.k);
        for (std::size_t j = 1; j <= j_max; ++j) {
            if (j > q.p - q.k) break;
            terms.push_back(-(log_factorial(q.n - i) + log_factorial(q.k - j) + log_factorial(q.p - q.k - j) +
                              2.0 * log_factorial(j)));
        }
    }
    if (terms.empty())
        throw std::domain_error("log_zeta: no feasible term in the distortion sum for D = " +
                                std::to_string(q.distortion) + " (n = " + std::to_string(q.n) +
                                ", p = " + std::to_string(q.p) + ", k = " + std::to_string(q.k) + ")");
    const double top = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - top);
    const double log_sum = top + std::log(acc);

    return log_factorial(q.p) - 2.0 * log_factorial(q.k) - 2.0 * log_factorial(q.p - q.k) - log_sum;
}

bool approx_recovery_infeasible(const BoundQuery& q) {
    const double lz = log_zeta(q);
    if (std::isinf(q.snr)) return false;
    return static_cast<double>(q.n) * std::log1p(q.snr) + std::log(4.0) <= lz;
}

RateCapacity rate_capacity(const BoundQuery& q) {
    q.validate();
    return {(log_factorial(q.n) + log_binomial(q.p, q.k)) / static_cast<double>(q.n), 0.5 * std::log1p(q.snr)};
}

std::optional<double> exact_recovery_snr_threshold(std::size_t n, std::size_t p, std::size_t k) {
    const double budget = log_factorial(n) + log_binomial(p, k) - 2.0;
    if (budget < 0.0) return std::nullopt;
    return std::expm1(budget / static_cast<double>(n));
}

}  // namespace unshuffle
