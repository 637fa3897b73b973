#pragma once

// Information-theoretic recovery thresholds, evaluated in the log domain
// (natural logarithms throughout) so nothing overflows for p up to 1e6.

#include <cstddef>
#include <optional>

namespace unshuffle {

struct BoundQuery {
    std::size_t n = 1;
    std::size_t p = 1;
    std::size_t k = 0;
    double snr = 0.0;
    std::size_t distortion = 0;  // D: allowed d_H(perm) + d_H(support)

    /// Throws std::invalid_argument unless k <= p, D <= n + k and snr >= 0.
    void validate() const;
};

/// ln(m!).
double log_factorial(std::size_t m);

/// ln C(p, k); requires k <= p.
double log_binomial(std::size_t p, std::size_t k);

/// True when n ln(1 + snr) + 2 <= ln(n! C(p, k)): every estimator then fails
/// exact recovery of (permutation, support) with probability >= 1/2.
/// The constant 2 is taken in nats.
bool exact_recovery_infeasible(const BoundQuery& q);

/// ln zeta with
///   zeta = p! / ((k!)^2 ((p-k)!)^2) * [ sum_{i=1}^{D} sum_{j=1}^{min(D-i, k)}
///          1 / ((n-i)! (k-j)! (p-k-j)! (j!)^2) ]^{-1}
/// Terms with a negative factorial argument count as zero. D = 0 returns
/// ln(n! C(p, k)). Throws std::domain_error when D >= 1 and no term is
/// feasible (e.g. D = 1, where the inner range is empty).
double log_zeta(const BoundQuery& q);

/// True when n ln(1 + snr) + ln 4 <= ln zeta. Propagates log_zeta's
/// domain_error.
bool approx_recovery_infeasible(const BoundQuery& q);

/// Coding-theory reading of the exact-recovery bound: the rate
/// ln(C(p, k) n!) / n must stay below the capacity ln(1 + snr) / 2.
struct RateCapacity {
    double rate = 0.0;
    double capacity = 0.0;
};

RateCapacity rate_capacity(const BoundQuery& q);

/// Largest snr at which exact_recovery_infeasible still holds:
/// expm1((ln(n! C(p, k)) - 2) / n). Empty when no snr >= 0 qualifies.
std::optional<double> exact_recovery_snr_threshold(std::size_t n, std::size_t p, std::size_t k);

}  // namespace unshuffle
