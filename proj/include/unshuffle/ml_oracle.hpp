#pragma once

// Exhaustive maximum-likelihood estimator for tiny instances:
//
//     argmin_{Pi, ||beta||_0 <= k} ||y - Pi X beta||_2
//
// Every permutation and every support of size 0..k is tried; beta on a
// support is the least-squares fit. Only usable at desk scale.

#include <cstddef>

#include "unshuffle/model.hpp"

namespace unshuffle {

/// ||y - B B^+ y||_2 via a rank-revealing complete orthogonal decomposition.
/// Throws DimensionError if B has more columns than rows or the row counts
/// differ, NumericError on non-finite input.
double projection_residual(const Vector& y, const Matrix& basis);

struct MlLimits {
    std::size_t max_rows = 8;        // n_max
    std::size_t max_cols = 12;       // p_cap
    std::size_t max_supports = 1u << 15;  // cap on sum_{s<=k} C(p, s)
};

struct MlEstimate {
    Permutation permutation;
    SparseSignal signal;
    double residual = 0.0;  // ||y - Pi X beta|| at the winner
};

/// Ties go to the lexicographically first permutation map, then to the
/// first support in (size, lexicographic) order. Throws SizeLimitError with
/// the offending sizes when the instance exceeds `limits`.
///
/// Parallelized over contiguous blocks of permutation ranks with OpenMP. The
/// reduction is a min over (residual, rank, support index), so the result
/// does not depend on the thread count.
MlEstimate ml_estimate(const ProblemInstance& instance, std::size_t k, const MlLimits& limits = {});

/// Single-threaded reference with identical semantics.
MlEstimate ml_estimate_serial(const ProblemInstance& instance, std::size_t k, const MlLimits& limits = {});

/// Residual of the best fit with the identity permutation, i.e. best-subset
/// regression with at most k columns.
MlEstimate best_subset(const Vector& y, const Matrix& x, std::size_t k, const MlLimits& limits = {});

/// k-th permutation (0-based) of 0..n-1 in lexicographic order.
Permutation permutation_from_rank(std::size_t n, std::size_t rank);

void to_json(nlohmann::json& j, const MlEstimate& e);
void from_json(const nlohmann::json& j, MlEstimate& e);

}  // namespace unshuffle
