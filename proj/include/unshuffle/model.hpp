#pragma once

// Domain types shared by every module: permutations, sparse signals,
// problem instances and recovery results, plus their JSON encoding.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "unshuffle/errors.hpp"

namespace unshuffle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A bijection on {0, ..., n-1}.
///
/// Stored as a destination map: source row i lands at row map[i]. With this
/// convention the sensing model y = Pi X beta reads y[map[i]] = (X beta)[i],
/// and apply_permutation(p, v)[map[i]] = v[i]. The inverse undoes it:
/// apply_permutation(p.inverse(), apply_permutation(p, v)) == v.
class Permutation {
public:
    Permutation() = default;

    static Permutation identity(std::size_t n);

    /// Validates that `map` is a bijection; throws std::invalid_argument otherwise.
    static Permutation from_map(std::vector<std::size_t> map);

    std::size_t size() const noexcept { return map_.size(); }
    std::size_t operator[](std::size_t i) const { return map_[i]; }
    const std::vector<std::size_t>& map() const noexcept { return map_; }

    Permutation inverse() const;
    bool is_identity() const noexcept;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    explicit Permutation(std::vector<std::size_t> map) : map_(std::move(map)) {}
    std::vector<std::size_t> map_;
};

/// Number of indices where the two maps disagree. Throws DimensionError on
/// a length mismatch.
std::size_t hamming_distance(const Permutation& a, const Permutation& b);

/// out[p[i]] = v[i].
Vector apply_permutation(const Permutation& p, const Vector& v);

/// Row version of apply_permutation: row i of `m` becomes row p[i].
Matrix apply_permutation_rows(const Permutation& p, const Matrix& m);

/// A length-p vector together with its sorted support and the sparsity bound
/// it was constructed under. entries[j] != 0 exactly when j is in support.
class SparseSignal {
public:
    SparseSignal() = default;

    /// Throws std::invalid_argument if the number of nonzeros exceeds
    /// `sparsity_bound` (defaults to the length, i.e. no constraint).
    static SparseSignal from_entries(Vector entries, std::optional<std::size_t> sparsity_bound = {});
    static SparseSignal zeros(std::size_t length);

    std::size_t length() const noexcept { return static_cast<std::size_t>(entries_.size()); }
    const Vector& entries() const noexcept { return entries_; }
    const std::vector<std::size_t>& support() const noexcept { return support_; }
    std::size_t sparsity_bound() const noexcept { return bound_; }
    double operator[](std::size_t j) const { return entries_[static_cast<Eigen::Index>(j)]; }

    friend bool operator==(const SparseSignal& a, const SparseSignal& b) {
        return a.bound_ == b.bound_ && a.support_ == b.support_ && a.entries_ == b.entries_;
    }

private:
    Vector entries_;
    std::vector<std::size_t> support_;
    std::size_t bound_ = 0;
};

/// Generating ground truth of a synthetic instance.
struct GroundTruth {
    Permutation permutation;
    SparseSignal signal;
    double noise_sigma = 0.0;

    /// ||beta||^2 / sigma^2; +infinity when sigma == 0.
    double snr() const;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// y = Pi X beta + w. `truth` is present for generated instances.
struct ProblemInstance {
    Matrix design;
    Vector observation;
    std::optional<GroundTruth> truth;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(design.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(design.cols()); }

    /// Throws DimensionError / NumericError / std::invalid_argument when the
    /// parts are inconsistent or non-finite.
    void validate() const;

    friend bool operator==(const ProblemInstance& a, const ProblemInstance& b) {
        return a.design.rows() == b.design.rows() && a.design.cols() == b.design.cols() &&
               a.design == b.design && a.observation == b.observation && a.truth == b.truth;
    }
};

/// Output of the two-stage estimator. The success flags are only meaningful
/// when `truth_available` is set; otherwise they are all false.
struct RecoveryResult {
    Permutation permutation;
    SparseSignal signal_estimate;
    bool truth_available = false;
    bool permutation_correct = false;
    bool support_correct = false;
    bool sign_consistent = false;
    std::size_t hamming_to_truth = 0;

    // Diagnostics from the robust-Lasso stage.
    std::size_t solver_sweeps = 0;
    bool solver_converged = false;

    friend bool operator==(const RecoveryResult&, const RecoveryResult&) = default;
};

// JSON encoding. Doubles are written with round-trip precision, so
// decode(encode(x)) == x bit for bit.
void to_json(nlohmann::json& j, const Permutation& p);
void from_json(const nlohmann::json& j, Permutation& p);
void to_json(nlohmann::json& j, const SparseSignal& s);
void from_json(const nlohmann::json& j, SparseSignal& s);
void to_json(nlohmann::json& j, const GroundTruth& t);
void from_json(const nlohmann::json& j, GroundTruth& t);
void to_json(nlohmann::json& j, const ProblemInstance& inst);
void from_json(const nlohmann::json& j, ProblemInstance& inst);
void to_json(nlohmann::json& j, const RecoveryResult& r);
void from_json(const nlohmann::json& j, RecoveryResult& r);

// Eigen helpers shared by the modules above.
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);  // array of rows
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace unshuffle
