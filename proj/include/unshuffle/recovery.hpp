#pragma once

// Two-stage estimator: robust Lasso -> assignment -> Lasso -> top-k.

#include <cstddef>
#include <string>

#include "unshuffle/model.hpp"
#include "unshuffle/solver.hpp"

namespace unshuffle {

struct AssignmentSolution {
    Permutation permutation;
    double objective = 0.0;  // <y, Pi z>
};

/// <y, Pi z> = sum_i y[p[i]] * z[i], accumulated in increasing i.
double assignment_objective(const Vector& y, const Vector& z, const Permutation& p);

/// Maximizes <y, Pi z> over all permutations. The cost y_i z_j has rank
/// one, so matching the ranks of z to the ranks of y is optimal. Among the
/// optimal permutations, the one returned keeps row i in place whenever the
/// value y[i] is one of the values rank matching hands to i's block of tied
/// z values; remaining rows are filled in index order. In particular a
/// constant z yields the identity.
AssignmentSolution lap_match(const Vector& y, const Vector& z);

/// Exhaustive maximization over all n! maps in lexicographic order; the
/// first maximizer wins. Refuses n > 9 with SizeLimitError.
AssignmentSolution lap_bruteforce(const Vector& y, const Vector& z);

/// Keeps the k entries of largest magnitude (lower index first on ties).
SparseSignal hard_threshold_topk(const Vector& v, std::size_t k);

enum class LambdaMode {
    theory,    // lambda_beta = c0 sigma sqrt(log p / n), lambda_xi = c1 sigma sqrt(log n / n)
    constant,  // every lambda equal to a fixed value
};

LambdaMode parse_lambda_mode(const std::string& s);  // "theory" | "constant"
std::string to_string(LambdaMode mode);

/// Regularizer choice for the whole pipeline plus solver tolerances.
struct LambdaSchedule {
    LambdaMode mode = LambdaMode::constant;
    double constant_lambda = 2.0;
    double c_beta = 2.0;   // c0
    double c_xi = 2.0;     // c1
    double c_lasso = 2.0;  // constant of the stage-two Lasso
    std::size_t max_sweeps = 10000;
    double tol = 1e-8;
    double kkt_tol = 1e-6;

    /// Stage-one solver configuration. Theory mode needs a known noise level
    /// and throws std::invalid_argument when `sigma` is negative.
    SolverConfig stage_one(std::size_t n, std::size_t p, double sigma) const;
    /// Stage-two Lasso regularizer.
    double stage_two_lambda(std::size_t n, std::size_t p, double sigma) const;
};

/// Runs both stages. When the instance carries truth, the success flags are
/// filled in: exact permutation match, exact support match, and
/// sign(thres(beta_hat; k)) == sign(beta_true) entrywise.
RecoveryResult recover(const ProblemInstance& instance, const SolverConfig& stage_one, double lambda_lasso,
                       std::size_t k);

/// Same as above with the regularizers taken from `schedule`. Theory mode
/// reads sigma from the instance truth and refuses instances without it.
RecoveryResult recover(const ProblemInstance& instance, const LambdaSchedule& schedule, std::size_t k);

}  // namespace unshuffle
