#pragma once

// Cyclic coordinate descent for the outlier-augmented Lasso
//
//     min_{beta, xi}  1/(2n) ||y - X beta - sqrt(n) xi||^2
//                     + lambda_xi ||xi||_1 + lambda_beta ||beta||_1
//
// and for the plain Lasso (xi frozen at zero). Each coordinate is minimized
// exactly, so the objective never increases from one sweep to the next.

#include <cstddef>
#include <limits>
#include <vector>

#include "unshuffle/model.hpp"

namespace unshuffle {

struct SolverConfig {
    double lambda_beta = 2.0;
    /// +infinity freezes xi at zero, which turns the problem into a plain Lasso.
    double lambda_xi = 2.0;
    std::size_t max_sweeps = 10000;
    /// Stop once the largest coordinate change in a sweep is below this...
    double tol = 1e-8;
    /// ...and the subgradient optimality conditions hold to this accuracy.
    double kkt_tol = 1e-6;
    /// Number of warm-start stages on a geometric regularizer path before the
    /// final solve; 0 starts the final solve from (0, 0).
    std::size_t continuation_steps = 20;
    /// Every 64 sweeps, try solving the stationarity equations exactly on the
    /// current active set; the result is kept only if it passes the KKT check.
    bool polish = true;
    /// Keep the objective after every sweep in RobustLassoSolution::objective_trace
    /// (final regularizers only, not the warm-start stages).
    bool record_trace = false;

    void validate() const;
};

struct RobustLassoSolution {
    Vector beta;
    Vector xi;
    double objective = 0.0;
    std::size_t sweeps_used = 0;
    double kkt_residual = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;
};

/// sign(z) * max(|z| - t, 0).
constexpr double soft_threshold(double z, double t) noexcept {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

/// Objective value at (beta, xi), evaluated from scratch.
double robust_lasso_objective(const Matrix& x, const Vector& y, const Vector& beta, const Vector& xi,
                              double lambda_beta, double lambda_xi);

/// Largest violation of the subgradient optimality conditions at (beta, xi).
/// With g = X^T r / n and r = X beta + sqrt(n) xi - y:
///   beta_j == 0:  max(|g_j| - lambda_beta, 0)
///   beta_j != 0:  |g_j + sign(beta_j) lambda_beta|
/// and the same for xi_i with r_i / sqrt(n) and lambda_xi. The xi block is
/// skipped when lambda_xi is infinite.
double robust_lasso_kkt_residual(const Matrix& x, const Vector& y, const Vector& beta, const Vector& xi,
                                 double lambda_beta, double lambda_xi);

/// Solves the augmented problem, warm-started along a regularizer path
/// (see SolverConfig::continuation_steps). Sweep order is
/// beta_0 .. beta_{p-1} then xi_0 .. xi_{n-1}. Columns with zero norm keep
/// beta_j = 0. Non-convergence is reported through `converged`, not thrown.
RobustLassoSolution robust_lasso(const Matrix& x, const Vector& y, const SolverConfig& cfg);
RobustLassoSolution robust_lasso(const ProblemInstance& instance, const SolverConfig& cfg);

/// Plain Lasso 1/(2n)||y - X beta||^2 + lambda ||beta||_1, full diagnostics.
RobustLassoSolution lasso_solve(const Vector& y, const Matrix& x, double lambda, const SolverConfig& cfg);

/// Plain Lasso, coefficients only.
Vector lasso(const Vector& y, const Matrix& x, double lambda, const SolverConfig& cfg);

void to_json(nlohmann::json& j, const RobustLassoSolution& s);
void from_json(const nlohmann::json& j, RobustLassoSolution& s);

}  // namespace unshuffle
