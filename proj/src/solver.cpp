#include "unshuffle/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace unshuffle {

namespace {

constexpr std::size_t kResidualRefresh = 16;
constexpr std::size_t kStageSweeps = 50;
constexpr double kStageTol = 1e-6;
constexpr std::size_t kPolishInterval = 64;
constexpr std::size_t kPolishSteps = 400;

double sign(double v) { return (v > 0.0) - (v < 0.0); }

void check_inputs(const Matrix& x, const Vector& y) {
    if (x.rows() != y.size())
        throw DimensionError("solver: design has " + std::to_string(x.rows()) + " rows, observation has " +
                             std::to_string(y.size()));
    if (x.rows() < 1 || x.cols() < 1) throw DimensionError("solver: empty design");
    if (!x.allFinite() || !y.allFinite()) throw NumericError("solver: non-finite design or observation");
}

double penalty_objective(const Vector& residual, const Vector& beta, const Vector& xi, double lambda_beta,
                         double lambda_xi) {
    const double n = static_cast<double>(residual.size());
    double value = residual.squaredNorm() / (2.0 * n) + lambda_beta * beta.lpNorm<1>();
    if (std::isfinite(lambda_xi)) value += lambda_xi * xi.lpNorm<1>();
    return value;
}

// Cyclic sweeps at fixed (lambda_beta, lambda_xi) on the state (beta, xi, r)
// until the largest coordinate change drops below `tol`. Returns the number
// of sweeps performed and whether the change criterion was met.
struct SweepOutcome {
    std::size_t sweeps = 0;
    bool settled = false;
};

SweepOutcome sweep_until(const Matrix& x, const Vector& y, const Vector& col_sq, double lambda_beta,
                         double lambda_xi, std::size_t max_sweeps, double tol, RobustLassoSolution& sol,
                         Vector& r, std::vector<double>* trace) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const double dn = static_cast<double>(n);
    const double sqrt_n = std::sqrt(dn);
    const bool xi_frozen = std::isinf(lambda_xi);

    SweepOutcome out;
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        double max_change = 0.0;

        for (Eigen::Index j = 0; j < p; ++j) {
            if (col_sq[j] == 0.0) continue;
            const double old = sol.beta[j];
            const double rho = x.col(j).dot(r) + col_sq[j] * old;
            const double updated = soft_threshold(rho / col_sq[j], dn * lambda_beta / col_sq[j]);
            const double delta = updated - old;
            if (delta != 0.0) {
                r.noalias() -= delta * x.col(j);
                sol.beta[j] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }

        if (!xi_frozen) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double old = sol.xi[i];
                const double updated = soft_threshold((r[i] + sqrt_n * old) / sqrt_n, lambda_xi);
                const double delta = updated - old;
                if (delta != 0.0) {
                    r[i] -= sqrt_n * delta;
                    sol.xi[i] = updated;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
        }

        out.sweeps = sweep;
        if (sweep % kResidualRefresh == 0) r = y - x * sol.beta - sqrt_n * sol.xi;
        if (trace) trace->push_back(penalty_objective(r, sol.beta, sol.xi, lambda_beta, lambda_xi));
        if (max_change < tol) {
            out.settled = true;
            break;
        }
    }
    r = y - x * sol.beta - sqrt_n * sol.xi;
    return out;
}

// Feature-sign active-set refinement of a coordinate-descent iterate.
//
// The coefficients (beta, xi) are handled as one vector c over the columns of
// [X, sqrt(n) I] with per-column penalty weights. On a fixed sign pattern the
// objective is a smooth quadratic; each step either (a) moves along a null
// direction of the active columns until a coefficient reaches zero, (b)
// jumps to the face minimizer, stopping at the best sign change on the way,
// or (c) activates the zero coordinate with the largest optimality
// violation. No step increases the objective. Commits to `sol` only when the
// full optimality check passes.
class FeatureSign {
public:
    FeatureSign(const Matrix& x, const Vector& y, double lambda_beta, double lambda_xi)
        : x_(x), y_(y), lambda_beta_(lambda_beta), lambda_xi_(lambda_xi),
          p_(x.cols()), n_(x.rows()), dn_(static_cast<double>(n_)), sqrt_n_(std::sqrt(dn_)),
          width_(std::isinf(lambda_xi) ? p_ : p_ + n_) {}

    bool refine(RobustLassoSolution& sol, double kkt_tol, std::size_t max_steps) {
        Vector c(width_);
        c.head(p_) = sol.beta;
        if (width_ > p_) c.tail(n_) = sol.xi;

        for (std::size_t step = 0; step < max_steps; ++step) {
            std::vector<Eigen::Index> active;
            for (Eigen::Index j = 0; j < width_; ++j)
                if (c[j] != 0.0 || j == pending_sign_.first) active.push_back(j);
            const auto m = static_cast<Eigen::Index>(active.size());

            if (m > 0) {
                const Matrix a = columns(active);
                const Eigen::ColPivHouseholderQR<Matrix> qr(a);
                if (qr.rank() < m) {
                    if (!null_step(a, active, c)) return false;
                    continue;
                }
                if (!face_step(qr, a, active, c)) continue;  // a sign changed; re-derive the face
            }

            // On the face minimizer: check every coordinate.
            const Vector grad = gradient(c);
            double worst = 0.0;
            Eigen::Index worst_zero = -1;
            double worst_zero_violation = 0.0;
            for (Eigen::Index j = 0; j < width_; ++j) {
                const double w = weight(j);
                if (c[j] == 0.0) {
                    const double v = std::abs(grad[j]) - w;
                    worst = std::max(worst, v);
                    if (v > worst_zero_violation) {
                        worst_zero_violation = v;
                        worst_zero = j;
                    }
                } else {
                    worst = std::max(worst, std::abs(grad[j] + sign(c[j]) * w));
                }
            }
            if (worst <= kkt_tol) {
                commit(c, sol);
                return true;
            }
            if (worst_zero < 0 || worst_zero_violation <= kkt_tol) return false;
            // Activate with an infinitesimal value of the descent sign; the
            // face solve that follows sets its actual value.
            pending_sign_ = {worst_zero, -sign(grad[worst_zero])};
        }
        return false;
    }

private:
    double weight(Eigen::Index j) const { return j < p_ ? lambda_beta_ : lambda_xi_; }

    Matrix columns(const std::vector<Eigen::Index>& active) const {
        Matrix a = Matrix::Zero(n_, static_cast<Eigen::Index>(active.size()));
        for (std::size_t t = 0; t < active.size(); ++t) {
            const auto j = active[t];
            if (j < p_)
                a.col(static_cast<Eigen::Index>(t)) = x_.col(j);
            else
                a(j - p_, static_cast<Eigen::Index>(t)) = sqrt_n_;
        }
        return a;
    }

    Vector fitted(const Vector& c) const {
        Vector f = x_ * c.head(p_);
        if (width_ > p_) f += sqrt_n_ * c.tail(n_);
        return f;
    }

    // (1/n) [X, sqrt(n) I]^T (fit - y)
    Vector gradient(const Vector& c) const {
        const Vector r = fitted(c) - y_;
        Vector g(width_);
        g.head(p_) = x_.transpose() * r / dn_;
        if (width_ > p_) g.tail(n_) = r / sqrt_n_;
        return g;
    }

    double objective(const Vector& c) const {
        double value = (y_ - fitted(c)).squaredNorm() / (2.0 * dn_) + lambda_beta_ * c.head(p_).lpNorm<1>();
        if (width_ > p_) value += lambda_xi_ * c.tail(n_).lpNorm<1>();
        return value;
    }

    Vector signed_weights(const std::vector<Eigen::Index>& active, const Vector& c) const {
        Vector theta(static_cast<Eigen::Index>(active.size()));
        for (std::size_t t = 0; t < active.size(); ++t) {
            const auto j = active[t];
            double s = sign(c[j]);
            if (pending_sign_.first == j) s = pending_sign_.second;
            theta[static_cast<Eigen::Index>(t)] = s * weight(j);
        }
        return theta;
    }

    // Rank-deficient active set: along a null direction v of the active
    // columns the fit is unchanged and the penalty is linear, so move in the
    // non-increasing direction until the first coefficient hits zero.
    bool null_step(const Matrix& a, const std::vector<Eigen::Index>& active, Vector& c) {
        const Eigen::FullPivLU<Matrix> lu(a);
        const Matrix kernel = lu.kernel();
        if (kernel.cols() == 0) return false;
        Vector v = kernel.col(0);
        const Vector theta = signed_weights(active, c);
        const auto pending = std::find(active.begin(), active.end(), pending_sign_.first);
        if (pending != active.end()) {
            // The new coordinate may only leave zero in its chosen direction.
            const auto t = static_cast<Eigen::Index>(pending - active.begin());
            if (v[t] * theta[t] < 0.0) v = -v;
            if (v[t] == 0.0 && theta.dot(v) > 0.0) v = -v;
            if (theta.dot(v) > 0.0) return false;
        } else if (theta.dot(v) > 0.0) {
            v = -v;
        }
        double best_t = std::numeric_limits<double>::infinity();
        Eigen::Index hit = -1;
        for (std::size_t t = 0; t < active.size(); ++t) {
            const double ct = c[active[t]];
            const double vt = v[static_cast<Eigen::Index>(t)];
            if (ct * vt < 0.0 && -ct / vt < best_t) {
                best_t = -ct / vt;
                hit = static_cast<Eigen::Index>(t);
            }
        }
        if (hit < 0) return false;
        for (std::size_t t = 0; t < active.size(); ++t) c[active[t]] += best_t * v[static_cast<Eigen::Index>(t)];
        c[active[static_cast<std::size_t>(hit)]] = 0.0;
        pending_sign_ = {-1, 0.0};
        return true;
    }

    // Full-rank active set: minimize the face quadratic
    //   1/(2n) ||y - A c||^2 + theta^T c   =>   A^T A c = A^T y - n theta.
    // Returns true when the minimizer keeps every sign, false after stopping
    // at the best point of a sign change on the segment.
    bool face_step(const Eigen::ColPivHouseholderQR<Matrix>& qr, const Matrix& a,
                   const std::vector<Eigen::Index>& active, Vector& c) {
        const auto m = static_cast<Eigen::Index>(active.size());
        const Vector theta = signed_weights(active, c);
        const Matrix rfac = qr.matrixR().topLeftCorner(m, m).triangularView<Eigen::Upper>();
        const Vector rhs = qr.colsPermutation().transpose() * (a.transpose() * y_ - dn_ * theta);
        const Vector w = rfac.transpose().triangularView<Eigen::Lower>().solve(rhs);
        const Vector target = qr.colsPermutation() * rfac.triangularView<Eigen::Upper>().solve(w);
        pending_sign_ = {-1, 0.0};

        Vector current(m);
        for (Eigen::Index t = 0; t < m; ++t) current[t] = c[active[static_cast<std::size_t>(t)]];

        bool consistent = true;
        for (Eigen::Index t = 0; t < m; ++t)
            if (target[t] * theta[t] <= 0.0) consistent = false;
        if (consistent) {
            for (Eigen::Index t = 0; t < m; ++t) c[active[static_cast<std::size_t>(t)]] = target[t];
            return true;
        }

        // Candidates: the target itself and every zero crossing on the way.
        auto place = [&](double s, Eigen::Index zeroed) {
            Vector trial = c;
            for (Eigen::Index t = 0; t < m; ++t)
                trial[active[static_cast<std::size_t>(t)]] = current[t] + s * (target[t] - current[t]);
            if (zeroed >= 0) trial[active[static_cast<std::size_t>(zeroed)]] = 0.0;
            return trial;
        };
        Vector best = place(1.0, -1);
        double best_value = objective(best);
        for (Eigen::Index t = 0; t < m; ++t) {
            const double delta = target[t] - current[t];
            if (current[t] == 0.0 || current[t] * target[t] > 0.0 || delta == 0.0) continue;
            const double s = -current[t] / delta;
            if (s <= 0.0 || s > 1.0) continue;
            Vector trial = place(s, t);
            const double value = objective(trial);
            if (value < best_value) {
                best_value = value;
                best = std::move(trial);
            }
        }
        // Coordinates that would be exactly zero at the target drop out too.
        for (Eigen::Index j = 0; j < width_; ++j)
            if (best[j] != 0.0 && std::abs(best[j]) < 1e-300) best[j] = 0.0;
        c = std::move(best);
        return false;
    }

    void commit(const Vector& c, RobustLassoSolution& sol) const {
        sol.beta = c.head(p_);
        if (width_ > p_) sol.xi = c.tail(n_);
    }

    const Matrix& x_;
    const Vector& y_;
    double lambda_beta_;
    double lambda_xi_;
    Eigen::Index p_;
    Eigen::Index n_;
    double dn_;
    double sqrt_n_;
    Eigen::Index width_;
    std::pair<Eigen::Index, double> pending_sign_{-1, 0.0};
};

bool polish_active_set(const Matrix& x, const Vector& y, double lambda_beta, double lambda_xi, double kkt_tol,
                       RobustLassoSolution& sol, Vector& r) {
    RobustLassoSolution candidate = sol;
    FeatureSign refiner(x, y, lambda_beta, lambda_xi);
    if (!refiner.refine(candidate, kkt_tol, kPolishSteps)) return false;
    const double kkt = robust_lasso_kkt_residual(x, y, candidate.beta, candidate.xi, lambda_beta, lambda_xi);
    if (kkt > kkt_tol) return false;
    if (robust_lasso_objective(x, y, candidate.beta, candidate.xi, lambda_beta, lambda_xi) >
        robust_lasso_objective(x, y, sol.beta, sol.xi, lambda_beta, lambda_xi))
        return false;
    sol.beta = std::move(candidate.beta);
    sol.xi = std::move(candidate.xi);
    sol.kkt_residual = kkt;
    r = y - x * sol.beta - std::sqrt(static_cast<double>(y.size())) * sol.xi;
    return true;
}

RobustLassoSolution coordinate_descent(const Matrix& x, const Vector& y, const SolverConfig& cfg) {
    check_inputs(x, y);
    cfg.validate();

    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    const double dn = static_cast<double>(n);
    const bool xi_frozen = std::isinf(cfg.lambda_xi);
    const Vector col_sq = x.colwise().squaredNorm().transpose();

    RobustLassoSolution sol;
    sol.beta = Vector::Zero(p);
    sol.xi = Vector::Zero(n);
    Vector r = y;  // y - X beta - sqrt(n) xi

    // Warm starts along a geometric path from the smallest regularizers that
    // keep (0, 0) optimal down to the requested ones.
    if (cfg.continuation_steps > 0) {
        const double beta_max = (x.transpose() * y).lpNorm<Eigen::Infinity>() / dn;
        const double xi_max = y.lpNorm<Eigen::Infinity>() / std::sqrt(dn);
        const double start = std::max(beta_max / std::max(cfg.lambda_beta, 1e-300),
                                      xi_frozen ? 0.0 : xi_max / std::max(cfg.lambda_xi, 1e-300));
        if (start > 1.0) {
            const auto steps = cfg.continuation_steps;
            for (std::size_t s = 0; s < steps && sol.sweeps_used < cfg.max_sweeps; ++s) {
                const double factor = std::pow(start, 1.0 - static_cast<double>(s + 1) / static_cast<double>(steps + 1));
                const double scale = std::max({1.0, sol.beta.lpNorm<Eigen::Infinity>(), sol.xi.lpNorm<Eigen::Infinity>()});
                const auto budget = std::min<std::size_t>(kStageSweeps, cfg.max_sweeps - sol.sweeps_used);
                sol.sweeps_used += sweep_until(x, y, col_sq, cfg.lambda_beta * factor, cfg.lambda_xi * factor, budget,
                                               kStageTol * scale, sol, r, nullptr)
                                       .sweeps;
            }
        }
    }

    auto* trace = cfg.record_trace ? &sol.objective_trace : nullptr;
    while (sol.sweeps_used < cfg.max_sweeps) {
        const auto budget = std::min(kPolishInterval, cfg.max_sweeps - sol.sweeps_used);
        const auto outcome =
            sweep_until(x, y, col_sq, cfg.lambda_beta, cfg.lambda_xi, budget, cfg.tol, sol, r, trace);
        sol.sweeps_used += outcome.sweeps;
        if (outcome.settled) {
            sol.kkt_residual = robust_lasso_kkt_residual(x, y, sol.beta, sol.xi, cfg.lambda_beta, cfg.lambda_xi);
            if (sol.kkt_residual <= cfg.kkt_tol) {
                sol.converged = true;
                break;
            }
        }
        if (cfg.polish && polish_active_set(x, y, cfg.lambda_beta, cfg.lambda_xi, cfg.kkt_tol, sol, r)) {
            if (trace)
                trace->push_back(penalty_objective(r, sol.beta, sol.xi, cfg.lambda_beta, cfg.lambda_xi));
            sol.converged = true;
            break;
        }
    }

    if (!sol.converged)
        sol.kkt_residual = robust_lasso_kkt_residual(x, y, sol.beta, sol.xi, cfg.lambda_beta, cfg.lambda_xi);
    sol.objective = robust_lasso_objective(x, y, sol.beta, sol.xi, cfg.lambda_beta, cfg.lambda_xi);
    return sol;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(lambda_beta > 0.0) || std::isinf(lambda_beta))
        throw std::invalid_argument("SolverConfig: lambda_beta must be positive and finite");
    if (!(lambda_xi >= 0.0)) throw std::invalid_argument("SolverConfig: lambda_xi must be >= 0");
    if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
    if (!(kkt_tol > 0.0)) throw std::invalid_argument("SolverConfig: kkt_tol must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("SolverConfig: max_sweeps must be >= 1");
}

double robust_lasso_objective(const Matrix& x, const Vector& y, const Vector& beta, const Vector& xi,
                              double lambda_beta, double lambda_xi) {
    const double sqrt_n = std::sqrt(static_cast<double>(y.size()));
    const Vector r = y - x * beta - sqrt_n * xi;
    return penalty_objective(r, beta, xi, lambda_beta, lambda_xi);
}

double robust_lasso_kkt_residual(const Matrix& x, const Vector& y, const Vector& beta, const Vector& xi,
                                 double lambda_beta, double lambda_xi) {
    const double dn = static_cast<double>(y.size());
    const double sqrt_n = std::sqrt(dn);
    const Vector r = x * beta + sqrt_n * xi - y;
    const Vector grad = x.transpose() * r / dn;

    double worst = 0.0;
    auto check = [&worst](double coef, double g, double lambda) {
        const double v = coef == 0.0 ? std::max(std::abs(g) - lambda, 0.0) : std::abs(g + sign(coef) * lambda);
        worst = std::max(worst, v);
    };
    for (Eigen::Index j = 0; j < beta.size(); ++j) check(beta[j], grad[j], lambda_beta);
    if (std::isfinite(lambda_xi))
        for (Eigen::Index i = 0; i < xi.size(); ++i) check(xi[i], r[i] / sqrt_n, lambda_xi);
    return worst;
}

RobustLassoSolution robust_lasso(const Matrix& x, const Vector& y, const SolverConfig& cfg) {
    return coordinate_descent(x, y, cfg);
}

RobustLassoSolution robust_lasso(const ProblemInstance& instance, const SolverConfig& cfg) {
    return coordinate_descent(instance.design, instance.observation, cfg);
}

RobustLassoSolution lasso_solve(const Vector& y, const Matrix& x, double lambda, const SolverConfig& cfg) {
    SolverConfig frozen = cfg;
    frozen.lambda_beta = lambda;
    frozen.lambda_xi = std::numeric_limits<double>::infinity();
    return coordinate_descent(x, y, frozen);
}

Vector lasso(const Vector& y, const Matrix& x, double lambda, const SolverConfig& cfg) {
    return lasso_solve(y, x, lambda, cfg).beta;
}

void to_json(nlohmann::json& j, const RobustLassoSolution& s) {
    j = nlohmann::json{{"beta", vector_to_json(s.beta)},
                       {"xi", vector_to_json(s.xi)},
                       {"objective", s.objective},
                       {"sweeps_used", s.sweeps_used},
                       {"kkt_residual", s.kkt_residual},
                       {"converged", s.converged}};
    if (!s.objective_trace.empty()) j["objective_trace"] = s.objective_trace;
}

void from_json(const nlohmann::json& j, RobustLassoSolution& s) {
    s.beta = vector_from_json(j.at("beta"));
    s.xi = vector_from_json(j.at("xi"));
    s.objective = j.at("objective").get<double>();
    s.sweeps_used = j.at("sweeps_used").get<std::size_t>();
    s.kkt_residual = j.at("kkt_residual").get<double>();
    s.converged = j.at("converged").get<bool>();
    s.objective_trace = j.value("objective_trace", std::vector<double>{});
}

}  // namespace unshuffle
