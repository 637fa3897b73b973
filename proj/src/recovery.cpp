#include "unshuffle/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace unshuffle {

namespace {

std::vector<std::size_t> stable_order(const Vector& v) {
    std::vector<std::size_t> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) {
        return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)];
    });
    return order;
}

void check_same_length(const Vector& y, const Vector& z, const char* who) {
    if (y.size() != z.size())
        throw DimensionError(std::string(who) + ": lengths " + std::to_string(y.size()) + " and " +
                             std::to_string(z.size()) + " differ");
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

double assignment_objective(const Vector& y, const Vector& z, const Permutation& p) {
    check_same_length(y, z, "assignment_objective");
    if (p.size() != static_cast<std::size_t>(y.size()))
        throw DimensionError("assignment_objective: permutation length does not match vectors");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        total += y[static_cast<Eigen::Index>(p[i])] * z[static_cast<Eigen::Index>(i)];
    return total;
}

AssignmentSolution lap_match(const Vector& y, const Vector& z) {
    check_same_length(y, z, "lap_match");
    const std::size_t n = static_cast<std::size_t>(y.size());
    const auto yv = [&y](std::size_t i) { return y[static_cast<Eigen::Index>(i)]; };
    const auto zv = [&z](std::size_t i) { return z[static_cast<Eigen::Index>(i)]; };

    const auto z_order = stable_order(z);
    const auto y_order = stable_order(y);

    // Blocks of tied z values in rank order. Rank matching hands block
    // [first, last) the multiset of y values at the same ranks; any
    // assignment inside a block that respects that multiset is optimal.
    struct Block {
        std::vector<std::size_t> sources;  // ascending index
        std::map<double, std::size_t> values;
    };
    std::vector<Block> blocks;
    for (std::size_t first = 0; first < n;) {
        std::size_t last = first + 1;
        while (last < n && zv(z_order[last]) == zv(z_order[first])) ++last;
        Block b;
        for (std::size_t r = first; r < last; ++r) {
            b.sources.push_back(z_order[r]);
            ++b.values[yv(y_order[r])];
        }
        std::sort(b.sources.begin(), b.sources.end());
        blocks.push_back(std::move(b));
        first = last;
    }

    std::vector<std::size_t> map(n, n);
    std::vector<bool> claimed(n, false);

    // Fixed points first.
    for (auto& b : blocks) {
        for (auto i : b.sources) {
            auto it = b.values.find(yv(i));
            if (it == b.values.end() || it->second == 0) continue;
            --it->second;
            map[i] = i;
            claimed[i] = true;
        }
    }

    // Unclaimed target rows grouped by their y value, ascending index.
    std::map<double, std::vector<std::size_t>> free_rows;
    for (std::size_t j = n; j-- > 0;)
        if (!claimed[j]) free_rows[yv(j)].push_back(j);

    for (auto& b : blocks) {
        auto value = b.values.begin();
        for (auto i : b.sources) {
            if (map[i] != n) continue;
            while (value->second == 0) ++value;
            --value->second;
            auto& rows = free_rows[value->first];
            map[i] = rows.back();
            rows.pop_back();
        }
    }

    AssignmentSolution out;
    out.permutation = Permutation::from_map(std::move(map));
    out.objective = assignment_objective(y, z, out.permutation);
    return out;
}

AssignmentSolution lap_bruteforce(const Vector& y, const Vector& z) {
    check_same_length(y, z, "lap_bruteforce");
    const std::size_t n = static_cast<std::size_t>(y.size());
    if (n > 9) throw SizeLimitError("lap_bruteforce: n = " + std::to_string(n) + " exceeds 9 (n! enumeration)");

    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    AssignmentSolution best{Permutation::identity(n), -std::numeric_limits<double>::infinity()};
    do {
        auto candidate = Permutation::from_map(map);
        const double obj = assignment_objective(y, z, candidate);
        if (obj > best.objective) best = {std::move(candidate), obj};
    } while (std::next_permutation(map.begin(), map.end()));
    if (n == 0) best.objective = 0.0;
    return best;
}

SparseSignal hard_threshold_topk(const Vector& v, std::size_t k) {
    const std::size_t p = static_cast<std::size_t>(v.size());
    if (k > p)
        throw std::invalid_argument("hard_threshold_topk: k = " + std::to_string(k) + " exceeds length " +
                                    std::to_string(p));
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) {
        return std::abs(v[static_cast<Eigen::Index>(a)]) > std::abs(v[static_cast<Eigen::Index>(b)]);
    });
    Vector kept = Vector::Zero(v.size());
    for (std::size_t t = 0; t < k; ++t) kept[static_cast<Eigen::Index>(order[t])] = v[static_cast<Eigen::Index>(order[t])];
    return SparseSignal::from_entries(std::move(kept), k);
}

LambdaMode parse_lambda_mode(const std::string& s) {
    if (s == "theory") return LambdaMode::theory;
    if (s == "constant") return LambdaMode::constant;
    throw std::invalid_argument("unknown lambda mode '" + s + "' (expected theory or constant)");
}

std::string to_string(LambdaMode mode) { return mode == LambdaMode::theory ? "theory" : "constant"; }

SolverConfig LambdaSchedule::stage_one(std::size_t n, std::size_t p, double sigma) const {
    SolverConfig cfg;
    cfg.max_sweeps = max_sweeps;
    cfg.tol = tol;
    cfg.kkt_tol = kkt_tol;
    if (mode == LambdaMode::constant) {
        cfg.lambda_beta = constant_lambda;
        cfg.lambda_xi = constant_lambda;
        return cfg;
    }
    if (!(sigma >= 0.0)) throw std::invalid_argument("theory lambda schedule needs a known noise level");
    const double dn = static_cast<double>(n);
    cfg.lambda_beta = c_beta * sigma * std::sqrt(std::log(static_cast<double>(p)) / dn);
    cfg.lambda_xi = c_xi * sigma * std::sqrt(std::log(dn) / dn);
    return cfg;
}

double LambdaSchedule::stage_two_lambda(std::size_t n, std::size_t p, double sigma) const {
    if (mode == LambdaMode::constant) return constant_lambda;
    if (!(sigma >= 0.0)) throw std::invalid_argument("theory lambda schedule needs a known noise level");
    return c_lasso * sigma * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

RecoveryResult recover(const ProblemInstance& instance, const SolverConfig& stage_one, double lambda_lasso,
                       std::size_t k) {
    instance.validate();
    if (k > instance.cols()) throw std::invalid_argument("recover: k exceeds the signal length");

    const auto stage1 = robust_lasso(instance, stage_one);
    const Vector fitted = instance.design * stage1.beta;
    auto assignment = lap_match(instance.observation, fitted);

    const Vector unshuffled = apply_permutation(assignment.permutation.inverse(), instance.observation);
    const Vector beta_lasso = lasso(unshuffled, instance.design, lambda_lasso, stage_one);

    RecoveryResult result;
    result.permutation = std::move(assignment.permutation);
    result.signal_estimate = hard_threshold_topk(beta_lasso, k);
    result.solver_sweeps = stage1.sweeps_used;
    result.solver_converged = stage1.converged;

    if (instance.truth) {
        const auto& truth = *instance.truth;
        result.truth_available = true;
        result.hamming_to_truth = hamming_distance(result.permutation, truth.permutation);
        result.permutation_correct = result.hamming_to_truth == 0;
        result.support_correct = result.signal_estimate.support() == truth.signal.support();
        bool signs = result.support_correct;
        for (std::size_t j = 0; signs && j < truth.signal.length(); ++j)
            signs = sign(result.signal_estimate[j]) == sign(truth.signal[j]);
        result.sign_consistent = signs;
    }
    return result;
}

RecoveryResult recover(const ProblemInstance& instance, const LambdaSchedule& schedule, std::size_t k) {
    double sigma = -1.0;
    if (schedule.mode == LambdaMode::theory) {
        if (!instance.truth)
            throw std::invalid_argument("recover: theory lambda mode needs the noise level from instance truth; "
                                        "use constant mode for instances without truth");
        sigma = instance.truth->noise_sigma;
    }
    const auto n = instance.rows();
    const auto p = instance.cols();
    return recover(instance, schedule.stage_one(n, p, sigma), schedule.stage_two_lambda(n, p, sigma), k);
}

}  // namespace unshuffle
