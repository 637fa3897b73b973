#include "unshuffle/ml_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include <omp.h>

namespace unshuffle {

namespace {

// Callers keep n <= 20.
std::size_t factorial(std::size_t n) {
    std::size_t f = 1;
    for (std::size_t i = 2; i <= n; ++i) f *= i;
    return f;
}

// All subsets of {0..p-1} with 0..k elements, by size then lexicographically.
std::vector<std::vector<Eigen::Index>> enumerate_supports(std::size_t p, std::size_t k) {
    std::vector<std::vector<Eigen::Index>> out;
    for (std::size_t size = 0; size <= k; ++size) {
        std::vector<Eigen::Index> pick(size);
        std::iota(pick.begin(), pick.end(), Eigen::Index{0});
        for (;;) {
            out.push_back(pick);
            // Advance to the next combination.
            std::size_t t = size;
            while (t > 0 && static_cast<std::size_t>(pick[t - 1]) == p - size + t - 1) --t;
            if (t == 0) break;
            ++pick[t - 1];
            for (std::size_t u = t; u < size; ++u) pick[u] = pick[u - 1] + 1;
        }
    }
    return out;
}

std::size_t count_supports(std::size_t p, std::size_t k) {
    // sum_{s<=k} C(p, s), saturating.
    std::size_t total = 0;
    double c = 1.0;
    for (std::size_t s = 0; s <= k; ++s) {
        if (s > 0) c = c * static_cast<double>(p - s + 1) / static_cast<double>(s);
        total += static_cast<std::size_t>(std::llround(std::min(c, 1e18)));
    }
    return total;
}

void check_limits(std::size_t n, std::size_t p, std::size_t k, const MlLimits& limits) {
    if (k > p) throw std::invalid_argument("ml_estimate: k = " + std::to_string(k) + " exceeds p = " + std::to_string(p));
    const auto supports = count_supports(p, k);
    if (n > limits.max_rows || p > limits.max_cols || supports > limits.max_supports)
        throw SizeLimitError("ml_estimate: instance too large for exhaustive search (n = " + std::to_string(n) +
                             " [max " + std::to_string(limits.max_rows) + "], p = " + std::to_string(p) + " [max " +
                             std::to_string(limits.max_cols) + "], supports = " + std::to_string(supports) +
                             " [max " + std::to_string(limits.max_supports) + "])");
}

// Orthonormal basis of the column span of X restricted to a support.
struct SupportBasis {
    std::vector<Eigen::Index> columns;
    Matrix q;  // n x rank
};

std::vector<SupportBasis> build_bases(const Matrix& x, std::size_t k) {
    std::vector<SupportBasis> bases;
    for (auto& cols : enumerate_supports(static_cast<std::size_t>(x.cols()), k)) {
        SupportBasis b;
        b.columns = std::move(cols);
        if (!b.columns.empty()) {
            const Matrix sub = x(Eigen::all, b.columns);
            const Eigen::ColPivHouseholderQR<Matrix> qr(sub);
            const Matrix q = qr.householderQ() * Matrix::Identity(x.rows(), qr.rank());
            b.q = q;
        } else {
            b.q = Matrix(x.rows(), 0);
        }
        bases.push_back(std::move(b));
    }
    return bases;
}

double residual_on(const SupportBasis& b, const Vector& target) {
    if (b.q.cols() == 0) return target.norm();
    return (target - b.q * (b.q.transpose() * target)).norm();
}

struct Candidate {
    double residual = std::numeric_limits<double>::infinity();
    std::size_t rank = 0;
    std::size_t support = 0;

    bool operator<(const Candidate& o) const {
        return std::tie(residual, rank, support) < std::tie(o.residual, o.rank, o.support);
    }
};

// Scans permutation ranks [begin, end) against every support.
Candidate scan_block(const Vector& y, const std::vector<SupportBasis>& bases, std::size_t begin, std::size_t end) {
    Candidate best;
    if (begin >= end) return best;
    const std::size_t n = static_cast<std::size_t>(y.size());
    auto map = permutation_from_rank(n, begin).map();
    Vector unshuffled(y.size());
    for (std::size_t rank = begin; rank < end; ++rank) {
        for (std::size_t i = 0; i < n; ++i) unshuffled[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(map[i])];
        for (std::size_t s = 0; s < bases.size(); ++s) {
            const double res = residual_on(bases[s], unshuffled);
            if (res < best.residual) best = {res, rank, s};
        }
        std::next_permutation(map.begin(), map.end());
    }
    return best;
}

MlEstimate finish(const ProblemInstance& instance, const std::vector<SupportBasis>& bases, const Candidate& best,
                  std::size_t k, Permutation permutation) {
    const auto& x = instance.design;
    MlEstimate out;
    out.permutation = std::move(permutation);
    const Vector unshuffled = apply_permutation(out.permutation.inverse(), instance.observation);
    Vector beta = Vector::Zero(x.cols());
    const auto& cols = bases[best.support].columns;
    if (!cols.empty()) {
        const Matrix sub = x(Eigen::all, cols);
        const Vector coef = sub.completeOrthogonalDecomposition().solve(unshuffled);
        for (std::size_t t = 0; t < cols.size(); ++t) beta[cols[t]] = coef[static_cast<Eigen::Index>(t)];
    }
    out.signal = SparseSignal::from_entries(std::move(beta), k);
    out.residual = best.residual;
    return out;
}

}  // namespace

double projection_residual(const Vector& y, const Matrix& basis) {
    if (basis.rows() != y.size())
        throw DimensionError("projection_residual: basis has " + std::to_string(basis.rows()) + " rows, y has " +
                             std::to_string(y.size()));
    if (basis.cols() > basis.rows())
        throw DimensionError("projection_residual: more columns than rows");
    if (!y.allFinite() || !basis.allFinite()) throw NumericError("projection_residual: non-finite input");
    if (basis.cols() == 0) return y.norm();
    const Vector coef = basis.completeOrthogonalDecomposition().solve(y);
    return (y - basis * coef).norm();
}

Permutation permutation_from_rank(std::size_t n, std::size_t rank) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    if (n > 20) throw std::invalid_argument("permutation_from_rank: n > 20 overflows the rank type");
    std::vector<std::size_t> map;
    map.reserve(n);
    std::size_t block = factorial(n);
    if (rank >= block) throw std::out_of_range("permutation_from_rank: rank out of range");
    for (std::size_t left = n; left > 0; --left) {
        block /= left;
        const std::size_t digit = rank / block;
        rank %= block;
        map.push_back(pool[digit]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digit));
    }
    return Permutation::from_map(std::move(map));
}

MlEstimate ml_estimate_serial(const ProblemInstance& instance, std::size_t k, const MlLimits& limits) {
    instance.validate();
    check_limits(instance.rows(), instance.cols(), k, limits);
    const auto bases = build_bases(instance.design, k);
    const auto best = scan_block(instance.observation, bases, 0, factorial(instance.rows()));
    return finish(instance, bases, best, k, permutation_from_rank(instance.rows(), best.rank));
}

MlEstimate ml_estimate(const ProblemInstance& instance, std::size_t k, const MlLimits& limits) {
    instance.validate();
    check_limits(instance.rows(), instance.cols(), k, limits);
    const auto bases = build_bases(instance.design, k);
    const std::size_t total = factorial(instance.rows());
    const std::size_t blocks = std::min<std::size_t>(total, 64);
    std::vector<Candidate> block_best(blocks);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t begin = total * b / blocks;
        const std::size_t end = total * (b + 1) / blocks;
        block_best[b] = scan_block(instance.observation, bases, begin, end);
    }

    const auto best = *std::min_element(block_best.begin(), block_best.end());
    return finish(instance, bases, best, k, permutation_from_rank(instance.rows(), best.rank));
}

MlEstimate best_subset(const Vector& y, const Matrix& x, std::size_t k, const MlLimits& limits) {
    if (x.rows() != y.size()) throw DimensionError("best_subset: design and observation lengths differ");
    ProblemInstance inst{x, y, std::nullopt};
    inst.validate();
    const auto n = inst.rows();
    const auto p = inst.cols();
    if (k > p) throw std::invalid_argument("best_subset: k exceeds p");
    MlLimits relaxed = limits;
    relaxed.max_rows = std::max(relaxed.max_rows, n);  // one permutation only
    check_limits(n, p, k, relaxed);
    const auto bases = build_bases(x, k);
    Candidate best;
    for (std::size_t s = 0; s < bases.size(); ++s) {
        const double res = residual_on(bases[s], y);
        if (res < best.residual) best = {res, 0, s};
    }
    return finish(inst, bases, best, k, Permutation::identity(n));
}

void to_json(nlohmann::json& j, const MlEstimate& e) {
    j = nlohmann::json{{"permutation", e.permutation}, {"signal", e.signal}, {"residual", e.residual}};
}

void from_json(const nlohmann::json& j, MlEstimate& e) {
    e.permutation = j.at("permutation").get<Permutation>();
    e.signal = j.at("signal").get<SparseSignal>();
    e.residual = j.at("residual").get<double>();
}

}  // namespace unshuffle
