#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>

#include "support.hpp"
#include "unshuffle/datagen.hpp"
#include "unshuffle/errors.hpp"
#include "unshuffle/ml_oracle.hpp"

using namespace unshuffle;
using testing_support::all_permutations;
using testing_support::normal_matrix;
using testing_support::normal_vector;
using testing_support::random_permutation;

namespace {

ProblemInstance tiny(std::size_t n, std::size_t p, std::size_t k, std::size_t h, double snr, std::uint64_t seed) {
    GenSpec g;
    g.n = n;
    g.p = p;
    g.k = k;
    g.h = h;
    g.snr = snr;
    g.seed = seed;
    return generate_instance(g);
}

// Residual through the normal equations, an independent route from the
// orthogonal factorization used by the library.
double normal_equation_residual(const Vector& y, const Matrix& b) {
    const Vector coef = (b.transpose() * b).ldlt().solve(b.transpose() * y);
    return (y - b * coef).norm();
}

// Best subset by direct enumeration of all supports of size <= k.
double best_subset_by_enumeration(const Vector& y, const Matrix& x, std::size_t k) {
    const auto p = static_cast<std::size_t>(x.cols());
    double best = y.norm();
    for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) > k) continue;
        std::vector<Eigen::Index> cols;
        for (std::size_t j = 0; j < p; ++j)
            if (mask >> j & 1u) cols.push_back(static_cast<Eigen::Index>(j));
        best = std::min(best, normal_equation_residual(y, x(Eigen::all, cols)));
    }
    return best;
}

}  // namespace

TEST(ProjectionResidual, InSpanIsZero) {
    Rng rng(1);
    const Matrix b = normal_matrix(rng, 8, 3);
    const Vector y = b * normal_vector(rng, 3);
    EXPECT_LE(projection_residual(y, b), 1e-10 * y.norm());
}

TEST(ProjectionResidual, OrthogonalColumn) {
    Vector b = Vector::Zero(4);
    b[0] = 1.0;
    Vector y(4);
    y << 0, 3, -4, 0;
    EXPECT_DOUBLE_EQ(projection_residual(y, b), 5.0);
}

TEST(ProjectionResidual, MatchesNormalEquations) {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng.below(10));
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
        const Matrix b = normal_matrix(rng, n, m);
        const Vector y = normal_vector(rng, n);
        const double oracle = normal_equation_residual(y, b);
        EXPECT_NEAR(projection_residual(y, b), oracle, 1e-8 * oracle);
    }
}

TEST(ProjectionResidual, RankDeficientBasis) {
    Rng rng(3);
    Matrix b = normal_matrix(rng, 6, 3);
    b.col(2) = 2.0 * b.col(0) - b.col(1);
    const Vector y = normal_vector(rng, 6);
    EXPECT_NEAR(projection_residual(y, b), normal_equation_residual(y, b.leftCols(2)), 1e-10);
}

TEST(ProjectionResidual, Errors) {
    EXPECT_THROW(projection_residual(Vector::Ones(3), Matrix::Ones(3, 4)), DimensionError);
    EXPECT_THROW(projection_residual(Vector::Ones(3), Matrix::Ones(4, 1)), DimensionError);
    Vector y = Vector::Ones(3);
    y[0] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(projection_residual(y, Matrix::Ones(3, 1)), NumericError);
}

TEST(Rank, LexicographicOrder) {
    const auto perms = all_permutations(5);
    for (std::size_t r = 0; r < perms.size(); ++r) EXPECT_EQ(permutation_from_rank(5, r), perms[r]);
    EXPECT_THROW(permutation_from_rank(3, 6), std::out_of_range);
    EXPECT_THROW(permutation_from_rank(21, 0), std::invalid_argument);
}

TEST(Ml, NoiselessExactRecovery) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = tiny(6, 6, 1, 2, std::numeric_limits<double>::infinity(), seed);
        const auto est = ml_estimate(inst, 1);
        EXPECT_EQ(est.permutation, inst.truth->permutation);
        EXPECT_EQ(est.signal.support(), inst.truth->signal.support());
        EXPECT_LE((est.signal.entries() - inst.truth->signal.entries()).norm(), 1e-9);
        EXPECT_LE(est.residual, 1e-9);
    }
}

TEST(Ml, ZeroObservation) {
    auto inst = tiny(5, 4, 2, 0, 10.0, 1);
    inst.observation.setZero();
    inst.truth.reset();
    const auto est = ml_estimate(inst, 2);
    EXPECT_TRUE(est.permutation.is_identity());
    EXPECT_TRUE(est.signal.support().empty());
    EXPECT_EQ(est.residual, 0.0);
}

TEST(Ml, NoisyHighSnrRecoversPermutation) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = tiny(6, 6, 1, 2, std::pow(6.0, 8.0), 500 + seed);
        hits += ml_estimate(inst, 1).permutation == inst.truth->permutation;
    }
    EXPECT_GE(hits, 95);
}

TEST(Ml, NeverWorseThanTruth) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto inst = tiny(5, 6, 2, 3, 20.0, seed);
        const auto est = ml_estimate(inst, 2);
        const Vector fit = apply_permutation(inst.truth->permutation, inst.design * inst.truth->signal.entries());
        EXPECT_LE(est.residual, (inst.observation - fit).norm() + 1e-12);
        const Vector own = apply_permutation(est.permutation, inst.design * est.signal.entries());
        EXPECT_NEAR((inst.observation - own).norm(), est.residual, 1e-10);
    }
}

TEST(Ml, IdentityRestrictionIsBestSubset) {
    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        const Matrix x = normal_matrix(rng, 10, 7);
        const Vector y = normal_vector(rng, 10);
        for (std::size_t k : {0u, 1u, 2u, 3u}) {
            const auto est = best_subset(y, x, k);
            const double oracle = best_subset_by_enumeration(y, x, k);
            EXPECT_NEAR(est.residual, oracle, 1e-10 * (1.0 + oracle));
            EXPECT_TRUE(est.permutation.is_identity());
            EXPECT_LE(est.signal.support().size(), k);
        }
    }
}

TEST(Ml, ResidualInvariantUnderRelabeling) {
    Rng rng(5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = tiny(5, 5, 2, 2, 15.0, seed);
        const auto q = random_permutation(rng, 5);
        ProblemInstance moved{apply_permutation_rows(q, inst.design), apply_permutation(q, inst.observation),
                              std::nullopt};
        EXPECT_NEAR(ml_estimate(inst, 2).residual, ml_estimate(moved, 2).residual, 1e-10);
    }
}

TEST(Ml, ParallelMatchesSerial) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto inst = tiny(6, 5, 2, 4, 10.0, seed);
        const auto a = ml_estimate(inst, 2);
        const auto b = ml_estimate_serial(inst, 2);
        EXPECT_EQ(a.permutation, b.permutation);
        EXPECT_EQ(a.signal, b.signal);
        EXPECT_EQ(a.residual, b.residual);
    }
}

TEST(Ml, RefusesLargeInstances) {
    const auto big = tiny(9, 5, 1, 0, 10.0, 1);
    try {
        ml_estimate(big, 1);
        FAIL() << "expected SizeLimitError";
    } catch (const SizeLimitError& e) {
        EXPECT_NE(std::string(e.what()).find("n = 9"), std::string::npos);
    }
    EXPECT_THROW(ml_estimate(tiny(6, 13, 1, 0, 10.0, 1), 1), SizeLimitError);
    EXPECT_THROW(ml_estimate(tiny(6, 6, 1, 0, 10.0, 1), 7), std::invalid_argument);
}

TEST(Ml, WithinTimeBudgetAtCaps) {
    // n = 8, p = 12, k = 2: 8! * 79 candidate fits.
    const auto inst = tiny(8, 12, 2, 3, 100.0, 3);
    const auto t0 = std::chrono::steady_clock::now();
    ml_estimate(inst, 2);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
}

TEST(Json, EstimateRoundTrip) {
    const auto inst = tiny(5, 5, 1, 2, 50.0, 2);
    const auto est = ml_estimate(inst, 1);
    const auto back = nlohmann::json::parse(nlohmann::json(est).dump()).get<MlEstimate>();
    EXPECT_EQ(back.permutation, est.permutation);
    EXPECT_EQ(back.signal, est.signal);
    EXPECT_EQ(back.residual, est.residual);
}
