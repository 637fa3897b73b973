// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "support.hpp"
#include "unshuffle/bounds.hpp"
#include "unshuffle/datagen.hpp"
#include "unshuffle/harness.hpp"
#include "unshuffle/ml_oracle.hpp"
#include "unshuffle/recovery.hpp"
#include "unshuffle/solver.hpp"

using namespace unshuffle;
namespace mp = boost::multiprecision;

namespace {

// Pinned tolerances and budgets.
constexpr std::size_t kLapPairsPerN = 200;
constexpr double kLapSeconds = 5.0;
constexpr double kLapRelTol = 1e-12;  // tied entries change summation order
constexpr std::size_t kSolverInstances = 100;
constexpr double kKktTol = 1e-6;
constexpr double kTraceSlack = 1e-12;
constexpr double kSolverSeconds = 30.0;
constexpr std::size_t kMlTrials = 100;
constexpr std::size_t kMlRequired = 99;
constexpr double kMlSeconds = 60.0;
constexpr std::size_t kSweepTrials = 50;
constexpr double kPhaseHigh = 0.85;
constexpr double kPhaseLow = 0.15;
constexpr double kPhaseSparsityMargin = 0.1;
constexpr double kRowsMajority = 0.5;
constexpr std::size_t kSignTrials = 100;
constexpr std::size_t kSignRequired = 95;
constexpr double kBoundsRelTol = 1e-9;
constexpr double kBoundsSeconds = 1.0;
constexpr std::uint64_t kSeed = 20240601;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

// 1. rank matching against exhaustive search
Outcome lap_exactness() {
    const auto t0 = Clock::now();
    Rng rng(derive_seed({kSeed, 1}));
    std::size_t mismatches = 0, pairs = 0;
    for (std::size_t n = 2; n <= 7; ++n)
        for (std::size_t t = 0; t < kLapPairsPerN; ++t, ++pairs) {
            const Vector y = testing_support::normal_vector(rng, static_cast<Eigen::Index>(n));
            Vector z = testing_support::normal_vector(rng, static_cast<Eigen::Index>(n));
            if (t % 4 == 3) z[0] = z[static_cast<Eigen::Index>(n - 1)];  // some ties
            const double fast = lap_match(y, z).objective, exact = lap_bruteforce(y, z).objective;
            mismatches += std::abs(fast - exact) > kLapRelTol * std::max(1.0, std::abs(exact));
        }
    const double s = seconds_since(t0);
    return {mismatches == 0 && s < kLapSeconds,
            fmt("%zu pairs over n=2..7, %zu objective mismatches, %.2fs (limit %.0fs)", pairs, mismatches, s,
                kLapSeconds)};
}

// 2. KKT certificates, monotone traces, zero solution
Outcome solver_optimality() {
    const auto t0 = Clock::now();
    std::size_t bad_kkt = 0, bad_trace = 0, total = 0;
    double worst_kkt = 0.0;
    for (auto [n, p] : {std::pair<std::size_t, std::size_t>{60, 40}, {40, 100}})
        for (std::size_t t = 0; t < kSolverInstances; ++t, ++total) {
            GenSpec g;
            g.n = n;
            g.p = p;
            g.k = 5;
            g.h = n / 10;
            g.snr = 100.0;
            g.seed = derive_seed({kSeed, 2, n, t});
            const auto inst = generate_instance(g);
            SolverConfig c{.lambda_beta = 0.1, .lambda_xi = 0.1};
            c.kkt_tol = kKktTol;
            c.record_trace = true;
            const auto sol = robust_lasso(inst, c);
            const double kkt = robust_lasso_kkt_residual(inst.design, inst.observation, sol.beta, sol.xi, 0.1, 0.1);
            worst_kkt = std::max(worst_kkt, kkt);
            bad_kkt += !(sol.converged && kkt <= kKktTol);
            for (std::size_t s = 1; s < sol.objective_trace.size(); ++s)
                if (sol.objective_trace[s] > sol.objective_trace[s - 1] * (1.0 + kTraceSlack)) {
                    ++bad_trace;
                    break;
                }
        }

    // Zero solution at the smallest regularizers for which (0, 0) is optimal.
    Rng rng(derive_seed({kSeed, 2, 0}));
    const Matrix x = testing_support::normal_matrix(rng, 50, 30);
    const Vector y = testing_support::normal_vector(rng, 50);
    SolverConfig zc;
    zc.lambda_beta = (x.transpose() * y).cwiseAbs().maxCoeff() / 50.0;
    zc.lambda_xi = y.cwiseAbs().maxCoeff() / std::sqrt(50.0);
    const auto zero = robust_lasso(x, y, zc);
    const bool zero_ok = zero.beta == Vector::Zero(30) && zero.xi == Vector::Zero(50) && zero.converged &&
                         zero.kkt_residual <= kKktTol;

    const double s = seconds_since(t0);
    return {bad_kkt == 0 && bad_trace == 0 && zero_ok && s < kSolverSeconds,
            fmt("%zu instances, %zu not certified (worst KKT %.2e, tol %.0e), %zu non-monotone traces, "
                "zero-solution %s, %.2fs (limit %.0fs)",
                total, bad_kkt, worst_kkt, kKktTol, bad_trace, zero_ok ? "exact" : "WRONG", s, kSolverSeconds)};
}

// 3. exhaustive ML, noiseless
Outcome ml_noiseless() {
    const auto t0 = Clock::now();
    std::size_t exact = 0;
    for (std::size_t t = 0; t < kMlTrials; ++t) {
        GenSpec g;
        g.n = 6;
        g.p = 6;
        g.k = 1;
        g.h = 2;
        g.snr = std::numeric_limits<double>::infinity();
        g.seed = derive_seed({kSeed, 3, t});
        const auto inst = generate_instance(g);
        const auto est = ml_estimate(inst, 1);
        exact += est.permutation == inst.truth->permutation &&
                 est.signal.support() == inst.truth->signal.support() &&
                 (est.signal.entries() - inst.truth->signal.entries()).norm() <= 1e-9;
    }
    const double s = seconds_since(t0);
    return {exact >= kMlRequired && s < kMlSeconds,
            fmt("%zu/%zu exact (need %zu), %.2fs (limit %.0fs)", exact, kMlTrials, kMlRequired, s, kMlSeconds)};
}

SweepSpec sweep(std::size_t n, std::size_t p, std::vector<std::size_t> k, std::vector<std::size_t> h,
                std::vector<double> ratios) {
    SweepSpec s;
    s.n_list = {n};
    s.p = p;
    s.k_list = std::move(k);
    s.h_list = std::move(h);
    s.ratio_grid = std::move(ratios);
    s.trials = kSweepTrials;
    s.base_seed = kSeed;
    s.constant_lambda = 2.0;
    return s;
}

// The sweeps behind criteria 4, 5 and 8.
std::vector<SweepSpec> acceptance_sweeps() {
    return {sweep(180, 500, {5}, {20}, {3.0, 5.5, 6.0}),  // phase-transition operating points
            sweep(180, 500, {20}, {20}, {5.5}),           // sparsity degradation
            sweep(120, 600, {5}, {5, 20}, {5.0})};        // permuted-rows degradation
}

std::vector<SweepResult> first_run;

double rate_at(const SweepResult& r, std::size_t k, std::size_t h, double ratio) {
    for (const auto& row : r.rows)
        if (row.k == k && row.h == h && row.ratio == ratio) return row.perm_success_rate;
    return std::numeric_limits<double>::quiet_NaN();
}

// 4. phase transition at (n, p, h, k) = (180, 500, 20, 5)
Outcome phase_transition() {
    const auto t0 = Clock::now();
    for (const auto& s : acceptance_sweeps()) first_run.push_back(run_sweep(s));
    const double hi = rate_at(first_run[0], 5, 20, 6.0);
    const double lo = rate_at(first_run[0], 5, 20, 3.0);
    const double k5 = rate_at(first_run[0], 5, 20, 5.5);
    const double k20 = rate_at(first_run[1], 20, 20, 5.5);
    std::size_t nonconv = 0;
    for (const auto& r : {first_run[0], first_run[1]})
        for (const auto& row : r.rows) nonconv += row.nonconverged_count;
    return {hi >= kPhaseHigh && lo <= kPhaseLow && k5 >= k20 - kPhaseSparsityMargin,
            fmt("rate %.2f at ratio 6 (need >= %.2f), %.2f at ratio 3 (need <= %.2f); ratio 5.5: k=5 %.2f vs "
                "k=20 %.2f (margin %.1f); %zu trials, %zu non-converged solves, %.1fs",
                hi, kPhaseHigh, lo, kPhaseLow, k5, k20, kPhaseSparsityMargin, kSweepTrials, nonconv, seconds_since(t0))};
}

// 5. more permuted rows need more snr
Outcome permuted_rows() {
    const double h5 = rate_at(first_run[2], 5, 5, 5.0);
    const double h20 = rate_at(first_run[2], 5, 20, 5.0);
    return {h5 >= kRowsMajority && h5 >= h20,
            fmt("(120,600,k=5) ratio 5: h=5 %.2f (need >= %.2f), h=20 %.2f (need <= h=5 rate); %zu trials", h5,
                kRowsMajority, h20, kSweepTrials)};
}

// 6. sign consistency of stage two given the true permutation
Outcome support_given_permutation() {
    std::size_t consistent = 0;
    const SolverConfig cfg;
    for (std::size_t t = 0; t < kSignTrials; ++t) {
        GenSpec g;
        g.n = 180;
        g.p = 500;
        g.k = 5;
        g.h = 20;
        g.snr = std::pow(180.0, 5.5);
        g.noise_scale = NoiseScale::unit_noise;
        g.seed = derive_seed({kSeed, 6, t});
        const auto inst = generate_instance(g);
        const Vector unshuffled = apply_permutation(inst.truth->permutation.inverse(), inst.observation);
        const auto top = hard_threshold_topk(lasso(unshuffled, inst.design, 2.0, cfg), 5);
        bool same = true;
        for (std::size_t j = 0; j < 500; ++j) {
            const double a = top[j], b = inst.truth->signal[j];
            same = same && ((a > 0) - (a < 0)) == ((b > 0) - (b < 0));
        }
        consistent += same;
    }
    return {consistent >= kSignRequired,
            fmt("%zu/%zu sign-consistent (need %zu)", consistent, kSignTrials, kSignRequired)};
}

// Exact oracle for ln(n! C(p, k)) and for ln zeta.
using Big = mp::cpp_int;
using Dec = mp::cpp_dec_float_50;

Big factorial(std::size_t m) {
    Big f = 1;
    for (std::size_t i = 2; i <= m; ++i) f *= i;
    return f;
}

double ln(const Big& num, const Big& den = 1) {
    return static_cast<double>(mp::log(Dec(num)) - mp::log(Dec(den)));
}

// Returns false when the double sum has no feasible term.
bool zeta_oracle(std::size_t n, std::size_t p, std::size_t k, std::size_t d, double& out) {
    mp::cpp_rational sum = 0;
    for (std::size_t i = 1; i <= d; ++i)
        for (std::size_t j = 1; j <= std::min(d - i, k); ++j) {
            if (i > n || j > p - k) continue;
            sum += mp::cpp_rational(1, factorial(n - i) * factorial(k - j) * factorial(p - k - j) * factorial(j) *
                                           factorial(j));
        }
    if (sum == 0) return false;
    const Big kf = factorial(k), rest = factorial(p - k);
    const mp::cpp_rational zeta = mp::cpp_rational(factorial(p), kf * kf * rest * rest) / sum;
    out = ln(mp::numerator(zeta), mp::denominator(zeta));
    return true;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// 7. bounds against exact arithmetic
Outcome bounds() {
    const auto t0 = Clock::now();
    Rng rng(derive_seed({kSeed, 7}));
    double worst0 = 0.0, worst = 0.0;
    std::size_t d0 = 0, compared = 0, undefined_agree = 0, disagreements = 0;
    for (int t = 0; t < 20; ++t, ++d0) {
        const std::size_t n = 1 + rng.below(50);
        const std::size_t p = 1 + rng.below(100);
        const std::size_t k = rng.below(std::min<std::size_t>(p, 10) + 1);
        const double oracle = ln(factorial(n) * (factorial(p) / (factorial(k) * factorial(p - k))));
        worst0 = std::max(worst0, rel_err(log_zeta({n, p, k, 1.0, 0}), oracle));
    }
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 2 + rng.below(12);
        const std::size_t k = 1 + rng.below(4);
        const std::size_t p = k + 1 + rng.below(12);
        for (std::size_t d = 1; d <= 3; ++d) {
            double oracle = 0.0;
            const bool defined = zeta_oracle(n, p, k, d, oracle);
            try {
                const double got = log_zeta({n, p, k, 1.0, d});
                if (!defined) {
                    ++disagreements;
                    continue;
                }
                worst = std::max(worst, rel_err(got, oracle));
                ++compared;
            } catch (const std::domain_error&) {
                if (defined)
                    ++disagreements;
                else
                    ++undefined_agree;
            }
        }
    }
    const double s = seconds_since(t0);
    return {worst0 <= kBoundsRelTol && worst <= kBoundsRelTol && disagreements == 0 && s < kBoundsSeconds,
            fmt("D=0: %zu triples, worst rel err %.1e; D=1..3: %zu compared, worst rel err %.1e, %zu empty sums "
                "reported by both, %zu disagreements (tol %.0e); %.3fs",
                d0, worst0, compared, worst, undefined_agree, disagreements, kBoundsRelTol, s)};
}

// 8. byte-identical CSV on a second run (single-threaded this time)
Outcome determinism() {
    std::string a, b;
    const auto specs = acceptance_sweeps();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        a += format_csv(first_run[i]);
        b += format_csv(run_sweep(specs[i], 1));
    }
    return {a == b, fmt("%zu CSV bytes per run, %s", a.size(), a == b ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"LAP exactness", lap_exactness},
        {"solver optimality", solver_optimality},
        {"ML oracle, noiseless", ml_noiseless},
        {"phase transition", phase_transition},
        {"permuted-rows degradation", permuted_rows},
        {"support detection given the permutation", support_given_permutation},
        {"bounds", bounds},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
