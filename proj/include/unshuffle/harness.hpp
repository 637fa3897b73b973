#pragma once

// Monte Carlo phase-transition sweeps over (n, k, h, log snr / log n).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "unshuffle/datagen.hpp"
#include "unshuffle/recovery.hpp"

namespace unshuffle {

struct SweepSpec {
    std::vector<std::size_t> n_list{180};
    std::vector<std::size_t> k_list{5};
    std::vector<std::size_t> h_list{20};
    std::size_t p = 500;
    DesignLaw design_law = DesignLaw::standard_normal;
    /// Values of log(snr) / log(n); snr = n^ratio. Strictly increasing.
    std::vector<double> ratio_grid{3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0};
    std::size_t trials = 50;
    std::uint64_t base_seed = 20220101;
    LambdaMode lambda_mode = LambdaMode::constant;
    double constant_lambda = 2.0;
    /// Constant regularizers are in units of the noise level, so sweeps fix
    /// sigma = 1 and put the snr into ||beta||^2.
    NoiseScale noise_scale = NoiseScale::unit_noise;
    SignalLaw signal_law = SignalLaw::rademacher_scaled;
    /// Wall-clock time per cell. Off by default so repeated runs produce
    /// byte-identical output.
    bool record_wall_time = false;

    void validate() const;
    std::size_t cell_count() const { return n_list.size() * k_list.size() * h_list.size() * ratio_grid.size(); }
};

struct SweepRow {
    std::size_t n = 0, p = 0, k = 0, h = 0;
    double ratio = 0.0;
    std::size_t trials = 0;
    double perm_success_rate = 0.0;
    double support_success_rate = 0.0;
    double sign_success_rate = 0.0;
    double mean_solver_sweeps = 0.0;
    std::size_t nonconverged_count = 0;
    double wall_ms = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// One grid cell, in the order rows are produced: n, then k, then h, then ratio.
struct SweepCell {
    std::size_t index = 0;
    std::size_t n = 0, k = 0, h = 0;
    double ratio = 0.0;
};

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec);

/// Seed of trial t in cell c: a splitmix hash of (base_seed, c, t).
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t cell, std::size_t trial);

/// Instance generator settings for one trial.
GenSpec trial_gen_spec(const SweepSpec& spec, const SweepCell& cell, std::size_t trial);

/// Runs every (cell, trial) pair with OpenMP on `jobs` threads (0 = OpenMP
/// default). Trial outcomes are stored by index and reduced serially, so the
/// result does not depend on the thread count or scheduling.
SweepResult run_sweep(const SweepSpec& spec, int jobs = 0);

/// Single-threaded reference with identical output.
SweepResult run_sweep_serial(const SweepSpec& spec);

/// Header n,p,k,h,ratio,trials,perm_rate,support_rate,sign_rate,mean_sweeps,nonconverged,wall_ms
/// and one row per cell; rates with six decimals, LF line endings. Throws
/// std::runtime_error naming the path on I/O failure.
void write_csv(const SweepResult& result, const std::filesystem::path& path);
std::string format_csv(const SweepResult& result);

/// Parses the format written by format_csv.
SweepResult parse_csv(const std::string& text);

/// gnuplot data: one block per (n, k, h) series headed by
/// "# series n=.. k=.. h=..", rows "ratio perm_rate", blocks separated by
/// two blank lines (addressable with gnuplot's `index`).
void emit_plotdata(const SweepResult& result, const std::filesystem::path& path);
std::string format_plotdata(const SweepResult& result);

/// Series whose rate drops by more than 2 sqrt(r (1 - r) / trials) between
/// adjacent ratios. Informational; a sweep never fails because of these.
struct MonotonicityFlag {
    std::size_t n = 0, k = 0, h = 0;
    double from_ratio = 0.0, to_ratio = 0.0;
    double from_rate = 0.0, to_rate = 0.0;
};

std::vector<MonotonicityFlag> monotonicity_flags(const SweepResult& result);

void to_json(nlohmann::json& j, const SweepSpec& s);
void from_json(const nlohmann::json& j, SweepSpec& s);

}  // namespace unshuffle
