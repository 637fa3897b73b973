// unshuffle: command-line front end.
//
//   unshuffle generate --n 180 --p 500 --k 5 --h 20 --snr-ratio 6 --seed 1 --out inst.json
//   unshuffle recover --in inst.json --k 5 --out result.json
//   unshuffle sweep --config sweep.json --csv out.csv --plotdata out.dat --jobs 4

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "unshuffle/bounds.hpp"
#include "unshuffle/datagen.hpp"
#include "unshuffle/harness.hpp"
#include "unshuffle/ml_oracle.hpp"
#include "unshuffle/recovery.hpp"
#include "unshuffle/solver.hpp"

using namespace unshuffle;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_json(const std::string& path, const json& j) {
    const std::string text = j.dump(2) + "\n";
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out.flush()) throw std::runtime_error("write to '" + path + "' failed");
}

ProblemInstance read_instance(const std::string& path) {
    auto inst = read_json(path).get<ProblemInstance>();
    inst.validate();
    return inst;
}

double parse_snr(const std::string& s) {
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad snr '" + s + "'");
    return v;
}

int resolve_jobs(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("UNSHUFFLE_JOBS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (const std::exception&) {
        }
        throw std::invalid_argument(std::string("UNSHUFFLE_JOBS must be a positive integer, got '") + env + "'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse recovery under unknown label permutation"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Sample a shuffled sparse-regression instance");
    gen->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
    GenSpec gs;
    double snr_ratio = 5.0;
    std::string design = "gauss", noise_scale = "unit-noise", signal_law = "rademacher", gen_out = "-";
    gen->add_option("--n", gs.n, "rows")->required();
    gen->add_option("--p", gs.p, "columns")->required();
    gen->add_option("--k", gs.k, "nonzeros")->required();
    gen->add_option("--h", gs.h, "rows moved by the permutation")->required();
    gen->add_option("--snr-ratio", snr_ratio, "log(snr) / log(n)")->required();
    gen->add_option("--design", design, "gauss | unif")->capture_default_str();
    gen->add_option("--noise-scale", noise_scale, "unit-noise | unit-signal")->capture_default_str();
    gen->add_option("--signal-law", signal_law, "rademacher | unit")->capture_default_str();
    gen->add_option("--seed", gs.seed, "RNG seed")->required();
    gen->add_option("--out", gen_out, "output file, - for stdout")->capture_default_str();

    // solve
    auto* solve = app.add_subcommand("solve", "Robust Lasso on an instance");
    std::string solve_in, solve_out = "-";
    SolverConfig sc;
    solve->add_option("--in", solve_in)->required();
    solve->add_option("--lambda-beta", sc.lambda_beta)->capture_default_str();
    solve->add_option("--lambda-xi", sc.lambda_xi)->capture_default_str();
    solve->add_option("--tol", sc.tol)->capture_default_str();
    solve->add_option("--max-sweeps", sc.max_sweeps)->capture_default_str();
    solve->add_option("--out", solve_out)->capture_default_str();

    // recover
    auto* rec = app.add_subcommand("recover", "Two-stage permutation and support recovery");
    std::string rec_in, rec_out = "-", lambda_mode = "constant";
    std::size_t rec_k = 0;
    LambdaSchedule schedule;
    rec->add_option("--in", rec_in)->required();
    rec->add_option("--k", rec_k)->required();
    rec->add_option("--lambda-mode", lambda_mode, "theory | constant")->capture_default_str();
    rec->add_option("--lambda", schedule.constant_lambda, "value in constant mode")->capture_default_str();
    rec->add_option("--out", rec_out)->capture_default_str();

    // ml
    auto* ml = app.add_subcommand("ml", "Exhaustive maximum-likelihood estimate (tiny instances)");
    std::string ml_in, ml_out = "-";
    std::size_t ml_k = 0;
    ml->add_option("--in", ml_in)->required();
    ml->add_option("--k", ml_k)->required();
    ml->add_option("--out", ml_out)->capture_default_str();

    // bounds
    auto* bnd = app.add_subcommand("bounds", "Information-theoretic thresholds");
    BoundQuery q;
    std::string snr_text = "0";
    bnd->add_option("--n", q.n)->required();
    bnd->add_option("--p", q.p)->required();
    bnd->add_option("--k", q.k)->required();
    bnd->add_option("--snr", snr_text, "snr, or inf")->required();
    bnd->add_option("--D", q.distortion, "distortion budget")->capture_default_str();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo phase-transition sweep");
    std::string config, csv, plotdata;
    int jobs = 0;
    bool timing = false;
    sweep->add_option("--config", config, "serialized SweepSpec")->required();
    sweep->add_option("--csv", csv)->required();
    sweep->add_option("--plotdata", plotdata);
    sweep->add_option("--jobs", jobs, "threads (default: UNSHUFFLE_JOBS, else OpenMP default)");
    sweep->add_flag("--timing", timing, "record per-cell wall time (output no longer reproducible)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            gs.design_law = parse_design_law(design);
            gs.noise_scale = parse_noise_scale(noise_scale);
            gs.signal_law = parse_signal_law(signal_law);
            gs.snr = std::pow(static_cast<double>(gs.n), snr_ratio);
            write_json(gen_out, generate_instance(gs));
        } else if (*solve) {
            const auto inst = read_instance(solve_in);
            write_json(solve_out, robust_lasso(inst, sc));
        } else if (*rec) {
            schedule.mode = parse_lambda_mode(lambda_mode);
            const auto inst = read_instance(rec_in);
            write_json(rec_out, recover(inst, schedule, rec_k));
        } else if (*ml) {
            const auto inst = read_instance(ml_in);
            write_json(ml_out, ml_estimate(inst, ml_k));
        } else if (*bnd) {
            q.snr = parse_snr(snr_text);
            q.validate();
            const auto rc = rate_capacity(q);
            std::printf("n=%zu p=%zu k=%zu snr=%.6g D=%zu\n", q.n, q.p, q.k, q.snr, q.distortion);
            try {
                std::printf("ln_zeta %.12g\n", log_zeta(q));
                std::printf("approx_recovery_infeasible %s\n", approx_recovery_infeasible(q) ? "true" : "false");
            } catch (const std::domain_error& e) {
                std::printf("ln_zeta undefined (%s)\n", e.what());
                std::printf("approx_recovery_infeasible undefined\n");
            }
            std::printf("rate %.12g\ncapacity %.12g\n", rc.rate, rc.capacity);
            std::printf("rate_below_capacity %s\n", rc.rate < rc.capacity ? "true" : "false");
            std::printf("exact_recovery_infeasible %s\n", exact_recovery_infeasible(q) ? "true" : "false");
            if (const auto t = exact_recovery_snr_threshold(q.n, q.p, q.k))
                std::printf("exact_recovery_snr_threshold %.12g\n", *t);
            else
                std::printf("exact_recovery_snr_threshold none\n");
        } else if (*sweep) {
            auto spec = read_json(config).get<SweepSpec>();
            if (timing) spec.record_wall_time = true;
            const auto result = run_sweep(spec, resolve_jobs(jobs));
            write_csv(result, csv);
            if (!plotdata.empty()) emit_plotdata(result, plotdata);
            for (const auto& f : monotonicity_flags(result))
                std::fprintf(stderr, "note: rate drops %.3f -> %.3f between ratio %g and %g (n=%zu k=%zu h=%zu)\n",
                             f.from_rate, f.to_rate, f.from_ratio, f.to_ratio, f.n, f.k, f.h);
        }
    } catch (const SizeLimitError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
