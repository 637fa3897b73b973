#include "unshuffle/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <omp.h>

#include "unshuffle/rng.hpp"

namespace unshuffle {

namespace {

struct TrialOutcome {
    bool perm = false;
    bool support = false;
    bool sign = false;
    std::size_t sweeps = 0;
    bool converged = false;
    double ms = 0.0;
};

TrialOutcome run_trial(const SweepSpec& spec, const SweepCell& cell, std::size_t trial) {
    const auto start = std::chrono::steady_clock::now();
    const ProblemInstance instance = generate_instance(trial_gen_spec(spec, cell, trial));
    LambdaSchedule schedule;
    schedule.mode = spec.lambda_mode;
    schedule.constant_lambda = spec.constant_lambda;
    const RecoveryResult r = recover(instance, schedule, cell.k);
    TrialOutcome out;
    out.perm = r.permutation_correct;
    out.support = r.support_correct;
    out.sign = r.sign_consistent;
    out.sweeps = r.solver_sweeps;
    out.converged = r.solver_converged;
    if (spec.record_wall_time)
        out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

SweepResult reduce(const SweepSpec& spec, const std::vector<SweepCell>& cells,
                   const std::vector<TrialOutcome>& outcomes) {
    SweepResult result;
    result.rows.reserve(cells.size());
    const double t = static_cast<double>(spec.trials);
    for (const auto& cell : cells) {
        SweepRow row;
        row.n = cell.n;
        row.p = spec.p;
        row.k = cell.k;
        row.h = cell.h;
        row.ratio = cell.ratio;
        row.trials = spec.trials;
        std::size_t perm = 0, support = 0, sign = 0, sweeps = 0;
        for (std::size_t i = 0; i < spec.trials; ++i) {
            const auto& o = outcomes[cell.index * spec.trials + i];
            perm += o.perm;
            support += o.support;
            sign += o.sign;
            sweeps += o.sweeps;
            row.nonconverged_count += !o.converged;
            row.wall_ms += o.ms;
        }
        row.perm_success_rate = static_cast<double>(perm) / t;
        row.support_success_rate = static_cast<double>(support) / t;
        row.sign_success_rate = static_cast<double>(sign) / t;
        row.mean_solver_sweeps = static_cast<double>(sweeps) / t;
        result.rows.push_back(row);
    }
    return result;
}

std::string shortest(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("failed to format a number");
    return std::string(buf, end);
}

std::string fixed(double v, int digits) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    if (ec != std::errc()) throw std::runtime_error("failed to format a number");
    return std::string(buf, end);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::vector<double> ratio_grid_from_json(const nlohmann::json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    // {"start": a, "stop": b, "step": s}, stop inclusive
    const double start = j.at("start").get<double>();
    const double stop = j.at("stop").get<double>();
    const double step = j.at("step").get<double>();
    if (!(step > 0.0)) throw std::invalid_argument("ratio_grid: step must be positive");
    std::vector<double> grid;
    for (std::size_t i = 0;; ++i) {
        const double v = start + static_cast<double>(i) * step;
        if (v > stop + 1e-9 * step) break;
        grid.push_back(v);
    }
    return grid;
}

}  // namespace

void SweepSpec::validate() const {
    if (n_list.empty() || k_list.empty() || h_list.empty() || ratio_grid.empty())
        throw std::invalid_argument("SweepSpec: n_list, k_list, h_list and ratio_grid must be non-empty");
    if (trials == 0) throw std::invalid_argument("SweepSpec: trials must be positive");
    if (p == 0) throw std::invalid_argument("SweepSpec: p must be positive");
    for (auto k : k_list)
        if (k > p) throw std::invalid_argument("SweepSpec: k = " + std::to_string(k) + " exceeds p");
    for (auto n : n_list) {
        if (n == 0) throw std::invalid_argument("SweepSpec: n must be positive");
        for (auto h : h_list)
            if (h == 1 || h > n)
                throw std::invalid_argument("SweepSpec: h = " + std::to_string(h) + " is not reachable for n = " +
                                            std::to_string(n));
    }
    for (std::size_t i = 0; i < ratio_grid.size(); ++i) {
        if (!std::isfinite(ratio_grid[i])) throw std::invalid_argument("SweepSpec: ratio_grid must be finite");
        if (i > 0 && !(ratio_grid[i] > ratio_grid[i - 1]))
            throw std::invalid_argument("SweepSpec: ratio_grid must be strictly increasing");
    }
    if (!(constant_lambda > 0.0) || !std::isfinite(constant_lambda))
        throw std::invalid_argument("SweepSpec: constant_lambda must be positive and finite");
    if (signal_law == SignalLaw::custom)
        throw std::invalid_argument("SweepSpec: the custom signal law is not available in sweeps");
}

std::vector<SweepCell> enumerate_cells(const SweepSpec& spec) {
    std::vector<SweepCell> cells;
    cells.reserve(spec.cell_count());
    for (auto n : spec.n_list)
        for (auto k : spec.k_list)
            for (auto h : spec.h_list)
                for (auto ratio : spec.ratio_grid) cells.push_back({cells.size(), n, k, h, ratio});
    return cells;
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t cell, std::size_t trial) {
    return derive_seed({base_seed, static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(trial)});
}

GenSpec trial_gen_spec(const SweepSpec& spec, const SweepCell& cell, std::size_t trial) {
    GenSpec g;
    g.n = cell.n;
    g.p = spec.p;
    g.k = cell.k;
    g.h = cell.h;
    g.design_law = spec.design_law;
    g.snr = std::pow(static_cast<double>(cell.n), cell.ratio);
    g.signal_law = spec.signal_law;
    g.noise_scale = spec.noise_scale;
    g.seed = trial_seed(spec.base_seed, cell.index, trial);
    return g;
}

SweepResult run_sweep(const SweepSpec& spec, int jobs) {
    spec.validate();
    const auto cells = enumerate_cells(spec);
    const std::size_t tasks = cells.size() * spec.trials;
    std::vector<TrialOutcome> outcomes(tasks);
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();

    // Exceptions may not leave an OpenMP region; keep the first one by task index.
    std::vector<std::exception_ptr> errors(tasks);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::size_t t = 0; t < tasks; ++t) {
        try {
            outcomes[t] = run_trial(spec, cells[t / spec.trials], t % spec.trials);
        } catch (...) {
            errors[t] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return reduce(spec, cells, outcomes);
}

SweepResult run_sweep_serial(const SweepSpec& spec) {
    spec.validate();
    const auto cells = enumerate_cells(spec);
    std::vector<TrialOutcome> outcomes(cells.size() * spec.trials);
    for (std::size_t t = 0; t < outcomes.size(); ++t)
        outcomes[t] = run_trial(spec, cells[t / spec.trials], t % spec.trials);
    return reduce(spec, cells, outcomes);
}

std::string format_csv(const SweepResult& result) {
    std::string out = "n,p,k,h,ratio,trials,perm_rate,support_rate,sign_rate,mean_sweeps,nonconverged,wall_ms\n";
    for (const auto& r : result.rows) {
        out += std::to_string(r.n) + ',' + std::to_string(r.p) + ',' + std::to_string(r.k) + ',' +
               std::to_string(r.h) + ',' + shortest(r.ratio) + ',' + std::to_string(r.trials) + ',' +
               fixed(r.perm_success_rate, 6) + ',' + fixed(r.support_success_rate, 6) + ',' +
               fixed(r.sign_success_rate, 6) + ',' + fixed(r.mean_solver_sweeps, 6) + ',' +
               std::to_string(r.nonconverged_count) + ',' + fixed(r.wall_ms, 3) + '\n';
    }
    return out;
}

void write_csv(const SweepResult& result, const std::filesystem::path& path) {
    write_file(path, format_csv(result));
}

SweepResult parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("n,p,k,h,ratio", 0) != 0)
        throw std::invalid_argument("parse_csv: missing header");
    SweepResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 12)
            throw std::invalid_argument("parse_csv: line " + std::to_string(line_no) + " has " +
                                        std::to_string(f.size()) + " fields, expected 12");
        SweepRow r;
        try {
            r.n = std::stoull(f[0]);
            r.p = std::stoull(f[1]);
            r.k = std::stoull(f[2]);
            r.h = std::stoull(f[3]);
            r.ratio = std::stod(f[4]);
            r.trials = std::stoull(f[5]);
            r.perm_success_rate = std::stod(f[6]);
            r.support_success_rate = std::stod(f[7]);
            r.sign_success_rate = std::stod(f[8]);
            r.mean_solver_sweeps = std::stod(f[9]);
            r.nonconverged_count = std::stoull(f[10]);
            r.wall_ms = std::stod(f[11]);
        } catch (const std::logic_error&) {
            throw std::invalid_argument("parse_csv: malformed number on line " + std::to_string(line_no));
        }
        result.rows.push_back(r);
    }
    return result;
}

std::string format_plotdata(const SweepResult& result) {
    // Rows of one series are contiguous because cells vary ratio fastest.
    std::string out;
    bool first = true;
    std::tuple<std::size_t, std::size_t, std::size_t> current{0, 0, 0};
    for (const auto& r : result.rows) {
        const auto key = std::make_tuple(r.n, r.k, r.h);
        if (first || key != current) {
            if (!first) out += "\n\n";
            out += "# series n=" + std::to_string(r.n) + " k=" + std::to_string(r.k) + " h=" + std::to_string(r.h) +
                   '\n';
            current = key;
            first = false;
        }
        out += shortest(r.ratio) + ' ' + fixed(r.perm_success_rate, 6) + '\n';
    }
    return out;
}

void emit_plotdata(const SweepResult& result, const std::filesystem::path& path) {
    write_file(path, format_plotdata(result));
}

std::vector<MonotonicityFlag> monotonicity_flags(const SweepResult& result) {
    std::vector<MonotonicityFlag> flags;
    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        const auto& a = result.rows[i - 1];
        const auto& b = result.rows[i];
        if (std::tie(a.n, a.k, a.h) != std::tie(b.n, b.k, b.h)) continue;
        const double r = a.perm_success_rate;
        const double band = 2.0 * std::sqrt(r * (1.0 - r) / static_cast<double>(a.trials));
        if (b.perm_success_rate < r - band)
            flags.push_back({a.n, a.k, a.h, a.ratio, b.ratio, a.perm_success_rate, b.perm_success_rate});
    }
    return flags;
}

void to_json(nlohmann::json& j, const SweepSpec& s) {
    j = nlohmann::json{{"n_list", s.n_list},
                       {"k_list", s.k_list},
                       {"h_list", s.h_list},
                       {"p", s.p},
                       {"design", to_string(s.design_law)},
                       {"ratio_grid", s.ratio_grid},
                       {"trials", s.trials},
                       {"base_seed", s.base_seed},
                       {"lambda_mode", to_string(s.lambda_mode)},
                       {"constant_lambda", s.constant_lambda},
                       {"noise_scale", to_string(s.noise_scale)},
                       {"signal_law", to_string(s.signal_law)},
                       {"record_wall_time", s.record_wall_time}};
}

void from_json(const nlohmann::json& j, SweepSpec& s) {
    // Missing keys keep their defaults.
    SweepSpec d;
    if (j.contains("n_list")) d.n_list = j.at("n_list").get<std::vector<std::size_t>>();
    if (j.contains("k_list")) d.k_list = j.at("k_list").get<std::vector<std::size_t>>();
    if (j.contains("h_list")) d.h_list = j.at("h_list").get<std::vector<std::size_t>>();
    if (j.contains("p")) d.p = j.at("p").get<std::size_t>();
    if (j.contains("design")) d.design_law = parse_design_law(j.at("design").get<std::string>());
    if (j.contains("ratio_grid")) d.ratio_grid = ratio_grid_from_json(j.at("ratio_grid"));
    if (j.contains("trials")) d.trials = j.at("trials").get<std::size_t>();
    if (j.contains("base_seed")) d.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("lambda_mode")) d.lambda_mode = parse_lambda_mode(j.at("lambda_mode").get<std::string>());
    if (j.contains("constant_lambda")) d.constant_lambda = j.at("constant_lambda").get<double>();
    if (j.contains("noise_scale")) d.noise_scale = parse_noise_scale(j.at("noise_scale").get<std::string>());
    if (j.contains("signal_law")) d.signal_law = parse_signal_law(j.at("signal_law").get<std::string>());
    if (j.contains("record_wall_time")) d.record_wall_time = j.at("record_wall_time").get<bool>();
    s = std::move(d);
}

}  // namespace unshuffle
