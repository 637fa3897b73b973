#include "unshuffle/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace unshuffle {

using nlohmann::json;

Permutation Permutation::identity(std::size_t n) {
    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    return Permutation(std::move(map));
}

Permutation Permutation::from_map(std::vector<std::size_t> map) {
    std::vector<bool> seen(map.size(), false);
    for (auto dest : map) {
        if (dest >= map.size() || seen[dest])
            throw std::invalid_argument("permutation map is not a bijection on [0, " +
                                        std::to_string(map.size()) + ")");
        seen[dest] = true;
    }
    return Permutation(std::move(map));
}

Permutation Permutation::inverse() const {
    std::vector<std::size_t> inv(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = i;
    return Permutation(std::move(inv));
}

bool Permutation::is_identity() const noexcept {
    for (std::size_t i = 0; i < map_.size(); ++i)
        if (map_[i] != i) return false;
    return true;
}

std::size_t hamming_distance(const Permutation& a, const Permutation& b) {
    if (a.size() != b.size())
        throw DimensionError("hamming_distance: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " differ");
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

Vector apply_permutation(const Permutation& p, const Vector& v) {
    if (static_cast<std::size_t>(v.size()) != p.size())
        throw DimensionError("apply_permutation: permutation of size " + std::to_string(p.size()) +
                             " applied to vector of size " + std::to_string(v.size()));
    Vector out(v.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        out[static_cast<Eigen::Index>(p[i])] = v[static_cast<Eigen::Index>(i)];
    return out;
}

Matrix apply_permutation_rows(const Permutation& p, const Matrix& m) {
    if (static_cast<std::size_t>(m.rows()) != p.size())
        throw DimensionError("apply_permutation_rows: permutation of size " + std::to_string(p.size()) +
                             " applied to matrix with " + std::to_string(m.rows()) + " rows");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < p.size(); ++i)
        out.row(static_cast<Eigen::Index>(p[i])) = m.row(static_cast<Eigen::Index>(i));
    return out;
}

SparseSignal SparseSignal::from_entries(Vector entries, std::optional<std::size_t> sparsity_bound) {
    SparseSignal s;
    for (Eigen::Index j = 0; j < entries.size(); ++j) {
        if (!std::isfinite(entries[j])) throw NumericError("sparse signal has a non-finite entry");
        if (entries[j] != 0.0) s.support_.push_back(static_cast<std::size_t>(j));
    }
    s.bound_ = sparsity_bound.value_or(static_cast<std::size_t>(entries.size()));
    if (s.support_.size() > s.bound_)
        throw std::invalid_argument("sparse signal has " + std::to_string(s.support_.size()) +
                                    " nonzeros, bound is " + std::to_string(s.bound_));
    // Normalize -0.0 so that equality and serialization see a single zero.
    for (Eigen::Index j = 0; j < entries.size(); ++j)
        if (entries[j] == 0.0) entries[j] = 0.0;
    s.entries_ = std::move(entries);
    return s;
}

SparseSignal SparseSignal::zeros(std::size_t length) {
    return from_entries(Vector::Zero(static_cast<Eigen::Index>(length)), 0);
}

double GroundTruth::snr() const {
    const double energy = signal.entries().squaredNorm();
    if (noise_sigma == 0.0) return std::numeric_limits<double>::infinity();
    return energy / (noise_sigma * noise_sigma);
}

void ProblemInstance::validate() const {
    if (design.rows() != observation.size())
        throw DimensionError("instance: design has " + std::to_string(design.rows()) +
                             " rows but observation has " + std::to_string(observation.size()));
    if (design.rows() < 1 || design.cols() < 1) throw DimensionError("instance: empty design");
    if (!design.allFinite() || !observation.allFinite())
        throw NumericError("instance: non-finite design or observation");
    if (truth) {
        if (truth->permutation.size() != rows())
            throw DimensionError("instance: truth permutation has wrong length");
        if (truth->signal.length() != cols())
            throw DimensionError("instance: truth signal has wrong length");
        if (!(truth->noise_sigma >= 0.0) || !std::isfinite(truth->noise_sigma))
            throw std::invalid_argument("instance: noise sigma must be finite and >= 0");
    }
}

json vector_to_json(const Vector& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Matrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != p)
            throw DimensionError("matrix rows have unequal lengths");
        for (Eigen::Index c = 0; c < p; ++c) m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
    return m;
}

void to_json(json& j, const Permutation& p) { j = json{{"map", p.map()}}; }

void from_json(const json& j, Permutation& p) {
    p = Permutation::from_map(j.at("map").get<std::vector<std::size_t>>());
}

void to_json(json& j, const SparseSignal& s) {
    j = json{{"length", s.length()},
             {"entries", vector_to_json(s.entries())},
             {"support", s.support()},
             {"sparsity_bound", s.sparsity_bound()}};
}

void from_json(const json& j, SparseSignal& s) {
    Vector entries = vector_from_json(j.at("entries"));
    if (static_cast<std::size_t>(entries.size()) != j.at("length").get<std::size_t>())
        throw DimensionError("sparse signal: length does not match entries");
    s = SparseSignal::from_entries(std::move(entries), j.at("sparsity_bound").get<std::size_t>());
    if (j.contains("support") && j.at("support").get<std::vector<std::size_t>>() != s.support())
        throw std::invalid_argument("sparse signal: support does not match nonzero entries");
}

void to_json(json& j, const GroundTruth& t) {
    j = json{{"permutation", t.permutation}, {"signal", t.signal}, {"noise_sigma", t.noise_sigma}};
}

void from_json(const json& j, GroundTruth& t) {
    t.permutation = j.at("permutation").get<Permutation>();
    t.signal = j.at("signal").get<SparseSignal>();
    t.noise_sigma = j.at("noise_sigma").get<double>();
}

void to_json(json& j, const ProblemInstance& inst) {
    j = json{{"design", matrix_to_json(inst.design)},
             {"observation", vector_to_json(inst.observation)},
             {"truth", inst.truth ? json(*inst.truth) : json(nullptr)}};
}

void from_json(const json& j, ProblemInstance& inst) {
    inst.design = matrix_from_json(j.at("design"));
    inst.observation = vector_from_json(j.at("observation"));
    if (j.contains("truth") && !j.at("truth").is_null())
        inst.truth = j.at("truth").get<GroundTruth>();
    else
        inst.truth.reset();
    inst.validate();
}

void to_json(json& j, const RecoveryResult& r) {
    j = json{{"permutation", r.permutation},
             {"signal_estimate", r.signal_estimate},
             {"truth_available", r.truth_available},
             {"permutation_correct", r.permutation_correct},
             {"support_correct", r.support_correct},
             {"sign_consistent", r.sign_consistent},
             {"hamming_to_truth", r.hamming_to_truth},
             {"solver_sweeps", r.solver_sweeps},
             {"solver_converged", r.solver_converged}};
}

void from_json(const json& j, RecoveryResult& r) {
    r.permutation = j.at("permutation").get<Permutation>();
    r.signal_estimate = j.at("signal_estimate").get<SparseSignal>();
    r.truth_available = j.at("truth_available").get<bool>();
    r.permutation_correct = j.at("permutation_correct").get<bool>();
    r.support_correct = j.at("support_correct").get<bool>();
    r.sign_consistent = j.at("sign_consistent").get<bool>();
    r.hamming_to_truth = j.value("hamming_to_truth", std::size_t{0});
    r.solver_sweeps = j.value("solver_sweeps", std::size_t{0});
    r.solver_converged = j.value("solver_converged", false);
}

}  // namespace unshuffle
