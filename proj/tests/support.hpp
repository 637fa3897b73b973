#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "unshuffle/model.hpp"
#include "unshuffle/rng.hpp"

namespace testing_support {

using unshuffle::Matrix;
using unshuffle::Permutation;
using unshuffle::Rng;
using unshuffle::Vector;

inline Vector normal_vector(Rng& rng, Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

inline Matrix normal_matrix(Rng& rng, Eigen::Index n, Eigen::Index p) {
    Matrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal();
    return m;
}

// Uniform permutation by Fisher-Yates.
inline Permutation random_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(map[i - 1], map[rng.below(i)]);
    return Permutation::from_map(std::move(map));
}

// Every permutation of 0..n-1 in lexicographic order.
inline std::vector<Permutation> all_permutations(std::size_t n) {
    std::vector<std::size_t> map(n);
    std::iota(map.begin(), map.end(), std::size_t{0});
    std::vector<Permutation> out;
    do {
        out.push_back(Permutation::from_map(map));
    } while (std::next_permutation(map.begin(), map.end()));
    return out;
}

}  // namespace testing_support
