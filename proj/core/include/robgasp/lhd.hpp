#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "robgasp/design.hpp"

namespace robgasp {

/// Random Latin hypercube on [0,1]^p: each column is a permutation of the n strata with uniform jitter.
[[nodiscard]] Eigen::MatrixXd random_lhd(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng);

/// Smallest Euclidean distance between two rows.
[[nodiscard]] double min_pairwise_distance(const Eigen::MatrixXd& points);

/// Best of n_candidates random Latin hypercubes by minimum pairwise distance. Deterministic under seed.
[[nodiscard]] DesignMatrix maximin_lhd(Eigen::Index n, Eigen::Index p, std::uint64_t seed, int n_candidates = 50);

/// Independent stream seed for replicate k of a run seeded with base.
[[nodiscard]] std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t k) noexcept;

}  // namespace robgasp
