#include "robgasp/lhd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "robgasp/errors.hpp"

namespace robgasp {

Eigen::MatrixXd random_lhd(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
    Eigen::MatrixXd x(n, p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index l = 0; l < p; ++l) {
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, l) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + u(rng)) / static_cast<double>(n);
        }
    }
    return x;
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
            best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
        }
    }
    return std::sqrt(best);
}

DesignMatrix maximin_lhd(Eigen::Index n, Eigen::Index p, std::uint64_t seed, int n_candidates) {
    if (n < 2) throw ConfigError("maximin LHD needs at least two points");
    if (p < 1) throw ConfigError("maximin LHD needs at least one dimension");
    if (n_candidates < 1) throw ConfigError("maximin LHD needs at least one candidate");
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd best;
    double best_d = -1.0;
    for (int c = 0; c < n_candidates; ++c) {
        Eigen::MatrixXd x = random_lhd(n, p, rng);
        const double d = min_pairwise_distance(x);
        if (d > best_d) {
            best_d = d;
            best = std::move(x);
        }
    }
    return DesignMatrix(std::move(best), Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p));
}

std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t k) noexcept {
    // splitmix64 finalizer over (base, k)
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace robgasp
