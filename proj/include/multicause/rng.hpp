#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace multicause {

/// One step of the SplitMix64 output function.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a root seed and a path of
/// counters, e.g. derive_seed(root, {replication, estimator}). Each counter
/// is folded in with a SplitMix64 round, so stream (root, r) can be
/// regenerated without touching streams 0..r-1.
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path) noexcept;

/// Pseudo-random source used by every sampler in the library.
///
/// The engine is mt19937_64, whose output sequence is fixed by the C++
/// standard. Normal and uniform variates come from Boost.Random, whose
/// algorithms (unlike std::normal_distribution) are identical on every
/// platform, so a seed reproduces a dataset bit for bit everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    /// Fills a matrix with standard normals in column-major order.
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);
    Eigen::VectorXd normal_vector(Eigen::Index size);

private:
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_{0.0, 1.0};
    boost::random::uniform_01<double> uniform_;
};

}  // namespace multicause
