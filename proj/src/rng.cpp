#include "multicause/rng.hpp"

namespace multicause {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t state = splitmix64(root ^ 0x6A09E667F3BCC908ULL);
    for (std::uint64_t counter : path) {
        state = splitmix64(state + splitmix64(counter + 1));
    }
    return state;
}

Eigen::MatrixXd Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd out(rows, cols);
    double *data = out.data();
    for (Eigen::Index i = 0; i < out.size(); ++i) data[i] = normal();
    return out;
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index size) {
    Eigen::VectorXd out(size);
    for (Eigen::Index i = 0; i < size; ++i) out[i] = normal();
    return out;
}

}  // namespace multicause
