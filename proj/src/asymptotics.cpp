#include "multicause/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "multicause/error.hpp"
#include "multicause/factor.hpp"

namespace multicause {

namespace {

void require_positive(double sigma2, const char *what) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw DomainError(std::string(what) + " must be positive");
}

// LDLT of theta theta' with a conditioning check.
Eigen::LDLT<MatrixXd> factor_gram_k(const MatrixXd &theta) {
    MatrixXd G = theta * theta.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kRankConditionLimit)
        throw RankDeficiencyError("theta theta' is singular");
    return Eigen::LDLT<MatrixXd>(G);
}

// Symmetric eigendecomposition, descending, with the sign convention.
void sorted_eigen(const MatrixXd &S, MatrixXd &vecs, VectorXd &vals) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    vals = es.eigenvalues().reverse();
    vecs = es.eigenvectors().rowwise().reverse();
    MatrixXd none;
    apply_sign_convention(none, vecs);
}

}  // namespace

EigenStructure eigen_structure(const MatrixXd &theta) {
    if (!theta.allFinite()) throw DataError("theta has non-finite entries");
    EigenStructure es;
    sorted_eigen(theta.transpose() * theta, es.Q, es.Lambda);
    sorted_eigen(theta * theta.transpose(), es.R, es.LambdaK);
    return es;
}

VectorXd naive_bias(const MatrixXd &theta, const VectorXd &gamma, double sigma2) {
    require_positive(sigma2, "sigma2");
    MatrixXd M = theta.transpose() * theta;
    M.diagonal().array() += sigma2;
    return M.ldlt().solve(theta.transpose() * gamma);
}

VectorXd naive_focal_bias(const MatrixXd &theta_F, const MatrixXd &theta_N,
                          const VectorXd &gamma, double sigma2) {
    require_positive(sigma2, "sigma2");
    MatrixXd Omega = MatrixXd::Zero(theta_F.rows(), theta_F.rows());
    if (theta_N.cols() > 0) {
        MatrixXd N = theta_N.transpose() * theta_N;
        N.diagonal().array() += sigma2;
        Omega = theta_N * N.ldlt().solve(theta_N.transpose());
    }
    MatrixXd bracket = theta_F.transpose() * theta_F - theta_F.transpose() * Omega * theta_F;
    bracket.diagonal().array() += sigma2;
    Eigen::LDLT<MatrixXd> ldlt(bracket);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
        throw RankDeficiencyError("focal bracket is singular");
    MatrixXd I = MatrixXd::Identity(theta_F.rows(), theta_F.rows());
    VectorXd rhs = theta_F.transpose() * (I - Omega) * gamma;
    return ldlt.solve(rhs);
}

VectorXd penalized_bias(const MatrixXd &theta, const VectorXd &beta, const VectorXd &gamma,
                        double sigma2, double lambda_over_n) {
    require_positive(sigma2, "sigma2");
    if (lambda_over_n < 0.0) throw DomainError("lambda must be nonnegative");
    const Index k = theta.rows(), m = theta.cols();
    auto gram = factor_gram_k(theta);
    EigenStructure es = eigen_structure(theta);
    const MatrixXd Qk = es.Q.leftCols(k);
    const MatrixXd Qrest = es.Q.rightCols(m - k);
    const double l = lambda_over_n;

    VectorXd shrink(k), ovb(k);
    for (Index j = 0; j < k; ++j) {
        double denom = sigma2 + l + es.Lambda[j] + 1.0;
        shrink[j] = (l + 1.0) / denom;
        ovb[j] = es.Lambda[j] / denom;
    }
    VectorXd proj_gamma = theta.transpose() * gram.solve(gamma);
    VectorXd bias = -Qk * shrink.asDiagonal() * (Qk.transpose() * beta) +
                    Qk * ovb.asDiagonal() * (Qk.transpose() * proj_gamma);
    if (l > 0.0 && m > k) bias -= (l / (sigma2 + l)) * (Qrest * (Qrest.transpose() * beta));
    return bias;
}

VectorXd posterior_mean_bias(const MatrixXd &theta, const VectorXd &gamma, double sigma2) {
    return naive_bias(theta, gamma, sigma2);
}

VectorXd white_noised_bias(const MatrixXd &theta, const VectorXd &gamma, double sigma2,
                           double psi2) {
    require_positive(sigma2, "sigma2");
    require_positive(psi2, "psi2");
    const Index k = theta.rows();
    auto gram = factor_gram_k(theta);
    const double r = sigma2 / psi2;
    MatrixXd inner = MatrixXd::Identity(k, k) - r * gram.solve(MatrixXd::Identity(k, k));
    MatrixXd M = theta.transpose() * inner * theta;
    M.diagonal().array() += r * (1.0 + psi2);
    M = 0.5 * (M + M.transpose()).eval();
    return M.ldlt().solve(theta.transpose() * gamma);
}

VectorXd white_noised_bias_limit(const MatrixXd &theta, const VectorXd &gamma, double sigma2,
                                 double psi2) {
    require_positive(sigma2, "sigma2");
    require_positive(psi2, "psi2");
    MatrixXd M = theta.transpose() * theta;
    M.diagonal().array() += (sigma2 / psi2) * (1.0 + psi2);
    return M.ldlt().solve(theta.transpose() * gamma);
}

VectorXd subset_bias(const MatrixXd &theta_F, const MatrixXd &theta_N, const VectorXd &beta_N,
                     double sigma2) {
    require_positive(sigma2, "sigma2");
    if (theta_F.rows() != theta_N.rows()) throw DimensionError("theta blocks differ in k");
    if (beta_N.size() != theta_N.cols()) throw DimensionError("beta_N length mismatch");
    const Index k = theta_F.rows(), mF = theta_F.cols(), mN = theta_N.cols();
    MatrixXd theta(k, mF + mN);
    theta << theta_F, theta_N;
    auto gram = factor_gram_k(theta);

    MatrixXd bracket = MatrixXd::Identity(mF, mF) - theta_F.transpose() * gram.solve(theta_F);
    bracket = 0.5 * (bracket + bracket.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(bracket, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-12))
        throw DegenerateFactorError("focal bracket is singular");
    VectorXd rhs = theta_F.transpose() * gram.solve(theta_N * beta_N);
    return -bracket.ldlt().solve(rhs);
}

MatrixXd theta_hat_gram(const MatrixXd &theta, double sigma2) {
    if (!(sigma2 >= 0.0)) throw DomainError("sigma2 must be nonnegative");
    const Index k = theta.rows();
    EigenStructure es = eigen_structure(theta);
    if (!(es.LambdaK[k - 1] > 0.0) || es.LambdaK[0] / es.LambdaK[k - 1] > kRankConditionLimit)
        throw RankDeficiencyError("theta theta' is singular");
    VectorXd scale(k);
    for (Index j = 0; j < k; ++j) scale[j] = (es.LambdaK[j] + sigma2) / es.LambdaK[j];
    MatrixXd B = es.R.transpose() * theta;  // k x m
    return B.transpose() * scale.asDiagonal() * B;
}

MatrixXd residual_dependence(const MatrixXd &theta, double sigma2) {
    const Index m = theta.cols();
    auto gram = factor_gram_k(theta);
    MatrixXd P = theta.transpose() * gram.solve(theta);
    MatrixXd out = sigma2 * (MatrixXd::Identity(m, m) - P);
    return 0.5 * (out + out.transpose());
}

MatrixXd woodbury_projection(const MatrixXd &theta, double sigma2) {
    require_positive(sigma2, "sigma2");
    MatrixXd G = theta * theta.transpose();
    MatrixXd M = G;
    M.diagonal().array() += sigma2;
    // G M^-1 = (M^-1 G)' since both are symmetric.
    MatrixXd out = M.ldlt().solve(G).transpose();
    return 0.5 * (out + out.transpose());
}

VectorXd pinpointing_variance(const MatrixXd &theta, double sigma2) {
    require_positive(sigma2, "sigma2");
    VectorXd d = theta.rowwise().squaredNorm();
    return (sigma2 / (d.array() + sigma2)).matrix();
}

MatrixXd select_columns(const MatrixXd &x, const std::vector<Index> &idx) {
    MatrixXd out(x.rows(), static_cast<Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] < 0 || idx[j] >= x.cols()) throw DimensionError("column index out of range");
        out.col(static_cast<Index>(j)) = x.col(idx[j]);
    }
    return out;
}

VectorXd select_entries(const VectorXd &x, const std::vector<Index> &idx) {
    VectorXd out(static_cast<Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] < 0 || idx[j] >= x.size()) throw DimensionError("entry index out of range");
        out[static_cast<Index>(j)] = x[idx[j]];
    }
    return out;
}

std::vector<Index> complement_indices(Index m, const std::vector<Index> &idx) {
    std::vector<bool> taken(static_cast<size_t>(m), false);
    for (Index j : idx) {
        if (j < 0 || j >= m) throw DimensionError("index out of range");
        taken[static_cast<size_t>(j)] = true;
    }
    std::vector<Index> out;
    for (Index j = 0; j < m; ++j)
        if (!taken[static_cast<size_t>(j)]) out.push_back(j);
    return out;
}

}  // namespace multicause
