#pragma once

#include <vector>

#include <Eigen/Dense>

namespace multicause {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Eigendecompositions of theta' theta (m x m) and theta theta' (k x k),
/// eigenvalues descending, vectors under the factor-module sign convention.
struct EigenStructure {
    MatrixXd Q;       // m x m
    VectorXd Lambda;  // m
    MatrixXd R;       // k x k
    VectorXd LambdaK; // k, eigenvalues of theta theta'
};

EigenStructure eigen_structure(const MatrixXd &theta);

/// plim of naive OLS minus beta: (theta' theta + sigma2 I)^-1 theta' gamma.
VectorXd naive_bias(const MatrixXd &theta, const VectorXd &gamma, double sigma2);

/// Focal block of the naive bias written through the nonfocal projection
/// Omega = theta_N (theta_N' theta_N + sigma2 I)^-1 theta_N'.
VectorXd naive_focal_bias(const MatrixXd &theta_F, const MatrixXd &theta_N,
                          const VectorXd &gamma, double sigma2);

/// Bias of ridge on [A, Zhat]. lambda_over_n = 0 gives the sublinear-penalty
/// limit; a positive value keeps the O(lambda/n) shrinkage terms, which is
/// what a finite-sample run with lambda = sqrt(n) actually targets.
VectorXd penalized_bias(const MatrixXd &theta, const VectorXd &beta, const VectorXd &gamma,
                        double sigma2, double lambda_over_n = 0.0);

VectorXd posterior_mean_bias(const MatrixXd &theta, const VectorXd &gamma, double sigma2);

/// {theta'[I - (s/p)(theta theta')^-1]theta + (s/p)(1 + p) I}^-1 theta' gamma
/// with s = sigma2, p = psi2.
VectorXd white_noised_bias(const MatrixXd &theta, const VectorXd &gamma, double sigma2,
                           double psi2);

/// Large-m form [theta' theta + (s/p)(1 + p) I]^-1 theta' gamma.
VectorXd white_noised_bias_limit(const MatrixXd &theta, const VectorXd &gamma, double sigma2,
                                 double psi2);

/// Focal bias of the subset deconfounder:
///   -[I - theta_F'(theta theta')^-1 theta_F]^-1 theta_F'(theta theta')^-1 theta_N beta_N,
/// with theta = [theta_F, theta_N]. sigma2 only takes part in validation.
VectorXd subset_bias(const MatrixXd &theta_F, const MatrixXd &theta_N, const VectorXd &beta_N,
                     double sigma2);

/// plim theta_hat' theta_hat = theta' R L^-1/2 (L + sigma2 I) L^-1/2 R' theta.
MatrixXd theta_hat_gram(const MatrixXd &theta, double sigma2);

/// sigma2 [I - theta'(theta theta')^-1 theta].
MatrixXd residual_dependence(const MatrixXd &theta, double sigma2);

/// theta (theta' theta + sigma2 I)^-1 theta', evaluated as
/// theta theta' (theta theta' + sigma2 I)^-1.
MatrixXd woodbury_projection(const MatrixXd &theta, double sigma2);

/// sigma2 / (diag(theta theta') + sigma2).
VectorXd pinpointing_variance(const MatrixXd &theta, double sigma2);

/// Columns of theta (or entries of a vector) at the given indices.
MatrixXd select_columns(const MatrixXd &x, const std::vector<Index> &idx);
VectorXd select_entries(const VectorXd &x, const std::vector<Index> &idx);
std::vector<Index> complement_indices(Index m, const std::vector<Index> &idx);

}  // namespace multicause
