#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace multicause {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thin SVD A = U diag(D) V' together with the first k components
/// Zhat = sqrt(n) U_{1:k} and theta_hat = D_{1:k} V_{1:k}' / sqrt(n).
struct SubstituteConfounder {
    MatrixXd Zhat;       // n x k
    MatrixXd theta_hat;  // k x m
    MatrixXd U;          // n x m
    VectorXd D;          // m, descending
    MatrixXd V;          // m x m
};

/// Each right singular vector is flipped so its largest-magnitude entry is
/// positive (first such entry on ties); the matching left vector follows.
/// With center = true the column means of A are removed before the SVD.
SubstituteConfounder pca_substitute(const MatrixXd &A, Index k, bool center = false);

/// Thin SVD with the sign convention above. Tall inputs go through a
/// Householder QR first and the SVD is taken of the small R factor.
void thin_svd(const MatrixXd &A, MatrixXd &U, VectorXd &D, MatrixXd &V);

/// Flips columns of V (and the same columns of U, if nonempty) so that the
/// largest-magnitude entry of each V column is positive.
void apply_sign_convention(MatrixXd &U, MatrixXd &V);

struct PpcaPosterior {
    MatrixXd mean;        // n x k
    MatrixXd covariance;  // k x k, shared by every row
    MatrixXd theta;       // k x m
    double sigma2 = 1.0;
};

/// Z | A ~ N(A theta' (theta theta' + sigma2 I)^-1, sigma2 (theta theta' + sigma2 I)^-1).
PpcaPosterior ppca_posterior(const MatrixXd &A, const MatrixXd &theta, double sigma2);

struct PpcaFit {
    MatrixXd theta;  // k x m
    double sigma2 = 0.0;
};

/// Closed-form maximum likelihood for probabilistic PCA, using the
/// second-moment matrix A'A / n (column means removed when center = true).
PpcaFit ppca_mle(const MatrixXd &A, Index k, bool center = false);

/// One draw per row from the posterior: mean row plus N(0, covariance).
MatrixXd sample_posterior_confounder(const PpcaPosterior &post, std::uint64_t seed);

/// Zhat + S with S having i.i.d. N(0, psi2) entries.
MatrixXd add_white_noise(const MatrixXd &Zhat, double psi2, std::uint64_t seed);

}  // namespace multicause
