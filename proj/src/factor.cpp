#include "multicause/factor.hpp"

#include <cmath>

#include "multicause/error.hpp"
#include "multicause/rng.hpp"

namespace multicause {

void apply_sign_convention(MatrixXd &U, MatrixXd &V) {
    for (Index j = 0; j < V.cols(); ++j) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < V.rows(); ++i) {
            double a = std::abs(V(i, j));
            // Small slack so near-ties resolve to the earliest entry on every platform.
            if (a > best * (1.0 + 1e-12)) {
                best = a;
                arg = i;
            }
        }
        if (V(arg, j) < 0.0) {
            V.col(j) = -V.col(j);
            if (U.cols() > j) U.col(j) = -U.col(j);
        }
    }
}

void thin_svd(const MatrixXd &A, MatrixXd &U, VectorXd &D, MatrixXd &V) {
    const Index n = A.rows(), m = A.cols();
    if (n >= 2 * m) {
        Eigen::HouseholderQR<MatrixXd> qr(A);
        MatrixXd R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
        Eigen::BDCSVD<MatrixXd> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
        MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, m);
        U = Q * svd.matrixU();
        D = svd.singularValues();
        V = svd.matrixV();
    } else {
        Eigen::BDCSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        U = svd.matrixU();
        D = svd.singularValues();
        V = svd.matrixV();
    }
    apply_sign_convention(U, V);
}

SubstituteConfounder pca_substitute(const MatrixXd &A, Index k, bool center) {
    const Index n = A.rows(), m = A.cols();
    if (k < 1 || k > m) throw DimensionError("pca_substitute requires 1 <= k <= m");
    if (n < m) throw DimensionError("pca_substitute requires n >= m");
    if (!A.allFinite()) throw DataError("treatment matrix has non-finite entries");

    SubstituteConfounder sc;
    if (center) {
        MatrixXd Ac = A.rowwise() - A.colwise().mean();
        thin_svd(Ac, sc.U, sc.D, sc.V);
    } else {
        thin_svd(A, sc.U, sc.D, sc.V);
    }
    const double rn = std::sqrt(static_cast<double>(n));
    sc.Zhat = rn * sc.U.leftCols(k);
    sc.theta_hat = (sc.D.head(k).asDiagonal() * sc.V.leftCols(k).transpose()) / rn;
    return sc;
}

PpcaPosterior ppca_posterior(const MatrixXd &A, const MatrixXd &theta, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
    if (A.cols() != theta.cols()) throw DimensionError("A and theta column counts differ");
    const Index k = theta.rows();
    MatrixXd M = theta * theta.transpose();
    M.diagonal().array() += sigma2;
    Eigen::LLT<MatrixXd> llt(M);
    PpcaPosterior post;
    // mean = A theta' M^-1 = (M^-1 theta A')'
    post.mean = llt.solve(theta * A.transpose()).transpose();
    post.covariance = sigma2 * llt.solve(MatrixXd::Identity(k, k));
    post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
    post.theta = theta;
    post.sigma2 = sigma2;
    return post;
}

PpcaFit ppca_mle(const MatrixXd &A, Index k, bool center) {
    const Index n = A.rows(), m = A.cols();
    if (k < 1 || k > m) throw DimensionError("ppca_mle requires 1 <= k <= m");
    if (n <= m) throw DimensionError("ppca_mle requires n > m");
    if (k == m) throw DegenerateFactorError("no trailing eigenvalues to estimate sigma2 (k = m)");

    MatrixXd S;
    if (center) {
        MatrixXd Ac = A.rowwise() - A.colwise().mean();
        S = Ac.transpose() * Ac / static_cast<double>(n);
    } else {
        S = A.transpose() * A / static_cast<double>(n);
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
    // Eigen returns ascending order; reverse to descending.
    VectorXd lam = es.eigenvalues().reverse();
    MatrixXd W = es.eigenvectors().rowwise().reverse();
    MatrixXd dummy;
    apply_sign_convention(dummy, W);

    PpcaFit fit;
    fit.sigma2 = lam.tail(m - k).mean();
    if (lam[k - 1] <= fit.sigma2)
        throw DegenerateFactorError("leading eigenvalue does not exceed the noise estimate");
    fit.theta.resize(k, m);
    for (Index j = 0; j < k; ++j)
        fit.theta.row(j) = std::sqrt(lam[j] - fit.sigma2) * W.col(j).transpose();
    return fit;
}

MatrixXd sample_posterior_confounder(const PpcaPosterior &post, std::uint64_t seed) {
    const Index n = post.mean.rows(), k = post.mean.cols();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(post.covariance);
    VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    MatrixXd root = es.eigenvectors() * ev.asDiagonal();  // root root' = covariance
    Rng rng(seed);
    MatrixXd draws = rng.normal_matrix(n, k);
    return post.mean + draws * root.transpose();
}

MatrixXd add_white_noise(const MatrixXd &Zhat, double psi2, std::uint64_t seed) {
    if (!(psi2 > 0.0) || !std::isfinite(psi2)) throw DomainError("psi2 must be positive");
    Rng rng(seed);
    return Zhat + std::sqrt(psi2) * rng.normal_matrix(Zhat.rows(), Zhat.cols());
}

}  // namespace multicause
