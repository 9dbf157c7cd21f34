#pragma once

// Reference computations written independently of the library: population
// least-squares coefficients from second moments, pseudoinverses by Jacobi
// SVD, and plain loops where the library uses cross products.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd pinv(const MatrixXd &X) {
    Eigen::JacobiSVD<MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VectorXd s = svd.singularValues();
    const double tol = 1e-12 * (s.size() ? s[0] : 0.0);
    for (Index i = 0; i < s.size(); ++i) s[i] = s[i] > tol ? 1.0 / s[i] : 0.0;
    return svd.matrixV() * s.asDiagonal() * svd.matrixU().transpose();
}

/// Least squares through the pseudoinverse (no intercept).
inline VectorXd lstsq(const MatrixXd &X, const VectorXd &y) { return pinv(X) * y; }

/// Population second moment of A under the linear-linear model.
inline MatrixXd sigma_A(const MatrixXd &theta, double sigma2) {
    return theta.transpose() * theta + sigma2 * MatrixXd::Identity(theta.cols(), theta.cols());
}

/// The population substitute confounder is a linear map of A:
/// Zhat = A * zhat_map(theta, sigma2), with unit second moment per column.
/// Built from the right singular vectors of theta, so it shares nothing with
/// the library's eigen routine.
inline MatrixXd zhat_map(const MatrixXd &theta, double sigma2) {
    const Index k = theta.rows();
    Eigen::JacobiSVD<MatrixXd> svd(theta, Eigen::ComputeFullV);
    MatrixXd out = svd.matrixV().leftCols(k);
    for (Index j = 0; j < k; ++j) {
        const double s = svd.singularValues()[j];
        out.col(j) /= std::sqrt(s * s + sigma2);
    }
    return out;
}

/// Population coefficient of Y on the regressors A*T, with an optional ridge
/// term lam (the per-observation penalty lambda / n).
inline VectorXd population_coef(const MatrixXd &theta, const VectorXd &beta, const VectorXd &gamma,
                                double sigma2, const MatrixXd &T, double lam = 0.0) {
    const MatrixXd S = sigma_A(theta, sigma2);
    MatrixXd C = T.transpose() * S * T;
    C.diagonal().array() += lam;
    const VectorXd r = T.transpose() * (S * beta + theta.transpose() * gamma);
    return pinv(C) * r;
}

inline std::vector<Index> complement(Index m, const std::vector<Index> &F) {
    std::vector<Index> out;
    for (Index j = 0; j < m; ++j) {
        bool in = false;
        for (Index f : F) in = in || f == j;
        if (!in) out.push_back(j);
    }
    return out;
}

/// Coefficient of y on column j of X after partialling out the other
/// columns, computed by explicit residualization.
inline double partial_coef(const MatrixXd &X, const VectorXd &y, Index j) {
    MatrixXd others(X.rows(), X.cols() - 1);
    Index c = 0;
    for (Index i = 0; i < X.cols(); ++i)
        if (i != j) others.col(c++) = X.col(i);
    const VectorXd xr = X.col(j) - others * lstsq(others, X.col(j));
    const VectorXd yr = y - others * lstsq(others, y);
    return xr.dot(yr) / xr.dot(xr);
}

inline double mean(const std::vector<double> &v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double> &v) {
    const double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace oracles
