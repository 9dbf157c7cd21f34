#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "multicause/model.hpp"

namespace multicause {

inline constexpr double kNormalCritical95 = 1.96;

struct EstimateReport {
    std::string label;
    VectorXd coefficients;
    VectorXd std_errors;
    VectorXd ci_low;
    VectorXd ci_high;
    std::vector<Index> target_indices;  // zero-based treatment columns
};

/// Builds a report with 95% intervals coef +/- 1.96 se.
EstimateReport make_report(std::string label, VectorXd coef, VectorXd se,
                           std::vector<Index> targets);

/// CSV rows `estimator,coef_index,estimate,std_error,ci_low,ci_high`
/// (coef_index one-based). The header is written by write_report_header.
void write_report_header(std::ostream &out);
void write_report_rows(std::ostream &out, const EstimateReport &r);

// --- Least-squares cores --------------------------------------------------

struct LinearFit {
    VectorXd coef;       // slopes, one per design column
    VectorXd se;         // classical homoskedastic standard errors
    double intercept = 0.0;
    double sigma2_hat = 0.0;
    Index df = 0;
};

/// OLS with an optional unpenalized intercept (handled by centering).
/// Throws RankDeficiencyError when cond(X'X) > kRankConditionLimit.
LinearFit ols_solve(const MatrixXd &X, const VectorXd &Y, bool intercept);

/// OLS from cross products: G = X'X, Xty = X'Y, yty = Y'Y, no intercept.
/// RSS is recovered as yty - coef' Xty.
LinearFit ols_from_gram(const MatrixXd &G, const VectorXd &Xty, double yty, Index n);

/// Minimizes ||Y - b0 - Xb||^2 + lambda ||b||^2 (b0 only when intercept).
/// Standard errors come from the homoskedastic sandwich
/// s2 (G + lambda I)^-1 G (G + lambda I)^-1 with s2 = RSS / (n - p).
LinearFit ridge_solve(const MatrixXd &X, const VectorXd &Y, double lambda, bool intercept);

EstimateReport fit_ols(const MatrixXd &X, const VectorXd &Y, bool intercept,
                       std::string label = "ols");

// --- Linear-linear estimators ---------------------------------------------

/// OLS of Y on [A, Z]; the m treatment coefficients are reported.
EstimateReport oracle(const Dataset &ds, bool intercept = false);

/// OLS of Y on A.
EstimateReport naive(const Dataset &ds, bool intercept = false);

/// Ridge of Y on [A, Zhat]. lambda = 0 falls through to OLS and therefore to
/// the rank-deficiency error.
EstimateReport penalized_full(const Dataset &ds, Index k, double lambda, bool intercept = false);

/// Basis columns built from Zhat: every monomial of total degree 2..degree.
MatrixXd polynomial_monomials(const MatrixXd &Zhat, int degree);

/// sqrt(n) times the columns of Q beyond the first k, where QR = [Zhat, h(Zhat)]
/// and h collects the monomials of degree 2..degree. Orthogonal to Zhat.
MatrixXd flexible_basis(const MatrixXd &Zhat, int degree);

/// Ridge of Y on [A, Zhat, What] with What = flexible_basis(Zhat, degree).
EstimateReport flexible_penalized(const Dataset &ds, Index k, int degree, double lambda,
                                  bool intercept = false);

struct PosteriorMeanDiagnostics {
    Index accepted = 0;
    Index rejected = 0;
};

/// Averages OLS of Y on [A, z*] over posterior draws z* from the PPCA fit.
/// Rank-deficient draws are resampled; more than half rejected is an
/// InstabilityError. Standard errors combine the mean within-draw variance
/// with the between-draw variance.
EstimateReport posterior_mean_deconfounder(const Dataset &ds, Index k, Index n_draws,
                                           std::uint64_t seed,
                                           PosteriorMeanDiagnostics *diag = nullptr);

/// OLS of Y on [A, Zhat + S], S ~ N(0, psi2).
EstimateReport white_noised_deconfounder(const Dataset &ds, Index k, double psi2,
                                         std::uint64_t seed);

/// OLS of Y on [A_F, Zhat]; requires |F| + k < m.
EstimateReport subset_deconfounder(const Dataset &ds, const std::vector<Index> &focal_idx,
                                   Index k);

/// subset_deconfounder with focal set {j}, for every j in turn. Coefficient j
/// is the estimate from the j-th regression.
EstimateReport subset_each(const Dataset &ds, Index k);

// --- Cross-validated ridge -------------------------------------------------

enum class CvRule { MinError, OneStandardError };

struct CvRidgeOptions {
    Index folds = 10;
    Index grid_size = 50;
    double min_ratio = 1e-4;
    CvRule rule = CvRule::OneStandardError;
    bool center_pca = false;
};

struct CvRidgeResult {
    EstimateReport report;
    std::vector<double> lambda_grid;  // standardized-scale penalties, descending
    std::vector<double> cv_mean;
    std::vector<double> cv_se;
    Index chosen = 0;
};

/// Ridge on [A, Zhat] in the standardized parameterization
///   (1/2n) ||y - b0 - Xs b||^2 + (lambda/2) ||b||^2
/// with columns of Xs scaled to unit (1/n) variance, and lambda chosen by
/// K-fold cross-validation over a log grid from lambda_max down to
/// min_ratio * lambda_max.
CvRidgeResult pca_cv_ridge_path(const Dataset &ds, Index k, std::uint64_t seed,
                                const CvRidgeOptions &opt = {});
EstimateReport pca_cv_ridge(const Dataset &ds, Index k, std::uint64_t seed,
                            const CvRidgeOptions &opt = {});

/// Ridge in the standardized parameterization above at a fixed lambda;
/// coefficients returned on the original column scale.
LinearFit standardized_ridge(const MatrixXd &X, const VectorXd &Y, double lambda);

// --- Quadratic tutorial ----------------------------------------------------

/// deconf: Y on [A_j^2, Zhat^2]; parametric: Y on [A_j^2, (sum_j A_j)^2].
/// Both with intercept; the A_j^2 coefficients are reported.
std::pair<EstimateReport, EstimateReport> quadratic_pair(const Dataset &ds, bool center = true);

/// Y on [A_j^2] with intercept.
EstimateReport quadratic_naive(const Dataset &ds);

// --- Logistic tutorial -----------------------------------------------------

struct LogisticFit {
    VectorXd coef;  // intercept first when fitted with one
    VectorXd se;
    double deviance = 0.0;
    int iterations = 0;
};

/// Newton / IRLS for the logistic likelihood. Stops when the relative
/// deviance change drops below 1e-8; throws ConvergenceError after 100
/// iterations and SeparationError when any |eta| > 30 at convergence.
LogisticFit logistic_irls(const MatrixXd &X, const VectorXd &y, bool intercept = true);

/// naive: logit(Y) on (X1, X2). deconf: adds the first principal-component
/// score of the centered treatments (U_1 D_1) plus N(0, psi2) noise.
std::pair<EstimateReport, EstimateReport> logistic_suite(const Dataset &ds, double psi2,
                                                         std::uint64_t seed);

// --- Partialling out -------------------------------------------------------

/// Implicit M = I - W (W'W)^-1 W'.
class Annihilator {
public:
    explicit Annihilator(MatrixXd W);
    MatrixXd apply(const MatrixXd &X) const;
    Index rows() const { return W_.rows(); }

private:
    MatrixXd W_;
    Eigen::LDLT<MatrixXd> gram_;
};

/// Expansion of a control block: per-column powers 1..degree, optionally
/// preceded by a constant column.
struct Basis {
    int degree = 1;
    bool intercept = false;

    static Basis linear() { return {1, false}; }
    static Basis polynomial(int d) { return {d, true}; }
};

MatrixXd expand_basis(const MatrixXd &controls, const Basis &basis);

/// target minus its least-squares projection on the (expanded) controls.
MatrixXd fwl_residualize(const MatrixXd &target, const MatrixXd &controls,
                         const Basis &basis = Basis::linear());

/// Residualizes A_F and Y on the expanded nonfocal block, then OLS of the
/// residualized outcome on the residualized focal treatments.
EstimateReport semiparametric_naive(const Dataset &ds, const std::vector<Index> &focal_idx,
                                    const Basis &basis = Basis::linear());

}  // namespace multicause
