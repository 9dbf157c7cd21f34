#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "multicause/asymptotics.hpp"
#include "multicause/error.hpp"
#include "multicause/estimators.hpp"
#include "multicause/factor.hpp"
#include "multicause/model.hpp"
#include "multicause/rng.hpp"
#include "oracles.hpp"

using namespace multicause;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DgpSpec spec_k1_m5() {
    DgpSpec s;
    s.k = 1;
    s.m = 5;
    s.theta = MatrixXd(1, 5);
    s.theta << 1.0, 0.8, 0.6, 0.4, -0.5;
    s.beta = VectorXd(5);
    s.beta << 0.5, -0.3, 0.2, 0.1, 0.0;
    s.gamma = VectorXd::Constant(1, 1.0);
    s.sigma2 = 1.0;
    s.omega2 = 1.0;
    return s;
}

MatrixXd with_ones(const MatrixXd &X) {
    MatrixXd out(X.rows(), X.cols() + 1);
    out << VectorXd::Ones(X.rows()), X;
    return out;
}

}  // namespace

TEST_CASE("OLS cores agree with the pseudoinverse", "[estimators]") {
    Rng rng(1);
    MatrixXd X = rng.normal_matrix(200, 4);
    VectorXd y = X * Eigen::Vector4d(1, -2, 0.5, 0) + rng.normal_vector(200) + VectorXd::Constant(200, 3.0);

    LinearFit f = ols_solve(X, y, false);
    REQUIRE((f.coef - oracles::lstsq(X, y)).cwiseAbs().maxCoeff() < 1e-10);
    const VectorXd res = y - X * f.coef;
    const double s2 = res.squaredNorm() / 196.0;
    REQUIRE_THAT(f.sigma2_hat, WithinRel(s2, 1e-10));
    const VectorXd se = (s2 * oracles::pinv(X.transpose() * X).diagonal()).cwiseSqrt();
    REQUIRE((f.se - se).cwiseAbs().maxCoeff() < 1e-10);

    LinearFit fi = ols_solve(X, y, true);
    VectorXd full = oracles::lstsq(with_ones(X), y);
    REQUIRE_THAT(fi.intercept, WithinAbs(full[0], 1e-10));
    REQUIRE((fi.coef - full.tail(4)).cwiseAbs().maxCoeff() < 1e-10);

    LinearFit fg = ols_from_gram(X.transpose() * X, X.transpose() * y, y.squaredNorm(), 200);
    REQUIRE((fg.coef - f.coef).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((fg.se - f.se).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("ridge solves the penalized normal equations", "[estimators]") {
    Rng rng(2);
    MatrixXd X = rng.normal_matrix(150, 3);
    VectorXd y = X * Eigen::Vector3d(1, 2, -1) + rng.normal_vector(150) + VectorXd::Constant(150, 2.0);
    const double lambda = 7.5;

    LinearFit r = ridge_solve(X, y, lambda, false);
    VectorXd b = (X.transpose() * X + lambda * MatrixXd::Identity(3, 3)).ldlt().solve(X.transpose() * y);
    REQUIRE((r.coef - b).cwiseAbs().maxCoeff() < 1e-10);

    // With an intercept only the slopes are penalized: center and solve.
    LinearFit ri = ridge_solve(X, y, lambda, true);
    MatrixXd Xc = X.rowwise() - X.colwise().mean();
    VectorXd yc = y.array() - y.mean();
    VectorXd bc = (Xc.transpose() * Xc + lambda * MatrixXd::Identity(3, 3)).ldlt().solve(Xc.transpose() * yc);
    REQUIRE((ri.coef - bc).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE_THAT(ri.intercept, WithinAbs(y.mean() - X.colwise().mean().dot(bc), 1e-10));

    REQUIRE((ridge_solve(X, y, 0.0, false).coef - ols_solve(X, y, false).coef).cwiseAbs().maxCoeff() == 0.0);

    // Standardized parameterization: (1/2n)||yc - Xs b||^2 + (lambda/2)||b||^2.
    const double l2 = 0.3;
    LinearFit s = standardized_ridge(X, y, l2);
    Eigen::RowVectorXd sd = (Xc.colwise().squaredNorm() / 150.0).cwiseSqrt();
    MatrixXd Xs = Xc.array().rowwise() / sd.array();
    VectorXd bs = (Xs.transpose() * Xs / 150.0 + l2 * MatrixXd::Identity(3, 3))
                      .ldlt()
                      .solve(Xs.transpose() * yc / 150.0);
    REQUIRE((s.coef - (bs.array() / sd.transpose().array()).matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("naive and oracle regressions", "[estimators]") {
    DgpSpec s = spec_k1_m5();
    Dataset ds = sample_linear_linear(s, 400, 3);
    auto nv = naive(ds);
    REQUIRE(nv.label == "naive");
    REQUIRE((nv.coefficients - oracles::lstsq(ds.A, ds.Y)).cwiseAbs().maxCoeff() < 1e-10);
    for (Index j = 0; j < 5; ++j)
        REQUIRE_THAT(nv.coefficients[j], WithinAbs(oracles::partial_coef(ds.A, ds.Y, j), 1e-8));
    REQUIRE((nv.ci_high - nv.coefficients - 1.96 * nv.std_errors).cwiseAbs().maxCoeff() < 1e-14);

    auto orc = oracle(ds);
    MatrixXd AZ(400, 6);
    AZ << ds.A, ds.Z;
    REQUIRE((orc.coefficients - oracles::lstsq(AZ, ds.Y).head(5)).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(orc.coefficients.size() == 5);
}

TEST_CASE("the unpenalized full deconfounder is rank deficient", "[estimators][property]") {
    DgpSpec s = spec_k1_m5();
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Dataset ds = sample_linear_linear(s, 300, seed);
        auto sc = pca_substitute(ds.A, 1);
        MatrixXd X(300, 6);
        X << ds.A, sc.Zhat;
        REQUIRE_THROWS_AS(fit_ols(X, ds.Y, false), RankDeficiencyError);
        REQUIRE_THROWS_AS(penalized_full(ds, 1, 0.0), RankDeficiencyError);
    }
}

TEST_CASE("subset deconfounder obeys the partialling-out identity", "[estimators]") {
    DgpSpec s = spec_k1_m5();
    Dataset ds = sample_linear_linear(s, 500, 4);
    auto sc = pca_substitute(ds.A, 1);
    std::vector<Index> F{0, 2};
    auto sub = subset_deconfounder(ds, F, 1);
    MatrixXd X(500, 3);
    X << ds.A.col(0), ds.A.col(2), sc.Zhat;
    REQUIRE_THAT(sub.coefficients[0], WithinAbs(oracles::partial_coef(X, ds.Y, 0), 1e-8));
    REQUIRE_THAT(sub.coefficients[1], WithinAbs(oracles::partial_coef(X, ds.Y, 1), 1e-8));
    REQUIRE(sub.target_indices == F);

    auto each = subset_each(ds, 1);
    for (Index j = 0; j < 5; ++j) {
        auto one = subset_deconfounder(ds, {j}, 1);
        REQUIRE_THAT(each.coefficients[j], WithinAbs(one.coefficients[0], 1e-9));
        REQUIRE_THAT(each.std_errors[j], WithinRel(one.std_errors[0], 1e-6));
    }
    REQUIRE_THROWS_AS(subset_deconfounder(ds, {0, 1, 2, 3}, 1), CollinearityRiskError);
}

TEST_CASE("flexible basis is orthogonal to Zhat and unit scaled", "[estimators]") {
    Rng rng(5);
    MatrixXd A = rng.normal_matrix(400, 4);
    auto sc = pca_substitute(A, 2);
    MatrixXd mono = polynomial_monomials(sc.Zhat, 3);
    // degree 2: z1^2, z1 z2, z2^2; degree 3: four more
    REQUIRE(mono.cols() == 7);
    MatrixXd W = flexible_basis(sc.Zhat, 3);
    REQUIRE(W.cols() == 7);
    REQUIRE((sc.Zhat.transpose() * W).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE((W.transpose() * W / 400.0 - MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("flexible deconfounder absorbs a quadratic confounder effect", "[estimators][mc]") {
    // Y depends on Z^2 as well as Z. The squared term is uncorrelated with
    // the treatments, so both estimators share the linear bias, and the
    // flexible fit removes the extra outcome variance.
    const Index n = 2000, reps = 150, m = 5;
    MatrixXd theta(1, m);
    theta << 1.0, 0.8, 0.6, 0.4, 0.2;
    VectorXd beta(m);
    beta << 0.5, -0.3, 0.2, 0.1, 0.0;
    std::vector<std::vector<double>> ep(m), ef(m);
    for (Index r = 0; r < reps; ++r) {
        Rng rng(derive_seed(99, {std::uint64_t(r)}));
        Dataset ds;
        ds.Z = rng.normal_matrix(n, 1);
        ds.A = ds.Z * theta + rng.normal_matrix(n, m);
        ds.Y = ds.A * beta + ds.Z.col(0) + 3.0 * (ds.Z.col(0).array().square() - 1.0).matrix() +
               0.5 * rng.normal_vector(n);
        const double lambda = std::sqrt(double(n));
        auto p = penalized_full(ds, 1, lambda, true);
        auto f = flexible_penalized(ds, 1, 2, lambda, true);
        for (Index j = 0; j < m; ++j) {
            ep[size_t(j)].push_back(p.coefficients[j] - beta[j]);
            ef[size_t(j)].push_back(f.coefficients[j] - beta[j]);
        }
    }
    double mse_p = 0.0, mse_f = 0.0;
    for (Index j = 0; j < m; ++j) {
        std::vector<double> diff;
        for (Index r = 0; r < reps; ++r) {
            diff.push_back(ep[size_t(j)][size_t(r)] - ef[size_t(j)][size_t(r)]);
            mse_p += ep[size_t(j)][size_t(r)] * ep[size_t(j)][size_t(r)];
            mse_f += ef[size_t(j)][size_t(r)] * ef[size_t(j)][size_t(r)];
        }
        const double se = oracles::sample_sd(diff) / std::sqrt(double(reps));
        REQUIRE(std::abs(oracles::mean(diff)) <= 3.0 * se + 1e-12);
    }
    REQUIRE(mse_f < mse_p);
}

TEST_CASE("posterior-mean and white-noised deconfounders", "[estimators]") {
    DgpSpec s = spec_k1_m5();
    Dataset ds = sample_linear_linear(s, 1000, 6);

    PosteriorMeanDiagnostics diag;
    auto pm1 = posterior_mean_deconfounder(ds, 1, 8, 42, &diag);
    auto pm2 = posterior_mean_deconfounder(ds, 1, 8, 42);
    REQUIRE(pm1.coefficients == pm2.coefficients);
    REQUIRE(diag.accepted == 8);
    REQUIRE((pm1.std_errors.array() > 0.0).all());
    // Same plim as naive; on one dataset the two stay close.
    REQUIRE((pm1.coefficients - naive(ds).coefficients).cwiseAbs().maxCoeff() < 0.1);

    auto w1 = white_noised_deconfounder(ds, 1, 1.0, 5);
    auto w2 = white_noised_deconfounder(ds, 1, 1.0, 5);
    auto w3 = white_noised_deconfounder(ds, 1, 1.0, 6);
    REQUIRE(w1.coefficients == w2.coefficients);
    REQUIRE(w1.coefficients != w3.coefficients);
    auto wide = white_noised_deconfounder(ds, 1, 1e8, 5);
    REQUIRE((wide.coefficients - naive(ds).coefficients).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("cross-validated ridge path", "[estimators]") {
    Dataset ds = sample_linear_linear(medical_study_spec(), 1000, 8);
    CvRidgeOptions opt;
    auto res = pca_cv_ridge_path(ds, 1, 3, opt);
    REQUIRE(res.lambda_grid.size() == 50);
    for (size_t i = 1; i < res.lambda_grid.size(); ++i) REQUIRE(res.lambda_grid[i] < res.lambda_grid[i - 1]);
    REQUIRE_THAT(res.lambda_grid.back() / res.lambda_grid.front(), WithinRel(1e-4, 1e-10));

    opt.rule = CvRule::MinError;
    auto best = pca_cv_ridge_path(ds, 1, 3, opt);
    // The one-standard-error rule never picks a smaller penalty.
    REQUIRE(res.chosen <= best.chosen);
    const size_t b = size_t(best.chosen);
    for (double v : best.cv_mean) REQUIRE(best.cv_mean[b] <= v);
    REQUIRE(res.cv_mean[size_t(res.chosen)] <= best.cv_mean[b] + best.cv_se[b]);

    auto again = pca_cv_ridge_path(ds, 1, 3, CvRidgeOptions{});
    REQUIRE(again.report.coefficients == res.report.coefficients);
    REQUIRE(again.report.label == "pca_cv_ridge");
}

TEST_CASE("quadratic regressions", "[estimators]") {
    Dataset ds = sample_quadratic(0.4, 3000, 2, 2);
    auto [dec, par] = quadratic_pair(ds, true);
    MatrixXd A2 = ds.A.array().square();
    MatrixXd Xp(3000, 3);
    Xp << A2, (ds.A.col(0) + ds.A.col(1)).array().square().matrix();
    REQUIRE((par.coefficients - oracles::lstsq(with_ones(Xp), ds.Y).segment(1, 2)).cwiseAbs().maxCoeff() < 1e-9);

    // Zhat from the centered treatments via an independent SVD; the square
    // removes the sign ambiguity.
    MatrixXd Ac = ds.A.rowwise() - ds.A.colwise().mean();
    Eigen::JacobiSVD<MatrixXd> svd(Ac, Eigen::ComputeThinU);
    VectorXd z = svd.matrixU().col(0) * std::sqrt(3000.0);
    MatrixXd Xd(3000, 3);
    Xd << A2, z.array().square().matrix();
    REQUIRE((dec.coefficients - oracles::lstsq(with_ones(Xd), ds.Y).segment(1, 2)).cwiseAbs().maxCoeff() < 1e-8);

    auto nv = quadratic_naive(ds);
    REQUIRE((nv.coefficients - oracles::lstsq(with_ones(A2), ds.Y).tail(2)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("logistic IRLS reaches the score equations", "[estimators]") {
    Dataset ds = sample_logistic(5000, 4);
    LogisticFit f = logistic_irls(ds.A, ds.Y, true);
    MatrixXd X = with_ones(ds.A);
    VectorXd eta = X * f.coef;
    VectorXd p = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    REQUIRE((X.transpose() * (ds.Y - p)).cwiseAbs().maxCoeff() < 1e-5);
    VectorXd w = (p.array() * (1.0 - p.array())).matrix();
    MatrixXd info = X.transpose() * w.asDiagonal() * X;
    VectorXd se = oracles::pinv(info).diagonal().cwiseSqrt();
    REQUIRE((f.se - se).cwiseAbs().maxCoeff() < 1e-6);

    // Perfectly separated data.
    MatrixXd x(6, 1);
    x << -3, -2, -1, 1, 2, 3;
    VectorXd y(6);
    y << 0, 0, 0, 1, 1, 1;
    REQUIRE_THROWS_AS(logistic_irls(x, y, true), SeparationError);

    auto [nv, dc] = logistic_suite(ds, 1e6, 3);
    REQUIRE(nv.label == "logistic_naive");
    REQUIRE(dc.label == "logistic_deconf");
    REQUIRE((nv.coefficients - dc.coefficients).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("annihilator and partialling out", "[estimators]") {
    Rng rng(9);
    MatrixXd W = rng.normal_matrix(100, 3);
    MatrixXd X = rng.normal_matrix(100, 2);
    Annihilator M(W);
    MatrixXd MX = M.apply(X);
    REQUIRE((M.apply(MX) - MX).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(M.apply(W).cwiseAbs().maxCoeff() < 1e-10);
    MatrixXd Y = rng.normal_matrix(100, 2);
    // Symmetry: <MX, Y> = <X, MY>.
    REQUIRE(((MX.transpose() * Y) - (X.transpose() * M.apply(Y))).cwiseAbs().maxCoeff() < 1e-10);

    REQUIRE(expand_basis(W, Basis::linear()).cols() == 3);
    REQUIRE(expand_basis(W, Basis::polynomial(3)).cols() == 10);
    MatrixXd R = fwl_residualize(X, W, Basis::polynomial(2));
    REQUIRE((expand_basis(W, Basis::polynomial(2)).transpose() * R).cwiseAbs().maxCoeff() < 1e-9);

    Dataset ds = sample_linear_linear(spec_k1_m5(), 600, 10);
    auto sp = semiparametric_naive(ds, {1, 3}, Basis::linear());
    auto nv = naive(ds);
    REQUIRE_THAT(sp.coefficients[0], WithinAbs(nv.coefficients[1], 1e-8));
    REQUIRE_THAT(sp.coefficients[1], WithinAbs(nv.coefficients[3], 1e-8));
}

TEST_CASE("report serialization", "[estimators]") {
    auto r = make_report("demo", Eigen::Vector2d(0.5, -1.0), Eigen::Vector2d(0.1, 0.2), {0, 3});
    std::ostringstream os;
    write_report_header(os);
    write_report_rows(os, r);
    const std::string s = os.str();
    REQUIRE(s.rfind("estimator,coef_index,estimate,std_error,ci_low,ci_high\n", 0) == 0);
    REQUIRE(s.find("demo,4,") != std::string::npos);
    REQUIRE_THAT(r.ci_low[0], WithinAbs(0.5 - 0.196, 1e-15));
}
