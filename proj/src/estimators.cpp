#include "multicause/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "multicause/asymptotics.hpp"
#include "multicause/error.hpp"
#include "multicause/factor.hpp"
#include "multicause/rng.hpp"

namespace multicause {

EstimateReport make_report(std::string label, VectorXd coef, VectorXd se,
                           std::vector<Index> targets) {
    EstimateReport r;
    r.label = std::move(label);
    r.ci_low = coef - kNormalCritical95 * se;
    r.ci_high = coef + kNormalCritical95 * se;
    r.coefficients = std::move(coef);
    r.std_errors = std::move(se);
    r.target_indices = std::move(targets);
    return r;
}

void write_report_header(std::ostream &out) {
    out << "estimator,coef_index,estimate,std_error,ci_low,ci_high\n";
}

void write_report_rows(std::ostream &out, const EstimateReport &r) {
    auto old = out.precision(12);
    for (Index j = 0; j < r.coefficients.size(); ++j) {
        Index idx = j < static_cast<Index>(r.target_indices.size()) ? r.target_indices[j] : j;
        out << r.label << ',' << idx + 1 << ',' << r.coefficients[j] << ',' << r.std_errors[j]
            << ',' << r.ci_low[j] << ',' << r.ci_high[j] << '\n';
    }
    out.precision(old);
}

namespace {

std::vector<Index> iota_indices(Index m) {
    std::vector<Index> v(static_cast<size_t>(m));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

MatrixXd gram(const MatrixXd &X) {
    MatrixXd G = MatrixXd::Zero(X.cols(), X.cols());
    G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
    return G.selfadjointView<Eigen::Lower>();
}

struct GramSolution {
    VectorXd coef;
    VectorXd inv_diag;
};

GramSolution solve_gram(const MatrixXd &G, const VectorXd &rhs) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    const VectorXd &ev = es.eigenvalues();
    const MatrixXd &V = es.eigenvectors();
    const double hi = ev[ev.size() - 1];
    const double lo = ev[0];
    if (!(hi > 0.0) || !(lo * kRankConditionLimit > hi))
        throw RankDeficiencyError("cross-product matrix is rank deficient (condition number " +
                                  (lo > 0.0 ? std::to_string(hi / lo) : std::string("inf")) +
                                  ")");
    GramSolution s;
    VectorXd inv = ev.cwiseInverse();
    s.coef = V * (inv.asDiagonal() * (V.transpose() * rhs));
    s.inv_diag = V.array().square().matrix() * inv;
    return s;
}

void require_df(Index n, Index used) {
    if (n <= used) throw DimensionError("not enough observations for the design");
}

}  // namespace

LinearFit ols_solve(const MatrixXd &X, const VectorXd &Y, bool intercept) {
    const Index n = X.rows(), p = X.cols();
    if (Y.size() != n) throw DimensionError("X and Y row counts differ");
    if (!X.allFinite() || !Y.allFinite()) throw DataError("non-finite design or outcome");
    require_df(n, p + (intercept ? 1 : 0));

    LinearFit fit;
    fit.df = n - p - (intercept ? 1 : 0);
    if (intercept) {
        const Eigen::RowVectorXd mx = X.colwise().mean();
        const double my = Y.mean();
        const MatrixXd Xc = X.rowwise() - mx;
        const VectorXd Yc = Y.array() - my;
        GramSolution s = solve_gram(gram(Xc), Xc.transpose() * Yc);
        fit.coef = s.coef;
        fit.intercept = my - mx.dot(s.coef);
        const double rss = (Yc - Xc * s.coef).squaredNorm();
        fit.sigma2_hat = rss / static_cast<double>(fit.df);
        fit.se = (fit.sigma2_hat * s.inv_diag.array()).sqrt();
    } else {
        GramSolution s = solve_gram(gram(X), X.transpose() * Y);
        fit.coef = s.coef;
        const double rss = (Y - X * s.coef).squaredNorm();
        fit.sigma2_hat = rss / static_cast<double>(fit.df);
        fit.se = (fit.sigma2_hat * s.inv_diag.array()).sqrt();
    }
    return fit;
}

LinearFit ols_from_gram(const MatrixXd &G, const VectorXd &Xty, double yty, Index n) {
    const Index p = G.rows();
    require_df(n, p);
    GramSolution s = solve_gram(G, Xty);
    LinearFit fit;
    fit.coef = s.coef;
    fit.df = n - p;
    const double rss = std::max(yty - s.coef.dot(Xty), 0.0);
    fit.sigma2_hat = rss / static_cast<double>(fit.df);
    fit.se = (fit.sigma2_hat * s.inv_diag.array()).sqrt();
    return fit;
}

LinearFit ridge_solve(const MatrixXd &X, const VectorXd &Y, double lambda, bool intercept) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
    if (lambda == 0.0) return ols_solve(X, Y, intercept);
    const Index n = X.rows(), p = X.cols();
    if (Y.size() != n) throw DimensionError("X and Y row counts differ");
    if (!X.allFinite() || !Y.allFinite()) throw DataError("non-finite design or outcome");
    require_df(n, p + (intercept ? 1 : 0));

    Eigen::RowVectorXd mx = Eigen::RowVectorXd::Zero(p);
    double my = 0.0;
    if (intercept) {
        mx = X.colwise().mean();
        my = Y.mean();
    }
    const MatrixXd Xc = X.rowwise() - mx;
    const VectorXd Yc = Y.array() - my;

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram(Xc));
    const VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    const MatrixXd &V = es.eigenvectors();
    const VectorXd shrink = (ev.array() + lambda).inverse();

    LinearFit fit;
    fit.coef = V * (shrink.asDiagonal() * (V.transpose() * (Xc.transpose() * Yc)));
    fit.intercept = my - mx.dot(fit.coef);
    fit.df = n - p - (intercept ? 1 : 0);
    const double rss = (Yc - Xc * fit.coef).squaredNorm();
    fit.sigma2_hat = rss / static_cast<double>(fit.df);
    const VectorXd sandwich = (ev.array() * shrink.array().square()).matrix();
    fit.se = (fit.sigma2_hat * (V.array().square().matrix() * sandwich).array()).sqrt();
    return fit;
}

EstimateReport fit_ols(const MatrixXd &X, const VectorXd &Y, bool intercept, std::string label) {
    LinearFit f = ols_solve(X, Y, intercept);
    return make_report(std::move(label), f.coef, f.se, iota_indices(X.cols()));
}

namespace {

EstimateReport head_report(std::string label, const LinearFit &f, Index m) {
    return make_report(std::move(label), f.coef.head(m), f.se.head(m), iota_indices(m));
}

MatrixXd hcat(const MatrixXd &a, const MatrixXd &b) {
    MatrixXd out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

}  // namespace

EstimateReport oracle(const Dataset &ds, bool intercept) {
    ds.validate();
    if (ds.k() < 1) throw DataError("oracle needs the confounders Z");
    return head_report("oracle", ols_solve(hcat(ds.A, ds.Z), ds.Y, intercept), ds.m());
}

EstimateReport naive(const Dataset &ds, bool intercept) {
    ds.validate();
    return head_report("naive", ols_solve(ds.A, ds.Y, intercept), ds.m());
}

EstimateReport penalized_full(const Dataset &ds, Index k, double lambda, bool intercept) {
    ds.validate();
    if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
    SubstituteConfounder sc = pca_substitute(ds.A, k);
    LinearFit f = ridge_solve(hcat(ds.A, sc.Zhat), ds.Y, lambda, intercept);
    return head_report("penalized_full", f, ds.m());
}

namespace {

void monomials_rec(const MatrixXd &Z, int remaining, Index start, const VectorXd &current,
                   int current_degree, int min_degree, std::vector<VectorXd> &out) {
    if (current_degree >= min_degree) out.push_back(current);
    if (remaining == 0) return;
    for (Index j = start; j < Z.cols(); ++j) {
        VectorXd next = current.cwiseProduct(Z.col(j));
        monomials_rec(Z, remaining - 1, j, next, current_degree + 1, min_degree, out);
    }
}

}  // namespace

MatrixXd polynomial_monomials(const MatrixXd &Zhat, int degree) {
    if (degree < 2) throw DomainError("polynomial degree must be at least 2");
    std::vector<VectorXd> cols;
    monomials_rec(Zhat, degree, 0, VectorXd::Ones(Zhat.rows()), 0, 2, cols);
    MatrixXd out(Zhat.rows(), static_cast<Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = cols[j];
    return out;
}

MatrixXd flexible_basis(const MatrixXd &Zhat, int degree) {
    const Index n = Zhat.rows(), k = Zhat.cols();
    MatrixXd H = hcat(Zhat, polynomial_monomials(Zhat, degree));
    if (H.cols() >= n) throw DimensionError("polynomial basis has at least n columns");
    Eigen::HouseholderQR<MatrixXd> qr(H);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, H.cols());
    return std::sqrt(static_cast<double>(n)) * Q.rightCols(H.cols() - k);
}

EstimateReport flexible_penalized(const Dataset &ds, Index k, int degree, double lambda,
                                  bool intercept) {
    ds.validate();
    if (degree < 2) throw DomainError("polynomial degree must be at least 2");
    if (!(lambda > 0.0)) throw DomainError("flexible_penalized requires lambda > 0");
    SubstituteConfounder sc = pca_substitute(ds.A, k);
    MatrixXd W = flexible_basis(sc.Zhat, degree);
    MatrixXd X(ds.n(), ds.m() + k + W.cols());
    X << ds.A, sc.Zhat, W;
    LinearFit f = ridge_solve(X, ds.Y, lambda, intercept);
    return head_report("flexible_penalized", f, ds.m());
}

EstimateReport posterior_mean_deconfounder(const Dataset &ds, Index k, Index n_draws,
                                           std::uint64_t seed, PosteriorMeanDiagnostics *diag) {
    ds.validate();
    if (n_draws < 2) throw DomainError("posterior_mean_deconfounder needs n_draws >= 2");
    const Index n = ds.n(), m = ds.m();
    PpcaFit fit = ppca_mle(ds.A, k);
    PpcaPosterior post = ppca_posterior(ds.A, fit.theta, fit.sigma2);

    MatrixXd G(m + k, m + k);
    G.topLeftCorner(m, m) = gram(ds.A);
    VectorXd rhs(m + k);
    rhs.head(m) = ds.A.transpose() * ds.Y;
    const double yty = ds.Y.squaredNorm();

    MatrixXd coefs(m, n_draws);
    MatrixXd vars(m, n_draws);
    Index accepted = 0, rejected = 0;
    const Index max_attempts = 2 * n_draws;
    for (Index attempt = 0; attempt < max_attempts && accepted < n_draws; ++attempt) {
        MatrixXd z = sample_posterior_confounder(
            post, derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
        MatrixXd Az = ds.A.transpose() * z;
        G.topRightCorner(m, k) = Az;
        G.bottomLeftCorner(k, m) = Az.transpose();
        G.bottomRightCorner(k, k) = z.transpose() * z;
        rhs.tail(k) = z.transpose() * ds.Y;
        try {
            LinearFit f = ols_from_gram(G, rhs, yty, n);
            coefs.col(accepted) = f.coef.head(m);
            vars.col(accepted) = f.se.head(m).array().square();
            ++accepted;
        } catch (const RankDeficiencyError &) {
            ++rejected;
        }
    }
    if (diag) *diag = {accepted, rejected};
    if (accepted < n_draws)
        throw InstabilityError("more than half of the posterior draws were rank deficient");

    VectorXd mean = coefs.rowwise().mean();
    VectorXd between = ((coefs.colwise() - mean).array().square().rowwise().sum() /
                        static_cast<double>(n_draws - 1))
                           .matrix();
    VectorXd within = vars.rowwise().mean();
    VectorXd se = (within + between).array().sqrt();
    return make_report("posterior_mean", mean, se, iota_indices(m));
}

EstimateReport white_noised_deconfounder(const Dataset &ds, Index k, double psi2,
                                         std::uint64_t seed) {
    ds.validate();
    SubstituteConfounder sc = pca_substitute(ds.A, k);
    MatrixXd noisy = add_white_noise(sc.Zhat, psi2, seed);
    return head_report("white_noised", ols_solve(hcat(ds.A, noisy), ds.Y, false), ds.m());
}

EstimateReport subset_deconfounder(const Dataset &ds, const std::vector<Index> &focal_idx,
                                   Index k) {
    ds.validate();
    const Index m = ds.m(), mF = static_cast<Index>(focal_idx.size());
    if (mF < 1) throw SpecificationError("focal set is empty");
    complement_indices(m, focal_idx);  // bounds check
    if (mF + k >= m)
        throw CollinearityRiskError("subset deconfounder needs |F| + k < m");
    SubstituteConfounder sc = pca_substitute(ds.A, k);
    LinearFit f = ols_solve(hcat(select_columns(ds.A, focal_idx), sc.Zhat), ds.Y, false);
    return make_report("subset", f.coef.head(mF), f.se.head(mF), focal_idx);
}

EstimateReport subset_each(const Dataset &ds, Index k) {
    ds.validate();
    const Index m = ds.m(), n = ds.n();
    if (1 + k >= m) throw CollinearityRiskError("subset deconfounder needs 1 + k < m");
    if (n < m) throw DimensionError("pca_substitute requires n >= m");
    if (!ds.A.allFinite()) throw DataError("treatment matrix has non-finite entries");
    // Only the cross products with Zhat are needed, and they follow from the
    // leading eigenpairs of A'A: A'Zhat = sqrt(n) V_k D_k, Zhat'Zhat = n I.
    const MatrixXd GA = gram(ds.A);
    const VectorXd AY = ds.A.transpose() * ds.Y;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(GA);
    const MatrixXd Vk = es.eigenvectors().rightCols(k).rowwise().reverse();
    const VectorXd Dk = es.eigenvalues().tail(k).reverse().cwiseMax(0.0).cwiseSqrt();
    if (Dk[k - 1] <= 0.0) throw DegenerateFactorError("treatment matrix has rank below k");
    const double rn = std::sqrt(static_cast<double>(n));
    const MatrixXd AZ = rn * Vk * Dk.asDiagonal();
    const VectorXd ZY = rn * (Vk.transpose() * AY).cwiseQuotient(Dk);
    const double yty = ds.Y.squaredNorm();

    VectorXd coef(m), se(m);
    MatrixXd Gs(1 + k, 1 + k);
    VectorXd bs(1 + k);
    for (Index j = 0; j < m; ++j) {
        Gs(0, 0) = GA(j, j);
        Gs.block(0, 1, 1, k) = AZ.row(j);
        Gs.block(1, 0, k, 1) = AZ.row(j).transpose();
        Gs.bottomRightCorner(k, k) = static_cast<double>(n) * MatrixXd::Identity(k, k);
        bs[0] = AY[j];
        bs.tail(k) = ZY;
        LinearFit f = ols_from_gram(Gs, bs, yty, n);
        coef[j] = f.coef[0];
        se[j] = f.se[0];
    }
    return make_report("subset_each", coef, se, iota_indices(m));
}

// --- Cross-validated ridge -------------------------------------------------

namespace {

struct Standardized {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;
    MatrixXd Xs;
};

Standardized standardize(const MatrixXd &X) {
    Standardized s;
    s.mean = X.colwise().mean();
    MatrixXd Xc = X.rowwise() - s.mean;
    s.scale = (Xc.colwise().squaredNorm() / static_cast<double>(X.rows())).cwiseSqrt();
    for (Index j = 0; j < X.cols(); ++j)
        if (!(s.scale[j] > 0.0)) throw RankDeficiencyError("constant column in ridge design");
    s.Xs = Xc.array().rowwise() / s.scale.array();
    return s;
}

// Ridge path in the standardized parameterization, sharing one
// eigendecomposition of the scaled Gram across penalties.
struct RidgePath {
    Standardized st;
    double ymean = 0.0;
    VectorXd ev;
    MatrixXd V;
    VectorXd Vt_rhs;

    RidgePath(const MatrixXd &X, const VectorXd &Y) : st(standardize(X)) {
        const double n = static_cast<double>(X.rows());
        ymean = Y.mean();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram(st.Xs) / n);
        ev = es.eigenvalues().cwiseMax(0.0);
        V = es.eigenvectors();
        Vt_rhs = V.transpose() * (st.Xs.transpose() * (Y.array() - ymean).matrix() / n);
    }

    // Original-scale slopes and intercept at penalty lambda.
    std::pair<VectorXd, double> at(double lambda) const {
        VectorXd b = V * (Vt_rhs.array() / (ev.array() + lambda)).matrix();
        VectorXd coef = (b.array() / st.scale.transpose().array()).matrix();
        return {coef, ymean - st.mean.dot(coef)};
    }
};

}  // namespace

LinearFit standardized_ridge(const MatrixXd &X, const VectorXd &Y, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
    const Index n = X.rows(), p = X.cols();
    require_df(n, p + 1);
    RidgePath path(X, Y);
    auto [coef, b0] = path.at(lambda);
    LinearFit fit;
    fit.coef = coef;
    fit.intercept = b0;
    fit.df = n - p - 1;
    const double rss = ((Y - X * coef).array() - b0).square().sum();
    fit.sigma2_hat = rss / static_cast<double>(fit.df);
    // Cov(b_std) = s2 / n * (G + lambda)^-1 G (G + lambda)^-1 with G the scaled Gram / n.
    VectorXd sandwich = (path.ev.array() / (path.ev.array() + lambda).square()).matrix();
    VectorXd var_std = path.V.array().square().matrix() * sandwich;
    fit.se = ((fit.sigma2_hat / static_cast<double>(n)) * var_std.array()).sqrt() /
             path.st.scale.transpose().array();
    return fit;
}

CvRidgeResult pca_cv_ridge_path(const Dataset &ds, Index k, std::uint64_t seed,
                                const CvRidgeOptions &opt) {
    ds.validate();
    if (opt.folds < 2) throw DomainError("cross-validation needs at least 2 folds");
    if (opt.grid_size < 1) throw DomainError("lambda grid must be nonempty");
    if (!(opt.min_ratio > 0.0 && opt.min_ratio <= 1.0))
        throw DomainError("min_ratio must lie in (0, 1]");
    const Index n = ds.n(), m = ds.m();
    if (n < 2 * opt.folds) throw DimensionError("too few observations for the fold count");

    SubstituteConfounder sc = pca_substitute(ds.A, k, opt.center_pca);
    MatrixXd X = hcat(ds.A, sc.Zhat);

    // Largest penalty: the ridge analogue of the lasso lambda_max, with the
    // mixing weight floored at 1e-3.
    Standardized full = standardize(X);
    VectorXd yc = ds.Y.array() - ds.Y.mean();
    const double lambda_max =
        (full.Xs.transpose() * yc).cwiseAbs().maxCoeff() / (static_cast<double>(n) * 1e-3);

    CvRidgeResult res;
    const Index G = opt.grid_size;
    for (Index i = 0; i < G; ++i) {
        double t = G == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(G - 1);
        res.lambda_grid.push_back(lambda_max * std::pow(opt.min_ratio, t));
    }

    // Balanced fold labels in a seeded Fisher-Yates order.
    std::vector<Index> fold(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) fold[static_cast<size_t>(i)] = i % opt.folds;
    Rng rng(seed);
    for (Index i = n - 1; i > 0; --i) {
        auto j = static_cast<Index>(rng.uniform() * static_cast<double>(i + 1));
        if (j > i) j = i;
        std::swap(fold[static_cast<size_t>(i)], fold[static_cast<size_t>(j)]);
    }

    MatrixXd err(opt.folds, G);
    for (Index f = 0; f < opt.folds; ++f) {
        std::vector<Index> train, test;
        for (Index i = 0; i < n; ++i) (fold[static_cast<size_t>(i)] == f ? test : train).push_back(i);
        MatrixXd Xtr(static_cast<Index>(train.size()), X.cols());
        VectorXd Ytr(static_cast<Index>(train.size()));
        for (size_t i = 0; i < train.size(); ++i) {
            Xtr.row(static_cast<Index>(i)) = X.row(train[i]);
            Ytr[static_cast<Index>(i)] = ds.Y[train[i]];
        }
        MatrixXd Xte(static_cast<Index>(test.size()), X.cols());
        VectorXd Yte(static_cast<Index>(test.size()));
        for (size_t i = 0; i < test.size(); ++i) {
            Xte.row(static_cast<Index>(i)) = X.row(test[i]);
            Yte[static_cast<Index>(i)] = ds.Y[test[i]];
        }
        RidgePath path(Xtr, Ytr);
        for (Index l = 0; l < G; ++l) {
            auto [coef, b0] = path.at(res.lambda_grid[static_cast<size_t>(l)]);
            err(f, l) = ((Yte - Xte * coef).array() - b0).square().mean();
        }
    }

    const double kf = static_cast<double>(opt.folds);
    Index best = 0;
    for (Index l = 0; l < G; ++l) {
        double mean = err.col(l).mean();
        double var = (err.col(l).array() - mean).square().sum() / (kf - 1.0);
        res.cv_mean.push_back(mean);
        res.cv_se.push_back(std::sqrt(var / kf));
        if (mean < res.cv_mean[static_cast<size_t>(best)]) best = l;
    }
    res.chosen = best;
    if (opt.rule == CvRule::OneStandardError) {
        const double bound = res.cv_mean[static_cast<size_t>(best)] + res.cv_se[static_cast<size_t>(best)];
        // Grid is descending, so the first index within the bound is the largest penalty.
        for (Index l = 0; l < G; ++l) {
            if (res.cv_mean[static_cast<size_t>(l)] <= bound) {
                res.chosen = l;
                break;
            }
        }
    }

    LinearFit fit = standardized_ridge(X, ds.Y, res.lambda_grid[static_cast<size_t>(res.chosen)]);
    res.report = make_report("pca_cv_ridge", fit.coef.head(m), fit.se.head(m), iota_indices(m));
    return res;
}

EstimateReport pca_cv_ridge(const Dataset &ds, Index k, std::uint64_t seed,
                            const CvRidgeOptions &opt) {
    return pca_cv_ridge_path(ds, k, seed, opt).report;
}

// --- Quadratic tutorial ----------------------------------------------------

std::pair<EstimateReport, EstimateReport> quadratic_pair(const Dataset &ds, bool center) {
    ds.validate();
    const Index m = ds.m();
    const MatrixXd A2 = ds.A.array().square();
    SubstituteConfounder sc = pca_substitute(ds.A, 1, center);
    const MatrixXd Z2 = sc.Zhat.array().square();
    const MatrixXd S2 = ds.A.rowwise().sum().array().square();

    LinearFit fd = ols_solve(hcat(A2, Z2), ds.Y, true);
    LinearFit fp = ols_solve(hcat(A2, S2), ds.Y, true);
    return {head_report("quadratic_deconf", fd, m), head_report("quadratic_parametric", fp, m)};
}

EstimateReport quadratic_naive(const Dataset &ds) {
    ds.validate();
    const MatrixXd A2 = ds.A.array().square();
    return head_report("quadratic_naive", ols_solve(A2, ds.Y, true), ds.m());
}

// --- Logistic tutorial -----------------------------------------------------

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic_deviance(const VectorXd &eta, const VectorXd &y) {
    double d = 0.0;
    for (Index i = 0; i < eta.size(); ++i)
        d += y[i] > 0.5 ? softplus(-eta[i]) : softplus(eta[i]);
    return 2.0 * d;
}

}  // namespace

LogisticFit logistic_irls(const MatrixXd &Xin, const VectorXd &y, bool intercept) {
    const Index n = Xin.rows();
    if (y.size() != n) throw DimensionError("X and y row counts differ");
    for (Index i = 0; i < n; ++i)
        if (y[i] != 0.0 && y[i] != 1.0) throw DataError("logistic outcome must be 0/1");
    MatrixXd X = Xin;
    if (intercept) {
        X.resize(n, Xin.cols() + 1);
        X.col(0).setOnes();
        X.rightCols(Xin.cols()) = Xin;
    }
    const Index p = X.cols();
    require_df(n, p);

    VectorXd b = VectorXd::Zero(p);
    VectorXd eta = VectorXd::Zero(n);
    double dev = logistic_deviance(eta, y);
    constexpr int kMaxIter = 100;
    constexpr double kTol = 1e-8;

    auto hessian = [&](const VectorXd &e, VectorXd &w, VectorXd &mu) {
        mu = e.unaryExpr([](double v) { return logistic(v); });
        w = (mu.array() * (1.0 - mu.array())).max(1e-300);
        MatrixXd Xw = X.array().colwise() * w.array().sqrt();
        return gram(Xw);
    };

    LogisticFit fit;
    bool converged = false;
    VectorXd w, mu;
    for (int it = 1; it <= kMaxIter; ++it) {
        MatrixXd H = hessian(eta, w, mu);
        VectorXd g = X.transpose() * (y - mu);
        GramSolution step = solve_gram(H, g);
        double t = 1.0;
        VectorXd b_new, eta_new;
        double dev_new = std::numeric_limits<double>::infinity();
        for (int halving = 0; halving < 30; ++halving) {
            b_new = b + t * step.coef;
            eta_new = X * b_new;
            dev_new = logistic_deviance(eta_new, y);
            if (dev_new <= dev * (1.0 + 1e-12)) break;
            t *= 0.5;
        }
        const double change = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1);
        b = b_new;
        eta = eta_new;
        dev = dev_new;
        fit.iterations = it;
        if (change < kTol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw ConvergenceError("logistic IRLS did not converge in 100 iterations");
    if (eta.cwiseAbs().maxCoeff() > 30.0)
        throw SeparationError("linear predictor exceeds 30 in magnitude (separation)");

    MatrixXd H = hessian(eta, w, mu);
    GramSolution s = solve_gram(H, VectorXd::Zero(p));
    fit.coef = b;
    fit.se = s.inv_diag.array().sqrt();
    fit.deviance = dev;
    return fit;
}

std::pair<EstimateReport, EstimateReport> logistic_suite(const Dataset &ds, double psi2,
                                                         std::uint64_t seed) {
    ds.validate();
    const Index m = ds.m();
    LogisticFit fn = logistic_irls(ds.A, ds.Y, true);

    SubstituteConfounder sc = pca_substitute(ds.A, 1, true);
    MatrixXd score = sc.U.leftCols(1) * sc.D[0];
    MatrixXd noisy = add_white_noise(score, psi2, seed);
    LogisticFit fd = logistic_irls(hcat(ds.A, noisy), ds.Y, true);

    return {make_report("logistic_naive", fn.coef.segment(1, m), fn.se.segment(1, m),
                        iota_indices(m)),
            make_report("logistic_deconf", fd.coef.segment(1, m), fd.se.segment(1, m),
                        iota_indices(m))};
}

// --- Partialling out -------------------------------------------------------

Annihilator::Annihilator(MatrixXd W) : W_(std::move(W)) {
    MatrixXd G = gram(W_);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(G, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()[0], hi = es.eigenvalues()[G.rows() - 1];
    if (!(hi > 0.0) || !(lo * kRankConditionLimit > hi))
        throw RankDeficiencyError("control block is rank deficient");
    gram_.compute(G);
}

MatrixXd Annihilator::apply(const MatrixXd &X) const {
    if (X.rows() != W_.rows()) throw DimensionError("row count mismatch in annihilator");
    return X - W_ * gram_.solve(W_.transpose() * X);
}

MatrixXd expand_basis(const MatrixXd &controls, const Basis &basis) {
    if (basis.degree < 1) throw DomainError("basis degree must be at least 1");
    const Index n = controls.rows(), p = controls.cols();
    const Index cols = (basis.intercept ? 1 : 0) + p * basis.degree;
    if (cols >= n) throw DimensionError("basis expansion has at least n columns");
    MatrixXd out(n, cols);
    Index c = 0;
    if (basis.intercept) out.col(c++).setOnes();
    MatrixXd power = controls;
    for (int d = 1; d <= basis.degree; ++d) {
        if (d > 1) power = power.cwiseProduct(controls);
        out.middleCols(c, p) = power;
        c += p;
    }
    return out;
}

MatrixXd fwl_residualize(const MatrixXd &target, const MatrixXd &controls, const Basis &basis) {
    MatrixXd B = expand_basis(controls, basis);
    if (B.cols() == 0) return target;
    return Annihilator(std::move(B)).apply(target);
}

EstimateReport semiparametric_naive(const Dataset &ds, const std::vector<Index> &focal_idx,
                                    const Basis &basis) {
    ds.validate();
    if (focal_idx.empty()) throw SpecificationError("focal set is empty");
    const std::vector<Index> rest = complement_indices(ds.m(), focal_idx);
    MatrixXd AF = select_columns(ds.A, focal_idx);
    MatrixXd AN = select_columns(ds.A, rest);
    MatrixXd target(ds.n(), AF.cols() + 1);
    target << AF, ds.Y;
    MatrixXd resid = fwl_residualize(target, AN, basis);
    LinearFit f = ols_solve(resid.leftCols(AF.cols()), resid.col(AF.cols()), false);
    return make_report("semiparametric_naive", f.coef, f.se, focal_idx);
}

}  // namespace multicause
