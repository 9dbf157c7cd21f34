#include "multicause/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "multicause/asymptotics.hpp"
#include "multicause/factor.hpp"
#include "multicause/report.hpp"
#include "multicause/rng.hpp"

namespace multicause {

namespace {

VerifyRow make_row(std::string what, std::string quantity, double closed, double empirical,
                   double tolerance) {
    VerifyRow r;
    r.lemma_or_prop = std::move(what);
    r.quantity = std::move(quantity);
    r.closed_form = closed;
    r.empirical = empirical;
    r.abs_gap = std::abs(closed - empirical);
    r.tolerance = tolerance;
    r.pass = std::isfinite(r.abs_gap) && r.abs_gap <= tolerance;
    return r;
}

// Bound rows: the gap is the shortfall of `value` below `bound`.
VerifyRow bound_row(std::string what, std::string quantity, double bound, double value) {
    VerifyRow r;
    r.lemma_or_prop = std::move(what);
    r.quantity = std::move(quantity);
    r.closed_form = bound;
    r.empirical = value;
    r.abs_gap = std::max(0.0, bound - value);
    r.tolerance = 0.0;
    r.pass = std::isfinite(value) && r.abs_gap <= 0.0;
    return r;
}

// Largest elementwise deviation, reported at the entry where it occurs.
VerifyRow matrix_row(std::string what, std::string quantity, const MatrixXd &closed,
                     const MatrixXd &empirical, double tolerance) {
    Index bi = 0, bj = 0;
    (closed - empirical).cwiseAbs().maxCoeff(&bi, &bj);
    quantity += " [" + std::to_string(bi + 1) + "," + std::to_string(bj + 1) + "]";
    return make_row(std::move(what), std::move(quantity), closed(bi, bj), empirical(bi, bj),
                    tolerance);
}

std::string pretty(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

}  // namespace

DgpSpec verification_spec() {
    DgpSpec s;
    s.k = 1;
    s.m = 4;
    s.theta = MatrixXd(1, 4);
    s.theta << 1.0, 0.8, 0.6, 0.4;
    s.beta = VectorXd(4);
    s.beta << 0.5, -0.3, 0.2, 0.1;
    s.gamma = VectorXd::Constant(1, 1.0);
    s.sigma2 = 1.0;
    s.omega2 = 1.0;
    s.focal_idx = std::vector<Index>{0};
    return s;
}

std::vector<VerifyRow> verify_monte_carlo(const VerifyOptions &opt) {
    ExperimentConfig cfg;
    cfg.design = DesignSpec::linear_linear(verification_spec());
    cfg.n = opt.n;
    cfg.reps = opt.reps;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    EstimatorSpec pm = EstimatorSpec::named("posterior_mean");
    pm.n_draws = 10;
    cfg.estimators = {EstimatorSpec::named("naive"), EstimatorSpec::named("penalized_full"), pm,
                      EstimatorSpec::named("white_noised"), EstimatorSpec::named("subset")};
    const SimulationSummary s = run_experiment(cfg);
    const double scale = opt.scale();

    std::vector<VerifyRow> rows;
    for (const auto &dev : compare_oracle(s, cfg)) {
        const std::string what = dev.estimator == "penalized_full" ? "penalized_bias"
                                 : dev.estimator == "posterior_mean"
                                     ? "posterior_mean_bias"
                                     : dev.estimator + "_bias";
        rows.push_back(make_row(what, "bias[" + std::to_string(dev.coef_index + 1) + "]",
                                dev.oracle, dev.empirical, 3.0 * dev.mc_se * scale));
    }
    return rows;
}

std::vector<VerifyRow> verify_lemmas(const VerifyOptions &opt) {
    const double scale = opt.scale();
    std::vector<VerifyRow> rows;

    // [A, Zhat] shares U with A; the leading k squared singular values gain n.
    {
        Rng rng(derive_seed(opt.seed, {1}));
        double worst_lead = 0.0, worst_tail = 0.0, worst_vec = 0.0;
        for (int inst = 0; inst < 50; ++inst) {
            const Index n = 100 + static_cast<Index>(rng.uniform() * 200);
            const Index m = 3 + static_cast<Index>(rng.uniform() * 6);
            const Index k = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(m - 1));
            MatrixXd A = rng.normal_matrix(n, m);
            A.col(0) *= 3.0;
            auto sc = pca_substitute(A, k);
            MatrixXd AZ(n, m + k);
            AZ << A, sc.Zhat;
            Eigen::JacobiSVD<MatrixXd> svd(AZ, Eigen::ComputeThinU);
            const VectorXd &S = svd.singularValues();
            for (Index j = 0; j < m; ++j) {
                const double expect = j < k ? std::sqrt(sc.D[j] * sc.D[j] + static_cast<double>(n))
                                            : sc.D[j];
                const double rel = std::abs(S[j] - expect) / expect;
                (j < k ? worst_lead : worst_tail) = std::max(j < k ? worst_lead : worst_tail, rel);
                const double c = std::abs(svd.matrixU().col(j).dot(sc.U.col(j)));
                worst_vec = std::max(worst_vec, 1.0 - c);
            }
        }
        const double tol = 1e-8 * scale;
        rows.push_back(make_row("svd_block_structure", "max rel error, leading k values", 0.0,
                                worst_lead, tol));
        rows.push_back(make_row("svd_block_structure", "max rel error, trailing m-k values", 0.0,
                                worst_tail, tol));
        rows.push_back(make_row("svd_block_structure", "max 1-|cos| of left vectors", 0.0,
                                worst_vec, tol));
    }

    // Residual dependence and the theta_hat Gram on one large draw.
    {
        const DgpSpec spec = verification_spec();
        Dataset ds = sample_linear_linear(spec, opt.lemma_n, derive_seed(opt.seed, {2}));
        auto sc = pca_substitute(ds.A, spec.k);
        const MatrixXd gram_hat = sc.theta_hat.transpose() * sc.theta_hat;
        const MatrixXd second = ds.A.transpose() * ds.A / static_cast<double>(ds.n());
        const double tol = 0.02 * scale;
        rows.push_back(matrix_row("residual_dependence", "A'A/n - theta_hat'theta_hat",
                                  residual_dependence(spec.theta, spec.sigma2), second - gram_hat,
                                  tol));
        rows.push_back(matrix_row("theta_hat_gram", "theta_hat'theta_hat",
                                  theta_hat_gram(spec.theta, spec.sigma2), gram_hat, tol));
    }

    // Woodbury projection: push-through form against the direct m x m
    // solve, convergence along constant loadings, none along the weak sequence.
    {
        const std::vector<Index> grid = {1, 10, 100, 1000};
        double prev_gap = std::numeric_limits<double>::infinity();
        double worst_rise = 0.0, last_gap = 0.0;
        for (Index m : grid) {
            MatrixXd theta = build_theta(ConfoundingSequence::constant(1.0), m);
            const double w = woodbury_projection(theta, 1.0)(0, 0);
            MatrixXd M = theta.transpose() * theta;
            M.diagonal().array() += 1.0;
            const double direct = (theta * M.ldlt().solve(theta.transpose()))(0, 0);
            rows.push_back(make_row("woodbury_projection", "constant(1), m=" + std::to_string(m) +
                                                               ", push-through vs direct",
                                    w, direct, 1e-10 * scale));
            last_gap = 1.0 - w;
            worst_rise = std::max(worst_rise, last_gap - prev_gap);
            prev_gap = last_gap;
        }
        rows.push_back(make_row("woodbury_projection", "constant(1) gap increase along m-grid", 0.0,
                                std::max(0.0, worst_rise), 0.0));
        rows.push_back(make_row("woodbury_projection", "constant(1), m=1000, 1 - W", 0.0, last_gap,
                                1e-3 * scale));
        double min_gap = std::numeric_limits<double>::infinity();
        for (Index m : grid)
            min_gap = std::min(min_gap,
                               1.0 - woodbury_projection(build_theta(ConfoundingSequence::weak(), m),
                                                         1.0)(0, 0));
        rows.push_back(bound_row("woodbury_projection", "weak sequence, min 1 - W over m-grid", 0.4,
                                 min_gap));
    }

    // Pinpointing: the closed form against the PPCA posterior covariance,
    // and the lower bound along the weak sequence.
    {
        const double sigma2 = 1.0;
        const double bound = sigma2 / (weak_sequence_limit() + sigma2);
        double min_var = std::numeric_limits<double>::infinity();
        for (Index m : {1, 10, 100, 1000}) {
            MatrixXd theta = build_theta(ConfoundingSequence::weak(), m);
            const double v = pinpointing_variance(theta, sigma2)[0];
            auto post = ppca_posterior(MatrixXd::Zero(1, m), theta, sigma2);
            rows.push_back(make_row("pinpointing_variance",
                                    "weak, m=" + std::to_string(m) + ", vs posterior covariance",
                                    v, post.covariance(0, 0), 1e-12 * scale));
            min_var = std::min(min_var, v);
        }
        rows.push_back(bound_row("pinpointing_variance",
                                 "weak sequence, min variance vs " + pretty(bound), bound, min_var));
    }
    return rows;
}

std::vector<VerifyRow> run_verify(const VerifyOptions &opt) {
    auto rows = verify_monte_carlo(opt);
    auto lemmas = verify_lemmas(opt);
    rows.insert(rows.end(), lemmas.begin(), lemmas.end());
    return rows;
}

void write_verify_csv(std::ostream &out, const std::vector<VerifyRow> &rows) {
    out << "lemma_or_prop,quantity,closed_form,empirical,abs_gap,tolerance,pass\n";
    for (const auto &r : rows) {
        std::string q = r.quantity;
        std::replace(q.begin(), q.end(), ',', ';');
        out << r.lemma_or_prop << ',' << q << ',' << format_number(r.closed_form) << ','
            << format_number(r.empirical) << ',' << format_number(r.abs_gap) << ','
            << format_number(r.tolerance) << ',' << (r.pass ? "true" : "false") << '\n';
    }
}

void write_verify_table(std::ostream &out, const std::vector<VerifyRow> &rows) {
    auto e = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", x);
        return std::string(buf);
    };
    std::vector<std::vector<std::string>> cells;
    for (const auto &r : rows)
        cells.push_back({r.lemma_or_prop, r.quantity, e(r.closed_form), e(r.empirical),
                         e(r.abs_gap), e(r.tolerance), r.pass ? "pass" : "FAIL"});
    out << render_text_table(
        {"check", "quantity", "closed form", "empirical", "gap", "tolerance", "result"}, cells, 2);
}

}  // namespace multicause
