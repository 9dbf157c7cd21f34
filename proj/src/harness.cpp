#include "multicause/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "multicause/asymptotics.hpp"
#include "multicause/error.hpp"
#include "multicause/rng.hpp"

namespace multicause {

namespace {

constexpr std::uint64_t kBetaStream = std::numeric_limits<std::uint64_t>::max();

bool is_linear_design(DesignKind k) {
    return k == DesignKind::LinearLinear || k == DesignKind::SubsetSim;
}

Index design_m(const DesignSpec &d) {
    switch (d.kind) {
    case DesignKind::LinearLinear: return d.linear.m;
    case DesignKind::SubsetSim: return d.subset_m;
    case DesignKind::Quadratic: return d.quadratic_m;
    case DesignKind::Logistic: return 2;
    }
    return 0;
}

std::vector<Index> resolve_focal(const EstimatorSpec &spec, const DesignSpec &design) {
    if (!spec.focal.empty()) return spec.focal;
    if (design.kind == DesignKind::LinearLinear && design.linear.focal_idx)
        return *design.linear.focal_idx;
    return {0};
}

double resolve_lambda(const EstimatorSpec &spec, Index n) {
    return spec.lambda < 0.0 ? std::sqrt(static_cast<double>(n)) : spec.lambda;
}

}  // namespace

DesignSpec DesignSpec::linear_linear(DgpSpec spec) {
    DesignSpec d;
    d.kind = DesignKind::LinearLinear;
    d.linear = std::move(spec);
    return d;
}

DesignSpec DesignSpec::subset_sim(Index m, BetaRule rule, bool redraw) {
    DesignSpec d;
    d.kind = DesignKind::SubsetSim;
    d.subset_m = m;
    d.beta_rule = rule;
    d.redraw_beta = redraw;
    return d;
}

DesignSpec DesignSpec::quadratic(double rho, Index m) {
    DesignSpec d;
    d.kind = DesignKind::Quadratic;
    d.rho = rho;
    d.quadratic_m = m;
    return d;
}

DesignSpec DesignSpec::logistic_design(double rho) {
    DesignSpec d;
    d.kind = DesignKind::Logistic;
    d.rho = rho;
    d.logistic.rho = rho;
    return d;
}

EstimatorSpec EstimatorSpec::named(std::string name) {
    EstimatorSpec s;
    s.name = std::move(name);
    s.center = s.name == "quadratic_pair";
    return s;
}

const std::vector<std::string> &known_estimators() {
    static const std::vector<std::string> names = {
        "oracle",         "naive",          "penalized_full",  "flexible_penalized",
        "posterior_mean", "white_noised",   "subset",          "subset_each",
        "pca_cv_ridge",   "quadratic_pair", "quadratic_naive", "logistic_suite",
        "semiparametric_naive"};
    return names;
}

void ExperimentConfig::validate() const {
    if (reps < 1) throw ConfigError("reps must be at least 1");
    if (n < 1) throw ConfigError("n must be at least 1");
    if (estimators.empty()) throw ConfigError("estimator list is empty");

    const Index m = design_m(design);
    switch (design.kind) {
    case DesignKind::LinearLinear:
        design.linear.validate();
        break;
    case DesignKind::SubsetSim:
        if (design.subset_m < 1) throw ConfigError("subset design needs m >= 1");
        break;
    case DesignKind::Quadratic:
        if (design.quadratic_m < 1) throw ConfigError("quadratic design needs m >= 1");
        if (!(design.rho < 1.0) || !(design.rho * static_cast<double>(design.quadratic_m) > -1.0))
            throw ConfigError("rho outside the positive-definite range");
        break;
    case DesignKind::Logistic:
        if (!(design.logistic.rho < 1.0) || !(design.logistic.rho > -0.5))
            throw ConfigError("rho outside the positive-definite range");
        break;
    }

    const auto &names = known_estimators();
    for (const auto &e : estimators) {
        if (std::find(names.begin(), names.end(), e.name) == names.end())
            throw ConfigError("unknown estimator: " + e.name);
        const bool quad = e.name == "quadratic_pair" || e.name == "quadratic_naive";
        const bool logit = e.name == "logistic_suite";
        if (quad && design.kind != DesignKind::Quadratic)
            throw ConfigError(e.name + " requires the quadratic design");
        if (logit && design.kind != DesignKind::Logistic)
            throw ConfigError(e.name + " requires the logistic design");
        if (!quad && !logit && !is_linear_design(design.kind))
            throw ConfigError(e.name + " requires a linear-linear design");
        if (e.k < 1 || e.k > m) throw ConfigError(e.name + ": k must lie in [1, m]");
        if (!std::isfinite(e.lambda)) throw ConfigError(e.name + ": lambda must be finite");
        if (e.name == "flexible_penalized" && (e.degree < 2 || e.lambda == 0.0))
            throw ConfigError("flexible_penalized needs degree >= 2 and lambda > 0");
        if (e.name == "posterior_mean" && e.n_draws < 2)
            throw ConfigError("posterior_mean needs n_draws >= 2");
        if ((e.name == "white_noised" || logit) && !(e.psi2 > 0.0))
            throw ConfigError(e.name + ": psi2 must be positive");
        if (e.name == "pca_cv_ridge" && e.folds < 2)
            throw ConfigError("pca_cv_ridge needs folds >= 2");
        if (e.name == "semiparametric_naive" && e.basis_degree < 1)
            throw ConfigError("semiparametric_naive needs basis_degree >= 1");
        for (Index j : e.focal)
            if (j < 0 || j >= m) throw ConfigError(e.name + ": focal index out of range");
        if (e.name == "subset") {
            auto F = resolve_focal(e, design);
            if (static_cast<Index>(F.size()) + e.k >= m)
                throw ConfigError("subset needs |focal| + k < m");
        }
        if (e.name == "subset_each" && 1 + e.k >= m)
            throw ConfigError("subset_each needs 1 + k < m");
    }
}

std::vector<std::string> report_labels(const EstimatorSpec &spec) {
    std::vector<std::string> base;
    if (spec.name == "quadratic_pair")
        base = {"quadratic_deconf", "quadratic_parametric"};
    else if (spec.name == "logistic_suite")
        base = {"logistic_naive", "logistic_deconf"};
    else
        base = {spec.name};
    if (spec.label.empty()) return base;
    if (base.size() == 1) return {spec.label};
    for (auto &b : base) b = spec.label + ":" + b;
    return base;
}

std::vector<EstimateReport> run_estimator(const EstimatorSpec &spec, const Dataset &ds,
                                          const DesignSpec &design, std::uint64_t seed) {
    std::vector<EstimateReport> out;
    const std::string &e = spec.name;
    if (e == "oracle") {
        out.push_back(oracle(ds, spec.intercept));
    } else if (e == "naive") {
        out.push_back(naive(ds, spec.intercept));
    } else if (e == "penalized_full") {
        out.push_back(penalized_full(ds, spec.k, resolve_lambda(spec, ds.n()), spec.intercept));
    } else if (e == "flexible_penalized") {
        out.push_back(flexible_penalized(ds, spec.k, spec.degree, resolve_lambda(spec, ds.n()),
                                         spec.intercept));
    } else if (e == "posterior_mean") {
        out.push_back(posterior_mean_deconfounder(ds, spec.k, spec.n_draws, seed));
    } else if (e == "white_noised") {
        out.push_back(white_noised_deconfounder(ds, spec.k, spec.psi2, seed));
    } else if (e == "subset") {
        out.push_back(subset_deconfounder(ds, resolve_focal(spec, design), spec.k));
    } else if (e == "subset_each") {
        out.push_back(subset_each(ds, spec.k));
    } else if (e == "pca_cv_ridge") {
        CvRidgeOptions opt;
        opt.folds = spec.folds;
        opt.rule = spec.cv_rule;
        opt.center_pca = spec.center;
        out.push_back(pca_cv_ridge(ds, spec.k, seed, opt));
    } else if (e == "quadratic_pair") {
        auto [d, p] = quadratic_pair(ds, spec.center);
        out.push_back(std::move(d));
        out.push_back(std::move(p));
    } else if (e == "quadratic_naive") {
        out.push_back(quadratic_naive(ds));
    } else if (e == "logistic_suite") {
        auto [nv, dc] = logistic_suite(ds, spec.psi2, seed);
        out.push_back(std::move(nv));
        out.push_back(std::move(dc));
    } else if (e == "semiparametric_naive") {
        Basis b{spec.basis_degree, spec.basis_degree > 1 || spec.intercept};
        out.push_back(semiparametric_naive(ds, resolve_focal(spec, design), b));
    } else {
        throw SpecificationError("unknown estimator: " + e);
    }
    auto labels = report_labels(spec);
    for (size_t i = 0; i < out.size(); ++i) out[i].label = labels[i];
    return out;
}

DgpSpec resolved_linear_spec(const DesignSpec &design, std::uint64_t root) {
    if (design.kind == DesignKind::LinearLinear) return design.linear;
    if (design.kind == DesignKind::SubsetSim)
        return make_subset_sim_spec(design.subset_m, design.beta_rule,
                                    derive_seed(root, {kBetaStream}));
    throw UnsupportedComparisonError("design is not linear-linear");
}

Dataset sample_design(const DesignSpec &design, Index n, std::uint64_t root, Index r,
                      VectorXd &beta, DgpSpec *linear_out) {
    const auto ur = static_cast<std::uint64_t>(r);
    const std::uint64_t data_seed = derive_seed(root, {ur, 0});
    switch (design.kind) {
    case DesignKind::LinearLinear:
        beta = design.linear.beta;
        if (linear_out) *linear_out = design.linear;
        return sample_linear_linear(design.linear, n, data_seed);
    case DesignKind::SubsetSim: {
        std::uint64_t beta_seed = (design.redraw_beta && design.beta_rule.stochastic())
                                      ? derive_seed(root, {ur, kBetaStream})
                                      : derive_seed(root, {kBetaStream});
        DgpSpec spec = make_subset_sim_spec(design.subset_m, design.beta_rule, beta_seed);
        beta = spec.beta;
        if (linear_out) *linear_out = spec;
        return sample_linear_linear(spec, n, data_seed);
    }
    case DesignKind::Quadratic:
        beta = quadratic_treatment_effects(design.quadratic_m);
        return sample_quadratic(design.rho, n, data_seed, design.quadratic_m);
    case DesignKind::Logistic:
        beta = design.logistic.treatment_effects();
        return sample_logistic(n, data_seed, design.logistic);
    }
    throw SpecificationError("unknown design");
}

double compensated_sum(const std::vector<double> &x) {
    double sum = 0.0, c = 0.0;
    for (double v : x) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            c += (sum - t) + v;
        else
            c += (v - t) + sum;
        sum = t;
    }
    return sum + c;
}

const CoefSummary &SimulationSummary::at(const std::string &estimator, Index coef_index) const {
    for (const auto &r : rows)
        if (r.estimator == estimator && r.coef_index == coef_index) return r;
    throw SpecificationError("no summary row for " + estimator + "[" +
                             std::to_string(coef_index + 1) + "]");
}

namespace {

struct RepResult {
    VectorXd beta;
    std::vector<std::optional<EstimateReport>> reports;  // one per label
    std::vector<std::string> errors;
};

CoefSummary summarize(const std::string &label, Index j, const std::vector<RepResult> &reps,
                      size_t slot) {
    std::vector<double> err, err2, cover, truth, all;
    Index coef_index = j;
    for (const auto &r : reps) {
        const auto &rep = r.reports[slot];
        if (!rep) {
            all.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        Index target = rep->target_indices[static_cast<size_t>(j)];
        coef_index = target;
        const double b = r.beta[target];
        const double e = rep->coefficients[j] - b;
        err.push_back(e);
        all.push_back(e);
        err2.push_back(e * e);
        cover.push_back(rep->ci_low[j] <= b && b <= rep->ci_high[j] ? 1.0 : 0.0);
        truth.push_back(b);
    }
    CoefSummary s;
    s.estimator = label;
    s.coef_index = coef_index;
    s.errors = std::move(all);
    const auto R = static_cast<Index>(err.size());
    s.successes = R;
    if (R == 0) {
        s.bias = s.sd = s.rmse = s.coverage = std::numeric_limits<double>::quiet_NaN();
        s.mc_se_bias = s.mc_se_sd = s.mc_se_rmse = s.mc_se_coverage = s.bias;
        return s;
    }
    const double dR = static_cast<double>(R);
    s.truth = compensated_sum(truth) / dR;
    s.bias = compensated_sum(err) / dR;
    const double mse = compensated_sum(err2) / dR;
    s.rmse = std::sqrt(mse);
    s.coverage = compensated_sum(cover) / dR;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (R >= 2) {
        std::vector<double> dev2(err.size()), sq_dev(err2.size());
        for (size_t i = 0; i < err.size(); ++i) {
            dev2[i] = (err[i] - s.bias) * (err[i] - s.bias);
            sq_dev[i] = (err2[i] - mse) * (err2[i] - mse);
        }
        s.sd = std::sqrt(compensated_sum(dev2) / (dR - 1.0));
        s.mc_se_bias = s.sd / std::sqrt(dR);
        s.mc_se_sd = s.sd / std::sqrt(2.0 * (dR - 1.0));
        const double sd_sq = std::sqrt(compensated_sum(sq_dev) / (dR - 1.0));
        s.mc_se_rmse = s.rmse > 0.0 ? sd_sq / (2.0 * s.rmse * std::sqrt(dR)) : 0.0;
        s.mc_se_coverage = std::sqrt(s.coverage * (1.0 - s.coverage) / dR);
    } else {
        s.sd = s.mc_se_bias = s.mc_se_sd = s.mc_se_rmse = s.mc_se_coverage = nan;
    }
    return s;
}

}  // namespace

SimulationSummary run_experiment(const ExperimentConfig &cfg) {
    cfg.validate();
    std::vector<std::string> labels;
    std::vector<size_t> first_slot;
    for (const auto &e : cfg.estimators) {
        first_slot.push_back(labels.size());
        for (auto &l : report_labels(e)) labels.push_back(l);
    }
    for (size_t a = 0; a < labels.size(); ++a)
        for (size_t b = a + 1; b < labels.size(); ++b)
            if (labels[a] == labels[b])
                throw ConfigError("duplicate estimator label: " + labels[a] +
                                  " (set distinct labels)");

    std::vector<RepResult> results(static_cast<size_t>(cfg.reps));
    std::atomic<Index> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto worker = [&]() {
        for (;;) {
            const Index r = next.fetch_add(1);
            if (r >= cfg.reps) return;
            try {
                RepResult &out = results[static_cast<size_t>(r)];
                out.reports.assign(labels.size(), std::nullopt);
                out.errors.assign(labels.size(), std::string());
                Dataset ds = sample_design(cfg.design, cfg.n, cfg.seed, r, out.beta);
                for (size_t e = 0; e < cfg.estimators.size(); ++e) {
                    const auto &spec = cfg.estimators[e];
                    const std::uint64_t seed =
                        derive_seed(cfg.seed, {static_cast<std::uint64_t>(r), e + 1});
                    const size_t nlab = report_labels(spec).size();
                    try {
                        auto reps = run_estimator(spec, ds, cfg.design, seed);
                        for (size_t i = 0; i < reps.size(); ++i)
                            out.reports[first_slot[e] + i] = std::move(reps[i]);
                    } catch (const Error &err) {
                        for (size_t i = 0; i < nlab; ++i) out.errors[first_slot[e] + i] = err.what();
                    }
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                next.store(cfg.reps);
                return;
            }
        }
    };

    unsigned threads = cfg.threads;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<Index>(threads, cfg.reps));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    SimulationSummary summary;
    summary.reps = cfg.reps;
    summary.n = cfg.n;
    summary.seed = cfg.seed;
    for (size_t slot = 0; slot < labels.size(); ++slot) {
        FailureCount fc;
        fc.estimator = labels[slot];
        Index width = 0;
        for (const auto &r : results) {
            if (r.reports[slot]) {
                ++fc.successes;
                width = r.reports[slot]->coefficients.size();
            } else {
                ++fc.failures;
                fc.last_error = r.errors[slot];
            }
        }
        if (static_cast<double>(fc.failures) > 0.2 * static_cast<double>(cfg.reps))
            throw AggregateInstabilityError(
                labels[slot], labels[slot] + " failed on " + std::to_string(fc.failures) + " of " +
                                  std::to_string(cfg.reps) + " replications: " + fc.last_error);
        for (Index j = 0; j < width; ++j) {
            CoefSummary cs = summarize(labels[slot], j, results, slot);
            cs.failures = fc.failures;
            summary.rows.push_back(cs);
        }
        summary.failures.push_back(fc);
    }

    if (cfg.compare_oracle && is_linear_design(cfg.design.kind)) {
        for (const auto &spec : cfg.estimators) {
            ExperimentConfig one = cfg;
            one.estimators = {spec};
            std::vector<OracleDeviation> devs;
            try {
                devs = compare_oracle(summary, one);
            } catch (const UnsupportedComparisonError &) {
                continue;
            }
            for (const auto &dev : devs) {
                for (auto &row : summary.rows) {
                    if (row.estimator == dev.estimator && row.coef_index == dev.coef_index) {
                        row.oracle_bias = dev.oracle;
                        row.gap = dev.gap;
                        row.pass = dev.pass;
                    }
                }
            }
        }
    }
    return summary;
}

VectorXd oracle_bias_for(const EstimatorSpec &spec, const DgpSpec &dgp, Index n) {
    const std::string &e = spec.name;
    if (e == "oracle") return VectorXd::Zero(dgp.m);
    if (e == "naive") return naive_bias(dgp.theta, dgp.gamma, dgp.sigma2);
    if (e == "posterior_mean") return posterior_mean_bias(dgp.theta, dgp.gamma, dgp.sigma2);
    if (e == "penalized_full") {
        const double lambda = resolve_lambda(spec, n);
        return penalized_bias(dgp.theta, dgp.beta, dgp.gamma, dgp.sigma2,
                              lambda / static_cast<double>(n));
    }
    if (e == "white_noised") return white_noised_bias(dgp.theta, dgp.gamma, dgp.sigma2, spec.psi2);
    if (e == "subset" || e == "subset_each") {
        std::vector<std::vector<Index>> sets;
        if (e == "subset") {
            sets.push_back(!spec.focal.empty() ? spec.focal
                           : dgp.focal_idx     ? *dgp.focal_idx
                                               : std::vector<Index>{0});
        } else {
            for (Index j = 0; j < dgp.m; ++j) sets.push_back({j});
        }
        std::vector<double> vals;
        for (const auto &F : sets) {
            auto N = complement_indices(dgp.m, F);
            VectorXd b = subset_bias(select_columns(dgp.theta, F), select_columns(dgp.theta, N),
                                     select_entries(dgp.beta, N), dgp.sigma2);
            vals.insert(vals.end(), b.data(), b.data() + b.size());
        }
        return Eigen::Map<VectorXd>(vals.data(), static_cast<Index>(vals.size()));
    }
    if (e == "semiparametric_naive" && spec.basis_degree == 1 && !spec.intercept) {
        std::vector<Index> F = !spec.focal.empty() ? spec.focal
                               : dgp.focal_idx     ? *dgp.focal_idx
                                                   : std::vector<Index>{0};
        auto N = complement_indices(dgp.m, F);
        return naive_focal_bias(select_columns(dgp.theta, F), select_columns(dgp.theta, N),
                                dgp.gamma, dgp.sigma2);
    }
    throw UnsupportedComparisonError("no closed-form bias registered for " + e);
}

std::vector<OracleDeviation> compare_oracle(const SimulationSummary &summary,
                                            const ExperimentConfig &cfg) {
    if (!is_linear_design(cfg.design.kind))
        throw UnsupportedComparisonError("closed-form comparison needs a linear-linear design");
    if (cfg.design.kind == DesignKind::SubsetSim && cfg.design.redraw_beta &&
        cfg.design.beta_rule.stochastic())
        throw UnsupportedComparisonError("beta redrawn per replication has no single oracle");
    DgpSpec dgp = resolved_linear_spec(cfg.design, cfg.seed);
    std::vector<OracleDeviation> out;
    for (const auto &spec : cfg.estimators) {
        VectorXd ob = oracle_bias_for(spec, dgp, cfg.n);
        const std::string label = report_labels(spec).front();
        Index j = 0;
        for (const auto &row : summary.rows) {
            if (row.estimator != label) continue;
            if (j >= ob.size()) break;
            OracleDeviation d;
            d.estimator = label;
            d.coef_index = row.coef_index;
            d.empirical = row.bias;
            d.oracle = ob[j];
            d.gap = std::abs(row.bias - ob[j]);
            d.mc_se = row.mc_se_bias;
            d.pass = d.gap <= 3.0 * row.mc_se_bias;
            out.push_back(d);
            ++j;
        }
    }
    return out;
}

ExperimentConfig apply_axis(const ExperimentConfig &cfg, SweepAxis axis, double value) {
    ExperimentConfig c = cfg;
    switch (axis) {
    case SweepAxis::M: {
        const auto m = static_cast<Index>(std::llround(value));
        if (static_cast<double>(m) != value || m < 1) throw ConfigError("m grid values must be positive integers");
        if (c.design.kind == DesignKind::SubsetSim)
            c.design.subset_m = m;
        else if (c.design.kind == DesignKind::Quadratic)
            c.design.quadratic_m = m;
        else
            throw ConfigError("m axis applies to the subset and quadratic designs");
        break;
    }
    case SweepAxis::Rho:
        if (c.design.kind == DesignKind::Quadratic) {
            c.design.rho = value;
        } else if (c.design.kind == DesignKind::Logistic) {
            c.design.rho = value;
            c.design.logistic.rho = value;
        } else {
            throw ConfigError("rho axis applies to the quadratic and logistic designs");
        }
        break;
    case SweepAxis::Psi: {
        bool any = false;
        for (auto &e : c.estimators) {
            if (e.name == "white_noised" || e.name == "logistic_suite") {
                e.psi2 = value;
                any = true;
            }
        }
        if (!any) throw ConfigError("psi axis needs a white_noised or logistic_suite estimator");
        break;
    }
    }
    return c;
}

std::vector<SweepPoint> sweep(const ExperimentConfig &cfg, SweepAxis axis,
                              const std::vector<double> &values) {
    std::vector<SweepPoint> out;
    for (size_t i = 0; i < values.size(); ++i) {
        SweepPoint p;
        p.value = values[i];
        try {
            ExperimentConfig c = apply_axis(cfg, axis, values[i]);
            c.seed = cfg.seed + i;
            p.summary = run_experiment(c);
        } catch (const Error &e) {
            p.error = e.what();
        }
        out.push_back(std::move(p));
    }
    return out;
}

RmseDifference rmse_difference(const SimulationSummary &s, const std::string &a,
                               const std::string &b) {
    std::vector<const CoefSummary *> ra, rb;
    for (const auto &r : s.rows) {
        if (r.estimator == a) ra.push_back(&r);
        if (r.estimator == b) rb.push_back(&r);
    }
    if (ra.empty() || ra.size() != rb.size())
        throw SpecificationError("rmse_difference needs matching rows for " + a + " and " + b);
    const size_t reps = ra[0]->errors.size();
    std::vector<bool> keep(reps, true);
    for (size_t j = 0; j < ra.size(); ++j)
        for (size_t r = 0; r < reps; ++r)
            if (!std::isfinite(ra[j]->errors[r]) || !std::isfinite(rb[j]->errors[r])) keep[r] = false;

    // rmse_a - rmse_b = (mse_a - mse_b) / (rmse_a + rmse_b) exactly, so the
    // mean of d below reproduces the point difference.
    std::vector<double> d(reps, 0.0);
    for (size_t j = 0; j < ra.size(); ++j) {
        std::vector<double> ea, eb;
        for (size_t r = 0; r < reps; ++r) {
            if (!keep[r]) continue;
            ea.push_back(ra[j]->errors[r] * ra[j]->errors[r]);
            eb.push_back(rb[j]->errors[r] * rb[j]->errors[r]);
        }
        if (ea.empty()) throw SpecificationError("no joint successes for " + a + " and " + b);
        const double denom = std::sqrt(compensated_sum(ea) / static_cast<double>(ea.size())) +
                             std::sqrt(compensated_sum(eb) / static_cast<double>(eb.size()));
        if (denom == 0.0) continue;
        for (size_t r = 0; r < reps; ++r)
            if (keep[r])
                d[r] += (ra[j]->errors[r] * ra[j]->errors[r] - rb[j]->errors[r] * rb[j]->errors[r]) /
                        denom / static_cast<double>(ra.size());
    }
    std::vector<double> kept;
    for (size_t r = 0; r < reps; ++r)
        if (keep[r]) kept.push_back(d[r]);
    const double R = static_cast<double>(kept.size());
    RmseDifference out;
    out.diff = compensated_sum(kept) / R;
    if (kept.size() >= 2) {
        std::vector<double> dev(kept.size());
        for (size_t i = 0; i < kept.size(); ++i) dev[i] = (kept[i] - out.diff) * (kept[i] - out.diff);
        out.mc_se = std::sqrt(compensated_sum(dev) / (R - 1.0) / R);
    }
    return out;
}

double mean_rmse(const SimulationSummary &s, const std::string &estimator) {
    std::vector<double> v;
    for (const auto &r : s.rows)
        if (r.estimator == estimator) v.push_back(r.rmse);
    if (v.empty()) throw SpecificationError("no summary rows for " + estimator);
    return compensated_sum(v) / static_cast<double>(v.size());
}

std::string format_number(double x) {
    if (!std::isfinite(x)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

namespace {

std::string opt_number(const std::optional<double> &x) { return x ? format_number(*x) : "NA"; }

std::string opt_pass(const std::optional<bool> &x) {
    if (!x) return "NA";
    return *x ? "true" : "false";
}

}  // namespace

void write_summary_csv(std::ostream &out, const SimulationSummary &s) {
    out << "estimator,coef_index,bias,sd,rmse,coverage,mc_se_bias,oracle_bias,gap,pass\n";
    for (const auto &r : s.rows) {
        out << r.estimator << ',' << r.coef_index + 1 << ',' << format_number(r.bias) << ','
            << format_number(r.sd) << ',' << format_number(r.rmse) << ','
            << format_number(r.coverage) << ',' << format_number(r.mc_se_bias) << ','
            << opt_number(r.oracle_bias) << ',' << opt_number(r.gap) << ',' << opt_pass(r.pass)
            << '\n';
    }
}

void write_summary_table(std::ostream &out, const SimulationSummary &s) {
    size_t w = 9;
    for (const auto &r : s.rows) w = std::max(w, r.estimator.size());
    auto fixed = [](double x) {
        if (!std::isfinite(x)) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", x);
        return std::string(buf);
    };
    out << std::left << std::setw(static_cast<int>(w)) << "estimator" << "  coef" << std::right
        << std::setw(9) << "bias" << std::setw(9) << "sd" << std::setw(9) << "rmse"
        << std::setw(9) << "cover" << std::setw(9) << "oracle" << std::setw(6) << "pass" << '\n';
    for (const auto &r : s.rows) {
        out << std::left << std::setw(static_cast<int>(w)) << r.estimator << std::right
            << std::setw(6) << r.coef_index + 1 << std::setw(9) << fixed(r.bias) << std::setw(9)
            << fixed(r.sd) << std::setw(9) << fixed(r.rmse) << std::setw(9) << fixed(r.coverage)
            << std::setw(9) << (r.oracle_bias ? fixed(*r.oracle_bias) : "NA") << std::setw(6)
            << opt_pass(r.pass) << '\n';
    }
}

}  // namespace multicause
