#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "multicause/estimators.hpp"
#include "multicause/model.hpp"

namespace multicause {

enum class DesignKind { LinearLinear, SubsetSim, Quadratic, Logistic };

struct DesignSpec {
    DesignKind kind = DesignKind::LinearLinear;

    DgpSpec linear;  // LinearLinear

    Index subset_m = 3;  // SubsetSim
    BetaRule beta_rule = BetaRule::constant(10.0);
    bool redraw_beta = false;

    double rho = 0.4;      // Quadratic and Logistic
    Index quadratic_m = 2;
    LogisticDesign logistic;

    static DesignSpec linear_linear(DgpSpec spec);
    static DesignSpec subset_sim(Index m, BetaRule rule, bool redraw = false);
    static DesignSpec quadratic(double rho, Index m = 2);
    static DesignSpec logistic_design(double rho = 0.4);
};

/// One estimator call. Only the parameters relevant to `name` are read.
struct EstimatorSpec {
    // oracle, naive, penalized_full, flexible_penalized, posterior_mean,
    // white_noised, subset, subset_each, pca_cv_ridge, quadratic_pair,
    // quadratic_naive, logistic_suite, semiparametric_naive
    std::string name;
    std::string label;  // optional prefix for the reported labels
    Index k = 1;
    double lambda = -1.0;  // negative: sqrt(n)
    int degree = 2;
    Index n_draws = 20;
    double psi2 = 1.0;
    std::vector<Index> focal;  // zero-based; empty: design focal set or {0}
    Index folds = 10;
    CvRule cv_rule = CvRule::OneStandardError;
    bool center = false;  // named("quadratic_pair") sets true
    bool intercept = false;
    int basis_degree = 1;

    static EstimatorSpec named(std::string name);
};

/// Names recognized by run_estimator.
const std::vector<std::string> &known_estimators();

struct ExperimentConfig {
    DesignSpec design;
    std::vector<EstimatorSpec> estimators;
    Index n = 1000;
    Index reps = 100;
    std::uint64_t seed = 1;
    bool compare_oracle = false;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

/// Labels of the reports an estimator spec produces (one or two).
std::vector<std::string> report_labels(const EstimatorSpec &spec);

/// Runs one estimator spec on a dataset; a negative lambda resolves to sqrt(n).
std::vector<EstimateReport> run_estimator(const EstimatorSpec &spec, const Dataset &ds,
                                          const DesignSpec &design, std::uint64_t seed);

/// Samples replication r of a design. `beta` receives the true treatment
/// effects for that draw.
Dataset sample_design(const DesignSpec &design, Index n, std::uint64_t root, Index r,
                      VectorXd &beta, DgpSpec *linear_out = nullptr);

/// The linear-linear spec a design resolves to (SubsetSim with draw-once beta).
/// Throws UnsupportedComparisonError for the nonlinear designs.
DgpSpec resolved_linear_spec(const DesignSpec &design, std::uint64_t root);

struct CoefSummary {
    std::string estimator;
    Index coef_index = 0;  // zero-based treatment index
    double truth = 0.0;    // mean true coefficient over successful replications
    double bias = 0.0;
    double sd = 0.0;       // NaN when fewer than two successes
    double rmse = 0.0;
    double coverage = 0.0;
    double mc_se_bias = 0.0;
    double mc_se_sd = 0.0;
    double mc_se_rmse = 0.0;
    double mc_se_coverage = 0.0;
    Index successes = 0;
    Index failures = 0;
    std::optional<double> oracle_bias;
    std::optional<double> gap;
    std::optional<bool> pass;
    std::vector<double> errors;  // estimate - truth per replication, NaN on failure
};

struct FailureCount {
    std::string estimator;
    Index failures = 0;
    Index successes = 0;
    std::string last_error;
};

struct SimulationSummary {
    Index reps = 0;
    Index n = 0;
    std::uint64_t seed = 0;
    std::vector<CoefSummary> rows;
    std::vector<FailureCount> failures;

    const CoefSummary &at(const std::string &estimator, Index coef_index) const;
};

/// Replications run in parallel; aggregation is an ordered, compensated
/// pass, so the summary does not depend on the thread count. Throws
/// AggregateInstabilityError when an estimator fails on more than 20% of
/// replications.
SimulationSummary run_experiment(const ExperimentConfig &cfg);

struct OracleDeviation {
    std::string estimator;
    Index coef_index = 0;
    double empirical = 0.0;
    double oracle = 0.0;
    double gap = 0.0;
    double mc_se = 0.0;
    bool pass = false;
};

/// Closed-form plim bias for a registered estimator on a linear-linear spec.
/// Throws UnsupportedComparisonError for estimators without one.
VectorXd oracle_bias_for(const EstimatorSpec &spec, const DgpSpec &dgp, Index n);

/// Gap between each empirical bias and its closed form; pass at 3 MC SEs.
std::vector<OracleDeviation> compare_oracle(const SimulationSummary &summary,
                                            const ExperimentConfig &cfg);

enum class SweepAxis { M, Rho, Psi };

struct SweepPoint {
    double value = 0.0;
    std::optional<SimulationSummary> summary;
    std::string error;
};

/// One run per grid value; point i uses root seed cfg.seed + i. Errors are
/// recorded per point and the sweep continues.
std::vector<SweepPoint> sweep(const ExperimentConfig &cfg, SweepAxis axis,
                              const std::vector<double> &values);

ExperimentConfig apply_axis(const ExperimentConfig &cfg, SweepAxis axis, double value);

/// `estimator,coef_index,bias,sd,rmse,coverage,mc_se_bias,oracle_bias,gap,pass`
/// with coef_index one-based and NA for undefined cells.
void write_summary_csv(std::ostream &out, const SimulationSummary &s);

/// Fixed-width rendering of the same rows.
void write_summary_table(std::ostream &out, const SimulationSummary &s);

/// Average over coefficients of rmse(a) - rmse(b), with a paired Monte Carlo
/// standard error. Uses replications where both estimators succeeded.
struct RmseDifference {
    double diff = 0.0;
    double mc_se = 0.0;
};
RmseDifference rmse_difference(const SimulationSummary &s, const std::string &a,
                               const std::string &b);

/// Mean of the per-coefficient rmse values of one estimator.
double mean_rmse(const SimulationSummary &s, const std::string &estimator);

std::string format_number(double x);

/// Neumaier-compensated sum.
double compensated_sum(const std::vector<double> &x);

}  // namespace multicause
