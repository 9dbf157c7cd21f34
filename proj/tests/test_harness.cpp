#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "multicause/asymptotics.hpp"
#include "multicause/config.hpp"
#include "multicause/error.hpp"
#include "multicause/harness.hpp"
#include "multicause/replicate.hpp"
#include "oracles.hpp"

using namespace multicause;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ExperimentConfig med_config(Index reps, std::uint64_t seed) {
    ExperimentConfig c;
    c.design = DesignSpec::linear_linear(medical_study_spec());
    c.estimators = {EstimatorSpec::named("naive"), EstimatorSpec::named("oracle")};
    c.n = 500;
    c.reps = reps;
    c.seed = seed;
    c.threads = 1;
    return c;
}

}  // namespace

TEST_CASE("summary statistics are internally consistent", "[harness]") {
    auto s = run_experiment(med_config(60, 4));
    REQUIRE(s.rows.size() == 4);
    for (const auto &row : s.rows) {
        const double R = double(row.successes);
        REQUIRE(row.successes == 60);
        REQUIRE(row.failures == 0);
        REQUIRE_THAT(row.rmse * row.rmse, WithinAbs(row.bias * row.bias + row.sd * row.sd * (R - 1) / R, 1e-10));
        REQUIRE(row.coverage >= 0.0);
        REQUIRE(row.coverage <= 1.0);
        REQUIRE_THAT(row.mc_se_bias, WithinRel(row.sd / std::sqrt(R), 1e-10));
        REQUIRE(row.errors.size() == 60);
        std::vector<double> e(row.errors.begin(), row.errors.end());
        REQUIRE_THAT(oracles::mean(e), WithinAbs(row.bias, 1e-12));
    }
    for (const auto &f : s.failures) REQUIRE(f.failures + f.successes == 60);
    REQUIRE_THROWS_AS(s.at("naive", 5), SpecificationError);
}

TEST_CASE("one replication leaves the spread undefined", "[harness]") {
    auto s = run_experiment(med_config(1, 4));
    REQUIRE(std::isnan(s.at("naive", 0).sd));
    REQUIRE(std::isfinite(s.at("naive", 0).bias));
}

TEST_CASE("results do not depend on the thread count", "[harness]") {
    ExperimentConfig c = med_config(40, 12);
    c.estimators.push_back(EstimatorSpec::named("posterior_mean"));
    c.estimators.push_back(EstimatorSpec::named("pca_cv_ridge"));
    auto a = run_experiment(c);
    c.threads = 4;
    auto b = run_experiment(c);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        REQUIRE(a.rows[i].bias == b.rows[i].bias);
        REQUIRE(a.rows[i].rmse == b.rows[i].rmse);
        REQUIRE(a.rows[i].coverage == b.rows[i].coverage);
    }
    std::ostringstream sa, sb;
    write_summary_csv(sa, a);
    write_summary_csv(sb, b);
    REQUIRE(sa.str() == sb.str());
}

TEST_CASE("an estimator failing on most replications aborts the run", "[harness]") {
    ExperimentConfig c = med_config(10, 1);
    EstimatorSpec e = EstimatorSpec::named("penalized_full");
    e.lambda = 0.0;
    c.estimators = {EstimatorSpec::named("naive"), e};
    try {
        run_experiment(c);
        FAIL("expected AggregateInstabilityError");
    } catch (const AggregateInstabilityError &err) {
        REQUIRE(err.estimator() == "penalized_full");
    }
}

TEST_CASE("oracle comparison", "[harness]") {
    ExperimentConfig c = med_config(200, 8);
    c.n = 2000;
    c.compare_oracle = true;
    auto s = run_experiment(c);
    auto dev = compare_oracle(s, c);
    REQUIRE(dev.size() == 4);
    const auto expect = naive_bias(c.design.linear.theta, c.design.linear.gamma, 1.0);
    for (const auto &d : dev) {
        REQUIRE(d.pass);
        if (d.estimator == "naive") REQUIRE_THAT(d.oracle, WithinAbs(expect[d.coef_index], 1e-12));
        if (d.estimator == "oracle") REQUIRE(d.oracle == 0.0);
    }
    REQUIRE(s.at("naive", 0).pass.has_value());

    ExperimentConfig q;
    q.design = DesignSpec::quadratic(0.4, 2);
    q.estimators = {EstimatorSpec::named("quadratic_naive")};
    q.reps = 2;
    q.n = 200;
    auto qs = run_experiment(q);
    REQUIRE_THROWS_AS(compare_oracle(qs, q), UnsupportedComparisonError);
}

TEST_CASE("a single-value sweep reproduces the direct run", "[harness]") {
    ExperimentConfig c;
    c.design = DesignSpec::subset_sim(10, BetaRule::reciprocal());
    c.estimators = {EstimatorSpec::named("naive"), EstimatorSpec::named("subset_each")};
    c.n = 400;
    c.reps = 12;
    c.seed = 30;
    c.threads = 1;
    auto pts = sweep(c, SweepAxis::M, {10.0});
    REQUIRE(pts.size() == 1);
    REQUIRE(pts[0].summary.has_value());
    auto direct = run_experiment(c);
    for (size_t i = 0; i < direct.rows.size(); ++i) REQUIRE(pts[0].summary->rows[i].bias == direct.rows[i].bias);

    // m = 2 is too small for subset_each; the error is kept and the sweep goes on.
    auto mixed = sweep(c, SweepAxis::M, {2.0, 5.0});
    REQUIRE_FALSE(mixed[0].summary.has_value());
    REQUIRE_FALSE(mixed[0].error.empty());
    REQUIRE(mixed[1].summary.has_value());
    REQUIRE(mixed[1].summary->seed == 31);
}

TEST_CASE("Monte Carlo standard error shrinks with replications", "[harness][mc]") {
    auto small = run_experiment(med_config(400, 21));
    auto large = run_experiment(med_config(800, 22));
    const double ratio = large.at("naive", 0).mc_se_bias / small.at("naive", 0).mc_se_bias;
    REQUIRE_THAT(ratio, WithinAbs(1.0 / std::sqrt(2.0), 0.15 / std::sqrt(2.0)));
}

TEST_CASE("paired rmse difference", "[harness]") {
    auto s = run_experiment(med_config(80, 5));
    auto d = rmse_difference(s, "naive", "oracle");
    const double direct = mean_rmse(s, "naive") - mean_rmse(s, "oracle");
    REQUIRE_THAT(d.diff, WithinAbs(direct, 1e-12));
    REQUIRE(d.mc_se > 0.0);
    auto self = rmse_difference(s, "naive", "naive");
    REQUIRE(self.diff == 0.0);
    REQUIRE(self.mc_se == 0.0);
}

TEST_CASE("summary CSV layout", "[harness]") {
    ExperimentConfig c = med_config(5, 2);
    auto s = run_experiment(c);
    std::ostringstream os;
    write_summary_csv(os, s);
    const std::string text = os.str();
    REQUIRE(text.rfind("estimator,coef_index,bias,sd,rmse,coverage,mc_se_bias,oracle_bias,gap,pass\n", 0) == 0);
    REQUIRE(text.find("\nnaive,1,") != std::string::npos);
    REQUIRE(text.find("\noracle,2,") != std::string::npos);
    // No oracle comparison requested.
    REQUIRE(text.find(",NA,NA,NA") != std::string::npos);
}

TEST_CASE("config parsing", "[harness][config]") {
    const std::string good = R"({
  "schema": 1,
  "design": {"type": "linear", "theta": [[1, 0.5, 0.2]], "beta": [1, 0, 0],
             "gamma": [1], "sigma2": 1, "omega2": 1, "focal_idx": [2]},
  "estimators": [{"name": "subset", "focal": [1]}, {"name": "penalized_full", "lambda": "sqrt_n"}],
  "n": 300, "reps": 7, "seed": 9
})";
    ExperimentConfig c = parse_config(good);
    REQUIRE(c.n == 300);
    REQUIRE(c.reps == 7);
    REQUIRE(c.seed == 9);
    REQUIRE(c.design.linear.m == 3);
    REQUIRE(c.design.linear.focal_idx->front() == 1);
    REQUIRE(c.estimators[0].focal == std::vector<Index>{0});
    REQUIRE(c.estimators[1].lambda < 0.0);

    REQUIRE_THROWS_AS(parse_config(R"({"design": {"type": "medical"}, "estimators": [{"name": "naive"}]})"),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config(R"({"schema": 2, "design": {"type": "medical"}, "estimators": [{"name": "naive"}]})"),
                      ConfigError);
    REQUIRE_THROWS_AS(
        parse_config(R"({"schema": 1, "design": {"type": "medical"}, "estimators": [{"name": "naive"}], "extra": 1})"),
        ConfigError);
    REQUIRE_THROWS_AS(
        parse_config(R"({"schema": 1, "design": {"type": "medical"}, "estimators": [{"name": "naive", "focal": [0]}]})"),
        ConfigError);
    REQUIRE_THROWS_AS(
        parse_config(R"({"schema": 1, "design": {"type": "quadratic"}, "estimators": [{"name": "naive"}]})"),
        ConfigError);
    REQUIRE_THROWS_WITH(parse_config("{\n  \"schema\": 1,\n  \"n\": ]\n}"), ContainsSubstring("line 3"));
}

TEST_CASE("replicate plans", "[harness][replicate]") {
    REQUIRE_THROWS_AS(replicate_plan("nope", {}), ConfigError);
    REQUIRE(replicate_plan("med1", {}).size() == 2);
    REQUIRE(replicate_plan("subset", {}).size() == 20);
    REQUIRE(replicate_plan("quadratic", {}).size() == 19);
    auto lg = replicate_plan("logistic", {});
    REQUIRE(lg.size() == 4);
    REQUIRE_THAT(lg[2].config.estimators[0].psi2, WithinRel(0.01, 1e-12));
    ReplicateOptions o;
    o.reps = 0;
    REQUIRE_THROWS_AS(replicate_plan("med1", o), ConfigError);

    o.reps = 3;
    o.n = 300;
    o.threads = 1;
    auto res = replicate("med1", o);
    REQUIRE(res.table.find("PCA+CV-Ridge") != std::string::npos);
    auto all = res.combined();
    REQUIRE(all.rows.size() == 16);
    REQUIRE(all.rows.front().estimator == "b1=0/naive");
}
