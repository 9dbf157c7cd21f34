#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "multicause/error.hpp"
#include "multicause/model.hpp"
#include "oracles.hpp"

using namespace multicause;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

DgpSpec small_spec() {
    DgpSpec s;
    s.k = 2;
    s.m = 3;
    s.theta = MatrixXd(2, 3);
    s.theta << 1.0, 0.5, -0.3, 0.2, -0.7, 0.9;
    s.beta = VectorXd(3);
    s.beta << 0.4, -0.2, 0.1;
    s.gamma = VectorXd(2);
    s.gamma << 0.8, -0.5;
    s.sigma2 = 0.6;
    s.omega2 = 0.3;
    return s;
}

}  // namespace

TEST_CASE("spec validation rejects malformed parameters", "[model]") {
    DgpSpec s = small_spec();
    REQUIRE_NOTHROW(s.validate());

    DgpSpec bad = s;
    bad.beta = VectorXd::Zero(2);
    REQUIRE_THROWS_AS(bad.validate(), SpecificationError);

    bad = s;
    bad.sigma2 = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), SpecificationError);

    bad = s;
    bad.omega2 = -1.0;
    REQUIRE_THROWS_AS(bad.validate(), SpecificationError);

    bad = s;
    bad.theta(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(bad.validate(), SpecificationError);

    bad = s;
    bad.focal_idx = std::vector<Index>{3};
    REQUIRE_THROWS_AS(bad.validate(), SpecificationError);

    bad = s;
    bad.focal_idx = std::vector<Index>{1, 1};
    REQUIRE_THROWS_AS(bad.validate(), SpecificationError);
}

TEST_CASE("confounding sequences", "[model]") {
    MatrixXd c = build_theta(ConfoundingSequence::constant(10.0), 5);
    REQUIRE(c.rows() == 1);
    REQUIRE(c.cols() == 5);
    REQUIRE((c.array() == 10.0).all());

    MatrixXd w = build_theta(ConfoundingSequence::weak(), 4);
    for (Index j = 0; j < 4; ++j) REQUIRE_THAT(w(0, j), WithinRel(1.0 / double((j + 1) * (j + 1)), 1e-15));

    REQUIRE_THROWS_AS(build_theta(ConfoundingSequence::constant(1.0, 3), 2), DimensionError);

    // Partial sums of 1/j^4 increase toward the limit and stay below it.
    const double limit = weak_sequence_limit();
    REQUIRE_THAT(limit, WithinRel(std::pow(M_PI, 4) / 90.0, 1e-15));
    double prev = 0.0;
    for (Index m : {1, 10, 100, 1000}) {
        MatrixXd t = build_theta(ConfoundingSequence::weak(), m);
        const double s = t.squaredNorm();
        REQUIRE(s > prev);
        REQUIRE(s < limit);
        prev = s;
    }
    REQUIRE_THAT(prev, WithinAbs(limit, 1e-9));
}

TEST_CASE("linear-linear sampling is seeded and has the model moments", "[model]") {
    const DgpSpec s = small_spec();
    Dataset a = sample_linear_linear(s, 500, 42);
    Dataset b = sample_linear_linear(s, 500, 42);
    Dataset c = sample_linear_linear(s, 500, 43);
    REQUIRE(a.A == b.A);
    REQUIRE(a.Y == b.Y);
    REQUIRE(a.A != c.A);
    REQUIRE(a.n() == 500);
    REQUIRE(a.k() == 2);
    REQUIRE(a.m() == 3);

    const Index n = 200000;
    Dataset big = sample_linear_linear(s, n, 7);
    const MatrixXd second = big.A.transpose() * big.A / double(n);
    const MatrixXd expect = oracles::sigma_A(s.theta, s.sigma2);
    REQUIRE((second - expect).cwiseAbs().maxCoeff() < 0.03);

    // Residual of Y after removing the true signal has variance omega2.
    const VectorXd eps = big.Y - big.A * s.beta - big.Z * s.gamma;
    REQUIRE_THAT(eps.squaredNorm() / double(n), WithinAbs(s.omega2, 0.01));
}

TEST_CASE("medical study design", "[model]") {
    DgpSpec s = medical_study_spec();
    REQUIRE(s.k == 1);
    REQUIRE(s.m == 2);
    REQUIRE(s.theta(0, 0) == 0.3);
    REQUIRE(s.theta(0, 1) == 0.4);
    REQUIRE(s.beta[0] == 0.0);
    REQUIRE(s.beta[1] == 0.3);
    REQUIRE(s.gamma[0] == 0.5);
    REQUIRE(s.sigma2 == 1.0);
    REQUIRE(s.omega2 == 1.0);
    REQUIRE(medical_study_spec(-0.3, 0.3).beta[0] == -0.3);
}

TEST_CASE("quadratic design", "[model]") {
    REQUIRE_THROWS_AS(sample_quadratic(-0.5, 10, 1, 2), DomainError);
    REQUIRE_THROWS_AS(sample_quadratic(1.0, 10, 1, 2), DomainError);
    REQUIRE_NOTHROW(sample_quadratic(-0.3, 10, 1, 2));
    REQUIRE_THROWS_AS(sample_quadratic(-0.3, 10, 1, 4), DomainError);

    VectorXd b = quadratic_treatment_effects(5);
    REQUIRE(b[0] == 0.2);
    REQUIRE(b[1] == 1.0);
    REQUIRE(b[4] == 0.2);

    const Index n = 200000;
    Dataset ds = sample_quadratic(0.4, n, 9, 2);
    MatrixXd all(n, 3);
    all << ds.A, ds.Z;
    const MatrixXd corr = all.transpose() * all / double(n);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j)
            REQUIRE_THAT(corr(i, j), WithinAbs(i == j ? 1.0 : 0.4, 0.02));
    // E[Y] = 0.4 + 0.2 + 1.0 + 0.9 with unit second moments.
    REQUIRE_THAT(ds.Y.mean(), WithinAbs(2.5, 0.02));
}

TEST_CASE("logistic design", "[model]") {
    REQUIRE_THAT(logistic(0.0), WithinAbs(0.5, 1e-15));
    REQUIRE(logistic(-800.0) >= 0.0);
    REQUIRE(logistic(800.0) == 1.0);
    REQUIRE(std::isfinite(logistic(-800.0)));
    REQUIRE_THAT(logistic(2.0) + logistic(-2.0), WithinAbs(1.0, 1e-15));

    Dataset ds = sample_logistic(20000, 3);
    REQUIRE(ds.m() == 2);
    REQUIRE(((ds.Y.array() == 0.0) || (ds.Y.array() == 1.0)).all());
    const double p = ds.Y.mean();
    REQUIRE(p > 0.5);
    REQUIRE(p < 0.8);
}

TEST_CASE("subset simulation treatment effects", "[model]") {
    DgpSpec c = make_subset_sim_spec(4, BetaRule::constant(10.0), 1);
    REQUIRE((c.beta.array() == 10.0).all());
    REQUIRE(c.theta(0, 3) == 10.0);
    REQUIRE(c.sigma2 == 0.01);
    REQUIRE(c.omega2 == 0.01);
    REQUIRE(c.gamma[0] == 10.0);
    REQUIRE(c.focal_idx->front() == 0);

    DgpSpec r = make_subset_sim_spec(5, BetaRule::reciprocal(), 1);
    for (Index j = 0; j < 5; ++j) REQUIRE_THAT(r.beta[j], WithinRel(1.0 / double(j + 1), 1e-15));

    DgpSpec n1 = make_subset_sim_spec(50, BetaRule::normal(1.0, 4.0), 5);
    DgpSpec n2 = make_subset_sim_spec(50, BetaRule::normal(1.0, 4.0), 5);
    DgpSpec n3 = make_subset_sim_spec(50, BetaRule::normal(1.0, 4.0), 6);
    REQUIRE(n1.beta == n2.beta);
    REQUIRE(n1.beta != n3.beta);
    REQUIRE(BetaRule::normal(1.0).stochastic());
    REQUIRE_FALSE(BetaRule::constant(1.0).stochastic());
}

TEST_CASE("dataset CSV round trip is exact", "[model]") {
    Dataset ds = sample_linear_linear(small_spec(), 50, 11);
    std::stringstream ss;
    write_dataset_csv(ss, ds);
    const std::string text = ss.str();
    REQUIRE(text.rfind("z_1,z_2,a_1,a_2,a_3,y\n", 0) == 0);
    Dataset back = read_dataset_csv(ss);
    REQUIRE(back.Z == ds.Z);
    REQUIRE(back.A == ds.A);
    REQUIRE(back.Y == ds.Y);

    std::stringstream bad("a_1,q\n1,2\n");
    REQUIRE_THROWS_AS(read_dataset_csv(bad), DataError);
    std::stringstream ragged("a_1,y\n1,2\n3\n");
    REQUIRE_THROWS_AS(read_dataset_csv(ragged), DataError);
}
