#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace multicause {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Parameters of the linear-linear data-generating process
///
///   Z_i ~ N(0, I_k),  A_i = Z_i' theta + nu_i,  nu_i ~ N(0, sigma2 I_m),
///   Y_i = A_i' beta + Z_i' gamma + eps_i,  eps_i ~ N(0, omega2).
///
/// Indices in focal_idx are zero-based column indices of A.
struct DgpSpec {
    Index k = 1;
    Index m = 1;
    MatrixXd theta;  // k x m
    VectorXd beta;   // m
    VectorXd gamma;  // k
    double sigma2 = 1.0;
    double omega2 = 1.0;
    std::optional<std::vector<Index>> focal_idx;

    /// Throws SpecificationError when any invariant is violated.
    void validate() const;

    Index focal_count() const { return focal_idx ? static_cast<Index>(focal_idx->size()) : 0; }
    Index nonfocal_count() const { return m - focal_count(); }
};

/// One sampled draw. Z is kept for the oracle estimator and diagnostics.
struct Dataset {
    MatrixXd Z;  // n x k
    MatrixXd A;  // n x m
    VectorXd Y;  // n

    Index n() const { return A.rows(); }
    Index k() const { return Z.cols(); }
    Index m() const { return A.cols(); }

    void validate() const;
};

/// Rule generating a loading matrix for a growing number of treatments.
struct ConfoundingSequence {
    enum class Rule { ConstantLoading, Weak, Custom };

    Rule rule = Rule::ConstantLoading;
    Index k = 1;
    double loading = 1.0;         // ConstantLoading
    std::vector<double> custom;   // Custom: per-column loadings, k = 1

    static ConfoundingSequence constant(double c, Index k = 1);
    static ConfoundingSequence weak();
    static ConfoundingSequence from_list(std::vector<double> loadings);
};

/// Loading matrix (k x m) for the first m treatments of the sequence.
/// ConstantLoading fills every entry with c; Weak puts 1/j^2 in column j.
MatrixXd build_theta(const ConfoundingSequence &seq, Index m);

/// Limit of theta theta' for the weak sequence with unit base: pi^4 / 90.
double weak_sequence_limit();

Dataset sample_linear_linear(const DgpSpec &spec, Index n, std::uint64_t seed);

/// Two-treatment simulation from the medical deconfounder study:
/// theta = (0.3, 0.4), gamma = 0.5, unit noise variances.
DgpSpec medical_study_spec(double beta1 = 0.0, double beta2 = 0.3);

// --- Quadratic tutorial --------------------------------------------------

inline constexpr double kQuadraticIntercept = 0.4;
inline constexpr double kQuadraticConfounderCoef = 0.9;

/// Treatment effects of the quadratic design. The two-treatment tutorial
/// uses (0.2, 1.0); larger m repeats that pattern.
VectorXd quadratic_treatment_effects(Index m);

/// (A_1..A_m, Z) equicorrelated normals with unit variances and pairwise
/// correlation rho; Y = 0.4 + sum_j b_j A_j^2 + 0.9 Z^2 + N(0, 1).
/// Throws DomainError when the correlation matrix is not positive definite
/// (rho <= -1/m or rho >= 1).
Dataset sample_quadratic(double rho, Index n, std::uint64_t seed, Index m = 2);

// --- Logistic tutorial ---------------------------------------------------

struct LogisticDesign {
    double intercept = 0.4;
    double coef_x1 = 0.2;
    double coef_x2 = 1.0;
    double coef_z = 0.9;
    double rho = 0.4;

    VectorXd treatment_effects() const;
};

/// (X1, X2, Z) trivariate normal with correlation design.rho;
/// Y ~ Bernoulli(logistic(intercept + b1 X1 + b2 X2 + bz Z)), stored as 0/1.
Dataset sample_logistic(Index n, std::uint64_t seed, const LogisticDesign &design = {});

double logistic(double x);

// --- Subset simulation ---------------------------------------------------

struct BetaRule {
    enum class Kind { Constant, Normal, Reciprocal };

    Kind kind = Kind::Constant;
    double value = 10.0;      // Constant
    double mean = 1.0;        // Normal
    double variance = 4.0;    // Normal

    static BetaRule constant(double c) { return {Kind::Constant, c, 0.0, 0.0}; }
    static BetaRule normal(double mean, double variance = 4.0) {
        return {Kind::Normal, 0.0, mean, variance};
    }
    static BetaRule reciprocal() { return {Kind::Reciprocal, 0.0, 0.0, 0.0}; }

    bool stochastic() const { return kind == Kind::Normal; }
};

/// k = 1, theta_j = 10, sigma2 = 0.01, gamma = 10, omega2 = 0.01,
/// focal_idx = {0}, beta drawn from the rule (seed only matters for Normal).
DgpSpec make_subset_sim_spec(Index m, const BetaRule &rule, std::uint64_t seed);

// --- CSV exchange --------------------------------------------------------

/// Header `z_1,...,z_k,a_1,...,a_m,y`, one row per observation.
void write_dataset_csv(std::ostream &out, const Dataset &ds);
Dataset read_dataset_csv(std::istream &in);

}  // namespace multicause
