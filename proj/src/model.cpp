#include "multicause/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "multicause/error.hpp"
#include "multicause/rng.hpp"

namespace multicause {

namespace {

bool all_finite(const MatrixXd &x) { return x.allFinite(); }

}  // namespace

void DgpSpec::validate() const {
    if (k < 1) throw SpecificationError("k must be at least 1");
    if (m < k) throw SpecificationError("m must be at least k");
    if (theta.rows() != k || theta.cols() != m)
        throw SpecificationError("theta must be k x m");
    if (beta.size() != m) throw SpecificationError("beta must have length m");
    if (gamma.size() != k) throw SpecificationError("gamma must have length k");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw SpecificationError("sigma2 must be positive");
    if (!(omega2 > 0.0) || !std::isfinite(omega2))
        throw SpecificationError("omega2 must be positive");
    if (!all_finite(theta) || !beta.allFinite() || !gamma.allFinite())
        throw SpecificationError("theta, beta and gamma must be finite");
    if (focal_idx) {
        if (focal_idx->empty()) throw SpecificationError("focal_idx must be nonempty");
        std::set<Index> seen;
        for (Index j : *focal_idx) {
            if (j < 0 || j >= m) throw SpecificationError("focal index out of range");
            if (!seen.insert(j).second) throw SpecificationError("duplicate focal index");
        }
    }
}

void Dataset::validate() const {
    if (A.rows() < 1) throw DataError("dataset has no rows");
    if (Z.rows() != A.rows() || Y.size() != A.rows())
        throw DataError("Z, A and Y row counts disagree");
}

ConfoundingSequence ConfoundingSequence::constant(double c, Index k) {
    ConfoundingSequence s;
    s.rule = Rule::ConstantLoading;
    s.k = k;
    s.loading = c;
    return s;
}

ConfoundingSequence ConfoundingSequence::weak() {
    ConfoundingSequence s;
    s.rule = Rule::Weak;
    s.k = 1;
    return s;
}

ConfoundingSequence ConfoundingSequence::from_list(std::vector<double> loadings) {
    ConfoundingSequence s;
    s.rule = Rule::Custom;
    s.k = 1;
    s.custom = std::move(loadings);
    return s;
}

MatrixXd build_theta(const ConfoundingSequence &seq, Index m) {
    if (seq.k < 1 || m < seq.k) throw DimensionError("build_theta requires m >= k >= 1");
    switch (seq.rule) {
    case ConfoundingSequence::Rule::ConstantLoading:
        return MatrixXd::Constant(seq.k, m, seq.loading);
    case ConfoundingSequence::Rule::Weak: {
        MatrixXd theta(1, m);
        for (Index j = 0; j < m; ++j) {
            double d = static_cast<double>(j + 1);
            theta(0, j) = 1.0 / (d * d);
        }
        return theta;
    }
    case ConfoundingSequence::Rule::Custom: {
        if (static_cast<Index>(seq.custom.size()) < m)
            throw DimensionError("custom sequence shorter than m");
        MatrixXd theta(1, m);
        for (Index j = 0; j < m; ++j) theta(0, j) = seq.custom[static_cast<size_t>(j)];
        return theta;
    }
    }
    throw SpecificationError("unknown confounding rule");
}

double weak_sequence_limit() {
    double pi2 = std::numbers::pi * std::numbers::pi;
    return pi2 * pi2 / 90.0;
}

Dataset sample_linear_linear(const DgpSpec &spec, Index n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw SpecificationError("n must be at least 1");
    Rng rng(seed);
    Dataset ds;
    ds.Z = rng.normal_matrix(n, spec.k);
    MatrixXd nu = rng.normal_matrix(n, spec.m);
    VectorXd eps = rng.normal_vector(n);
    ds.A = ds.Z * spec.theta + std::sqrt(spec.sigma2) * nu;
    ds.Y = ds.A * spec.beta + ds.Z * spec.gamma + std::sqrt(spec.omega2) * eps;
    return ds;
}

DgpSpec medical_study_spec(double beta1, double beta2) {
    DgpSpec s;
    s.k = 1;
    s.m = 2;
    s.theta = MatrixXd(1, 2);
    s.theta << 0.3, 0.4;
    s.beta = VectorXd(2);
    s.beta << beta1, beta2;
    s.gamma = VectorXd::Constant(1, 0.5);
    s.sigma2 = 1.0;
    s.omega2 = 1.0;
    return s;
}

VectorXd quadratic_treatment_effects(Index m) {
    if (m < 1) throw SpecificationError("m must be at least 1");
    VectorXd b(m);
    for (Index j = 0; j < m; ++j) b[j] = (j % 2 == 0) ? 0.2 : 1.0;
    return b;
}

namespace {

// Lower Cholesky factor of the equicorrelated matrix of size d.
MatrixXd equicorrelated_factor(Index d, double rho) {
    MatrixXd c = MatrixXd::Constant(d, d, rho);
    c.diagonal().setOnes();
    Eigen::LLT<MatrixXd> llt(c);
    if (llt.info() != Eigen::Success)
        throw DomainError("correlation matrix is not positive definite");
    return llt.matrixL();
}

}  // namespace

Dataset sample_quadratic(double rho, Index n, std::uint64_t seed, Index m) {
    if (n < 1) throw SpecificationError("n must be at least 1");
    if (m < 1) throw SpecificationError("m must be at least 1");
    if (!std::isfinite(rho) || rho >= 1.0 || rho * static_cast<double>(m) <= -1.0)
        throw DomainError("rho outside the positive-definite range (-1/m, 1)");
    MatrixXd L = equicorrelated_factor(m + 1, rho);

    Rng rng(seed);
    MatrixXd X = rng.normal_matrix(n, m + 1) * L.transpose();
    VectorXd eps = rng.normal_vector(n);

    Dataset ds;
    ds.A = X.leftCols(m);
    ds.Z = X.rightCols(1);
    VectorXd b = quadratic_treatment_effects(m);
    ds.Y = VectorXd::Constant(n, kQuadraticIntercept) + ds.A.array().square().matrix() * b +
           kQuadraticConfounderCoef * ds.Z.col(0).array().square().matrix() + eps;
    return ds;
}

VectorXd LogisticDesign::treatment_effects() const {
    VectorXd b(2);
    b << coef_x1, coef_x2;
    return b;
}

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

Dataset sample_logistic(Index n, std::uint64_t seed, const LogisticDesign &design) {
    if (n < 1) throw SpecificationError("n must be at least 1");
    if (!std::isfinite(design.rho) || design.rho >= 1.0 || design.rho <= -0.5)
        throw DomainError("rho outside the positive-definite range (-1/2, 1)");
    MatrixXd L = equicorrelated_factor(3, design.rho);

    Rng rng(seed);
    MatrixXd X = rng.normal_matrix(n, 3) * L.transpose();
    Dataset ds;
    ds.A = X.leftCols(2);
    ds.Z = X.rightCols(1);
    ds.Y.resize(n);
    for (Index i = 0; i < n; ++i) {
        double eta = design.intercept + design.coef_x1 * X(i, 0) + design.coef_x2 * X(i, 1) +
                     design.coef_z * X(i, 2);
        ds.Y[i] = rng.uniform() < logistic(eta) ? 1.0 : 0.0;
    }
    return ds;
}

DgpSpec make_subset_sim_spec(Index m, const BetaRule &rule, std::uint64_t seed) {
    if (m < 1) throw SpecificationError("m must be at least 1");
    DgpSpec s;
    s.k = 1;
    s.m = m;
    s.theta = MatrixXd::Constant(1, m, 10.0);
    s.gamma = VectorXd::Constant(1, 10.0);
    s.sigma2 = 0.01;
    s.omega2 = 0.01;
    s.focal_idx = std::vector<Index>{0};
    s.beta.resize(m);
    switch (rule.kind) {
    case BetaRule::Kind::Constant:
        s.beta.setConstant(rule.value);
        break;
    case BetaRule::Kind::Normal: {
        if (!(rule.variance >= 0.0)) throw SpecificationError("beta variance must be >= 0");
        Rng rng(seed);
        double sd = std::sqrt(rule.variance);
        for (Index j = 0; j < m; ++j) s.beta[j] = rule.mean + sd * rng.normal();
        break;
    }
    case BetaRule::Kind::Reciprocal:
        for (Index j = 0; j < m; ++j) s.beta[j] = 1.0 / static_cast<double>(j + 1);
        break;
    }
    return s;
}

void write_dataset_csv(std::ostream &out, const Dataset &ds) {
    ds.validate();
    const Index k = ds.k(), m = ds.m();
    for (Index j = 0; j < k; ++j) out << "z_" << j + 1 << ',';
    for (Index j = 0; j < m; ++j) out << "a_" << j + 1 << ',';
    out << "y\n";
    auto old_prec = out.precision(17);
    for (Index i = 0; i < ds.n(); ++i) {
        for (Index j = 0; j < k; ++j) out << ds.Z(i, j) << ',';
        for (Index j = 0; j < m; ++j) out << ds.A(i, j) << ',';
        out << ds.Y[i] << '\n';
    }
    out.precision(old_prec);
}

Dataset read_dataset_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty dataset file");
    Index k = 0, m = 0;
    bool saw_y = false;
    {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            if (saw_y) throw DataError("column after y in header");
            if (cell.rfind("z_", 0) == 0) {
                if (m > 0) throw DataError("z columns must precede a columns");
                ++k;
            } else if (cell.rfind("a_", 0) == 0) {
                ++m;
            } else if (cell == "y") {
                saw_y = true;
            } else {
                throw DataError("unexpected header column: " + cell);
            }
        }
    }
    if (!saw_y || m < 1) throw DataError("header must contain a_ columns and y");

    std::vector<double> values;
    Index rows = 0;
    const Index width = k + m + 1;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ls(line);
        std::string cell;
        Index count = 0;
        while (std::getline(ls, cell, ',')) {
            try {
                size_t used = 0;
                values.push_back(std::stod(cell, &used));
            } catch (const std::exception &) {
                throw DataError("non-numeric cell on data row " + std::to_string(rows + 1));
            }
            ++count;
        }
        if (count != width)
            throw DataError("wrong number of cells on data row " + std::to_string(rows + 1));
        ++rows;
    }
    Dataset ds;
    ds.Z.resize(rows, k);
    ds.A.resize(rows, m);
    ds.Y.resize(rows);
    for (Index i = 0; i < rows; ++i) {
        const double *row = values.data() + i * width;
        for (Index j = 0; j < k; ++j) ds.Z(i, j) = row[j];
        for (Index j = 0; j < m; ++j) ds.A(i, j) = row[k + j];
        ds.Y[i] = row[k + m];
    }
    ds.validate();
    return ds;
}

}  // namespace multicause
