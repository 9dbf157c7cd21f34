#include "multicause/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "multicause/error.hpp"

namespace multicause {

using nlohmann::json;

namespace {

void check_keys(const json &obj, const std::set<std::string> &allowed, const std::string &where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

const json &require(const json &obj, const std::string &key, const std::string &where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing key '" + key + "' in " + where);
    return *it;
}

double number(const json &v, const std::string &what) {
    if (!v.is_number()) throw ConfigError(what + " must be a number");
    return v.get<double>();
}

Index count(const json &v, const std::string &what) {
    if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
    return v.get<Index>();
}

VectorXd vector_of(const json &v, const std::string &what) {
    if (!v.is_array()) throw ConfigError(what + " must be an array");
    VectorXd out(static_cast<Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = number(v[i], what);
    return out;
}

std::vector<Index> one_based_indices(const json &v, const std::string &what) {
    if (!v.is_array()) throw ConfigError(what + " must be an array");
    std::vector<Index> out;
    for (const auto &x : v) {
        Index j = count(x, what);
        if (j < 1) throw ConfigError(what + " entries are one-based");
        out.push_back(j - 1);
    }
    return out;
}

MatrixXd matrix_of(const json &v, const std::string &what) {
    if (!v.is_array() || v.empty() || !v[0].is_array())
        throw ConfigError(what + " must be an array of rows");
    const auto rows = static_cast<Index>(v.size());
    const auto cols = static_cast<Index>(v[0].size());
    MatrixXd out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto &row = v[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw ConfigError(what + " rows must have equal length");
        for (Index j = 0; j < cols; ++j) out(i, j) = number(row[static_cast<size_t>(j)], what);
    }
    return out;
}

BetaRule parse_beta_rule(const json &v) {
    check_keys(v, {"kind", "value", "mean", "variance"}, "beta_rule");
    const std::string kind = require(v, "kind", "beta_rule").get<std::string>();
    if (kind == "const") return BetaRule::constant(number(require(v, "value", "beta_rule"), "value"));
    if (kind == "normal")
        return BetaRule::normal(number(require(v, "mean", "beta_rule"), "mean"),
                                v.contains("variance") ? number(v["variance"], "variance") : 4.0);
    if (kind == "reciprocal") return BetaRule::reciprocal();
    throw ConfigError("beta_rule kind must be const, normal or reciprocal");
}

DesignSpec parse_design(const json &v) {
    if (!v.is_object()) throw ConfigError("design must be an object");
    const std::string type = require(v, "type", "design").get<std::string>();
    if (type == "linear") {
        check_keys(v, {"type", "k", "m", "theta", "beta", "gamma", "sigma2", "omega2", "focal_idx"},
                   "design");
        DgpSpec s;
        s.theta = matrix_of(require(v, "theta", "design"), "theta");
        s.k = v.contains("k") ? count(v["k"], "k") : s.theta.rows();
        s.m = v.contains("m") ? count(v["m"], "m") : s.theta.cols();
        s.beta = vector_of(require(v, "beta", "design"), "beta");
        s.gamma = vector_of(require(v, "gamma", "design"), "gamma");
        s.sigma2 = number(require(v, "sigma2", "design"), "sigma2");
        s.omega2 = number(require(v, "omega2", "design"), "omega2");
        if (v.contains("focal_idx")) s.focal_idx = one_based_indices(v["focal_idx"], "focal_idx");
        try {
            s.validate();
        } catch (const SpecificationError &e) {
            throw ConfigError(std::string("invalid linear design: ") + e.what());
        }
        return DesignSpec::linear_linear(s);
    }
    if (type == "medical") {
        check_keys(v, {"type", "beta"}, "design");
        VectorXd b = v.contains("beta") ? vector_of(v["beta"], "beta") : VectorXd();
        if (b.size() == 0) return DesignSpec::linear_linear(medical_study_spec());
        if (b.size() != 2) throw ConfigError("medical design beta must have two entries");
        return DesignSpec::linear_linear(medical_study_spec(b[0], b[1]));
    }
    if (type == "subset_sim") {
        check_keys(v, {"type", "m", "beta_rule", "redraw_beta"}, "design");
        return DesignSpec::subset_sim(
            count(require(v, "m", "design"), "m"), parse_beta_rule(require(v, "beta_rule", "design")),
            v.contains("redraw_beta") ? v["redraw_beta"].get<bool>() : false);
    }
    if (type == "quadratic") {
        check_keys(v, {"type", "rho", "m"}, "design");
        return DesignSpec::quadratic(v.contains("rho") ? number(v["rho"], "rho") : 0.4,
                                     v.contains("m") ? count(v["m"], "m") : 2);
    }
    if (type == "logistic") {
        check_keys(v, {"type", "rho"}, "design");
        return DesignSpec::logistic_design(v.contains("rho") ? number(v["rho"], "rho") : 0.4);
    }
    throw ConfigError("unknown design type: " + type);
}

EstimatorSpec parse_estimator(const json &v) {
    check_keys(v,
               {"name", "label", "k", "lambda", "degree", "n_draws", "psi2", "focal", "folds",
                "cv_rule", "center", "intercept", "basis_degree"},
               "estimator");
    EstimatorSpec e = EstimatorSpec::named(require(v, "name", "estimator").get<std::string>());
    if (v.contains("label")) e.label = v["label"].get<std::string>();
    if (v.contains("k")) e.k = count(v["k"], "k");
    if (v.contains("lambda")) {
        const auto &l = v["lambda"];
        if (l.is_string()) {
            if (l.get<std::string>() != "sqrt_n") throw ConfigError("lambda must be a number or \"sqrt_n\"");
            e.lambda = -1.0;
        } else {
            e.lambda = number(l, "lambda");
            if (e.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
        }
    }
    if (v.contains("degree")) e.degree = static_cast<int>(count(v["degree"], "degree"));
    if (v.contains("n_draws")) e.n_draws = count(v["n_draws"], "n_draws");
    if (v.contains("psi2")) e.psi2 = number(v["psi2"], "psi2");
    if (v.contains("focal")) e.focal = one_based_indices(v["focal"], "focal");
    if (v.contains("folds")) e.folds = count(v["folds"], "folds");
    if (v.contains("cv_rule")) {
        const std::string r = v["cv_rule"].get<std::string>();
        if (r == "min") e.cv_rule = CvRule::MinError;
        else if (r == "1se") e.cv_rule = CvRule::OneStandardError;
        else throw ConfigError("cv_rule must be \"min\" or \"1se\"");
    }
    if (v.contains("center")) e.center = v["center"].get<bool>();
    if (v.contains("intercept")) e.intercept = v["intercept"].get<bool>();
    if (v.contains("basis_degree")) e.basis_degree = static_cast<int>(count(v["basis_degree"], "basis_degree"));
    return e;
}

std::string location(const std::string &text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ExperimentConfig parse_config(const std::string &text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        // e.byte is one past the offending character.
        throw ConfigError("config parse error at " + location(text, e.byte > 0 ? e.byte - 1 : 0));
    }
    try {
        check_keys(doc, {"schema", "design", "estimators", "n", "reps", "seed", "compare_oracle", "threads"},
                   "config");
        const json &schema = require(doc, "schema", "config");
        if (!schema.is_number_integer() || schema.get<int>() != 1)
            throw ConfigError("unsupported schema version (expected 1)");

        ExperimentConfig cfg;
        cfg.design = parse_design(require(doc, "design", "config"));
        const json &ests = require(doc, "estimators", "config");
        if (!ests.is_array()) throw ConfigError("estimators must be an array");
        for (const auto &e : ests) cfg.estimators.push_back(parse_estimator(e));
        if (doc.contains("n")) cfg.n = count(doc["n"], "n");
        if (doc.contains("reps")) cfg.reps = count(doc["reps"], "reps");
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("compare_oracle")) cfg.compare_oracle = doc["compare_oracle"].get<bool>();
        if (doc.contains("threads")) cfg.threads = doc["threads"].get<unsigned>();
        cfg.validate();
        return cfg;
    } catch (const json::exception &e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace multicause
