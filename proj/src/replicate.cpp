#include "multicause/replicate.hpp"

#include <cstdio>
#include <sstream>

#include "multicause/error.hpp"
#include "multicause/report.hpp"

namespace multicause {

namespace {

std::string g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

EstimatorSpec est(const std::string &name) { return EstimatorSpec::named(name); }

ExperimentConfig base_config(const ReplicateOptions &opt, Index n_default, Index reps_default) {
    ExperimentConfig c;
    c.n = opt.n.value_or(n_default);
    c.reps = opt.reps.value_or(reps_default);
    c.seed = opt.seed;
    c.threads = opt.threads;
    return c;
}

ReplicateRun make_run(std::string setting, std::string group, double x, ExperimentConfig cfg) {
    ReplicateRun r;
    r.setting = std::move(setting);
    r.group = std::move(group);
    r.x = x;
    r.config = std::move(cfg);
    return r;
}

struct SubsetRule {
    std::string tag;
    std::string title;
    BetaRule rule;
};

const std::vector<SubsetRule> &subset_rules() {
    static const std::vector<SubsetRule> rules = {
        {"const10", "beta_j = 10", BetaRule::constant(10.0)},
        {"const100", "beta_j = 100", BetaRule::constant(100.0)},
        {"normal", "beta_j ~ N(1, 4)", BetaRule::normal(1.0, 4.0)},
        {"reciprocal", "beta_j = 1/j", BetaRule::reciprocal()},
    };
    return rules;
}

const std::vector<Index> kSubsetM = {3, 10, 50, 100, 200};
const std::vector<double> kQuadRho = {-0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2,
                                      0.3,  0.4,  0.5,  0.6,  0.7, 0.8};
const std::vector<Index> kQuadM = {2, 4, 8, 16, 32, 64};
const std::vector<double> kLogisticSd = {1e-3, 1e-2, 1e-1, 1.0};

std::string subset_setting(const std::string &tag, Index m) {
    return tag + "/m=" + std::to_string(m);
}

std::string table_med1(const ReplicateResult &res) {
    std::vector<std::vector<std::string>> rows;
    const std::vector<std::pair<std::string, std::string>> models = {
        {"naive", "Naive"},
        {"oracle", "Oracle"},
        {"posterior_mean", "Deconfounder (posterior mean)"},
        {"pca_cv_ridge", "PCA+CV-Ridge"},
    };
    for (const auto &run : res.runs) {
        bool first = true;
        for (const auto &[label, title] : models) {
            const auto &s = run.summary;
            const auto &c1 = s.at(label, 0), &c2 = s.at(label, 1);
            rows.push_back({first ? run.setting : "", title, fixed3(c1.bias), fixed3(c2.bias),
                            fixed3(c1.sd), fixed3(c2.sd), fixed3(c1.rmse), fixed3(c2.rmse)});
            first = false;
        }
    }
    std::string out = "Medical study 1 (b2 = 0.3)\n";
    out += render_text_table({"setting", "model", "bias b1", "bias b2", "sd b1", "sd b2",
                              "rmse b1", "rmse b2"},
                             rows, 2);
    return out;
}

std::string table_subset(const ReplicateResult &res) {
    std::vector<std::string> header = {"beta", "method"};
    for (Index m : kSubsetM) header.push_back("m=" + std::to_string(m));
    const std::vector<std::pair<std::string, std::string>> methods = {
        {"oracle", "Oracle"}, {"naive", "Naive"}, {"subset_each", "Deconfounder"}};
    std::vector<std::vector<std::string>> rows;
    for (const auto &rule : subset_rules()) {
        bool first = true;
        for (const auto &[label, title] : methods) {
            std::vector<std::string> row = {first ? rule.title : "", title};
            for (Index m : kSubsetM)
                row.push_back(fixed3(mean_rmse(res.run(subset_setting(rule.tag, m)).summary, label)));
            rows.push_back(std::move(row));
            first = false;
        }
    }
    return "Subset simulation: average RMSE over treatments\n" + render_text_table(header, rows, 2);
}

std::vector<Series> quadratic_series(const ReplicateResult &res, const std::string &group) {
    std::vector<Series> out = {{"naive", {}, {}}, {"deconfounder", {}, {}}, {"parametric", {}, {}}};
    const std::vector<std::string> labels = {"quadratic_naive", "quadratic_deconf",
                                             "quadratic_parametric"};
    for (const auto &run : res.runs) {
        if (run.group != group) continue;
        for (size_t i = 0; i < out.size(); ++i) {
            out[i].x.push_back(run.x);
            out[i].y.push_back(mean_rmse(run.summary, labels[i]));
        }
    }
    return out;
}

std::string table_quadratic(const ReplicateResult &res) {
    std::string out;
    for (const std::string group : {"rho", "m"}) {
        auto series = quadratic_series(res, group);
        std::vector<std::vector<std::string>> rows;
        for (size_t i = 0; i < series[0].x.size(); ++i)
            rows.push_back({g(series[0].x[i]), fixed3(series[0].y[i]), fixed3(series[1].y[i]),
                            fixed3(series[2].y[i])});
        out += group == "rho" ? "Quadratic design, m = 2: average RMSE by rho\n"
                              : "\nQuadratic design, rho = 0.4: average RMSE by m\n";
        out += render_text_table({group, "naive", "deconfounder", "parametric"}, rows);
    }
    return out;
}

std::string table_logistic(const ReplicateResult &res) {
    std::vector<std::vector<std::string>> rows;
    struct Stat {
        std::string name;
        double CoefSummary::*field;
    };
    const std::vector<Stat> stats = {{"Bias", &CoefSummary::bias},
                                     {"Std. Dev.", &CoefSummary::sd},
                                     {"Coverage", &CoefSummary::coverage},
                                     {"RMSE", &CoefSummary::rmse}};
    for (const auto &st : stats) {
        bool first = true;
        for (const auto &run : res.runs) {
            const auto &s = run.summary;
            rows.push_back({first ? st.name : "", g(run.x),
                            fixed3(s.at("logistic_deconf", 0).*st.field),
                            fixed3(s.at("logistic_naive", 0).*st.field),
                            fixed3(s.at("logistic_deconf", 1).*st.field),
                            fixed3(s.at("logistic_naive", 1).*st.field)});
            first = false;
        }
    }
    return "Logistic design\n" +
           render_text_table({"", "noise sd", "T1 deconf", "T1 naive", "T2 deconf", "T2 naive"},
                             rows, 2);
}

}  // namespace

const std::vector<std::string> &replicate_designs() {
    static const std::vector<std::string> names = {"med1", "subset", "quadratic", "logistic"};
    return names;
}

const ReplicateRun &ReplicateResult::run(const std::string &setting) const {
    for (const auto &r : runs)
        if (r.setting == setting) return r;
    throw SpecificationError("no replicate run named " + setting);
}

SimulationSummary ReplicateResult::combined() const {
    SimulationSummary out;
    if (runs.empty()) return out;
    out.reps = runs.front().summary.reps;
    out.n = runs.front().summary.n;
    out.seed = runs.front().summary.seed;
    for (const auto &run : runs) {
        for (auto row : run.summary.rows) {
            row.estimator = run.setting + "/" + row.estimator;
            out.rows.push_back(std::move(row));
        }
        for (auto f : run.summary.failures) {
            f.estimator = run.setting + "/" + f.estimator;
            out.failures.push_back(std::move(f));
        }
    }
    return out;
}

std::vector<ReplicateRun> replicate_plan(const std::string &design, const ReplicateOptions &opt) {
    std::vector<ReplicateRun> plan;
    if (design == "med1") {
        for (double b1 : {0.0, -0.3}) {
            ExperimentConfig c = base_config(opt, 1000, 1000);
            c.design = DesignSpec::linear_linear(medical_study_spec(b1, 0.3));
            c.estimators = {est("naive"), est("oracle"), est("posterior_mean"), est("pca_cv_ridge")};
            plan.push_back(make_run("b1=" + g(b1), "", b1, std::move(c)));
        }
    } else if (design == "subset") {
        for (const auto &rule : subset_rules()) {
            for (Index m : kSubsetM) {
                ExperimentConfig c = base_config(opt, 10000, 100);
                c.design = DesignSpec::subset_sim(m, rule.rule);
                c.estimators = {est("oracle"), est("naive"), est("subset_each")};
                plan.push_back(make_run(subset_setting(rule.tag, m), "", static_cast<double>(m),
                                        std::move(c)));
            }
        }
    } else if (design == "quadratic") {
        for (double rho : kQuadRho) {
            ExperimentConfig c = base_config(opt, 10000, 100);
            c.design = DesignSpec::quadratic(rho, 2);
            c.estimators = {est("quadratic_naive"), est("quadratic_pair")};
            plan.push_back(make_run("rho=" + g(rho), "rho", rho, std::move(c)));
        }
        for (Index m : kQuadM) {
            ExperimentConfig c = base_config(opt, 10000, 100);
            c.design = DesignSpec::quadratic(0.4, m);
            c.estimators = {est("quadratic_naive"), est("quadratic_pair")};
            plan.push_back(make_run("m=" + std::to_string(m), "m", static_cast<double>(m),
                                    std::move(c)));
        }
    } else if (design == "logistic") {
        for (double sd : kLogisticSd) {
            ExperimentConfig c = base_config(opt, 10000, 100);
            c.design = DesignSpec::logistic_design(0.4);
            EstimatorSpec e = est("logistic_suite");
            e.psi2 = sd * sd;
            c.estimators = {e};
            plan.push_back(make_run("sd=" + g(sd), "", sd, std::move(c)));
        }
    } else {
        throw ConfigError("unknown design '" + design + "' (expected med1, subset, quadratic or logistic)");
    }
    for (const auto &r : plan) r.config.validate();
    return plan;
}

ReplicateResult render_replicate(const std::string &design, std::vector<ReplicateRun> runs) {
    ReplicateResult res;
    res.design = design;
    res.runs = std::move(runs);
    if (design == "med1") {
        res.table = table_med1(res);
    } else if (design == "subset") {
        res.table = table_subset(res);
    } else if (design == "quadratic") {
        res.table = table_quadratic(res);
        auto rho = quadratic_series(res, "rho");
        auto m = quadratic_series(res, "m");
        res.extra_files = {
            {"quadratic_rho.csv", series_csv(rho)},
            {"quadratic_m.csv", series_csv(m)},
            {"quadratic_rho.svg",
             render_svg_chart(rho, "Quadratic design, m = 2", "rho", "average RMSE")},
            {"quadratic_m.svg",
             render_svg_chart(m, "Quadratic design, rho = 0.4", "number of treatments",
                              "average RMSE", true)},
        };
    } else if (design == "logistic") {
        res.table = table_logistic(res);
    } else {
        throw ConfigError("unknown design '" + design + "'");
    }
    return res;
}

ReplicateResult replicate(const std::string &design, const ReplicateOptions &opt) {
    auto runs = replicate_plan(design, opt);
    for (auto &r : runs) r.summary = run_experiment(r.config);
    return render_replicate(design, std::move(runs));
}

}  // namespace multicause
