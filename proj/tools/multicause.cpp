// Command-line driver: replicate, simulate, sweep, verify.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or config error,
// 3 runtime instability.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multicause/config.hpp"
#include "multicause/error.hpp"
#include "multicause/harness.hpp"
#include "multicause/replicate.hpp"
#include "multicause/report.hpp"
#include "multicause/verify.hpp"

namespace fs = std::filesystem;
using namespace multicause;

namespace {

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInstability = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<Index> reps;
    std::optional<Index> n;
    std::string out;
    bool dump_data = false;
    std::optional<unsigned> threads;
    std::string format = "csv";
};

std::uint64_t parse_seed(const std::string &s, const std::string &what) {
    try {
        size_t used = 0;
        unsigned long long v = std::stoull(s, &used);
        if (used != s.size() || s.empty() || s[0] == '-') throw std::invalid_argument(s);
        return v;
    } catch (const std::exception &) {
        throw UsageError(what + " must be a nonnegative integer, got '" + s + "'");
    }
}

std::optional<std::uint64_t> resolve_seed(const Globals &g) {
    if (g.seed) return g.seed;
    if (const char *env = std::getenv("MULTICAUSE_SEED"); env && *env)
        return parse_seed(env, "MULTICAUSE_SEED");
    return std::nullopt;
}

void check_globals(const Globals &g) {
    if (g.reps && *g.reps < 1) throw UsageError("--reps must be at least 1");
    if (g.n && *g.n < 2) throw UsageError("--n must be at least 2");
    if (g.dump_data && g.out.empty()) throw UsageError("--dump-data needs --out");
}

// Creates the output directory when only its last component is missing.
fs::path prepare_out(const Globals &g) {
    if (g.out.empty()) return {};
    fs::path dir = fs::absolute(g.out).lexically_normal();
    if (dir.filename().empty()) dir = dir.parent_path();
    if (!fs::is_directory(dir.parent_path()))
        throw UsageError("parent directory of --out does not exist: " + dir.parent_path().string());
    if (fs::exists(dir) && !fs::is_directory(dir))
        throw UsageError("--out is not a directory: " + dir.string());
    fs::create_directory(dir);
    return dir;
}

void apply_globals(ExperimentConfig &cfg, const Globals &g) {
    if (auto s = resolve_seed(g)) cfg.seed = *s;
    if (g.reps) cfg.reps = *g.reps;
    if (g.n) cfg.n = *g.n;
    if (g.threads) cfg.threads = *g.threads;
}

std::string render(const SimulationSummary &s, const std::string &format) {
    std::ostringstream os;
    if (format == "table")
        write_summary_table(os, s);
    else
        write_summary_csv(os, s);
    return os.str();
}

std::string summary_csv(const SimulationSummary &s) {
    std::ostringstream os;
    write_summary_csv(os, s);
    return os.str();
}

std::string summary_table(const SimulationSummary &s) {
    std::ostringstream os;
    write_summary_table(os, s);
    return os.str();
}

std::string sanitize(std::string s) {
    for (char &c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
    return s;
}

void dump_first_dataset(const fs::path &dir, const std::string &name, const ExperimentConfig &cfg) {
    VectorXd beta;
    Dataset ds = sample_design(cfg.design, cfg.n, cfg.seed, 0, beta);
    std::ostringstream os;
    write_dataset_csv(os, ds);
    atomic_write((dir / name).string(), os.str());
}

void report_failures(const SimulationSummary &s) {
    for (const auto &f : s.failures)
        if (f.failures > 0)
            std::cerr << "note: " << f.estimator << " failed on " << f.failures << " of "
                      << f.failures + f.successes << " replications (last: " << f.last_error
                      << ")\n";
}

int cmd_replicate(const std::string &design, const Globals &g) {
    check_globals(g);
    ReplicateOptions opt;
    opt.n = g.n;
    opt.reps = g.reps;
    if (auto s = resolve_seed(g)) opt.seed = *s;
    if (g.threads) opt.threads = *g.threads;
    auto plan = replicate_plan(design, opt);  // validates before anything is written
    const fs::path dir = prepare_out(g);

    for (auto &run : plan) run.summary = run_experiment(run.config);
    ReplicateResult res = render_replicate(design, std::move(plan));
    const SimulationSummary all = res.combined();
    report_failures(all);

    if (!dir.empty()) {
        atomic_write((dir / (design + "_results.csv")).string(), summary_csv(all));
        atomic_write((dir / (design + "_table.txt")).string(), res.table);
        for (const auto &[name, content] : res.extra_files) atomic_write((dir / name).string(), content);
        if (g.dump_data)
            for (const auto &run : res.runs)
                dump_first_dataset(dir, design + "_" + sanitize(run.setting) + "_data.csv", run.config);
    }
    std::cout << (g.format == "table" ? res.table : summary_csv(all));
    return 0;
}

int cmd_simulate(const std::string &path, const Globals &g) {
    check_globals(g);
    ExperimentConfig cfg = load_config(path);
    apply_globals(cfg, g);
    cfg.validate();
    const fs::path dir = prepare_out(g);

    SimulationSummary s = run_experiment(cfg);
    report_failures(s);
    if (!dir.empty()) {
        atomic_write((dir / "results.csv").string(), summary_csv(s));
        atomic_write((dir / "results.txt").string(), summary_table(s));
        if (g.dump_data) dump_first_dataset(dir, "data.csv", cfg);
    }
    std::cout << render(s, g.format);
    return 0;
}

SweepAxis parse_axis(const std::string &a) {
    if (a == "m") return SweepAxis::M;
    if (a == "rho") return SweepAxis::Rho;
    if (a == "psi") return SweepAxis::Psi;
    throw UsageError("--axis must be m, rho or psi");
}

int cmd_sweep(const std::string &path, const std::string &axis_name,
              const std::vector<double> &values, const Globals &g) {
    check_globals(g);
    if (values.empty()) throw UsageError("--values needs at least one value");
    const SweepAxis axis = parse_axis(axis_name);
    ExperimentConfig cfg = load_config(path);
    apply_globals(cfg, g);
    for (double v : values) apply_axis(cfg, axis, v).validate();
    const fs::path dir = prepare_out(g);

    auto points = sweep(cfg, axis, values);
    SimulationSummary all;
    all.reps = cfg.reps;
    all.n = cfg.n;
    all.seed = cfg.seed;
    bool any_error = false;
    for (size_t i = 0; i < points.size(); ++i) {
        const auto &p = points[i];
        std::ostringstream tag;
        tag << axis_name << '=' << format_number(p.value);
        if (!p.summary) {
            std::cerr << "error at " << tag.str() << ": " << p.error << '\n';
            any_error = true;
            continue;
        }
        report_failures(*p.summary);
        for (auto row : p.summary->rows) {
            row.estimator = tag.str() + "/" + row.estimator;
            all.rows.push_back(std::move(row));
        }
        if (!dir.empty() && g.dump_data)
            dump_first_dataset(dir, "data_" + sanitize(tag.str()) + ".csv",
                               [&] {
                                   ExperimentConfig c = apply_axis(cfg, axis, p.value);
                                   c.seed = cfg.seed + i;
                                   return c;
                               }());
    }
    if (!dir.empty()) {
        atomic_write((dir / "sweep_results.csv").string(), summary_csv(all));
        atomic_write((dir / "sweep_results.txt").string(), summary_table(all));
    }
    std::cout << render(all, g.format);
    return any_error ? kExitInstability : 0;
}

int cmd_verify(const std::string &profile, const Globals &g) {
    check_globals(g);
    VerifyOptions opt;
    if (profile == "strict")
        opt.profile = ToleranceProfile::Strict;
    else if (profile != "default")
        throw UsageError("--tolerance must be default or strict");
    if (auto s = resolve_seed(g)) opt.seed = *s;
    if (g.threads) opt.threads = *g.threads;
    if (g.n) {
        if (*g.n > 100000) throw UsageError("verify budget: --n at most 100000");
        opt.n = opt.lemma_n = *g.n;
    }
    if (g.reps) {
        if (*g.reps > 200) throw UsageError("verify budget: --reps at most 200");
        opt.reps = *g.reps;
    }
    const fs::path dir = prepare_out(g);

    auto rows = run_verify(opt);
    std::ostringstream csv, table;
    write_verify_csv(csv, rows);
    write_verify_table(table, rows);
    if (!dir.empty()) {
        atomic_write((dir / "verify.csv").string(), csv.str());
        atomic_write((dir / "verify.txt").string(), table.str());
    }
    std::cout << (g.format == "table" ? table.str() : csv.str());

    std::vector<VerifyRow> failed;
    for (const auto &r : rows)
        if (!r.pass) failed.push_back(r);
    if (failed.empty()) return 0;
    std::cerr << failed.size() << " check(s) failed:\n";
    write_verify_table(std::cerr, failed);
    return kExitVerifyFailed;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Multi-cause deconfounding numerical lab"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    Globals g;
    std::string seed_text;
    Index reps = 0, n = 0;
    unsigned threads = 0;
    auto *seed_opt = app.add_option("--seed", seed_text, "root seed (default: MULTICAUSE_SEED, else design default)");
    auto *reps_opt = app.add_option("--reps", reps, "replications");
    auto *n_opt = app.add_option("--n", n, "observations per replication");
    app.add_option("--out", g.out, "output directory (its parent must exist)");
    app.add_flag("--dump-data", g.dump_data, "write the first replication's dataset as CSV");
    auto *threads_opt = app.add_option("--threads", threads, "worker threads (0: all cores, 1: sequential)");
    app.add_option("--format", g.format, "stdout format")
        ->check(CLI::IsMember({"csv", "table"}))
        ->capture_default_str();

    std::string design;
    auto *rep = app.add_subcommand("replicate", "run a canonical design");
    rep->add_option("design", design, "med1, subset, quadratic or logistic")->required();

    std::string config_path;
    auto *sim = app.add_subcommand("simulate", "run an experiment config");
    sim->add_option("config", config_path, "JSON config")->required();

    std::string sweep_path, axis;
    std::vector<double> values;
    auto *sw = app.add_subcommand("sweep", "run a config over a grid");
    sw->add_option("config", sweep_path, "JSON config")->required();
    sw->add_option("--axis", axis, "m, rho or psi")->required();
    sw->add_option("--values", values, "grid values")->delimiter(',')->required();

    std::string profile = "default";
    auto *ver = app.add_subcommand("verify", "closed-form versus empirical checks");
    ver->add_option("--tolerance", profile, "default or strict")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*seed_opt) g.seed = parse_seed(seed_text, "--seed");
        if (*reps_opt) g.reps = reps;
        if (*n_opt) g.n = n;
        if (*threads_opt) g.threads = threads;

        if (*rep) return cmd_replicate(design, g);
        if (*sim) return cmd_simulate(config_path, g);
        if (*sw) return cmd_sweep(sweep_path, axis, values, g);
        return cmd_verify(profile, g);
    } catch (const UsageError &e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SpecificationError &e) {
        std::cerr << "invalid specification: " << e.what() << '\n';
        return kExitUsage;
    } catch (const AggregateInstabilityError &e) {
        std::cerr << "instability in " << e.estimator() << ": " << e.what() << '\n';
        return kExitInstability;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInstability;
    }
}
