#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char *b = std::getenv("MULTICAUSE_BIN");
    return b ? b : "./multicause";
}

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string &name) {
    fs::path p = fs::temp_directory_path() / ("multicause_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result run(const std::string &args, const std::string &env = "") {
    const fs::path dir = scratch("io");
    fs::create_directories(dir);
    const std::string cmd = env + " " + binary() + " " + args + " > " + (dir / "out").string() + " 2> " +
                            (dir / "err").string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "out");
    r.err = slurp(dir / "err");
    return r;
}

fs::path write_config(const std::string &name, const std::string &text) {
    fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

const char *kMedConfig = R"({
  "schema": 1,
  "design": {"type": "medical", "beta": [0, 0.3]},
  "estimators": [{"name": "naive"}, {"name": "oracle"}],
  "n": 300, "reps": 10, "seed": 4, "compare_oracle": true
})";

}  // namespace

TEST_CASE("invalid replication count is a usage error and writes nothing", "[cli]") {
    fs::path out = scratch("reps0");
    Result r = run("replicate quadratic --reps 0 --out " + out.string());
    REQUIRE(r.code == 2);
    REQUIRE((!fs::exists(out) || fs::is_empty(out)));
}

TEST_CASE("unknown design and missing subcommand", "[cli]") {
    REQUIRE(run("replicate med2").code == 2);
    REQUIRE(run("").code == 2);
    REQUIRE(run("simulate").code == 2);
}

TEST_CASE("corrupted config reports the parse location", "[cli]") {
    fs::path cfg = write_config("bad.json", "{\n  \"schema\": 1,\n  \"design\": {\n}");
    Result r = run("simulate " + cfg.string());
    REQUIRE(r.code == 2);
    REQUIRE(r.err.find("line") != std::string::npos);
}

TEST_CASE("simulate writes results atomically into --out", "[cli]") {
    fs::path cfg = write_config("med.json", kMedConfig);
    fs::path out = scratch("sim");
    Result r = run("simulate " + cfg.string() + " --out " + out.string() + " --dump-data");
    REQUIRE(r.code == 0);
    const std::string csv = slurp(out / "results.csv");
    REQUIRE(csv.rfind("estimator,coef_index,bias,sd,rmse,coverage,mc_se_bias,oracle_bias,gap,pass\n", 0) == 0);
    REQUIRE(r.out == csv);
    REQUIRE(fs::exists(out / "data.csv"));
    for (const auto &e : fs::directory_iterator(out)) REQUIRE(e.path().extension() != ".tmp");

    fs::path orphan = scratch("no_parent") / "child";
    REQUIRE(run("simulate " + cfg.string() + " --out " + orphan.string()).code == 2);
    REQUIRE(run("simulate " + cfg.string() + " --dump-data").code == 2);
}

TEST_CASE("table output is byte-stable", "[cli]") {
    fs::path cfg = write_config("med2.json", kMedConfig);
    Result a = run("simulate " + cfg.string() + " --format table --threads 1");
    Result b = run("simulate " + cfg.string() + " --format table --threads 3");
    REQUIRE(a.code == 0);
    REQUIRE(a.out == b.out);
    REQUIRE_FALSE(a.out.empty());
}

TEST_CASE("the seed environment variable applies only without --seed", "[cli]") {
    fs::path cfg = write_config("med3.json", kMedConfig);
    Result base = run("simulate " + cfg.string() + " --seed 5");
    Result env = run("simulate " + cfg.string(), "MULTICAUSE_SEED=5");
    Result flag = run("simulate " + cfg.string() + " --seed 6", "MULTICAUSE_SEED=5");
    REQUIRE(base.code == 0);
    REQUIRE(env.out == base.out);
    REQUIRE(flag.out != base.out);
    REQUIRE(run("simulate " + cfg.string(), "MULTICAUSE_SEED=abc").code == 2);
}

TEST_CASE("sweep and verify at a small budget", "[cli]") {
    fs::path cfg = write_config("med4.json", R"({
  "schema": 1,
  "design": {"type": "medical"},
  "estimators": [{"name": "naive"}, {"name": "white_noised"}],
  "n": 300, "reps": 10
})");
    Result s = run("sweep " + cfg.string() + " --axis psi --values 0.5,1");
    REQUIRE(s.code == 0);
    REQUIRE(s.out.find("psi=0.5/white_noised") != std::string::npos);
    // The psi axis has nothing to act on without a noised estimator.
    REQUIRE(run("sweep " + write_config("med5.json", kMedConfig).string() + " --axis psi --values 1").code == 2);
    Result bad = run("sweep " + cfg.string() + " --axis q --values 1");
    REQUIRE(bad.code == 2);

    fs::path out = scratch("verify");
    Result v = run("verify --reps 20 --n 2000 --threads 1 --out " + out.string());
    REQUIRE((v.code == 0 || v.code == 1));
    REQUIRE(slurp(out / "verify.csv").rfind("lemma_or_prop,quantity,closed_form,empirical,abs_gap,tolerance,pass\n", 0) == 0);
    REQUIRE(run("verify --tolerance loose").code == 2);
}
