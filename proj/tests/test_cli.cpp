#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "bbm_lab_cli_test";

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + BBM_LAB_BINARY + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string out(const std::string& name) { return (kScratch / name).string(); }

struct Scratch {
    Scratch() {
        fs::remove_all(kScratch);
        fs::create_directories(kScratch);
    }
};

}  // namespace

TEST_CASE_FIXTURE(Scratch, "analytic table") {
    REQUIRE(run("analytic --alpha 1.0 --t 100,400,1600 --out " + out("an")) == 0);
    std::istringstream csv(slurp(kScratch / "an" / "analytic_alpha_1.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,m_kpp,m_rem,log_EZ_exact,log_EZ_asymp,ratio");
    const double d2 = (std::sqrt(2.0) - 1) * (std::sqrt(2.0) - 1);
    int rows = 0;
    while (std::getline(csv, line)) {
        double t, ratio;
        std::sscanf(line.c_str(), "%lf", &t);
        ratio = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(std::abs(ratio - 1.0) <= 3.0 / (d2 * t));
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE_FIXTURE(Scratch, "simulate at horizon zero") {
    CHECK(run("simulate --t 0 --out " + out("s0")) == 2);
    REQUIRE(run("simulate --t 0 --centering none --out " + out("s1")) == 0);
    const auto snap = slurp(kScratch / "s1" / "snapshot_0.csv");
    CHECK(snap.find("\nparticle_id,position,ancestor_at_0\n0,0,0\n") != std::string::npos);
}

TEST_CASE_FIXTURE(Scratch, "reports are byte-identical across runs and worker counts") {
    const std::string args = "slln --alpha 1.0 --t 6 --r 3 --replicas 20 --seed 42";
    REQUIRE(run(args + " --parallelism 1 --out " + out("a")) == 0);
    REQUIRE(run(args + " --parallelism 4 --out " + out("b")) == 0);
    REQUIRE(run(args + " --parallelism 1 --out " + out("c")) == 0);
    const auto a = slurp(kScratch / "a" / "report.json");
    CHECK(!a.empty());
    CHECK(a == slurp(kScratch / "b" / "report.json"));
    CHECK(a == slurp(kScratch / "c" / "report.json"));
}

TEST_CASE_FIXTURE(Scratch, "manifest round trip") {
    REQUIRE(run("decorrelation --alpha 0.8,1 --t 6 --r 1,2 --replicas 10 --seed 7 --out " + out("m")) == 0);
    const auto first = slurp(kScratch / "m" / "report.json");
    fs::copy_file(kScratch / "m" / "manifest.txt", kScratch / "manifest.txt");
    fs::remove_all(kScratch / "m");
    REQUIRE(run("decorrelation --config " + out("manifest.txt")) == 0);
    CHECK(slurp(kScratch / "m" / "report.json") == first);
}

TEST_CASE_FIXTURE(Scratch, "config files") {
    {
        std::ofstream(kScratch / "cfg.txt") << "# comment\nt=6\nr=2\nreplicas=5\nseed=3\n";
    }
    REQUIRE(run("slln --config " + out("cfg.txt") + " --seed 11 --out " + out("o")) == 0);
    CHECK(slurp(kScratch / "o" / "manifest.txt").find("seed=11\n") != std::string::npos);
    CHECK(slurp(kScratch / "o" / "manifest.txt").find("replicas=5\n") != std::string::npos);
    {
        std::ofstream(kScratch / "bad.txt") << "t=6\nr=2\nbogus=1\n";
    }
    CHECK(run("slln --config " + out("bad.txt") + " --out " + out("x")) == 2);
    CHECK(run("slln --config " + out("missing.txt") + " --out " + out("x")) == 2);
}

TEST_CASE_FIXTURE(Scratch, "seed fallback") {
    REQUIRE(run("onset --t 20 --r 1 --replicas 2 --out " + out("e"), "BBM_LAB_SEED=99") == 0);
    CHECK(slurp(kScratch / "e" / "manifest.txt").find("seed=99\n") != std::string::npos);
    REQUIRE(run("onset --t 20 --r 1 --replicas 2 --seed 5 --out " + out("f"), "BBM_LAB_SEED=99") == 0);
    CHECK(slurp(kScratch / "f" / "manifest.txt").find("seed=5\n") != std::string::npos);
    REQUIRE(run("onset --t 20 --r 1 --replicas 2 --out " + out("g"), "env -u BBM_LAB_SEED") == 0);
    CHECK(slurp(kScratch / "g" / "manifest.txt").find("seed=42\n") != std::string::npos);
}

TEST_CASE_FIXTURE(Scratch, "exit codes") {
    CHECK(run("slln --t 5 --r 5 --out " + out("x")) == 2);
    CHECK(run("slln --t 5 --r 2 --replicas 3 --max-particles 2 --out " + out("cap")) == 3);
    CHECK(run("frobnicate") == 2);
    CHECK(run("pair-count --t 6 --r 2 --eps 0.5 --out " + out("x")) == 2);
}

TEST_CASE_FIXTURE(Scratch, "outputs stay inside the output directory") {
    fs::create_directories(kScratch / "cwd");
    const std::string cmd = "cd " + out("cwd") + " && " + BBM_LAB_BINARY +
                            " trace --checkpoints 1,2,3,4 --replicas 2 --out " + out("tr") + " >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::is_empty(kScratch / "cwd"));
    CHECK(fs::exists(kScratch / "tr" / "trace_0.csv"));
    CHECK(fs::exists(kScratch / "tr" / "trace_1.csv"));
    CHECK(fs::exists(kScratch / "tr" / "report.json"));
    CHECK(fs::exists(kScratch / "tr" / "manifest.txt"));
}

TEST_CASE_FIXTURE(Scratch, "csv format") {
    REQUIRE(run("localization --t 6 --r 2 --replicas 4 --format csv --out " + out("l")) == 0);
    CHECK(slurp(kScratch / "l" / "rows.csv").rfind("replica_id,", 0) == 0);
    CHECK(slurp(kScratch / "l" / "summary.csv").rfind("key,value\n", 0) == 0);
}
