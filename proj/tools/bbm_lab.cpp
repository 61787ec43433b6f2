// bbm_lab: command-line front end for the branching Brownian motion toolkit.
//
//   bbm_lab <subcommand> [flags] [--config FILE]
//
// Config files hold flat `key=value` lines (keys are flag names without the
// leading dashes); flags given on the command line win. Every run writes
// <out>/manifest.txt, which can be fed back through --config.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bbm/analytics.hpp"
#include "bbm/experiments.hpp"
#include "bbm/functionals.hpp"
#include "bbm/process.hpp"
#include "bbm/report_io.hpp"
#include "bbm/snapshot_io.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kPopulationCap = 3, kQuadrature = 4 };

constexpr std::uint64_t kDefaultSeed = 42;

struct Options {
    std::vector<double> alphas{1.0};
    std::vector<double> times;
    std::vector<double> r_values;
    std::vector<double> checkpoints;
    double eps = 0.0;  // 0 selects default_epsilon
    double sigma1 = 0.6;
    std::uint64_t replicas = 100;
    std::uint64_t first_replica = 0;
    std::uint64_t seed = kDefaultSeed;
    unsigned parallelism = 0;  // 0 selects the hardware concurrency
    std::size_t max_particles = std::size_t{1} << 26;
    std::string out = "bbm_out";
    std::string format = "json";
    bool wallclock = false;

    // simulate
    std::uint64_t replica = 0;
    double barrier_start = -1.0;  // negative: no barrier
    double barrier_slope = 0.0;
    std::string centering = "kpp";
    bool two_phase = false;
};

std::string real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + real(v[i]);
    return s;
}

void error_record(const std::string& kind, const std::string& message, int code) {
    std::cerr << "error: " << message << "\n";
    std::string escaped;
    for (char c : message) {
        if (c == '"' || c == '\\') escaped += '\\';
        escaped += c;
    }
    std::cerr << "{\"error\":\"" << kind << "\",\"message\":\"" << escaped << "\",\"exit_code\":" << code << "}\n";
}

// Reads `key=value` lines into `--key=value` arguments.
std::vector<std::string> config_file_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw bbm::ConfigError("cannot open config file '" + path + "'");
    std::vector<std::string> args;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw bbm::ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key == "config") throw bbm::ConfigError(path + ":" + std::to_string(lineno) + ": bad key");
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t value) {
    if (seed_opt->count() > 0) return value;
    if (const char* env = std::getenv("BBM_LAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw bbm::ConfigError("BBM_LAB_SEED is not an unsigned integer");
        }
    }
    return kDefaultSeed;
}

bbm::ExperimentConfig experiment_config(const std::string& name, const Options& o) {
    bbm::ExperimentConfig cfg;
    cfg.name = name;
    cfg.alphas = o.alphas;
    cfg.times = o.times;
    cfg.r_values = o.r_values;
    if (o.eps > 0.0) cfg.eps = o.eps;
    cfg.sigma1 = o.sigma1;
    cfg.checkpoints = o.checkpoints;
    cfg.replicas = o.replicas;
    cfg.first_replica = o.first_replica;
    cfg.seed = o.seed;
    cfg.parallelism = o.parallelism ? o.parallelism : std::max(1u, std::thread::hardware_concurrency());
    cfg.max_particles = o.max_particles;
    return cfg;
}

void write_manifest(const std::string& sub, const Options& o, const std::vector<std::string>& keys) {
    std::map<std::string, std::string> all = {
        {"alpha", list(o.alphas)},
        {"t", list(o.times)},
        {"r", list(o.r_values)},
        {"checkpoints", list(o.checkpoints)},
        {"eps", real(o.eps)},
        {"sigma1", real(o.sigma1)},
        {"replicas", std::to_string(o.replicas)},
        {"first-replica", std::to_string(o.first_replica)},
        {"seed", std::to_string(o.seed)},
        {"parallelism", std::to_string(o.parallelism)},
        {"max-particles", std::to_string(o.max_particles)},
        {"out", o.out},
        {"format", o.format},
        {"wallclock", o.wallclock ? "true" : "false"},
        {"replica", std::to_string(o.replica)},
        {"barrier-start", real(o.barrier_start)},
        {"barrier-slope", real(o.barrier_slope)},
        {"centering", o.centering},
        {"two-phase", o.two_phase ? "true" : "false"},
    };
    std::ofstream out(fs::path(o.out) / "manifest.txt");
    out << "# bbm_lab " << sub << "\n";
    for (const auto& k : keys) {
        const std::string& v = all.at(k);
        if (v.empty()) continue;  // empty lists are the unset default
        out << k << "=" << v << "\n";
    }
}

void write_summary_csv(const fs::path& path, const bbm::AggregateReport& rep) {
    std::ofstream out(path);
    out << "key,value\n";
    for (const auto& [k, v] : rep.summary) out << k << ',' << real(v) << '\n';
}

int emit_report(const Options& o, const bbm::AggregateReport& rep) {
    const fs::path dir(o.out);
    if (o.format == "csv") {
        std::ofstream(dir / "rows.csv") << bbm::rows_to_csv(rep);
        write_summary_csv(dir / "summary.csv", rep);
    } else {
        bbm::write_report(dir, "report", rep, o.wallclock);
    }
    for (const auto& [k, v] : rep.summary) std::cout << k << " = " << real(v) << "\n";
    std::cout << "completed replicas: " << rep.rows.size() << ", failed: " << rep.failed_replicas.size() << "\n";
    if (rep.rows.empty() && !rep.failed_replicas.empty()) {
        error_record("population-cap", "every replica exceeded the population cap", kPopulationCap);
        return kPopulationCap;
    }
    return kOk;
}

int run_simulate(const Options& o) {
    bbm::Centering centering = bbm::Centering::kpp;
    if (o.centering == "rem") centering = bbm::Centering::rem;
    else if (o.centering == "none") centering = bbm::Centering::none;
    if (o.times.size() != 1) throw bbm::ConfigError("simulate takes exactly one --t");
    const double horizon = o.times.front();
    if (centering != bbm::Centering::none && !(horizon > 0.0))
        throw bbm::ConfigError("horizon must be > 0 for a centered maximum (use --centering none)");

    bbm::SimConfig sc;
    sc.horizon = horizon;
    sc.checkpoints = o.checkpoints;
    sc.seed = o.seed;
    sc.replica_id = o.replica;
    sc.max_particles = o.max_particles;
    if (o.barrier_start >= 0.0) sc.barrier = bbm::BarrierSpec{o.barrier_start, o.barrier_slope};
    const auto profile = o.two_phase ? bbm::VarianceProfile::normalized_two_phase(o.sigma1, horizon)
                                     : bbm::VarianceProfile::homogeneous();
    if (o.two_phase && !profile.is_normalized(horizon))
        throw bbm::ConfigError("two-phase profile is not normalized over the horizon");

    const auto snaps = bbm::simulate(sc, profile);
    const fs::path dir(o.out);
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        std::ofstream out(dir / ("snapshot_" + std::to_string(k) + ".csv"));
        bbm::write_snapshot_csv(out, snaps[k], horizon, profile, sc.barrier);
    }
    const auto& last = snaps.back();
    std::cout << "time,n,max,recentered_max\n"
              << real(last.time) << ',' << last.size() << ',' << real(bbm::max_position(last)) << ','
              << real(bbm::recentered_max(last, centering)) << "\n";
    return kOk;
}

int run_analytic(const Options& o) {
    if (o.times.empty()) throw bbm::ConfigError("analytic needs --t");
    const fs::path dir(o.out);
    for (double a : o.alphas) {
        const bbm::AlphaParams p(a);
        std::ostringstream table;
        table << "t,m_kpp,m_rem,log_EZ_exact,log_EZ_asymp,ratio\n";
        for (double t : o.times) {
            const double exact = bbm::log_expected_high_points_exact(p, t);
            const double asymp = bbm::log_expected_high_points_asymptotic(p, t);
            table << real(t) << ',' << real(bbm::centering_kpp(t)) << ',' << real(bbm::centering_rem(t)) << ','
                  << real(exact) << ',' << real(asymp) << ',' << real(std::exp(asymp - exact)) << '\n';
        }
        char name[64];
        std::snprintf(name, sizeof name, "analytic_alpha_%g.csv", a);
        std::ofstream(dir / name) << table.str();
        if (o.alphas.size() > 1) std::cout << "# alpha=" << real(a) << "\n";
        std::cout << table.str();
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    // Splice `--config FILE` contents in front of the real arguments so that
    // command-line flags, parsed later, take precedence.
    std::vector<std::string> args(argv, argv + argc);
    std::vector<std::string> expanded;
    try {
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config" && i + 1 < args.size()) path = args[++i];
            else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
            else {
                expanded.push_back(args[i]);
                continue;
            }
            const auto file_args = config_file_args(path);
            const std::size_t at = std::min<std::size_t>(expanded.size(), 2);  // after program + subcommand
            expanded.insert(expanded.begin() + static_cast<std::ptrdiff_t>(at), file_args.begin(), file_args.end());
        }
    } catch (const bbm::ConfigError& e) {
        error_record("config", e.what(), kConfig);
        return kConfig;
    }

    CLI::App app{"Branching Brownian motion simulator and high-point analytics"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    Options o;
    std::string config_path;

    struct Sub {
        CLI::App* app;
        CLI::Option* seed;
        std::vector<std::string> keys;
    };
    std::map<std::string, Sub> subs;

    auto add_common = [&](CLI::App* sc, Sub& s) {
        sc->add_option("--out", o.out, "Output directory (created if needed)")->capture_default_str();
        s.keys.push_back("out");
        sc->add_option("--config", config_path, "Flat key=value config file; flags override it");
    };
    auto add_seed = [&](CLI::App* sc, Sub& s) {
        s.seed = sc->add_option("--seed", o.seed, "Master seed (fallback: BBM_LAB_SEED, then 42)");
        s.keys.push_back("seed");
    };
    auto add_experiment = [&](CLI::App* sc, Sub& s) {
        sc->add_option("--alpha", o.alphas, "High-point levels, comma separated")->delimiter(',')->capture_default_str();
        sc->add_option("--replicas", o.replicas, "Number of replicas")->capture_default_str();
        sc->add_option("--first-replica", o.first_replica, "Id of the first replica")->capture_default_str();
        sc->add_option("--parallelism", o.parallelism, "Worker threads (0: all cores); never changes results")
            ->capture_default_str();
        sc->add_option("--max-particles", o.max_particles, "Population cap per run")->capture_default_str();
        sc->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
        sc->add_flag("--wallclock", o.wallclock, "Record wall-clock time in the JSON report");
        for (const char* k : {"alpha", "replicas", "first-replica", "parallelism", "max-particles", "format", "wallclock"})
            s.keys.push_back(k);
        add_seed(sc, s);
    };
    auto add_t = [&](CLI::App* sc, Sub& s, const char* help) {
        sc->add_option("--t", o.times, help)->delimiter(',');
        s.keys.push_back("t");
    };
    auto add_r = [&](CLI::App* sc, Sub& s, const char* help) {
        sc->add_option("--r", o.r_values, help)->delimiter(',');
        s.keys.push_back("r");
    };
    auto add_eps = [&](CLI::App* sc, Sub& s) {
        sc->add_option("--eps", o.eps, "Barrier offset (0: per-alpha default)")->capture_default_str();
        s.keys.push_back("eps");
    };

    {
        Sub s;
        auto* sc = app.add_subcommand("simulate", "Simulate one replica and dump snapshot CSVs");
        s.app = sc;
        add_t(sc, s, "Horizon");
        sc->add_option("--checkpoints", o.checkpoints, "Snapshot times (horizon always included)")->delimiter(',');
        sc->add_option("--replica", o.replica, "Replica id")->capture_default_str();
        sc->add_option("--max-particles", o.max_particles, "Population cap")->capture_default_str();
        sc->add_option("--barrier-start", o.barrier_start, "Barrier start r (negative: no barrier)")->capture_default_str();
        sc->add_option("--barrier-slope", o.barrier_slope, "Barrier slope")->capture_default_str();
        sc->add_option("--centering", o.centering, "Centering of the reported maximum")
            ->check(CLI::IsMember({"kpp", "rem", "none"}))
            ->capture_default_str();
        sc->add_flag("--two-phase", o.two_phase, "Variance sigma1^2 then 2 - sigma1^2, switching at t/2");
        sc->add_option("--sigma1", o.sigma1, "First-phase standard deviation")->capture_default_str();
        for (const char* k : {"checkpoints", "replica", "max-particles", "barrier-start", "barrier-slope", "centering",
                              "two-phase", "sigma1"})
            s.keys.push_back(k);
        add_seed(sc, s);
        add_common(sc, s);
        subs["simulate"] = s;
    }
    {
        Sub s;
        auto* sc = app.add_subcommand("trace", "Martingale traces over checkpoints");
        s.app = sc;
        sc->add_option("--checkpoints", o.checkpoints, "At least four checkpoint times")->delimiter(',')->required();
        s.keys.push_back("checkpoints");
        add_experiment(sc, s);
        add_common(sc, s);
        subs["trace"] = s;
    }
    {
        Sub s;
        auto* sc = app.add_subcommand("slln", "High-point law of large numbers");
        s.app = sc;
        add_t(sc, s, "Horizons t (comma separated)");
        add_r(sc, s, "Conditioning time r");
        add_experiment(sc, s);
        add_common(sc, s);
        subs["slln"] = s;
    }
    {
        Sub s;
        auto* sc = app.add_subcommand("onset", "Conditional expectation vs McKean martingale");
        s.app = sc;
        add_t(sc, s, "Analytic horizons t");
        add_r(sc, s, "Simulated times r");
        add_experiment(sc, s);
        add_common(sc, s);
        subs["onset"] = s;
    }
    {
        Sub s;
        auto* sc = app.add_subcommand("decorrelation", "Decay of the conditional deviation in r");
        s.app = sc;
        add_t(sc, s, "Horizon t");
        add_r(sc, s, "Strictly increasing r-grid");
        add_experiment(sc, s);
        add_common(sc, s);
        subs["decorrelation"] = s;
    }
    for (const char* name : {"localization", "pair-count"}) {
        Sub s;
        auto* sc = app.add_subcommand(name, std::string(name) == "localization"
                                                ? "High points whose path overshoots the barrier"
                                                : "Same-ancestor pairs of localized high points");
        s.app = sc;
        add_t(sc, s, "Horizon t");
        add_r(sc, s, "Barrier start times r");
        add_eps(sc, s);
        add_experiment(sc, s);
        add_common(sc, s);
        subs[name] = s;
    }
    {
        Sub s;
        auto* sc = app.add_subcommand("rem-collapse", "Two-speed BBM maxima in both variance orderings");
        s.app = sc;
        add_t(sc, s, "Horizons t");
        sc->add_option("--sigma1", o.sigma1, "First-phase standard deviation")->capture_default_str();
        s.keys.push_back("sigma1");
        add_experiment(sc, s);
        add_common(sc, s);
        subs["rem-collapse"] = s;
    }
    {
        Sub s;
        auto* sc = app.add_subcommand("analytic", "Centerings and expected high-point counts");
        s.app = sc;
        sc->add_option("--alpha", o.alphas, "High-point levels")->delimiter(',')->capture_default_str();
        s.keys.push_back("alpha");
        add_t(sc, s, "Times t");
        add_common(sc, s);
        subs["analytic"] = s;
    }

    std::vector<std::string> tail(expanded.begin() + 1, expanded.end());
    std::reverse(tail.begin(), tail.end());
    try {
        app.parse(tail);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_record("config", e.what(), kConfig);
        return kConfig;
    }

    std::string sub_name;
    for (auto& [name, s] : subs) {
        if (s.app->parsed()) sub_name = name;
    }
    Sub& sub = subs.at(sub_name);

    try {
        if (sub.seed) o.seed = resolve_seed(sub.seed, o.seed);
        fs::create_directories(o.out);
        write_manifest(sub_name, o, sub.keys);
        if (sub_name == "simulate") return run_simulate(o);
        if (sub_name == "analytic") return run_analytic(o);

        const auto cfg = experiment_config(sub_name, o);
        if (sub_name == "trace") {
            const auto run = bbm::run_martingale_trace(cfg);
            for (std::size_t i = 0; i < run.traces.size(); ++i) {
                std::ofstream out(fs::path(o.out) / ("trace_" + std::to_string(run.report.rows[i].replica_id) + ".csv"));
                bbm::write_trace_csv(out, run.traces[i]);
            }
            return emit_report(o, run.report);
        }
        return emit_report(o, bbm::run_experiment(cfg));
    } catch (const bbm::ConfigError& e) {
        error_record("config", e.what(), kConfig);
        return kConfig;
    } catch (const bbm::DomainError& e) {
        error_record("config", e.what(), kConfig);
        return kConfig;
    } catch (const bbm::PopulationCapError& e) {
        error_record("population-cap", e.what(), kPopulationCap);
        return kPopulationCap;
    } catch (const bbm::ConvergenceError& e) {
        error_record("quadrature", std::string(e.what()) + " (log bracket [" + real(e.lower()) + ", " +
                                       real(e.upper()) + "])",
                     kQuadrature);
        return kQuadrature;
    } catch (const std::exception& e) {
        error_record("internal", e.what(), kFailure);
        return kFailure;
    }
}
