// evocoal — event-driven simulator and verification lab for the evolving
// Kingman coalescent.
//
// Subcommands:
//   kingman   fixed-time coalescent sampling checked against exact moments
//             and the Gumbel limit law
//   moran     one Moran-model run: compensated length path CSV, optional
//             replayable event log
//   lookdown  one lookdown window: level-n length path CSV, optional log
//   replay    re-apply a logged run and verify its snapshots
//   verify    the full acceptance battery (exit 1 on any failure)
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "evocoal/cli.hpp"
#include "evocoal/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace evocoal;

fs::path out_dir_of(const RunConfig& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    if (const char* env = std::getenv("EVOCOAL_OUT")) return env;
    return ".";
}

fs::path out_file(const RunConfig& cfg, const std::string& name) {
    fs::path dir = out_dir_of(cfg);
    fs::create_directories(dir);
    return dir / name;
}

int emit_reports(const RunConfig& cfg, const std::vector<NamedReport>& reports,
                 const std::string& stem) {
    const bool jsonl = cfg.format == "jsonl";
    std::ofstream out(out_file(cfg, stem + (jsonl ? ".jsonl" : ".csv")));
    if (!out) {
        std::cerr << "error: cannot write results under '" << cfg.out << "'\n";
        return 2;
    }
    jsonl ? write_reports_jsonl(out, reports) : write_reports_csv(out, reports);
    bool all_pass = true;
    for (const auto& [name, r] : reports) {
        std::cout << (r.decision ? "pass  " : "FAIL  ") << name
              << "  estimate=" << r.estimate << "  stat=" << r.test_statistic
              << "  threshold=" << r.threshold << "\n";
        all_pass = all_pass && r.decision;
    }
    return all_pass ? 0 : 1;
}

int cmd_kingman(const RunConfig& cfg) {
    return emit_reports(cfg, run_kingman_reports(cfg), "kingman_reports");
}

int cmd_moran(const RunConfig& cfg) {
    std::ofstream csv(out_file(cfg, "moran_path.csv"));
    if (!csv) {
        std::cerr << "error: cannot write under '" << cfg.out << "'\n";
        return 2;
    }
    std::ofstream log;
    std::ostream* log_ptr = nullptr;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path);
        if (!log) {
            std::cerr << "error: cannot write log '" << cfg.log_path << "'\n";
            return 2;
        }
        log_ptr = &log;
    }
    auto res = run_moran_streams(cfg, csv, log_ptr);
    std::cout << "moran n=" << cfg.n << " t_end=" << cfg.t_end << " seed=" << cfg.seed
              << ": " << res.events << " events, " << res.extinctions
              << " oldest-family extinctions, final compensated length "
              << res.final_length - 2.0 * std::log(double(cfg.n)) << "\n";
    return 0;
}

int cmd_lookdown(const RunConfig& cfg) {
    std::ofstream csv(out_file(cfg, "lookdown_path.csv"));
    if (!csv) {
        std::cerr << "error: cannot write under '" << cfg.out << "'\n";
        return 2;
    }
    std::ofstream log;
    std::ostream* log_ptr = nullptr;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path);
        if (!log) {
            std::cerr << "error: cannot write log '" << cfg.log_path << "'\n";
            return 2;
        }
        log_ptr = &log;
    }
    auto res = run_lookdown_streams(cfg, csv, log_ptr);
    std::cout << "lookdown n=" << cfg.n << " cap=" << (cfg.n_max > 0 ? cfg.n_max : cfg.n)
              << " window=" << cfg.t_end << " seed=" << cfg.seed << ": " << res.events
              << " events, final compensated length "
              << res.final_length - 2.0 * std::log(double(cfg.n)) << "\n";
    return 0;
}

int cmd_replay(const RunConfig& cfg) {
    std::ifstream in(cfg.log_path);
    if (!in) {
        std::cerr << "error: cannot read log '" << cfg.log_path << "'\n";
        return 2;
    }
    try {
        auto sum = replay(in);
        std::cout << "replayed " << sum.model << " log: " << sum.events << " events, "
                  << sum.snapshots_checked << " snapshots checked, max deviation "
                  << sum.max_snapshot_deviation << ", final length " << sum.final_length
                  << (sum.ok ? " [ok]" : " [MISMATCH]") << "\n";
        return sum.ok ? 0 : 1;
    } catch (const LogParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_verify(const RunConfig& cfg) {
    fs::path dir = out_dir_of(cfg);
    fs::create_directories(dir);
    auto results = run_verification(cfg.seed, dir.string(), cfg.threads, std::cout);
    int failed = 0;
    for (const auto& r : results)
        if (!r.pass) ++failed;
    std::cout << results.size() - failed << "/" << results.size()
              << " acceptance criteria passed (seed " << cfg.seed << ")\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evolving Kingman coalescent simulator and verification lab"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&cfg](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "64-bit master seed");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--format", cfg.format, "result table format: csv|jsonl")
            ->check(CLI::IsMember({"csv", "jsonl"}));
        sub->add_option("--threads", cfg.threads,
                        "worker threads (0 = EVOCOAL_THREADS or hardware)");
    };

    auto* kingman = app.add_subcommand("kingman", "fixed-time coalescent sampling");
    kingman->add_option("--n", cfg.n, "population size")->required();
    kingman->add_option("--reps", cfg.reps, "replicates");
    kingman->add_option("--slack", cfg.ks_slack, "KS slack for the limit law");
    kingman->add_option("--alpha", cfg.alpha, "significance level");
    add_common(kingman);

    auto* moran = app.add_subcommand("moran", "event-driven Moran run");
    moran->add_option("--n", cfg.n, "population size")->required();
    moran->add_option("--t-end", cfg.t_end, "simulated horizon")->required();
    moran->add_option("--f", cfg.f, "oldest-family overlay size (default 2)");
    moran->add_option("--log", cfg.log_path, "write a replayable event log here");
    add_common(moran);

    auto* lookdown = app.add_subcommand("lookdown", "lookdown window run");
    lookdown->add_option("--n", cfg.n, "levels whose length path is recorded")->required();
    lookdown->add_option("--n-max", cfg.n_max, "level cap (default n)");
    lookdown->add_option("--window", cfg.t_end, "window length")->required();
    lookdown->add_option("--log", cfg.log_path, "write a replayable event log here");
    add_common(lookdown);

    auto* replay_cmd = app.add_subcommand("replay", "re-apply a logged run");
    replay_cmd->add_option("log", cfg.log_path, "event log path")->required();

    auto* verify = app.add_subcommand("verify", "run the acceptance battery");
    add_common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (kingman->parsed()) return cmd_kingman(cfg);
        if (moran->parsed()) {
            cfg.command = "moran";
            return cmd_moran(cfg);
        }
        if (lookdown->parsed()) return cmd_lookdown(cfg);
        if (replay_cmd->parsed()) return cmd_replay(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
