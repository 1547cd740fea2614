#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>
#include <vector>

#include "evocoal/cli.hpp"

using namespace evocoal;

namespace {

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> lines;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("g17 serialization round-trips binary64 exactly") {
    RandomStream rng(301, "g17");
    for (int k = 0; k < 5000; ++k) {
        double x = rng.exponential(0.371) * std::pow(10.0, double(int(rng.uniform_below(7))) - 3.0);
        double back = std::stod(fmt_g17(x));
        REQUIRE(back == x);
    }
}

TEST_CASE("moran runs are byte-identical under the same config") {
    RunConfig cfg;
    cfg.command = "moran";
    cfg.n = 100;
    cfg.t_end = 10.0;
    cfg.seed = 7;
    std::ostringstream csv1, csv2, log1, log2;
    auto r1 = run_moran_streams(cfg, csv1, &log1);
    auto r2 = run_moran_streams(cfg, csv2, &log2);
    CHECK(csv1.str() == csv2.str());
    CHECK(log1.str() == log2.str());
    CHECK(r1.final_length == r2.final_length);
    CHECK(r1.events > 0);

    cfg.seed = 8;
    std::ostringstream csv3, log3;
    run_moran_streams(cfg, csv3, &log3);
    CHECK(csv3.str() != csv1.str());
}

TEST_CASE("path csv: header-only when no events, sane jump columns") {
    RunConfig cfg;
    cfg.command = "moran";
    cfg.n = 2;
    cfg.t_end = 1e-9;
    cfg.seed = 3;
    std::ostringstream csv;
    run_moran_streams(cfg, csv, nullptr);
    auto lines = split_lines(csv.str());
    REQUIRE(lines.size() == 1);
    CHECK(lines[0] == "time,value_pre_jump,value_post_jump,is_mrca_change");

    cfg.n = 40;
    cfg.t_end = 2.0;
    std::ostringstream csv2, log2;
    auto res = run_moran_streams(cfg, csv2, &log2);
    auto rows = split_lines(csv2.str());
    REQUIRE(rows.size() == res.events + 1);
    // pre > post on every row (jumps are strictly downward)
    int mrca_rows = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::istringstream row(rows[r]);
        std::string t, pre, post, flag;
        std::getline(row, t, ',');
        std::getline(row, pre, ',');
        std::getline(row, post, ',');
        std::getline(row, flag, ',');
        REQUIRE(std::stod(pre) > std::stod(post));
        if (flag == "1") ++mrca_rows;
    }
    // MRCA-change rows coincide with the f=2 extinction records in the log
    int ext_records = 0;
    std::istringstream log_in(log2.str());
    auto parsed = read_event_log(log_in);
    for (const auto& rec : parsed.records)
        if (rec.kind == RecordKind::extinction) ++ext_records;
    CHECK(mrca_rows == ext_records);
    CHECK(res.extinctions == static_cast<std::uint64_t>(ext_records));
}

TEST_CASE("event log: schema fields, replay fidelity, parse errors") {
    RunConfig cfg;
    cfg.command = "moran";
    cfg.n = 60;
    cfg.t_end = 4.0;
    cfg.seed = 11;
    std::ostringstream csv, log;
    auto res = run_moran_streams(cfg, csv, &log);
    const std::string log_text = log.str();
    auto lines = split_lines(log_text);
    REQUIRE(lines.size() >= 3);
    CHECK(lines[0].find("\"v\":1") != std::string::npos);
    CHECK(lines[0].find("\"kind\":\"meta\"") != std::string::npos);

    std::istringstream in(log_text);
    auto sum = replay(in);
    CHECK(sum.ok);
    CHECK(sum.model == "moran");
    CHECK(sum.events == res.events);
    CHECK(sum.snapshots_checked == 2);
    CHECK(sum.max_snapshot_deviation <= 1e-9);
    CHECK(sum.final_length == Catch::Approx(res.final_length).margin(1e-9));

    // replay ignores any ambient seed: the log carries its own
    std::istringstream in2(log_text);
    auto sum2 = replay(in2);
    CHECK(sum2.final_length == sum.final_length);

    // truncated log: parse error names the first bad line
    std::string broken;
    for (std::size_t k = 0; k + 1 < lines.size(); ++k) broken += lines[k] + "\n";
    broken += lines.back().substr(0, lines.back().size() / 2) + "\n";
    std::istringstream bad(broken);
    try {
        replay(bad);
        FAIL("expected LogParseError");
    } catch (const LogParseError& e) {
        CHECK(e.line == static_cast<int>(lines.size()));
    }

    std::istringstream empty("");
    CHECK_THROWS_AS(read_event_log(empty), LogParseError);
}

TEST_CASE("lookdown log replays and reproduces the snapshot") {
    RunConfig cfg;
    cfg.command = "lookdown";
    cfg.n = 30;
    cfg.n_max = 60;
    cfg.t_end = 1.5;
    cfg.seed = 13;
    std::ostringstream csv1, csv2, log1, log2;
    auto r1 = run_lookdown_streams(cfg, csv1, &log1);
    auto r2 = run_lookdown_streams(cfg, csv2, &log2);
    CHECK(csv1.str() == csv2.str());
    CHECK(log1.str() == log2.str());
    CHECK(r1.final_length == r2.final_length);

    std::istringstream in(log1.str());
    auto sum = replay(in);
    CHECK(sum.ok);
    CHECK(sum.model == "lookdown");
    CHECK(sum.events == r1.events);
    CHECK(sum.max_snapshot_deviation <= 1e-9);
}

TEST_CASE("kingman reports: decisions present and tables well-formed") {
    RunConfig cfg;
    cfg.command = "kingman";
    cfg.n = 500;
    cfg.reps = 2000;
    cfg.seed = 17;
    auto reports = run_kingman_reports(cfg);
    REQUIRE(reports.size() == 3);
    for (const auto& [name, r] : reports) {
        CHECK(r.decision);
        CHECK(r.provenance.seed == 17);
    }

    std::ostringstream cs, js;
    write_reports_csv(cs, reports);
    write_reports_jsonl(js, reports);
    auto cl = split_lines(cs.str());
    REQUIRE(cl.size() == 4);
    CHECK(cl[0].rfind("name,estimate", 0) == 0);
    CHECK(split_lines(js.str()).size() == 3);
}
