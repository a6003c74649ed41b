#include <doctest.h>

#include "citeforge/pipeline.hpp"
#include "citeforge/util.hpp"
#include "test_util.hpp"

#include <filesystem>
#include <unistd.h>

using namespace citeforge;
namespace fs = std::filesystem;

namespace {

std::string small_scenario_json(int syndicate_size = 8, double multiplier = 8.0) {
    ScenarioConfig c;
    c.n_authors_per_tier = 60;
    c.n_journals_per_tier = 4;
    c.subjects = 1;
    c.baseline_cite_rate = 0.06;
    c.homophily = 0.8;
    c.seed = 42;
    if (syndicate_size > 1) {
        SyndicateSpec s;
        s.size = syndicate_size;
        s.topology = SyndicateTopology::HubAndSpoke;
        s.internal_rate_multiplier = multiplier;
        s.burst_years = {2021, 2024};
        c.syndicates.push_back(s);
    }
    return scenario_to_json(c);
}

RunConfig run_config_for(const TempDir& tmp, const std::string& scenario_json) {
    RunConfig c;
    c.scenario_path = tmp.write("scenario.json", scenario_json);
    c.out_dir = tmp.file("out");
    c.n_boot = 200;
    c.detect.forest.n_trees = 100;
    return c;
}

std::map<std::string, bool> executed_map(const RunReport& report) {
    std::map<std::string, bool> m;
    for (const auto& s : report.stages) m[s.name] = s.executed;
    return m;
}

} // namespace

TEST_CASE("pipeline runs end to end, then skips unchanged stages") {
    TempDir tmp("pipe");
    RunConfig config = run_config_for(tmp, small_scenario_json());

    RunReport first = run_pipeline(config);
    auto ran = executed_map(first);
    for (const auto& [stage, executed] : ran) {
        CHECK(executed);
    }
    CHECK(fs::exists(config.out_dir + "/report.md"));
    CHECK(fs::exists(config.out_dir + "/detect/outliers.csv"));
    CHECK(fs::exists(config.out_dir + "/detect/sensitivity.csv"));
    CHECK(fs::exists(config.out_dir + "/stats/stats.csv"));
    CHECK(fs::exists(config.out_dir + "/stats/forest_data.csv"));
    CHECK(fs::exists(config.out_dir + "/stats/heatmap_data.csv"));
    CHECK(fs::exists(config.out_dir + "/forensics/syndicates.json"));
    CHECK(fs::exists(config.out_dir + "/forensics/mixing.csv"));
    CHECK(fs::exists(config.out_dir + "/forensics/audit.csv"));

    std::string report_before = read_text_file(config.out_dir + "/report.md");

    RunReport second = run_pipeline(config);
    for (const auto& [stage, executed] : executed_map(second)) {
        CHECK_FALSE(executed);
    }
    CHECK(read_text_file(config.out_dir + "/report.md") == report_before);
}

TEST_CASE("changing sigma re-executes detect and downstream only") {
    TempDir tmp("pipesigma");
    RunConfig config = run_config_for(tmp, small_scenario_json());
    run_pipeline(config);

    config.detect.sigma = 3.0;
    RunReport rerun = run_pipeline(config);
    auto ran = executed_map(rerun);
    CHECK_FALSE(ran.at("synth"));
    CHECK_FALSE(ran.at("ingest"));
    CHECK_FALSE(ran.at("graph"));
    CHECK_FALSE(ran.at("rank"));
    CHECK_FALSE(ran.at("match"));
    CHECK_FALSE(ran.at("features"));
    CHECK(ran.at("detect"));
    CHECK_FALSE(ran.at("stats"));     // stats does not depend on sigma
    CHECK(ran.at("forensics"));
    CHECK(ran.at("report"));
}

TEST_CASE("pairs and tiers csv round trips") {
    TempDir tmp("csvroundtrip");
    std::vector<MatchedPair> pairs;
    MatchedPair p;
    p.subject = 2;
    p.case_author = "case-1";
    p.control_author = "ctrl-1";
    p.case_h5 = 7;
    p.control_h5 = 6;
    pairs.push_back(p);
    save_pairs_csv(pairs, tmp.file("pairs.csv"));
    auto loaded = load_pairs_csv(tmp.file("pairs.csv"));
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].subject == 2);
    CHECK(loaded[0].case_author == "case-1");
    CHECK(loaded[0].control_h5 == 6);

    std::vector<TierRow> tiers;
    TierRow t;
    t.issn = "12345678";
    t.subject = 1;
    t.score = 0.125;
    t.tier = JournalTier::High;
    tiers.push_back(t);
    save_tiers_csv(tiers, tmp.file("tiers.csv"));
    auto tl = load_tiers_csv(tmp.file("tiers.csv"));
    REQUIRE(tl.size() == 1);
    CHECK(tl[0].issn == "12345678");
    CHECK(tl[0].tier == JournalTier::High);
    CHECK(tl[0].score == 0.125);
}

TEST_CASE("run config validation") {
    CHECK_THROWS_AS(parse_run_config("{}"), ValidationError);
    RunConfig c = parse_run_config(
        "{\"scenario\":\"s.json\",\"sigma\":3.5,\"seed\":7,\"baseline\":\"population\"}");
    CHECK(c.detect.sigma == 3.5);
    CHECK(c.seed == 7);
    CHECK(c.detect.seed == 7);
    CHECK(c.detect.baseline == BaselineMode::Population);
}

TEST_CASE("a failing stage aborts with its name, partial outputs preserved") {
    TempDir tmp("pipefail");
    RunConfig config = run_config_for(tmp, small_scenario_json());
    config.scenario_path = tmp.file("missing.json");   // synth input absent
    try {
        run_pipeline(config);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage == "synth");
    }

    // Now break a later stage: run once, then corrupt the tiers file and
    // force downstream re-execution by changing a match parameter.
    TempDir tmp2("pipefail2");
    RunConfig ok = run_config_for(tmp2, small_scenario_json());
    run_pipeline(ok);
    write_text_file(ok.out_dir + "/rank/journal_tiers.csv", "garbage\nrow,with,bad,data\n");
    ok.bucket_width = 2;
    try {
        run_pipeline(ok);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage == "match");
    }
    // Upstream outputs survive the failure.
    CHECK(fs::exists(ok.out_dir + "/catalog/works.jsonl"));
    CHECK(fs::exists(ok.out_dir + "/graph/author_edges.csv"));
}

TEST_CASE("the planted syndicate surfaces in the pipeline outputs") {
    TempDir tmp("pipesynd");
    RunConfig config = run_config_for(tmp, small_scenario_json(8, 10.0));
    run_pipeline(config);

    auto truth = load_truth(config.out_dir + "/scenario/truth.json");
    REQUIRE(truth.syndicate_members.size() == 8);

    auto flags = load_outliers_csv(config.out_dir + "/detect/outliers.csv");
    int members_present = 0;
    for (const auto& f : flags) {
        if (truth.syndicate_members.count(f.author)) ++members_present;
    }
    // The members must at least survive classification and matching.
    CHECK(members_present >= 6);
}
