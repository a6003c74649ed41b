#pragma once

// End-to-end orchestration: the individual CLI stages, plus a run driver with
// content-hash stage skipping and a markdown report.

#include "citeforge/catalog.hpp"
#include "citeforge/cohort.hpp"
#include "citeforge/detect.hpp"
#include "citeforge/features.hpp"
#include "citeforge/forensics.hpp"
#include "citeforge/graph.hpp"
#include "citeforge/rank.hpp"
#include "citeforge/stats.hpp"
#include "citeforge/synth.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace citeforge {

struct IngestOptions {
    std::string works_path;
    std::string subjects_path;
    int window_start = 2020;
    int window_end = 2024;
    bool citable_only = false;
    std::optional<char> sample_digit;
    std::string out_dir;
};
void stage_ingest(const IngestOptions& opts);

struct GraphOptions {
    std::string catalog_dir;
    std::string out_dir;
};
void stage_graph(const GraphOptions& opts);

struct RankOptions {
    std::string graphs_dir;       // directory holding journal_graph_<s>.csv
    std::string out_path;         // journal_tiers.csv
    double damping = 0.85;
    double tol = 1e-10;
    int max_iter = 1000;
    bool article_teleport = false;   // weight the teleport by journal volume
};
void stage_rank(const RankOptions& opts);

struct MatchOptions {
    std::string catalog_dir;
    std::string tiers_path;
    std::string out_path;         // pairs.csv
    int min_works = 3;
    double tier_share = 0.70;
    int bucket_width = 3;
};
void stage_match(const MatchOptions& opts);

struct FeatureOptions {
    std::string graph_dir;
    std::string pairs_path;
    std::string out_path;         // features.csv
    bool burst_incoming = false;
};
void stage_features(const FeatureOptions& opts);

struct DetectOptions {
    std::string features_path;
    std::string pairs_path;
    std::string out_path;         // outliers.csv; sensitivity.csv sits beside it
    std::string graph_dir;        // optional, enables connected share
    DetectParams params;
};
void stage_detect(const DetectOptions& opts);

struct StatsOptions {
    std::string features_path;
    std::string pairs_path;
    std::string out_path;         // stats.csv; forest/heatmap data beside it
    int n_boot = 10000;
    std::uint64_t seed = 42;
};
void stage_stats(const StatsOptions& opts);

struct ForensicsOptions {
    std::string graph_dir;
    std::string outliers_path;
    std::string out_dir;
    std::uint64_t seed = 42;
};
void stage_forensics(const ForensicsOptions& opts);

// pairs.csv helpers shared by stages.
void save_pairs_csv(const std::vector<MatchedPair>& pairs, const std::string& path);
std::vector<MatchedPair> load_pairs_csv(const std::string& path);

// journal_tiers.csv helpers.
struct TierRow {
    std::string issn;
    int subject = 0;
    double score = 0.0;
    JournalTier tier = JournalTier::Mid;
};
void save_tiers_csv(const std::vector<TierRow>& rows, const std::string& path);
std::vector<TierRow> load_tiers_csv(const std::string& path);

struct RunConfig {
    int window_start = 2020;
    int window_end = 2024;
    std::string works_path;          // either works+subjects or a scenario
    std::string subjects_path;
    std::string scenario_path;
    std::string out_dir = "out";
    bool citable_only = false;
    std::optional<char> sample_digit;
    double damping = 0.85;
    int min_works = 3;
    double tier_share = 0.70;
    int bucket_width = 3;
    DetectParams detect;
    int n_boot = 2000;
    std::uint64_t seed = 42;
};

RunConfig parse_run_config(const std::string& json_text);

struct StageOutcome {
    std::string name;
    bool executed = false;           // false = skipped, inputs unchanged
    std::string input_hash;
};

struct RunReport {
    std::vector<StageOutcome> stages;
    std::string report_path;
};

// Executes synth? -> ingest -> graph -> rank -> match -> features -> detect ->
// stats -> forensics -> report, skipping stages whose input hash is unchanged.
// Throws StageError naming the failing stage.
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& what)
        : std::runtime_error(what), stage(std::move(stage_name)) {}
};

RunReport run_pipeline(const RunConfig& config);

} // namespace citeforge
