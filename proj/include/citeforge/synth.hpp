#pragma once

// Synthetic citation economies with planted syndicates. The generator emits
// ingest-compatible record files plus ground truth, and is bit-reproducible
// under its seed.

#include "citeforge/catalog.hpp"
#include "citeforge/cohort.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace citeforge {

enum class SyndicateTopology { Mesh, HubAndSpoke };

struct SyndicateSpec {
    int size = 0;
    SyndicateTopology topology = SyndicateTopology::Mesh;
    double internal_rate_multiplier = 1.0;
    std::vector<int> burst_years;
};

struct ScenarioConfig {
    int n_authors_per_tier = 1000;
    int n_journals_per_tier = 25;        // low tier; mid gets twice as many
    int subjects = 1;
    double baseline_cite_rate = 0.06;    // within-group reference share per unit multiplier
    double homophily = 0.8;              // own-tier probability for study references
    std::vector<SyndicateSpec> syndicates;
    std::uint64_t seed = 42;
    int window_start = 2020;
    int window_end = 2024;
};

ScenarioConfig parse_scenario(const std::string& json_text);
std::string scenario_to_json(const ScenarioConfig& config);

struct GroundTruth {
    std::set<std::string> syndicate_members;
    std::set<std::string> hub_ids;
    std::map<std::string, CohortLabel> tier_of;   // study authors only
    std::vector<std::vector<std::string>> syndicate_groups;  // per planted syndicate
};

struct SynthResult {
    std::vector<WorkRecord> works;
    SubjectMap subjects;
    GroundTruth truth;
    std::vector<double> realized_internal_share;   // per active syndicate
    std::vector<std::string> notes;
};

// Throws ValidationError on an infeasible config (syndicate members exceeding
// the tier population, bad rates). A multiplier <= 1 deactivates the
// syndicate: no extra members are planted.
SynthResult generate(const ScenarioConfig& config);

// works.jsonl, subjects.csv, truth.json, manifest.json under dir.
void write_synth(const SynthResult& result, const ScenarioConfig& config,
                 const std::string& dir);
GroundTruth load_truth(const std::string& path);

} // namespace citeforge
