#pragma once

// Outlier characterization: mutual-citation syndicates with roles, composite
// outlier ranking and audit profiles, tier mixing/assortativity, and Louvain
// community structure.

#include "citeforge/detect.hpp"
#include "citeforge/graph.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace citeforge {

enum class SyndicateRole { Hub, NetGiver, NetReceiver };

const char* role_name(SyndicateRole r);

struct Syndicate {
    int id = 0;
    std::vector<std::string> members;                      // sorted, size >= 2
    std::vector<std::tuple<std::string, std::string, double>> internal_edges;  // directed, non-self
    double density = 0.0;                                  // directed edges / n(n-1)
    std::map<std::string, SyndicateRole> roles;
    std::map<int, double> timeline;                        // year -> internal weight
};

// Connected components (size >= 2) of the undirected graph linking flagged
// authors i, j when w_ij > 0 and w_ji > 0. Roles and timeline are filled in.
std::vector<Syndicate> syndicate_components(const std::set<std::string>& outliers,
                                            const AuthorCitationGraph& g);

// Shortest-path betweenness (Brandes), unweighted directed paths, unnormalized.
// Edges given as adjacency lists over 0..n-1.
std::vector<double> betweenness(const std::vector<std::vector<int>>& adj);

struct MixingMatrix {
    double probs[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // rows/cols: Case, Control
    bool row_defined[2] = {false, false};
    double assortativity_r = 0.0;
    double diagonal_avg = 0.0;
    long long excluded_nodes = 0;                   // graph nodes without a tier
};

// Row-stochastic tier-to-tier citation probabilities over non-self edges and
// Newman's categorical assortativity on the same contingency table.
MixingMatrix mixing_matrix(const AuthorCitationGraph& g,
                           const std::map<std::string, CohortLabel>& tiers);

struct WeightedUndirectedGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;  // both directions stored
    std::vector<double> strength;
    double total_weight = 0.0;                             // sum over undirected edges
};

// w_ij + w_ji per unordered pair, self-loops dropped.
WeightedUndirectedGraph undirected_projection(const AuthorCitationGraph& g);

struct LouvainResult {
    std::vector<int> community;    // per node, compacted ids
    double modularity = 0.0;       // Newman-Girvan Q of the final partition
    int levels = 0;
};

// Two-phase Louvain with a seeded node sweep order.
LouvainResult louvain_modularity(const WeightedUndirectedGraph& g, std::uint64_t seed);

// Q of an arbitrary partition of g; used both by Louvain and for reporting.
double modularity(const WeightedUndirectedGraph& g, const std::vector<int>& community);

struct AuditProfile {
    std::string author;
    int subject = 0;
    double outlier_score = 0.0;                 // Eq.-1 composite s
    int works = 0;
    int year_min = 0;
    int year_max = 0;
    int out_partners = 0;                        // distinct matched authors, self excluded
    int in_partners = 0;
    int reciprocal_partners = 0;
    std::string primary_journal;
    int primary_journal_count = 0;
    std::vector<std::pair<std::string, int>> feature_flags;  // (feature, 3 or 5)
};

struct AuthorWorksInfo {
    int works = 0;
    int year_min = 0;
    int year_max = 0;
    std::map<std::string, int> journal_counts;
};

// Flagged outliers ranked by composite score descending (ties by author ID);
// partner counts restricted to the matched-pair sub-network.
std::vector<AuditProfile> rank_outliers(const std::vector<OutlierFlag>& flags,
                                        const std::map<std::string, AuthorWorksInfo>& works_info,
                                        const AuthorCitationGraph& g,
                                        const std::set<std::string>& matched_authors);

// Internal per-year citation mass of a syndicate (non-self edges).
std::map<int, double> burst_timeline(const Syndicate& s, const AuthorCitationGraph& g);

} // namespace citeforge
