#pragma once

// The 14 behavioral features computed per author over the citation graph:
// rate features, concentration, structure (undirected projection), global
// centrality, journal endogamy, and normalized burst intensity.

#include "citeforge/catalog.hpp"
#include "citeforge/graph.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace citeforge {

inline constexpr int kFeatureCount = 14;

enum Feature : int {
    kSelfCitationRate = 0,
    kCoauthorCitationRate,
    kCitationBalance,
    kEigenvectorCentrality,
    kJournalEndogamy,
    kCitationEntropy,
    kHhiIn,
    kReciprocityRate,
    kHhiOut,
    kClusteringCoeff,
    kTrianglesNorm,
    kKcoreNumber,
    kCliqueStrength,
    kBurstIntensity,
};

// Column names in table order; burst_intensity last.
const std::array<std::string, kFeatureCount>& feature_names();

struct FeatureVector {
    std::string author;
    int subject = 0;
    std::array<double, kFeatureCount> values{};   // burst slot unset when absent
    bool burst_present = false;
    std::uint16_t missing_mask = 0;               // bit set = zero-denominator fallback

    double operator[](int f) const { return values[static_cast<std::size_t>(f)]; }
    std::optional<double> burst() const {
        if (!burst_present) return std::nullopt;
        return values[kBurstIntensity];
    }
};

// Authors sharing at least one work inside the window; author excluded.
std::map<std::string, std::set<std::string>> coauthor_sets(const Catalog& catalog);

struct EndogamyEntry {
    long long same_issn = 0;
    long long resolvable = 0;
};

// Per author, over all of their works: references whose cited ISSN resolves,
// and among those the ones landing in the citing work's own journal.
std::map<std::string, EndogamyEntry> endogamy_table(const Catalog& catalog);

class FeatureEngine {
public:
    FeatureEngine(const AuthorCitationGraph& g,
                  std::map<std::string, std::set<std::string>> coauthors,
                  std::map<std::string, EndogamyEntry> endogamy,
                  bool burst_incoming = false);

    // subject only labels the output row; features are graph-global.
    FeatureVector compute(const std::string& author, int subject) const;

    const std::vector<double>& centrality() const { return centrality_; }
    const std::vector<int>& core_numbers() const { return core_; }
    bool centrality_converged() const { return centrality_converged_; }

private:
    const AuthorCitationGraph& g_;
    std::map<std::string, std::set<std::string>> coauthors_;
    std::map<std::string, EndogamyEntry> endogamy_;
    bool burst_incoming_ = false;

    std::vector<std::vector<int>> undirected_;   // projection, sorted neighbor lists
    std::vector<int> core_;
    std::vector<double> centrality_;             // L1-normalized
    bool centrality_converged_ = true;
};

// Leading-eigenvector prestige: score of the cited author fed by w_ji.
// Shifted power iteration (I + W) keeps periodic graphs convergent. Returns
// the L1-normalized vector; all-zero graphs give the zero vector.
std::vector<double> eigenvector_centrality(const AuthorCitationGraph& g,
                                           double tol = 1e-10, int max_iter = 1000,
                                           bool* converged = nullptr);

// Core numbers on the undirected projection (presence-only edges, self-loops
// dropped).
std::vector<int> core_numbers(const std::vector<std::vector<int>>& undirected);

// features.csv round trip: author,subject,<table order>, burst blank when absent.
void save_features_csv(const std::vector<FeatureVector>& rows, const std::string& path);
std::vector<FeatureVector> load_features_csv(const std::string& path);

} // namespace citeforge
