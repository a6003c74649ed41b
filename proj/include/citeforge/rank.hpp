#pragma once

// Per-subject Eigenfactor scores via damped power iteration, plus the quartile
// tier thresholds that drive venue labeling.

#include "citeforge/graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace citeforge {

struct EigenfactorResult {
    int subject = 0;
    std::vector<std::pair<std::string, double>> scores;  // sorted by ISSN, sum to 1
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

// Stationary distribution of the column-normalized citation matrix mixed with
// a teleport vector at rate (1 - damping); dangling journals redistribute
// along the same vector. The default teleport is uniform; passing per-journal
// weights (aligned with g.nodes, any positive scale) gives the article-volume
// variant. Throws ValidationError on an empty graph.
EigenfactorResult eigenfactor(const JournalGraph& g, double damping = 0.85,
                              double tol = 1e-10, int max_iter = 1000,
                              const std::vector<double>* teleport_weights = nullptr);

struct TierThresholds {
    int subject = 0;
    double p25 = 0.0;
    double p75 = 0.0;
};

// Inclusive lower/upper quartiles under linear interpolation on sorted scores.
// Requires at least 4 scored journals.
TierThresholds tier_thresholds(const EigenfactorResult& r);

enum class JournalTier { Low, Mid, High };

const char* tier_name(JournalTier t);

// Strictly below p25 -> Low, strictly above p75 -> High, ties fall to Mid.
std::map<std::string, JournalTier> label_journal_tier(const EigenfactorResult& r,
                                                      const TierThresholds& th);

} // namespace citeforge
