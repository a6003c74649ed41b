#pragma once

// Case/Control author classification per subject, subject-specific h5, and
// greedy one-pass matched-pair construction.

#include "citeforge/catalog.hpp"
#include "citeforge/rank.hpp"

#include <map>
#include <string>
#include <vector>

namespace citeforge {

struct AuthorPortfolio {
    std::string author;
    int subject = 0;
    int n_low = 0;
    int n_high = 0;
    int n_total = 0;   // all subject works, including mid/unknown tier
    int h5 = 0;
};

enum class CohortLabel { Case, Control, Other };

const char* cohort_name(CohortLabel label);

// Largest h such that at least h works have at least h citations.
int h_index(std::vector<int> citation_counts);

// Case: >= 70% of >= 3 papers low-tier; Control: symmetric on high tier.
CohortLabel classify_author(const AuthorPortfolio& p, int min_works = 3,
                            double share = 0.70);

struct MatchedPair {
    int subject = 0;
    std::string case_author;
    std::string control_author;
    int case_h5 = 0;
    int control_h5 = 0;
};

// Greedy one-pass matching without replacement. Cases are visited in
// descending h5 (ties by ID); a control is eligible when the floor(h5/3)
// buckets differ by at most one; nearest h5 wins, ties by ID.
std::vector<MatchedPair> match_pairs(std::vector<AuthorPortfolio> cases,
                                     std::vector<AuthorPortfolio> controls,
                                     int bucket_width = 3);

// Portfolio construction over a catalog: subject works via the subject map,
// venue tiers from `tiers`, h5 from in-window citation counts (references
// resolving inside the catalog).
std::vector<AuthorPortfolio> build_portfolios(const Catalog& catalog,
                                              const std::map<std::string, JournalTier>& tiers,
                                              int subject);

} // namespace citeforge
