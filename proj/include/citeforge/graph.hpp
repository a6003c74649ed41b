#pragma once

// Journal-level citation graph (per subject, self-citations excluded) and the
// fractionally weighted author-to-author citation graph.

#include "citeforge/catalog.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace citeforge {

// Team-size correction: each author pair of one reference gets 1/(n_c * n_a).
double fractional_weight(int n_citing_authors, int n_cited_authors);

struct JournalGraph {
    int subject = 0;
    std::vector<std::string> nodes;                                   // sorted ISSNs
    std::map<std::pair<std::string, std::string>, long long> edge_weights;  // no diagonal
};

// Throws ValidationError when subject is outside 1..5. A subject with fewer
// than two journals yields an empty/degenerate graph; `degenerate` reports it.
JournalGraph build_journal_graph(const Catalog& catalog, int subject,
                                 bool* degenerate = nullptr);

struct AuthorEdge {
    int citing = 0;                      // node index
    int cited = 0;
    double weight = 0.0;                 // sum over per_year
    bool is_self = false;
    std::map<int, double> per_year;      // keyed on the citing work's year
};

class AuthorCitationGraph {
public:
    std::vector<std::string> node_ids;   // index -> author ID, sorted
    std::map<std::string, int> node_of;
    std::vector<AuthorEdge> edges;       // sorted by (citing, cited)
    std::vector<double> out_strength;    // non-self
    std::vector<double> in_strength;     // non-self
    std::vector<double> self_weight;     // w_ii

    // Non-self adjacency, sorted by neighbor index.
    std::vector<std::vector<std::pair<int, double>>> out_adj;
    std::vector<std::vector<std::pair<int, double>>> in_adj;

    long long dangling_refs = 0;         // references outside the catalog/window

    int index_of(const std::string& author) const {
        auto it = node_of.find(author);
        return it == node_of.end() ? -1 : it->second;
    }
    std::size_t size() const { return node_ids.size(); }
    double edge_weight(int citing, int cited) const;   // 0 when absent
};

// Every reference u->v expands to all (a in authors(u), b in authors(v))
// pairs with fractional weight, bucketed by citing-work year. Edges with
// neither endpoint in `authors` are dropped; self-loops are kept and flagged.
// All `authors` become nodes even when isolated.
AuthorCitationGraph build_author_graph(const Catalog& catalog,
                                       const std::set<std::string>& authors);

// citing,cited,count per subject file; citing,cited,weight,is_self,year_json.
void save_journal_graph_csv(const JournalGraph& g, const std::string& path);
void save_author_graph_csv(const AuthorCitationGraph& g, const std::string& path);
AuthorCitationGraph load_author_graph_csv(const std::string& path);

} // namespace citeforge
