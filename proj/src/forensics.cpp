#include "citeforge/forensics.hpp"

#include "citeforge/rng.hpp"
#include "citeforge/util.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>

namespace citeforge {

const char* role_name(SyndicateRole r) {
    switch (r) {
        case SyndicateRole::Hub: return "hub";
        case SyndicateRole::NetGiver: return "net_giver";
        case SyndicateRole::NetReceiver: return "net_receiver";
    }
    return "net_receiver";
}

std::vector<double> betweenness(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<double> bc(static_cast<std::size_t>(n), 0.0);
    std::vector<double> sigma(static_cast<std::size_t>(n)), delta(static_cast<std::size_t>(n));
    std::vector<int> dist(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));

    for (int s = 0; s < n; ++s) {
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(dist.begin(), dist.end(), -1);
        for (auto& p : pred) p.clear();
        sigma[static_cast<std::size_t>(s)] = 1.0;
        dist[static_cast<std::size_t>(s)] = 0;

        std::vector<int> order;
        std::deque<int> queue{s};
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            order.push_back(v);
            for (int w : adj[static_cast<std::size_t>(v)]) {
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    queue.push_back(w);
                }
                if (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(v)] + 1) {
                    sigma[static_cast<std::size_t>(w)] += sigma[static_cast<std::size_t>(v)];
                    pred[static_cast<std::size_t>(w)].push_back(v);
                }
            }
        }
        std::fill(delta.begin(), delta.end(), 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            int w = *it;
            for (int v : pred[static_cast<std::size_t>(w)]) {
                delta[static_cast<std::size_t>(v)] +=
                    sigma[static_cast<std::size_t>(v)] / sigma[static_cast<std::size_t>(w)] *
                    (1.0 + delta[static_cast<std::size_t>(w)]);
            }
            if (w != s) bc[static_cast<std::size_t>(w)] += delta[static_cast<std::size_t>(w)];
        }
    }
    return bc;
}

std::vector<Syndicate> syndicate_components(const std::set<std::string>& outliers,
                                            const AuthorCitationGraph& g) {
    std::vector<std::string> ids(outliers.begin(), outliers.end());
    const int n = static_cast<int>(ids.size());
    std::map<std::string, int> local;
    for (int i = 0; i < n; ++i) local[ids[static_cast<std::size_t>(i)]] = i;

    // Mutual links among flagged authors.
    std::vector<std::vector<int>> mutual(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int gi = g.index_of(ids[static_cast<std::size_t>(i)]);
        if (gi < 0) continue;
        for (const auto& [j, w] : g.out_adj[static_cast<std::size_t>(gi)]) {
            auto it = local.find(g.node_ids[static_cast<std::size_t>(j)]);
            if (it == local.end() || it->second == i) continue;
            if (g.edge_weight(j, gi) > 0.0) mutual[static_cast<std::size_t>(i)].push_back(it->second);
        }
    }

    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int n_comp = 0;
    for (int i = 0; i < n; ++i) {
        if (comp[static_cast<std::size_t>(i)] >= 0) continue;
        std::deque<int> queue{i};
        comp[static_cast<std::size_t>(i)] = n_comp;
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int w : mutual[static_cast<std::size_t>(v)]) {
                if (comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = n_comp;
                    queue.push_back(w);
                }
            }
        }
        ++n_comp;
    }

    std::vector<std::vector<std::string>> groups(static_cast<std::size_t>(n_comp));
    for (int i = 0; i < n; ++i) {
        groups[static_cast<std::size_t>(comp[static_cast<std::size_t>(i)])]
            .push_back(ids[static_cast<std::size_t>(i)]);
    }

    std::vector<Syndicate> out;
    int next_id = 0;
    for (auto& members : groups) {
        if (members.size() < 2) continue;
        Syndicate s;
        s.id = next_id++;
        std::sort(members.begin(), members.end());
        s.members = std::move(members);

        const int m = static_cast<int>(s.members.size());
        std::map<std::string, int> midx;
        for (int i = 0; i < m; ++i) midx[s.members[static_cast<std::size_t>(i)]] = i;

        std::vector<std::vector<int>> internal_adj(static_cast<std::size_t>(m));
        std::vector<double> out_w(static_cast<std::size_t>(m), 0.0);
        std::vector<double> in_w(static_cast<std::size_t>(m), 0.0);
        long long directed_edges = 0;
        for (int i = 0; i < m; ++i) {
            int gi = g.index_of(s.members[static_cast<std::size_t>(i)]);
            if (gi < 0) continue;
            for (const auto& [j, w] : g.out_adj[static_cast<std::size_t>(gi)]) {
                auto it = midx.find(g.node_ids[static_cast<std::size_t>(j)]);
                if (it == midx.end()) continue;
                s.internal_edges.emplace_back(s.members[static_cast<std::size_t>(i)],
                                              s.members[static_cast<std::size_t>(it->second)], w);
                internal_adj[static_cast<std::size_t>(i)].push_back(it->second);
                out_w[static_cast<std::size_t>(i)] += w;
                in_w[static_cast<std::size_t>(it->second)] += w;
                ++directed_edges;
            }
        }
        std::sort(s.internal_edges.begin(), s.internal_edges.end());
        s.density = static_cast<double>(directed_edges) /
                    (static_cast<double>(m) * static_cast<double>(m - 1));

        // Hub: max betweenness on the internal directed graph, ties to the
        // lexicographically smaller ID (members are sorted).
        auto bc = betweenness(internal_adj);
        int hub = 0;
        for (int i = 1; i < m; ++i) {
            if (bc[static_cast<std::size_t>(i)] > bc[static_cast<std::size_t>(hub)]) hub = i;
        }
        for (int i = 0; i < m; ++i) {
            SyndicateRole role;
            if (i == hub) {
                role = SyndicateRole::Hub;
            } else if (out_w[static_cast<std::size_t>(i)] > in_w[static_cast<std::size_t>(i)]) {
                role = SyndicateRole::NetGiver;
            } else {
                role = SyndicateRole::NetReceiver;
            }
            s.roles[s.members[static_cast<std::size_t>(i)]] = role;
        }

        s.timeline = burst_timeline(s, g);
        out.push_back(std::move(s));
    }
    return out;
}

MixingMatrix mixing_matrix(const AuthorCitationGraph& g,
                           const std::map<std::string, CohortLabel>& tiers) {
    MixingMatrix mm;
    auto tier_index = [&](int node) -> int {
        auto it = tiers.find(g.node_ids[static_cast<std::size_t>(node)]);
        if (it == tiers.end()) return -1;
        if (it->second == CohortLabel::Case) return 0;
        if (it->second == CohortLabel::Control) return 1;
        return -1;
    };
    std::vector<int> tier_of(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        tier_of[i] = tier_index(static_cast<int>(i));
        if (tier_of[i] < 0) ++mm.excluded_nodes;
    }

    double e[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (const auto& edge : g.edges) {
        if (edge.is_self) continue;
        int r = tier_of[static_cast<std::size_t>(edge.citing)];
        int c = tier_of[static_cast<std::size_t>(edge.cited)];
        if (r < 0 || c < 0) continue;
        e[r][c] += edge.weight;
    }

    double total = e[0][0] + e[0][1] + e[1][0] + e[1][1];
    if (total <= 0.0) return mm;

    double diag_sum = 0.0;
    int diag_n = 0;
    for (int r = 0; r < 2; ++r) {
        double row = e[r][0] + e[r][1];
        if (row > 0.0) {
            mm.row_defined[r] = true;
            mm.probs[r][0] = e[r][0] / row;
            mm.probs[r][1] = e[r][1] / row;
            diag_sum += mm.probs[r][r];
            ++diag_n;
        }
    }
    mm.diagonal_avg = diag_n > 0 ? diag_sum / diag_n : 0.0;

    // Newman's categorical assortativity on the normalized contingency table.
    double eh[2][2];
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) eh[r][c] = e[r][c] / total;
    }
    double trace = eh[0][0] + eh[1][1];
    double ab = 0.0;
    for (int t = 0; t < 2; ++t) {
        double a = eh[t][0] + eh[t][1];
        double b = eh[0][t] + eh[1][t];
        ab += a * b;
    }
    mm.assortativity_r = (1.0 - ab) > 0.0 ? (trace - ab) / (1.0 - ab) : 1.0;
    return mm;
}

WeightedUndirectedGraph undirected_projection(const AuthorCitationGraph& g) {
    WeightedUndirectedGraph ug;
    ug.n = g.size();
    ug.adj.assign(ug.n, {});
    ug.strength.assign(ug.n, 0.0);
    std::map<std::pair<int, int>, double> acc;
    for (const auto& e : g.edges) {
        if (e.is_self) continue;
        int a = std::min(e.citing, e.cited);
        int b = std::max(e.citing, e.cited);
        acc[{a, b}] += e.weight;
    }
    for (const auto& [key, w] : acc) {
        ug.adj[static_cast<std::size_t>(key.first)].emplace_back(key.second, w);
        ug.adj[static_cast<std::size_t>(key.second)].emplace_back(key.first, w);
        ug.strength[static_cast<std::size_t>(key.first)] += w;
        ug.strength[static_cast<std::size_t>(key.second)] += w;
        ug.total_weight += w;
    }
    return ug;
}

double modularity(const WeightedUndirectedGraph& g, const std::vector<int>& community) {
    if (g.total_weight <= 0.0) return 0.0;
    const double two_m = 2.0 * g.total_weight;
    std::map<int, double> intra, deg;
    for (std::size_t u = 0; u < g.n; ++u) {
        deg[community[u]] += g.strength[u];
        for (const auto& [v, w] : g.adj[u]) {
            if (community[u] == community[static_cast<std::size_t>(v)] &&
                static_cast<std::size_t>(v) > u) {
                intra[community[u]] += w;
            }
        }
    }
    double q = 0.0;
    for (const auto& [c, d] : deg) {
        double in_c = intra.count(c) ? intra.at(c) : 0.0;
        q += 2.0 * in_c / two_m - (d / two_m) * (d / two_m);
    }
    return q;
}

namespace {

struct LouvainLevel {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;  // no self entries
    std::vector<double> self_w;                            // internal (self-loop) weight
    std::vector<double> strength;                          // adj sum + 2*self_w
    double two_m = 0.0;
};

// One pass of local moving; returns true when any node moved.
bool local_move(LouvainLevel& lvl, std::vector<int>& comm, std::vector<double>& tot,
                const std::vector<int>& order) {
    bool moved = false;
    std::map<int, double> k_in;
    for (int u : order) {
        auto su = static_cast<std::size_t>(u);
        k_in.clear();
        for (const auto& [v, w] : lvl.adj[su]) k_in[comm[static_cast<std::size_t>(v)]] += w;

        const int cur = comm[su];
        tot[static_cast<std::size_t>(cur)] -= lvl.strength[su];

        auto gain = [&](int c) {
            double kin = k_in.count(c) ? k_in.at(c) : 0.0;
            return kin - tot[static_cast<std::size_t>(c)] * lvl.strength[su] / lvl.two_m;
        };
        // Strict improvement only; k_in iterates in community-id order, so the
        // lowest-id community wins among equal maximal gains.
        int best = cur;
        double best_gain = gain(cur);
        for (const auto& [c, kin] : k_in) {
            double gl = gain(c);
            if (gl > best_gain + 1e-12) {
                best = c;
                best_gain = gl;
            }
        }
        comm[su] = best;
        tot[static_cast<std::size_t>(best)] += lvl.strength[su];
        if (best != cur) moved = true;
    }
    return moved;
}

} // namespace

LouvainResult louvain_modularity(const WeightedUndirectedGraph& g, std::uint64_t seed) {
    LouvainResult res;
    res.community.assign(g.n, 0);
    for (std::size_t i = 0; i < g.n; ++i) res.community[i] = static_cast<int>(i);
    if (g.n == 0 || g.total_weight <= 0.0) {
        res.modularity = 0.0;
        return res;
    }

    LouvainLevel lvl;
    lvl.n = g.n;
    lvl.adj = g.adj;
    lvl.self_w.assign(g.n, 0.0);
    lvl.strength = g.strength;
    lvl.two_m = 2.0 * g.total_weight;

    // node_map[v] = community of original node v via current hierarchy.
    std::vector<int> node_map(g.n);
    std::iota(node_map.begin(), node_map.end(), 0);

    Pcg32 rng(seed, 0x10aULL);
    double best_q = modularity(g, res.community);

    for (int level = 0; level < 64; ++level) {
        std::vector<int> comm(lvl.n);
        std::iota(comm.begin(), comm.end(), 0);
        std::vector<double> tot = lvl.strength;

        std::vector<int> order(lvl.n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        bool any = false;
        for (int pass = 0; pass < 256; ++pass) {
            if (!local_move(lvl, comm, tot, order)) break;
            any = true;
        }
        if (!any) break;

        // Compact community ids.
        std::map<int, int> remap;
        for (int c : comm) remap.emplace(c, 0);
        int next = 0;
        for (auto& [c, id] : remap) id = next++;
        for (auto& c : comm) c = remap.at(c);
        const std::size_t nc = remap.size();

        // Project down to original nodes; local moving only ever raises Q, so
        // a non-improving level terminates the hierarchy.
        std::vector<int> candidate(g.n);
        for (std::size_t v = 0; v < g.n; ++v) {
            candidate[v] = comm[static_cast<std::size_t>(node_map[v])];
        }
        double q = modularity(g, candidate);
        if (q <= best_q + 1e-12) break;
        best_q = q;
        res.community = candidate;
        res.levels = level + 1;
        for (std::size_t v = 0; v < g.n; ++v) node_map[v] = candidate[v];

        // Aggregate.
        LouvainLevel up;
        up.n = nc;
        up.adj.assign(nc, {});
        up.self_w.assign(nc, 0.0);
        up.strength.assign(nc, 0.0);
        up.two_m = lvl.two_m;
        std::map<std::pair<int, int>, double> agg;
        for (std::size_t u = 0; u < lvl.n; ++u) {
            auto cu = comm[u];
            up.self_w[static_cast<std::size_t>(cu)] += lvl.self_w[u];
            for (const auto& [v, w] : lvl.adj[u]) {
                auto cv = comm[static_cast<std::size_t>(v)];
                if (cu == cv) {
                    if (static_cast<std::size_t>(v) > u) up.self_w[static_cast<std::size_t>(cu)] += w;
                } else {
                    agg[{cu, cv}] += w;
                }
            }
        }
        for (const auto& [key, w] : agg) {
            up.adj[static_cast<std::size_t>(key.first)].emplace_back(key.second, w);
        }
        for (std::size_t c = 0; c < nc; ++c) {
            double s = 2.0 * up.self_w[c];
            for (const auto& [v, w] : up.adj[c]) s += w;
            up.strength[c] = s;
        }
        lvl = std::move(up);
        if (lvl.n <= 1) break;
    }

    // Compact final ids.
    std::map<int, int> remap;
    for (int c : res.community) remap.emplace(c, 0);
    int next = 0;
    for (auto& [c, id] : remap) id = next++;
    for (auto& c : res.community) c = remap.at(c);
    res.modularity = best_q;
    return res;
}

std::vector<AuditProfile> rank_outliers(const std::vector<OutlierFlag>& flags,
                                        const std::map<std::string, AuthorWorksInfo>& works_info,
                                        const AuthorCitationGraph& g,
                                        const std::set<std::string>& matched_authors) {
    std::vector<AuditProfile> profiles;
    for (const auto& f : flags) {
        if (!f.flagged) continue;
        AuditProfile p;
        p.author = f.author;
        p.subject = f.subject;
        p.outlier_score = f.cohesion_s;

        auto wi = works_info.find(f.author);
        if (wi != works_info.end()) {
            p.works = wi->second.works;
            p.year_min = wi->second.year_min;
            p.year_max = wi->second.year_max;
            int best = 0;
            for (const auto& [issn, count] : wi->second.journal_counts) {
                if (count > best) {   // ties keep the first (smallest) ISSN
                    best = count;
                    p.primary_journal = issn;
                    p.primary_journal_count = count;
                }
            }
        }

        int gi = g.index_of(f.author);
        if (gi >= 0) {
            for (const auto& [j, w] : g.out_adj[static_cast<std::size_t>(gi)]) {
                const std::string& other = g.node_ids[static_cast<std::size_t>(j)];
                if (!matched_authors.count(other)) continue;
                ++p.out_partners;
                if (g.edge_weight(j, gi) > 0.0) ++p.reciprocal_partners;
            }
            for (const auto& [j, w] : g.in_adj[static_cast<std::size_t>(gi)]) {
                if (matched_authors.count(g.node_ids[static_cast<std::size_t>(j)])) ++p.in_partners;
            }
        }

        static const std::array<std::string, 6> comp_names = {
            "coauthor_citation_rate", "clique_strength", "reciprocity_rate",
            "hhi_out", "self_citation_rate", "journal_endogamy",
        };
        for (std::size_t c = 0; c < comp_names.size(); ++c) {
            double z = f.z_components[c];
            if (z > 5.0) p.feature_flags.emplace_back(comp_names[c], 5);
            else if (z > 3.0) p.feature_flags.emplace_back(comp_names[c], 3);
        }
        profiles.push_back(std::move(p));
    }
    std::sort(profiles.begin(), profiles.end(), [](const AuditProfile& a, const AuditProfile& b) {
        if (a.outlier_score != b.outlier_score) return a.outlier_score > b.outlier_score;
        return a.author < b.author;
    });
    return profiles;
}

std::map<int, double> burst_timeline(const Syndicate& s, const AuthorCitationGraph& g) {
    std::map<int, double> timeline;
    std::set<std::string> members(s.members.begin(), s.members.end());
    for (const auto& e : g.edges) {
        if (e.is_self) continue;
        if (!members.count(g.node_ids[static_cast<std::size_t>(e.citing)])) continue;
        if (!members.count(g.node_ids[static_cast<std::size_t>(e.cited)])) continue;
        for (const auto& [year, w] : e.per_year) timeline[year] += w;
    }
    return timeline;
}

} // namespace citeforge
