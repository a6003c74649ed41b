#include <doctest.h>

#include "citeforge/forensics.hpp"
#include "citeforge/rng.hpp"
#include "graph_fixtures.hpp"

#include <cmath>
#include <deque>

using namespace citeforge;

namespace {

// Brute-force betweenness: enumerate all shortest paths per (s, t) by BFS
// layering and path counting through each vertex.
std::vector<double> brute_betweenness(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<double> bc(static_cast<std::size_t>(n), 0.0);
    for (int s = 0; s < n; ++s) {
        // BFS distances and path counts from s.
        std::vector<int> dist(static_cast<std::size_t>(n), -1);
        std::vector<double> paths(static_cast<std::size_t>(n), 0.0);
        dist[static_cast<std::size_t>(s)] = 0;
        paths[static_cast<std::size_t>(s)] = 1;
        std::deque<int> q{s};
        while (!q.empty()) {
            int v = q.front();
            q.pop_front();
            for (int w : adj[static_cast<std::size_t>(v)]) {
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    q.push_back(w);
                }
                if (dist[static_cast<std::size_t>(w)] == dist[static_cast<std::size_t>(v)] + 1) {
                    paths[static_cast<std::size_t>(w)] += paths[static_cast<std::size_t>(v)];
                }
            }
        }
        // Count, for each t and interior v, shortest paths through v: paths
        // from s to v times paths from v to t (recomputed by reverse BFS).
        for (int t = 0; t < n; ++t) {
            if (t == s || dist[static_cast<std::size_t>(t)] < 0) continue;
            // Path counts from every v to t along shortest s-t paths:
            // run BFS from each v? Instead count via dynamic programming over
            // decreasing distance: paths_to_t[v].
            std::vector<double> to_t(static_cast<std::size_t>(n), 0.0);
            to_t[static_cast<std::size_t>(t)] = 1.0;
            // Process vertices by decreasing distance from s.
            std::vector<int> order;
            for (int v = 0; v < n; ++v) {
                if (dist[static_cast<std::size_t>(v)] >= 0) order.push_back(v);
            }
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
            });
            for (int v : order) {
                if (v == t) continue;
                for (int w : adj[static_cast<std::size_t>(v)]) {
                    if (dist[static_cast<std::size_t>(w)] ==
                        dist[static_cast<std::size_t>(v)] + 1) {
                        to_t[static_cast<std::size_t>(v)] += to_t[static_cast<std::size_t>(w)];
                    }
                }
            }
            if (to_t[static_cast<std::size_t>(s)] <= 0.0) continue;
            for (int v = 0; v < n; ++v) {
                if (v == s || v == t) continue;
                bc[static_cast<std::size_t>(v)] +=
                    paths[static_cast<std::size_t>(v)] * to_t[static_cast<std::size_t>(v)] /
                    to_t[static_cast<std::size_t>(s)];
            }
        }
    }
    return bc;
}

} // namespace

TEST_CASE("betweenness on a path and a complete digraph") {
    // a -> b -> c: only b carries the (a, c) path.
    std::vector<std::vector<int>> path{{1}, {2}, {}};
    auto bc = betweenness(path);
    CHECK(bc[0] == doctest::Approx(0.0));
    CHECK(bc[1] == doctest::Approx(1.0));
    CHECK(bc[2] == doctest::Approx(0.0));

    std::vector<std::vector<int>> complete(4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i != j) complete[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    for (double v : betweenness(complete)) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("betweenness matches exhaustive path counting on random digraphs") {
    Pcg32 rng(4321, 1);
    for (int trial = 0; trial < 40; ++trial) {
        int n = rng.uniform_int(3, 12);
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j && rng.uniform() < 0.3) adj[static_cast<std::size_t>(i)].push_back(j);
            }
        }
        auto fast = betweenness(adj);
        auto slow = brute_betweenness(adj);
        for (int v = 0; v < n; ++v) {
            CHECK(fast[static_cast<std::size_t>(v)] ==
                  doctest::Approx(slow[static_cast<std::size_t>(v)]).epsilon(1e-9));
        }
    }
}

TEST_CASE("syndicates require mutual links") {
    auto g = graph_from_edges({{"a", "b", 1.0}});   // one-way only
    auto none = syndicate_components({"a", "b"}, g);
    CHECK(none.empty());

    auto g2 = graph_from_edges({{"a", "b", 1.0}, {"b", "a", 0.5}, {"c", "a", 1.0}});
    auto one = syndicate_components({"a", "b", "c"}, g2);
    REQUIRE(one.size() == 1);
    CHECK(one[0].members == std::vector<std::string>{"a", "b"});
    // Density over ordered pairs: 2 directed internal edges / 2.
    CHECK(one[0].density == doctest::Approx(1.0));
}

TEST_CASE("planted mutual mesh comes back as one component") {
    std::vector<RawEdge> edges;
    std::set<std::string> members;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            if (i == j) continue;
            edges.push_back({"m" + std::to_string(i), "m" + std::to_string(j), 0.5});
        }
        members.insert("m" + std::to_string(i));
    }
    auto g = graph_from_edges(edges);
    auto syndicates = syndicate_components(members, g);
    REQUIRE(syndicates.size() == 1);
    CHECK(syndicates[0].members.size() == 20);
    CHECK(syndicates[0].density == doctest::Approx(1.0));
}

TEST_CASE("hub-and-spoke roles: hub has top betweenness, spokes give") {
    std::vector<RawEdge> edges;
    std::set<std::string> members{"hub"};
    for (int i = 0; i < 6; ++i) {
        std::string spoke = "spoke" + std::to_string(i);
        members.insert(spoke);
        edges.push_back({spoke, "hub", 5.0});
        edges.push_back({"hub", spoke, 0.5});
    }
    auto g = graph_from_edges(edges);
    auto syndicates = syndicate_components(members, g);
    REQUIRE(syndicates.size() == 1);
    const auto& s = syndicates[0];
    CHECK(s.roles.at("hub") == SyndicateRole::Hub);
    for (int i = 0; i < 6; ++i) {
        CHECK(s.roles.at("spoke" + std::to_string(i)) == SyndicateRole::NetGiver);
    }
}

TEST_CASE("two-member tie breaks the hub to the smaller id") {
    auto g = graph_from_edges({{"aa", "bb", 1.0}, {"bb", "aa", 1.0}});
    auto syndicates = syndicate_components({"aa", "bb"}, g);
    REQUIRE(syndicates.size() == 1);
    CHECK(syndicates[0].roles.at("aa") == SyndicateRole::Hub);
}

TEST_CASE("burst timeline sums internal per-year weights") {
    std::vector<RawEdge> edges{{"a", "b", 1.0, 2021}, {"b", "a", 2.0, 2024},
                               {"a", "b", 0.5, 2024}, {"a", "x", 9.0, 2022}};
    auto g = graph_from_edges(edges);
    auto syndicates = syndicate_components({"a", "b"}, g);
    REQUIRE(syndicates.size() == 1);
    const auto& tl = syndicates[0].timeline;
    CHECK(tl.at(2021) == doctest::Approx(1.0));
    CHECK(tl.at(2024) == doctest::Approx(2.5));
    CHECK(tl.count(2022) == 0);   // external edge excluded
}

TEST_CASE("mixing matrix: perfect homophily and row normalization") {
    auto g = graph_from_edges({{"c1", "c2", 2.0}, {"c2", "c1", 1.0}, {"k1", "k2", 3.0},
                               {"k2", "k1", 1.0}, {"c1", "c1", 5.0}});
    std::map<std::string, CohortLabel> tiers{
        {"c1", CohortLabel::Case}, {"c2", CohortLabel::Case},
        {"k1", CohortLabel::Control}, {"k2", CohortLabel::Control}};
    auto mm = mixing_matrix(g, tiers);
    CHECK(mm.probs[0][0] == doctest::Approx(1.0));
    CHECK(mm.probs[1][1] == doctest::Approx(1.0));
    CHECK(mm.diagonal_avg == doctest::Approx(1.0));
    CHECK(mm.assortativity_r == doctest::Approx(1.0).epsilon(1e-9));

    // Rows stay stochastic in mixed graphs.
    auto g2 = graph_from_edges({{"c1", "k1", 1.0}, {"c1", "c2", 3.0}, {"k1", "c1", 2.0}});
    auto mm2 = mixing_matrix(g2, tiers);
    CHECK(mm2.probs[0][0] + mm2.probs[0][1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mm2.probs[1][0] + mm2.probs[1][1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mm2.probs[0][0] == doctest::Approx(0.75));
}

TEST_CASE("random tier assignment gives near-zero assortativity") {
    Pcg32 rng(777, 2);
    int within = 0;
    for (int seed = 0; seed < 10; ++seed) {
        std::vector<RawEdge> edges;
        const int n = 400;
        for (int e = 0; e < 4000; ++e) {
            int i = rng.uniform_int(0, n - 1), j = rng.uniform_int(0, n - 1);
            if (i == j) continue;
            edges.push_back({"a" + std::to_string(i), "a" + std::to_string(j), 1.0});
        }
        auto g = graph_from_edges(edges);
        std::map<std::string, CohortLabel> tiers;
        for (const auto& id : g.node_ids) {
            tiers[id] = rng.uniform() < 0.5 ? CohortLabel::Case : CohortLabel::Control;
        }
        auto mm = mixing_matrix(g, tiers);
        if (std::fabs(mm.assortativity_r) < 0.1) ++within;
    }
    CHECK(within == 10);
}

TEST_CASE("untiered nodes are excluded with a count") {
    auto g = graph_from_edges({{"c1", "x", 1.0}, {"c1", "k1", 1.0}});
    std::map<std::string, CohortLabel> tiers{{"c1", CohortLabel::Case},
                                             {"k1", CohortLabel::Control}};
    auto mm = mixing_matrix(g, tiers);
    CHECK(mm.excluded_nodes == 1);
    CHECK(mm.probs[0][1] == doctest::Approx(1.0));   // only the tiered edge counts
}

TEST_CASE("louvain: two five-cliques give two communities at Q = 0.5") {
    std::vector<RawEdge> edges;
    for (int block = 0; block < 2; ++block) {
        for (int i = 0; i < 5; ++i) {
            for (int j = i + 1; j < 5; ++j) {
                edges.push_back({"b" + std::to_string(block) + "_" + std::to_string(i),
                                 "b" + std::to_string(block) + "_" + std::to_string(j), 1.0});
            }
        }
    }
    auto g = graph_from_edges(edges);
    auto ug = undirected_projection(g);
    auto res = louvain_modularity(ug, 42);
    CHECK(res.modularity == doctest::Approx(0.5).epsilon(1e-9));
    std::set<int> comms(res.community.begin(), res.community.end());
    CHECK(comms.size() == 2);
    // Same block, same community.
    for (int i = 1; i < 5; ++i) {
        CHECK(res.community[static_cast<std::size_t>(g.node_of.at("b0_0"))] ==
              res.community[static_cast<std::size_t>(g.node_of.at("b0_" + std::to_string(i)))]);
    }
    // Reported Q equals direct recomputation.
    CHECK(res.modularity == doctest::Approx(modularity(ug, res.community)).epsilon(1e-12));
}

TEST_CASE("louvain on a single edge is deterministic") {
    auto g = graph_from_edges({{"a", "b", 1.0}});
    auto ug = undirected_projection(g);
    auto r1 = louvain_modularity(ug, 7);
    auto r2 = louvain_modularity(ug, 7);
    CHECK(r1.community == r2.community);
    CHECK(r1.modularity == doctest::Approx(modularity(ug, r1.community)).epsilon(1e-12));
    CHECK(r1.modularity <= 0.0 + 1e-12);   // best achievable here is Q = 0
}

TEST_CASE("louvain recovers planted blocks") {
    Pcg32 rng(2468, 3);
    std::vector<RawEdge> edges;
    const int blocks = 4, per = 12;
    auto name = [&](int b, int i) { return "n" + std::to_string(b) + "_" + std::to_string(i); };
    for (int b = 0; b < blocks; ++b) {
        for (int i = 0; i < per; ++i) {
            for (int j = i + 1; j < per; ++j) {
                if (rng.uniform() < 0.8) edges.push_back({name(b, i), name(b, j), 1.0});
            }
        }
    }
    for (int e = 0; e < 20; ++e) {
        int b1 = rng.uniform_int(0, blocks - 1), b2 = rng.uniform_int(0, blocks - 1);
        if (b1 == b2) continue;
        edges.push_back({name(b1, rng.uniform_int(0, per - 1)),
                         name(b2, rng.uniform_int(0, per - 1)), 1.0});
    }
    auto g = graph_from_edges(edges);
    auto ug = undirected_projection(g);
    auto res = louvain_modularity(ug, 11);

    // Exact block recovery: same block iff same community.
    for (int b = 0; b < blocks; ++b) {
        int c0 = res.community[static_cast<std::size_t>(g.node_of.at(name(b, 0)))];
        for (int i = 1; i < per; ++i) {
            CHECK(res.community[static_cast<std::size_t>(g.node_of.at(name(b, i)))] == c0);
        }
    }
    std::set<int> distinct(res.community.begin(), res.community.end());
    CHECK(distinct.size() == 4);
}

TEST_CASE("rank_outliers orders by composite score with sigma-band flags") {
    auto g = graph_from_edges({{"a", "b", 1.0}, {"b", "a", 1.0}, {"a", "c", 1.0}});
    std::map<std::string, AuthorWorksInfo> works;
    works["a"].works = 5;
    works["a"].year_min = 2020;
    works["a"].year_max = 2024;
    works["a"].journal_counts = {{"11111111", 3}, {"22222222", 2}};
    works["b"].works = 2;
    works["b"].year_min = 2021;
    works["b"].year_max = 2022;

    std::vector<OutlierFlag> flags;
    OutlierFlag fa;
    fa.author = "a";
    fa.subject = 1;
    fa.flagged = true;
    fa.cohesion_s = 50.0;
    fa.z_components = {4.2, 6.0, 2.0, 3.5, 0.0, 5.1};
    OutlierFlag fb;
    fb.author = "b";
    fb.subject = 1;
    fb.flagged = true;
    fb.cohesion_s = 80.0;
    fb.z_components = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    OutlierFlag fc;
    fc.author = "c";
    fc.subject = 1;
    fc.flagged = false;   // not flagged, no profile
    flags = {fa, fb, fc};

    auto profiles = rank_outliers(flags, works, g, {"a", "b", "c"});
    REQUIRE(profiles.size() == 2);
    CHECK(profiles[0].author == "b");   // higher s first
    CHECK(profiles[1].author == "a");
    CHECK(profiles[1].primary_journal == "11111111");
    CHECK(profiles[1].out_partners == 2);
    CHECK(profiles[1].in_partners == 1);
    CHECK(profiles[1].reciprocal_partners == 1);
    CHECK(profiles[1].reciprocal_partners <=
          std::min(profiles[1].out_partners, profiles[1].in_partners));

    // Band membership: 4.2 -> 3 sigma band; 6.0 -> 5 sigma band.
    bool saw3 = false, saw5 = false;
    for (const auto& [feature, level] : profiles[1].feature_flags) {
        if (feature == "coauthor_citation_rate") {
            CHECK(level == 3);
            saw3 = true;
        }
        if (feature == "clique_strength") {
            CHECK(level == 5);
            saw5 = true;
        }
    }
    CHECK(saw3);
    CHECK(saw5);
}
