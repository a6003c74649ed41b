#include "citeforge/graph.hpp"

#include "citeforge/util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

using nlohmann::json;

namespace citeforge {

double fractional_weight(int n_citing_authors, int n_cited_authors) {
    if (n_citing_authors < 1 || n_cited_authors < 1) {
        throw std::domain_error("fractional_weight: author counts must be >= 1");
    }
    return 1.0 / (static_cast<double>(n_citing_authors) * static_cast<double>(n_cited_authors));
}

JournalGraph build_journal_graph(const Catalog& catalog, int subject, bool* degenerate) {
    if (subject < 1 || subject > 5) throw ValidationError("subject must be in 1..5");

    JournalGraph g;
    g.subject = subject;
    for (const auto& [issn, s] : catalog.subject_map.entries) {
        if (s == subject && catalog.journal_index.count(issn)) g.nodes.push_back(issn);
    }

    for (const auto& [id, rec] : catalog.works) {
        if (rec.issn.empty()) continue;
        auto citing_subject = catalog.subject_map.subject_of(rec.issn);
        if (!citing_subject || *citing_subject != subject) continue;
        for (const auto& ref : rec.refs) {
            auto it = catalog.works.find(ref);
            if (it == catalog.works.end() || it->second.issn.empty()) continue;
            const std::string& cited_issn = it->second.issn;
            auto cited_subject = catalog.subject_map.subject_of(cited_issn);
            if (!cited_subject || *cited_subject != subject) continue;
            if (cited_issn == rec.issn) continue;  // journal self-citations excluded
            ++g.edge_weights[{rec.issn, cited_issn}];
        }
    }

    if (degenerate) *degenerate = g.nodes.size() < 2;
    return g;
}

namespace {

struct EdgeAccum {
    double weight = 0.0;
    std::map<int, double> per_year;
};

struct PairHash {
    std::size_t operator()(const std::pair<int, int>& p) const {
        return std::hash<long long>()((static_cast<long long>(p.first) << 32) |
                                      static_cast<unsigned>(p.second));
    }
};

} // namespace

double AuthorCitationGraph::edge_weight(int citing, int cited) const {
    if (citing < 0 || citing >= static_cast<int>(node_ids.size())) return 0.0;
    if (citing == cited) return self_weight[citing];
    const auto& adj = out_adj[citing];
    auto it = std::lower_bound(adj.begin(), adj.end(), std::make_pair(cited, 0.0),
                               [](const auto& a, const auto& b) { return a.first < b.first; });
    if (it != adj.end() && it->first == cited) return it->second;
    return 0.0;
}

AuthorCitationGraph build_author_graph(const Catalog& catalog,
                                       const std::set<std::string>& authors) {
    if (authors.empty()) throw ValidationError("build_author_graph: empty author set");

    AuthorCitationGraph g;

    // Node universe: requested authors plus any co-endpoint of a kept edge.
    std::set<std::string> nodes(authors.begin(), authors.end());
    for (const auto& [id, rec] : catalog.works) {
        if (rec.authors.empty()) continue;
        bool citing_touches = false;
        for (const auto& a : rec.authors) {
            if (authors.count(a)) { citing_touches = true; break; }
        }
        for (const auto& ref : rec.refs) {
            auto it = catalog.works.find(ref);
            if (it == catalog.works.end()) continue;
            const auto& cited = it->second;
            if (cited.authors.empty()) continue;
            bool cited_touches = false;
            for (const auto& b : cited.authors) {
                if (authors.count(b)) { cited_touches = true; break; }
            }
            if (!citing_touches && !cited_touches) continue;
            if (citing_touches) {
                for (const auto& b : cited.authors) nodes.insert(b);
            }
            if (cited_touches) {
                for (const auto& a : rec.authors) nodes.insert(a);
            }
        }
    }

    g.node_ids.assign(nodes.begin(), nodes.end());
    for (int i = 0; i < static_cast<int>(g.node_ids.size()); ++i) g.node_of[g.node_ids[i]] = i;

    auto in_param = [&](const std::string& a) { return authors.count(a) > 0; };

    std::unordered_map<std::pair<int, int>, EdgeAccum, PairHash> accum;
    accum.reserve(1 << 16);

    for (const auto& [id, rec] : catalog.works) {
        if (rec.authors.empty() || rec.refs.empty()) continue;
        const double inv_citing = 1.0 / static_cast<double>(rec.authors.size());
        for (const auto& ref : rec.refs) {
            auto it = catalog.works.find(ref);
            if (it == catalog.works.end()) {
                ++g.dangling_refs;
                continue;
            }
            const auto& cited = it->second;
            if (cited.authors.empty()) continue;
            const double w = inv_citing / static_cast<double>(cited.authors.size());
            for (const auto& a : rec.authors) {
                const bool a_in = in_param(a);
                for (const auto& b : cited.authors) {
                    if (!a_in && !in_param(b)) continue;
                    auto& e = accum[{g.node_of.at(a), g.node_of.at(b)}];
                    e.weight += w;
                    e.per_year[rec.year] += w;
                }
            }
        }
    }

    g.edges.reserve(accum.size());
    for (auto& [key, acc] : accum) {
        AuthorEdge e;
        e.citing = key.first;
        e.cited = key.second;
        e.weight = acc.weight;
        e.is_self = key.first == key.second;
        e.per_year = std::move(acc.per_year);
        g.edges.push_back(std::move(e));
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const AuthorEdge& a, const AuthorEdge& b) {
        return std::tie(a.citing, a.cited) < std::tie(b.citing, b.cited);
    });

    const std::size_t n = g.node_ids.size();
    g.out_strength.assign(n, 0.0);
    g.in_strength.assign(n, 0.0);
    g.self_weight.assign(n, 0.0);
    g.out_adj.assign(n, {});
    g.in_adj.assign(n, {});
    for (const auto& e : g.edges) {
        if (e.is_self) {
            g.self_weight[e.citing] += e.weight;
            continue;
        }
        g.out_strength[e.citing] += e.weight;
        g.in_strength[e.cited] += e.weight;
        g.out_adj[e.citing].emplace_back(e.cited, e.weight);
        g.in_adj[e.cited].emplace_back(e.citing, e.weight);
    }
    // Edge list is sorted by (citing, cited), so out_adj is already ordered;
    // in_adj needs its own sort.
    for (auto& adj : g.in_adj) {
        std::sort(adj.begin(), adj.end());
    }
    return g;
}

void save_journal_graph_csv(const JournalGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "citing,cited,count\n";
    for (const auto& [key, count] : g.edge_weights) {
        out << key.first << "," << key.second << "," << count << "\n";
    }
}

void save_author_graph_csv(const AuthorCitationGraph& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "citing,cited,weight,is_self,year_json\n";
    for (const auto& e : g.edges) {
        json years = json::object();
        for (const auto& [year, w] : e.per_year) years[std::to_string(year)] = w;
        std::string dumped = years.dump();
        std::string escaped;
        escaped.reserve(dumped.size() + 8);
        for (char c : dumped) {
            if (c == '"') escaped += "\"\"";
            else escaped.push_back(c);
        }
        out << g.node_ids[e.citing] << "," << g.node_ids[e.cited] << ","
            << format_double(e.weight) << "," << (e.is_self ? 1 : 0) << ",\""
            << escaped << "\"\n";
    }
}

AuthorCitationGraph load_author_graph_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    struct RawEdge {
        std::string citing, cited;
        double weight;
        std::map<int, double> per_year;
    };
    std::vector<RawEdge> raw;
    std::set<std::string> nodes;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("citing,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() < 5) throw ValidationError("bad author edge row: " + line);
        RawEdge e;
        e.citing = fields[0];
        e.cited = fields[1];
        e.weight = std::stod(fields[2]);
        json years = json::parse(fields[4]);
        for (auto it = years.begin(); it != years.end(); ++it) {
            e.per_year[std::stoi(it.key())] = it.value().get<double>();
        }
        nodes.insert(e.citing);
        nodes.insert(e.cited);
        raw.push_back(std::move(e));
    }

    AuthorCitationGraph g;
    g.node_ids.assign(nodes.begin(), nodes.end());
    for (int i = 0; i < static_cast<int>(g.node_ids.size()); ++i) g.node_of[g.node_ids[i]] = i;
    g.edges.reserve(raw.size());
    for (auto& e : raw) {
        AuthorEdge ae;
        ae.citing = g.node_of.at(e.citing);
        ae.cited = g.node_of.at(e.cited);
        ae.weight = e.weight;
        ae.is_self = ae.citing == ae.cited;
        ae.per_year = std::move(e.per_year);
        g.edges.push_back(std::move(ae));
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const AuthorEdge& a, const AuthorEdge& b) {
        return std::tie(a.citing, a.cited) < std::tie(b.citing, b.cited);
    });

    const std::size_t n = g.node_ids.size();
    g.out_strength.assign(n, 0.0);
    g.in_strength.assign(n, 0.0);
    g.self_weight.assign(n, 0.0);
    g.out_adj.assign(n, {});
    g.in_adj.assign(n, {});
    for (const auto& e : g.edges) {
        if (e.is_self) {
            g.self_weight[e.citing] += e.weight;
            continue;
        }
        g.out_strength[e.citing] += e.weight;
        g.in_strength[e.cited] += e.weight;
        g.out_adj[e.citing].emplace_back(e.cited, e.weight);
        g.in_adj[e.cited].emplace_back(e.citing, e.weight);
    }
    for (auto& adj : g.in_adj) std::sort(adj.begin(), adj.end());
    return g;
}

} // namespace citeforge
