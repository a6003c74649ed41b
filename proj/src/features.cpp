#include "citeforge/features.hpp"

#include "citeforge/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace citeforge {

namespace {
constexpr double kBalanceEpsilon = 1e-9;
}

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "self_citation_rate",
        "coauthor_citation_rate",
        "citation_balance",
        "eigenvector_centrality",
        "journal_endogamy",
        "citation_entropy",
        "hhi_in",
        "reciprocity_rate",
        "hhi_out",
        "clustering_coeff",
        "triangles_norm",
        "kcore_number",
        "clique_strength",
        "burst_intensity",
    };
    return names;
}

std::map<std::string, std::set<std::string>> coauthor_sets(const Catalog& catalog) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& [id, rec] : catalog.works) {
        for (const auto& a : rec.authors) {
            for (const auto& b : rec.authors) {
                if (a != b) out[a].insert(b);
            }
        }
    }
    return out;
}

std::map<std::string, EndogamyEntry> endogamy_table(const Catalog& catalog) {
    std::map<std::string, EndogamyEntry> out;
    for (const auto& [id, rec] : catalog.works) {
        if (rec.authors.empty() || rec.refs.empty()) continue;
        long long same = 0, resolvable = 0;
        for (const auto& ref : rec.refs) {
            auto it = catalog.works.find(ref);
            if (it == catalog.works.end() || it->second.issn.empty()) continue;
            ++resolvable;
            if (!rec.issn.empty() && it->second.issn == rec.issn) ++same;
        }
        if (resolvable == 0) continue;
        for (const auto& a : rec.authors) {
            auto& e = out[a];
            e.same_issn += same;
            e.resolvable += resolvable;
        }
    }
    return out;
}

std::vector<double> eigenvector_centrality(const AuthorCitationGraph& g, double tol,
                                           int max_iter, bool* converged) {
    const std::size_t n = g.size();
    std::vector<double> x(n, 0.0);
    if (n == 0) {
        if (converged) *converged = true;
        return x;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += g.out_strength[i];
    if (total == 0.0) {
        if (converged) *converged = false;   // all-zero graph, zero vector with warning
        return x;
    }

    std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(n));
    std::vector<double> next(n, 0.0);
    bool ok = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        // next = (I + W^T) x: prestige flows along citations to the cited author.
        for (std::size_t i = 0; i < n; ++i) {
            double acc = x[i];
            for (const auto& [j, w] : g.in_adj[i]) acc += w * x[j];
            next[i] = acc;
        }
        double norm = 0.0;
        for (double v : next) norm += v;
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] /= norm;
            delta += std::fabs(next[i] - x[i]);
        }
        x.swap(next);
        if (delta < tol) {
            ok = true;
            break;
        }
    }
    if (converged) *converged = ok;
    return x;
}

std::vector<int> core_numbers(const std::vector<std::vector<int>>& undirected) {
    const int n = static_cast<int>(undirected.size());
    std::vector<int> degree(n), core(n, 0);
    int max_deg = 0;
    for (int v = 0; v < n; ++v) {
        degree[v] = static_cast<int>(undirected[v].size());
        max_deg = std::max(max_deg, degree[v]);
    }
    // Batagelj-Zaversnik peeling with bucket sort on degrees.
    std::vector<int> bin(max_deg + 2, 0);
    for (int v = 0; v < n; ++v) ++bin[degree[v]];
    int start = 0;
    for (int d = 0; d <= max_deg; ++d) {
        int count = bin[d];
        bin[d] = start;
        start += count;
    }
    std::vector<int> pos(n), vert(n);
    for (int v = 0; v < n; ++v) {
        pos[v] = bin[degree[v]]++;
        vert[pos[v]] = v;
    }
    for (int d = max_deg; d > 0; --d) bin[d] = bin[d - 1];
    if (max_deg >= 0) bin[0] = 0;

    std::vector<int> deg = degree;
    for (int i = 0; i < n; ++i) {
        int v = vert[i];
        core[v] = deg[v];
        for (int u : undirected[v]) {
            if (deg[u] > deg[v]) {
                int du = deg[u], pu = pos[u];
                int pw = bin[du], w = vert[pw];
                if (u != w) {
                    pos[u] = pw; vert[pu] = w;
                    pos[w] = pu; vert[pw] = u;
                }
                ++bin[du];
                --deg[u];
            }
        }
    }
    return core;
}

FeatureEngine::FeatureEngine(const AuthorCitationGraph& g,
                             std::map<std::string, std::set<std::string>> coauthors,
                             std::map<std::string, EndogamyEntry> endogamy,
                             bool burst_incoming)
    : g_(g),
      coauthors_(std::move(coauthors)),
      endogamy_(std::move(endogamy)),
      burst_incoming_(burst_incoming) {
    const std::size_t n = g_.size();

    // Undirected projection: edge iff weight > 0 in either direction, no self.
    undirected_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<int> nb;
        nb.reserve(g_.out_adj[i].size() + g_.in_adj[i].size());
        for (const auto& [j, w] : g_.out_adj[i]) nb.push_back(j);
        for (const auto& [j, w] : g_.in_adj[i]) nb.push_back(j);
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        undirected_[i] = std::move(nb);
    }

    core_ = citeforge::core_numbers(undirected_);
    centrality_ = eigenvector_centrality(g_, 1e-10, 1000, &centrality_converged_);
}

FeatureVector FeatureEngine::compute(const std::string& author, int subject) const {
    FeatureVector fv;
    fv.author = author;
    fv.subject = subject;

    const int a = g_.index_of(author);
    if (a < 0) throw ValidationError("feature request for author outside graph: " + author);

    const double self_w = g_.self_weight[a];
    const double out_ns = g_.out_strength[a];   // non-self
    const double in_ns = g_.in_strength[a];
    auto set_missing = [&fv](Feature f) { fv.missing_mask |= static_cast<std::uint16_t>(1u << f); };

    // Rates.
    const double out_all = out_ns + self_w;
    if (out_all > 0.0) {
        fv.values[kSelfCitationRate] = self_w / out_all;
    } else {
        set_missing(kSelfCitationRate);
    }

    double coauthor_w = 0.0;
    auto cit = coauthors_.find(author);
    if (cit != coauthors_.end() && !cit->second.empty()) {
        for (const auto& [j, w] : g_.out_adj[a]) {
            if (cit->second.count(g_.node_ids[j])) coauthor_w += w;
        }
    }
    if (out_ns > 0.0) {
        fv.values[kCoauthorCitationRate] = coauthor_w / out_ns;
    } else {
        set_missing(kCoauthorCitationRate);
    }

    if (out_ns > 0.0 || in_ns > 0.0) {
        fv.values[kCitationBalance] = (out_ns - in_ns) / (out_ns + in_ns + kBalanceEpsilon);
    } else {
        set_missing(kCitationBalance);
    }

    int reciprocated = 0;
    int cited_peers = static_cast<int>(g_.out_adj[a].size());
    for (const auto& [j, w] : g_.out_adj[a]) {
        if (g_.edge_weight(j, a) > 0.0) ++reciprocated;
    }
    if (cited_peers > 0) {
        fv.values[kReciprocityRate] = static_cast<double>(reciprocated) / cited_peers;
    } else {
        set_missing(kReciprocityRate);
    }

    // Concentration.
    if (out_ns > 0.0) {
        double hhi = 0.0;
        for (const auto& [j, w] : g_.out_adj[a]) {
            double p = w / out_ns;
            hhi += p * p;
        }
        fv.values[kHhiOut] = hhi;
    } else {
        set_missing(kHhiOut);
    }
    if (in_ns > 0.0) {
        double hhi = 0.0, entropy = 0.0;
        for (const auto& [j, w] : g_.in_adj[a]) {
            double q = w / in_ns;
            hhi += q * q;
            if (q > 0.0) entropy -= q * std::log(q);
        }
        fv.values[kHhiIn] = hhi;
        fv.values[kCitationEntropy] = entropy;
    } else {
        set_missing(kHhiIn);
        set_missing(kCitationEntropy);
    }

    // Structure on the undirected projection.
    const auto& nb = undirected_[a];
    const int deg = static_cast<int>(nb.size());
    long long links = 0;
    if (deg >= 2) {
        // Edges among neighbors, each counted once: merge-intersect N(j) with
        // the part of N(a) above j.
        for (int j : nb) {
            const auto& nnb = undirected_[j];
            auto it1 = std::upper_bound(nb.begin(), nb.end(), j);
            auto it2 = std::upper_bound(nnb.begin(), nnb.end(), j);
            while (it1 != nb.end() && it2 != nnb.end()) {
                if (*it1 < *it2) ++it1;
                else if (*it2 < *it1) ++it2;
                else { ++links; ++it1; ++it2; }
            }
        }
        fv.values[kClusteringCoeff] =
            2.0 * static_cast<double>(links) / (static_cast<double>(deg) * (deg - 1));
    }
    fv.values[kTrianglesNorm] = static_cast<double>(links) / (out_ns + in_ns + 1.0);
    fv.values[kKcoreNumber] = static_cast<double>(core_[a]);
    fv.values[kEigenvectorCentrality] = centrality_[a];

    // Endogamy.
    auto eit = endogamy_.find(author);
    if (eit != endogamy_.end() && eit->second.resolvable > 0) {
        fv.values[kJournalEndogamy] = static_cast<double>(eit->second.same_issn) /
                                      static_cast<double>(eit->second.resolvable);
    } else {
        set_missing(kJournalEndogamy);
    }

    // Clique strength identity.
    fv.values[kCliqueStrength] =
        fv.values[kClusteringCoeff] * fv.values[kCoauthorCitationRate];

    // Burst: largest single-peer weight over incoming volume; absent (not
    // zero) when the numerator side has no edges.
    const auto& numer_adj = burst_incoming_ ? g_.in_adj[a] : g_.out_adj[a];
    if (!numer_adj.empty()) {
        double max_w = 0.0;
        for (const auto& [j, w] : numer_adj) max_w = std::max(max_w, w);
        fv.values[kBurstIntensity] = max_w / (in_ns + 1.0);
        fv.burst_present = true;
    }
    return fv;
}

void save_features_csv(const std::vector<FeatureVector>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "author,subject";
    for (const auto& name : feature_names()) out << "," << name;
    out << "\n";
    for (const auto& fv : rows) {
        out << fv.author << "," << fv.subject;
        for (int f = 0; f < kFeatureCount; ++f) {
            out << ",";
            if (f == kKcoreNumber) {
                out << static_cast<long long>(fv.values[f]);
            } else if (f == kBurstIntensity) {
                if (fv.burst_present) out << format_double(fv.values[f]);
            } else {
                out << format_double(fv.values[f]);
            }
        }
        out << "\n";
    }
}

std::vector<FeatureVector> load_features_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<FeatureVector> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("author,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != 2 + kFeatureCount) {
            throw ValidationError("bad feature row: " + line);
        }
        FeatureVector fv;
        fv.author = fields[0];
        fv.subject = std::stoi(fields[1]);
        for (int f = 0; f < kFeatureCount; ++f) {
            const std::string& cell = fields[2 + static_cast<std::size_t>(f)];
            if (f == kBurstIntensity) {
                if (!cell.empty()) {
                    fv.values[f] = std::stod(cell);
                    fv.burst_present = true;
                }
            } else {
                fv.values[f] = std::stod(cell);
            }
        }
        rows.push_back(std::move(fv));
    }
    return rows;
}

} // namespace citeforge
