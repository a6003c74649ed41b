#pragma once

// Naive reference implementations of all 14 behavioral features, computed by
// direct loops over a raw edge list. Deliberately independent of the
// FeatureEngine data structures: dense matrices, triple loops, per-k peeling.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "graph_fixtures.hpp"

struct NaiveFeatures {
    double self_citation_rate = 0.0;
    double coauthor_citation_rate = 0.0;
    double citation_balance = 0.0;
    double eigenvector_centrality = 0.0;
    double journal_endogamy = 0.0;
    double citation_entropy = 0.0;
    double hhi_in = 0.0;
    double reciprocity_rate = 0.0;
    double hhi_out = 0.0;
    double clustering_coeff = 0.0;
    double triangles_norm = 0.0;
    int kcore_number = 0;
    double clique_strength = 0.0;
    std::optional<double> burst_intensity;
};

class NaiveOracle {
public:
    NaiveOracle(const std::vector<RawEdge>& edges, std::vector<std::string> nodes,
                std::map<std::string, std::set<std::string>> coauthors,
                std::map<std::string, std::pair<long long, long long>> endogamy = {})
        : nodes_(std::move(nodes)), coauthors_(std::move(coauthors)), endogamy_(std::move(endogamy)) {
        for (std::size_t i = 0; i < nodes_.size(); ++i) index_[nodes_[i]] = i;
        const std::size_t n = nodes_.size();
        w_.assign(n, std::vector<double>(n, 0.0));
        for (const auto& e : edges) {
            w_[index_.at(e.citing)][index_.at(e.cited)] += e.weight;
        }
        centrality_ = dense_centrality();
    }

    NaiveFeatures compute(const std::string& author) const {
        const std::size_t a = index_.at(author);
        const std::size_t n = nodes_.size();
        NaiveFeatures f;

        double out_all = 0.0, out_ns = 0.0, in_ns = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out_all += w_[a][j];
            if (j != a) {
                out_ns += w_[a][j];
                in_ns += w_[j][a];
            }
        }
        if (out_all > 0.0) f.self_citation_rate = w_[a][a] / out_all;

        double co_w = 0.0;
        auto cit = coauthors_.find(author);
        if (cit != coauthors_.end()) {
            for (const auto& c : cit->second) {
                auto it = index_.find(c);
                if (it != index_.end() && it->second != a) co_w += w_[a][it->second];
            }
        }
        if (out_ns > 0.0) f.coauthor_citation_rate = co_w / out_ns;

        if (out_ns > 0.0 || in_ns > 0.0) {
            f.citation_balance = (out_ns - in_ns) / (out_ns + in_ns + 1e-9);
        }

        int cited_peers = 0, reciprocated = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a || w_[a][j] <= 0.0) continue;
            ++cited_peers;
            if (w_[j][a] > 0.0) ++reciprocated;
        }
        if (cited_peers > 0) {
            f.reciprocity_rate = static_cast<double>(reciprocated) / cited_peers;
        }

        if (out_ns > 0.0) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == a) continue;
                double p = w_[a][j] / out_ns;
                f.hhi_out += p * p;
            }
        }
        if (in_ns > 0.0) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == a) continue;
                double q = w_[j][a] / in_ns;
                f.hhi_in += q * q;
                if (q > 0.0) f.citation_entropy -= q * std::log(q);
            }
        }

        // Undirected projection by triple loop.
        auto linked = [&](std::size_t i, std::size_t j) {
            return i != j && (w_[i][j] > 0.0 || w_[j][i] > 0.0);
        };
        std::vector<std::size_t> nb;
        for (std::size_t j = 0; j < n; ++j) {
            if (linked(a, j)) nb.push_back(j);
        }
        long long links = 0;
        for (std::size_t x = 0; x < nb.size(); ++x) {
            for (std::size_t y = x + 1; y < nb.size(); ++y) {
                if (linked(nb[x], nb[y])) ++links;
            }
        }
        if (nb.size() >= 2) {
            f.clustering_coeff = 2.0 * static_cast<double>(links) /
                                 (static_cast<double>(nb.size()) * (nb.size() - 1));
        }
        f.triangles_norm = static_cast<double>(links) / (out_ns + in_ns + 1.0);
        f.kcore_number = core_by_peeling(a);
        f.clique_strength = f.clustering_coeff * f.coauthor_citation_rate;
        f.eigenvector_centrality = centrality_[a];

        auto eg = endogamy_.find(author);
        if (eg != endogamy_.end() && eg->second.second > 0) {
            f.journal_endogamy =
                static_cast<double>(eg->second.first) / static_cast<double>(eg->second.second);
        }

        double max_out = 0.0;
        bool any_out = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a || w_[a][j] <= 0.0) continue;
            any_out = true;
            max_out = std::max(max_out, w_[a][j]);
        }
        if (any_out) f.burst_intensity = max_out / (in_ns + 1.0);
        return f;
    }

private:
    std::vector<std::string> nodes_;
    std::map<std::string, std::size_t> index_;
    std::map<std::string, std::set<std::string>> coauthors_;
    std::map<std::string, std::pair<long long, long long>> endogamy_;
    std::vector<std::vector<double>> w_;
    std::vector<double> centrality_;

    // Same shifted iteration and stopping rule as the implementation contract
    // (tol 1e-10, 1000 iterations), evaluated on a dense matrix.
    std::vector<double> dense_centrality() const {
        const std::size_t n = nodes_.size();
        std::vector<double> x(n, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) total += w_[i][j];
            }
        }
        if (n == 0 || total == 0.0) return x;
        std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(n));
        std::vector<double> next(n, 0.0);
        for (int iter = 0; iter < 1000; ++iter) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = x[i];
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i && w_[j][i] > 0.0) acc += w_[j][i] * x[j];
                }
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
            if (delta < 1e-10) break;
        }
        return x;
    }

    // Max k such that the node survives iterated removal of degree-<k nodes.
    int core_by_peeling(std::size_t target) const {
        const std::size_t n = nodes_.size();
        auto linked = [&](std::size_t i, std::size_t j) {
            return i != j && (w_[i][j] > 0.0 || w_[j][i] > 0.0);
        };
        int core = 0;
        for (int k = 1; k <= static_cast<int>(n); ++k) {
            std::vector<bool> alive(n, true);
            bool changed = true;
            while (changed) {
                changed = false;
                for (std::size_t v = 0; v < n; ++v) {
                    if (!alive[v]) continue;
                    int deg = 0;
                    for (std::size_t u = 0; u < n; ++u) {
                        if (alive[u] && linked(v, u)) ++deg;
                    }
                    if (deg < k) {
                        alive[v] = false;
                        changed = true;
                    }
                }
            }
            if (alive[target]) core = k;
            else break;
        }
        return core;
    }
};
