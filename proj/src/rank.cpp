#include "citeforge/rank.hpp"

#include "citeforge/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace citeforge {

EigenfactorResult eigenfactor(const JournalGraph& g, double damping, double tol, int max_iter,
                              const std::vector<double>* teleport_weights) {
    const std::size_t n = g.nodes.size();
    if (n == 0) throw ValidationError("eigenfactor: empty journal graph");

    std::map<std::string, int> index;
    for (std::size_t i = 0; i < n; ++i) index[g.nodes[i]] = static_cast<int>(i);

    std::vector<double> v(n, 1.0 / static_cast<double>(n));
    if (teleport_weights != nullptr) {
        if (teleport_weights->size() != n) {
            throw ValidationError("eigenfactor: teleport weight count mismatch");
        }
        double total = 0.0;
        for (double w : *teleport_weights) {
            if (w < 0.0) throw ValidationError("eigenfactor: negative teleport weight");
            total += w;
        }
        if (total <= 0.0) throw ValidationError("eigenfactor: all-zero teleport weights");
        for (std::size_t i = 0; i < n; ++i) v[i] = (*teleport_weights)[i] / total;
    }

    // Column-normalized transitions: column j holds journal j's outgoing counts.
    std::vector<double> out_total(n, 0.0);
    struct Entry { int cited; int citing; double frac; };
    std::vector<Entry> entries;
    entries.reserve(g.edge_weights.size());
    for (const auto& [key, count] : g.edge_weights) {
        auto ci = index.find(key.first);
        auto cj = index.find(key.second);
        if (ci == index.end() || cj == index.end()) continue;
        out_total[ci->second] += static_cast<double>(count);
        entries.push_back({cj->second, ci->second, static_cast<double>(count)});
    }
    for (auto& e : entries) e.frac /= out_total[e.citing];

    std::vector<double> x = v;
    std::vector<double> next(n, 0.0);

    EigenfactorResult result;
    result.subject = g.subject;
    result.residual = 1.0;
    for (int iter = 1; iter <= max_iter; ++iter) {
        double dangling_mass = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (out_total[j] == 0.0) dangling_mass += x[j];
        }
        const double mixed = (1.0 - damping) + damping * dangling_mass;
        for (std::size_t i = 0; i < n; ++i) next[i] = mixed * v[i];
        for (const auto& e : entries) {
            next[e.cited] += damping * e.frac * x[e.citing];
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) delta += std::fabs(next[i] - x[i]);
        x.swap(next);
        result.iterations = iter;
        result.residual = delta;
        if (delta < tol) break;
    }
    result.converged = result.residual < tol;

    result.scores.reserve(n);
    for (std::size_t i = 0; i < n; ++i) result.scores.emplace_back(g.nodes[i], x[i]);
    return result;
}

TierThresholds tier_thresholds(const EigenfactorResult& r) {
    if (r.scores.size() < 4) {
        throw ValidationError("tier_thresholds: need at least 4 scored journals");
    }
    std::vector<double> sorted;
    sorted.reserve(r.scores.size());
    for (const auto& [issn, s] : r.scores) sorted.push_back(s);
    std::sort(sorted.begin(), sorted.end());
    TierThresholds th;
    th.subject = r.subject;
    th.p25 = quantile_sorted(sorted, 0.25);
    th.p75 = quantile_sorted(sorted, 0.75);
    return th;
}

const char* tier_name(JournalTier t) {
    switch (t) {
        case JournalTier::Low: return "low";
        case JournalTier::Mid: return "mid";
        case JournalTier::High: return "high";
    }
    return "mid";
}

std::map<std::string, JournalTier> label_journal_tier(const EigenfactorResult& r,
                                                      const TierThresholds& th) {
    std::map<std::string, JournalTier> labels;
    for (const auto& [issn, score] : r.scores) {
        JournalTier t = JournalTier::Mid;
        if (score < th.p25) t = JournalTier::Low;
        else if (score > th.p75) t = JournalTier::High;
        labels[issn] = t;
    }
    return labels;
}

} // namespace citeforge
