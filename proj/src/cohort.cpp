#include "citeforge/cohort.hpp"

#include <algorithm>
#include <unordered_map>

namespace citeforge {

const char* cohort_name(CohortLabel label) {
    switch (label) {
        case CohortLabel::Case: return "case";
        case CohortLabel::Control: return "control";
        case CohortLabel::Other: return "other";
    }
    return "other";
}

int h_index(std::vector<int> citation_counts) {
    std::sort(citation_counts.begin(), citation_counts.end(), std::greater<int>());
    int h = 0;
    for (std::size_t i = 0; i < citation_counts.size(); ++i) {
        if (citation_counts[i] >= static_cast<int>(i) + 1) h = static_cast<int>(i) + 1;
        else break;
    }
    return h;
}

CohortLabel classify_author(const AuthorPortfolio& p, int min_works, double share) {
    if (p.n_total < min_works) return CohortLabel::Other;
    const double total = static_cast<double>(p.n_total);
    if (static_cast<double>(p.n_low) / total >= share) return CohortLabel::Case;
    if (static_cast<double>(p.n_high) / total >= share) return CohortLabel::Control;
    return CohortLabel::Other;
}

std::vector<MatchedPair> match_pairs(std::vector<AuthorPortfolio> cases,
                                     std::vector<AuthorPortfolio> controls,
                                     int bucket_width) {
    auto order = [](const AuthorPortfolio& a, const AuthorPortfolio& b) {
        if (a.h5 != b.h5) return a.h5 > b.h5;
        return a.author < b.author;
    };
    std::sort(cases.begin(), cases.end(), order);
    std::sort(controls.begin(), controls.end(), order);

    std::vector<bool> used(controls.size(), false);
    std::vector<MatchedPair> pairs;
    pairs.reserve(std::min(cases.size(), controls.size()));

    for (const auto& c : cases) {
        const int cb = c.h5 / bucket_width;
        int best = -1;
        for (std::size_t k = 0; k < controls.size(); ++k) {
            if (used[k]) continue;
            const int kb = controls[k].h5 / bucket_width;
            if (std::abs(cb - kb) > 1) continue;
            if (best < 0) {
                best = static_cast<int>(k);
                continue;
            }
            const int d_new = std::abs(c.h5 - controls[k].h5);
            const int d_best = std::abs(c.h5 - controls[best].h5);
            if (d_new < d_best ||
                (d_new == d_best && controls[k].author < controls[best].author)) {
                best = static_cast<int>(k);
            }
        }
        if (best < 0) continue;  // unmatched case skipped
        used[best] = true;
        MatchedPair p;
        p.subject = c.subject;
        p.case_author = c.author;
        p.control_author = controls[best].author;
        p.case_h5 = c.h5;
        p.control_h5 = controls[best].h5;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<AuthorPortfolio> build_portfolios(const Catalog& catalog,
                                              const std::map<std::string, JournalTier>& tiers,
                                              int subject) {
    // In-window citation counts per work, resolved inside the catalog.
    std::unordered_map<std::string, int> cited_count;
    cited_count.reserve(catalog.works.size());
    for (const auto& [id, rec] : catalog.works) {
        for (const auto& ref : rec.refs) {
            if (catalog.works.count(ref)) ++cited_count[ref];
        }
    }

    std::vector<AuthorPortfolio> out;
    for (const auto& [author, work_ids] : catalog.author_index) {
        AuthorPortfolio p;
        p.author = author;
        p.subject = subject;
        std::vector<int> counts;
        for (const auto& id : work_ids) {
            const auto& rec = catalog.works.at(id);
            if (rec.issn.empty()) continue;
            auto s = catalog.subject_map.subject_of(rec.issn);
            if (!s || *s != subject) continue;
            ++p.n_total;
            auto t = tiers.find(rec.issn);
            if (t != tiers.end()) {
                if (t->second == JournalTier::Low) ++p.n_low;
                else if (t->second == JournalTier::High) ++p.n_high;
            }
            auto c = cited_count.find(id);
            counts.push_back(c == cited_count.end() ? 0 : c->second);
        }
        if (p.n_total == 0) continue;
        p.h5 = h_index(std::move(counts));
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace citeforge
