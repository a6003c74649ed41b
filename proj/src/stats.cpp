#include "citeforge/stats.hpp"

#include "citeforge/rng.hpp"
#include "citeforge/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

namespace citeforge {

namespace {

// Midranks of |d| (1-based, ties averaged), returned doubled so they are
// exact integers.
std::vector<long long> doubled_midranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
    std::vector<long long> ranks2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[idx[j + 1]] == abs_d[idx[i]]) ++j;
        // Positions i..j share the midrank ((i+1)+(j+1))/2; doubled it is (i+j+2).
        long long r2 = static_cast<long long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) ranks2[idx[k]] = r2;
        i = j + 1;
    }
    return ranks2;
}

double normal_sf(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("wilcoxon: length mismatch");

    std::vector<double> abs_d;
    std::vector<int> sign;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        if (d == 0.0) continue;
        abs_d.push_back(std::fabs(d));
        sign.push_back(d > 0.0 ? 1 : -1);
    }

    WilcoxonResult res;
    res.n_used = static_cast<int>(abs_d.size());
    if (abs_d.empty()) {
        res.all_zero = true;
        res.p_value = 1.0;
        return res;
    }

    const auto ranks2 = doubled_midranks(abs_d);
    long long w2_plus = 0, t2 = 0;
    for (std::size_t i = 0; i < ranks2.size(); ++i) {
        t2 += ranks2[i];
        if (sign[i] > 0) w2_plus += ranks2[i];
    }
    const long long w2_minus = t2 - w2_plus;
    res.statistic = 0.5 * static_cast<double>(std::min(w2_plus, w2_minus));

    const int n = res.n_used;
    if (n <= 25) {
        res.exact = true;
        // Subset-sum convolution over doubled ranks; counts fit 2^25.
        std::vector<std::uint64_t> f(static_cast<std::size_t>(t2) + 1, 0);
        f[0] = 1;
        long long upper = 0;
        for (long long r2 : ranks2) {
            upper += r2;
            for (long long s = upper; s >= r2; --s) {
                f[static_cast<std::size_t>(s)] += f[static_cast<std::size_t>(s - r2)];
            }
        }
        std::uint64_t count_le = 0, count_ge = 0;
        for (long long s = 0; s <= t2; ++s) {
            if (s <= w2_plus) count_le += f[static_cast<std::size_t>(s)];
            if (s >= t2 - w2_plus) count_ge += f[static_cast<std::size_t>(s)];
        }
        const double total = std::ldexp(1.0, n);
        res.p_value = std::min(1.0, (static_cast<double>(count_le) +
                                     static_cast<double>(count_ge)) / total);
    } else {
        // Normal approximation with tie-corrected variance and continuity
        // correction. Tie term: sum over tie groups of (t^3 - t) / 48.
        std::map<long long, long long> groups;
        for (long long r2 : ranks2) ++groups[r2];
        // Group sizes must be recovered from equal |d| values, not equal ranks:
        // equal ranks imply equal |d| by construction, so this is the same.
        double tie_term = 0.0;
        for (const auto& [r2, t] : groups) {
            double td = static_cast<double>(t);
            tie_term += (td * td * td - td) / 48.0;
        }
        const double dn = static_cast<double>(n);
        const double mean = dn * (dn + 1.0) / 4.0;
        const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term;
        const double w_plus = 0.5 * static_cast<double>(w2_plus);
        double dev = w_plus - mean;
        double cc = dev > 0 ? 0.5 : (dev < 0 ? -0.5 : 0.0);
        double z = var > 0.0 ? (dev - cc) / std::sqrt(var) : 0.0;
        res.p_value = std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
    }
    return res;
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::vector<double> adjusted(m, 0.0);
    double running = 1.0;
    for (std::size_t r = m; r > 0; --r) {
        std::size_t i = idx[r - 1];
        double candidate = p_values[i] * static_cast<double>(m) / static_cast<double>(r);
        running = std::min(running, candidate);
        adjusted[i] = std::min(1.0, running);
    }
    return adjusted;
}

double cliffs_delta(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw ValidationError("cliffs_delta: empty sample");
    std::vector<double> sy = y;
    std::sort(sy.begin(), sy.end());
    long long gt = 0, lt = 0;
    for (double v : x) {
        auto lo = std::lower_bound(sy.begin(), sy.end(), v);
        auto hi = std::upper_bound(sy.begin(), sy.end(), v);
        gt += lo - sy.begin();                       // y_j < v
        lt += sy.end() - hi;                         // y_j > v
    }
    return static_cast<double>(gt - lt) /
           (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

std::optional<double> cohens_d(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2 || y.size() < 2) throw ValidationError("cohens_d: need >= 2 per sample");
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const double mx = mean(x), my = mean(y);
    double ssx = 0.0, ssy = 0.0;
    for (double v : x) ssx += (v - mx) * (v - mx);
    for (double v : y) ssy += (v - my) * (v - my);
    const double pooled = std::sqrt((ssx + ssy) / static_cast<double>(x.size() + y.size()));
    if (pooled == 0.0) return std::nullopt;
    return (mx - my) / pooled;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& diffs, int n_boot,
                                       double level, std::uint64_t seed) {
    if (diffs.empty()) throw ValidationError("bootstrap_ci: empty sample");
    Pcg32 rng(seed, 0xb007ULL);
    const std::size_t n = diffs.size();
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(n_boot));
    for (int b = 0; b < n_boot; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += diffs[rng.bounded(static_cast<std::uint32_t>(n))];
        }
        means.push_back(s / static_cast<double>(n));
    }
    std::sort(means.begin(), means.end());
    const double alpha = (1.0 - level) / 2.0;
    return {quantile_sorted(means, alpha), quantile_sorted(means, 1.0 - alpha)};
}

double permutation_test(const std::vector<double>& values, const std::vector<int>& labels,
                        int n_perm, std::uint64_t seed) {
    if (values.size() != labels.size()) throw ValidationError("permutation_test: length mismatch");
    std::size_t n1 = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw ValidationError("permutation_test: labels must be 0/1");
        n1 += static_cast<std::size_t>(l);
    }
    const std::size_t n = values.size();
    const std::size_t n0 = n - n1;
    if (n1 < 2 || n0 < 2) throw ValidationError("permutation_test: each group needs >= 2");

    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    auto stat_from_sum1 = [&](double sum1) {
        return sum1 / static_cast<double>(n1) - (total - sum1) / static_cast<double>(n0);
    };
    double sum1_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 1) sum1_obs += values[i];
    }
    const double observed = std::fabs(stat_from_sum1(sum1_obs));

    Pcg32 rng(seed, 0x9e37ULL);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    long long hits = 0;
    for (int p = 0; p < n_perm; ++p) {
        // Partial Fisher-Yates: first n1 slots become the permuted group 1.
        for (std::size_t i = 0; i < n1; ++i) {
            std::size_t j = i + rng.bounded(static_cast<std::uint32_t>(n - i));
            std::swap(idx[i], idx[j]);
        }
        double sum1 = 0.0;
        for (std::size_t i = 0; i < n1; ++i) sum1 += values[idx[i]];
        if (std::fabs(stat_from_sum1(sum1)) >= observed) ++hits;
    }
    return static_cast<double>(1 + hits) / static_cast<double>(1 + n_perm);
}

std::vector<MatchedPair> placebo_pairs(const std::vector<AuthorPortfolio>& controls,
                                       std::uint64_t seed, int bucket_width) {
    std::vector<const AuthorPortfolio*> pool;
    pool.reserve(controls.size());
    for (const auto& c : controls) pool.push_back(&c);
    std::sort(pool.begin(), pool.end(), [](const AuthorPortfolio* a, const AuthorPortfolio* b) {
        return a->author < b->author;
    });
    Pcg32 rng(seed, 0x97a1ULL);
    rng.shuffle(pool);

    std::vector<bool> used(pool.size(), false);
    std::vector<MatchedPair> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (used[i]) continue;
        const int bi = pool[i]->h5 / bucket_width;
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(bi - pool[j]->h5 / bucket_width) > 1) continue;
            used[i] = used[j] = true;
            MatchedPair p;
            p.subject = pool[i]->subject;
            p.case_author = pool[i]->author;
            p.control_author = pool[j]->author;
            p.case_h5 = pool[i]->h5;
            p.control_h5 = pool[j]->h5;
            out.push_back(std::move(p));
            break;
        }
    }
    return out;
}

const char* archetype_name(Archetype a) {
    switch (a) {
        case Archetype::Central: return "central";
        case Archetype::Independent: return "independent";
        case Archetype::Solo: return "solo";
    }
    return "independent";
}

KmeansResult kmeans(const std::vector<std::vector<double>>& rows, int k,
                    std::uint64_t seed, int max_iter) {
    const std::size_t n = rows.size();
    if (k <= 0 || n < static_cast<std::size_t>(k)) {
        throw ValidationError("kmeans: need at least k rows");
    }
    const std::size_t dim = rows[0].size();
    Pcg32 rng(seed, 0x4bedULL);

    // k-means++ seeding.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(static_cast<std::size_t>(k));
    centroids.push_back(rows[rng.bounded(static_cast<std::uint32_t>(n))]);
    std::vector<double> d2(n, 0.0);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : centroids) best = std::min(best, sq_dist(rows[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) { pick = i; break; }
            }
        } else {
            pick = rng.bounded(static_cast<std::uint32_t>(n));
        }
        centroids.push_back(rows[pick]);
    }

    KmeansResult res;
    res.assignment.assign(n, -1);
    for (int iter = 1; iter <= max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(rows[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                double d = sq_dist(rows[i], centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) { best_d = d; best = c; }
            }
            if (res.assignment[i] != best) { res.assignment[i] = best; changed = true; }
        }
        res.iterations = iter;
        if (!changed && iter > 1) break;

        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                              std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(res.assignment[i]);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += rows[i][d];
        }
        for (int c = 0; c < k; ++c) {
            auto cs = static_cast<std::size_t>(c);
            if (counts[cs] == 0) {
                // Re-seed an empty cluster at the point farthest from its centroid.
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double d = sq_dist(rows[i], centroids[static_cast<std::size_t>(res.assignment[i])]);
                    if (d > far_d) { far_d = d; far_i = i; }
                }
                centroids[cs] = rows[far_i];
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d) {
                centroids[cs][d] = sums[cs][d] / static_cast<double>(counts[cs]);
            }
        }
    }
    res.centroids = centroids;
    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        res.inertia += sq_dist(rows[i], centroids[static_cast<std::size_t>(res.assignment[i])]);
    }
    return res;
}

std::vector<ArchetypeAssignment> kmeans_archetypes(
    const std::vector<std::string>& authors,
    const std::vector<std::vector<double>>& z_rows, std::uint64_t seed) {
    if (authors.size() != z_rows.size()) throw ValidationError("kmeans_archetypes: size mismatch");
    KmeansResult km = kmeans(z_rows, 3, seed);

    // Centroid semantics, not cluster index: Solo first, Central among the rest.
    auto centroid_mean2 = [&](int c, int f1, int f2) {
        const auto& v = km.centroids[static_cast<std::size_t>(c)];
        return 0.5 * (v[static_cast<std::size_t>(f1)] + v[static_cast<std::size_t>(f2)]);
    };
    int solo = 0;
    for (int c = 1; c < 3; ++c) {
        if (centroid_mean2(c, kSelfCitationRate, kCoauthorCitationRate) >
            centroid_mean2(solo, kSelfCitationRate, kCoauthorCitationRate)) {
            solo = c;
        }
    }
    int central = -1;
    for (int c = 0; c < 3; ++c) {
        if (c == solo) continue;
        if (central < 0 || centroid_mean2(c, kKcoreNumber, kEigenvectorCentrality) >
                               centroid_mean2(central, kKcoreNumber, kEigenvectorCentrality)) {
            central = c;
        }
    }
    std::array<Archetype, 3> label_of{};
    for (int c = 0; c < 3; ++c) {
        label_of[static_cast<std::size_t>(c)] =
            c == solo ? Archetype::Solo
                      : (c == central ? Archetype::Central : Archetype::Independent);
    }

    std::vector<ArchetypeAssignment> out;
    out.reserve(authors.size());
    for (std::size_t i = 0; i < authors.size(); ++i) {
        ArchetypeAssignment a;
        a.author = authors[i];
        a.cluster = km.assignment[i];
        a.label = label_of[static_cast<std::size_t>(km.assignment[i])];
        for (int c = 0; c < 3; ++c) {
            a.centroid_distances[static_cast<std::size_t>(c)] =
                std::sqrt(sq_dist(z_rows[i], km.centroids[static_cast<std::size_t>(c)]));
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::string format_fold(const std::optional<double>& fold) {
    if (!fold) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", *fold);
    return std::string(buf) + "×";
}

std::optional<double> fold_ratio(double case_mean, double control_mean) {
    if (control_mean == 0.0) return std::nullopt;
    return case_mean / control_mean;
}

namespace {

struct PairColumns {
    // Feature value per pair side; burst may be absent.
    std::vector<double> case_vals;
    std::vector<double> control_vals;
};

PairColumns collect_metric(const std::vector<FeatureVector>& features,
                           const std::vector<MatchedPair>& pairs, int f) {
    std::map<std::pair<std::string, int>, const FeatureVector*> lookup;
    for (const auto& fv : features) lookup[{fv.author, fv.subject}] = &fv;
    PairColumns cols;
    for (const auto& p : pairs) {
        auto ci = lookup.find({p.case_author, p.subject});
        auto ki = lookup.find({p.control_author, p.subject});
        if (ci == lookup.end() || ki == lookup.end()) continue;
        if (f == kBurstIntensity &&
            (!ci->second->burst_present || !ki->second->burst_present)) {
            continue;  // incomplete pair dropped for this metric
        }
        cols.case_vals.push_back(ci->second->values[static_cast<std::size_t>(f)]);
        cols.control_vals.push_back(ki->second->values[static_cast<std::size_t>(f)]);
    }
    return cols;
}

} // namespace

std::vector<FoldChangeRow> fold_change_table(const std::vector<FeatureVector>& features,
                                             const std::vector<MatchedPair>& pairs) {
    std::vector<FoldChangeRow> rows;
    for (int f = 0; f < kFeatureCount; ++f) {
        auto cols = collect_metric(features, pairs, f);
        FoldChangeRow row;
        row.metric = feature_names()[static_cast<std::size_t>(f)];
        if (!cols.case_vals.empty()) {
            row.case_mean = std::accumulate(cols.case_vals.begin(), cols.case_vals.end(), 0.0) /
                            static_cast<double>(cols.case_vals.size());
            row.control_mean =
                std::accumulate(cols.control_vals.begin(), cols.control_vals.end(), 0.0) /
                static_cast<double>(cols.control_vals.size());
            row.fold = fold_ratio(row.case_mean, row.control_mean);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<PairedTestResult> paired_battery(const std::vector<FeatureVector>& features,
                                             const std::vector<MatchedPair>& pairs,
                                             int n_boot, std::uint64_t seed) {
    std::vector<PairedTestResult> results;
    std::vector<double> pvals;
    for (int f = 0; f < kFeatureCount; ++f) {
        auto cols = collect_metric(features, pairs, f);
        PairedTestResult r;
        r.metric = feature_names()[static_cast<std::size_t>(f)];
        r.n_pairs = static_cast<int>(cols.case_vals.size());
        if (r.n_pairs >= 5) {
            auto w = wilcoxon_signed_rank(cols.case_vals, cols.control_vals);
            r.statistic = w.statistic;
            r.p_value = w.p_value;
            r.cliffs = cliffs_delta(cols.case_vals, cols.control_vals);
            if (r.n_pairs >= 2) r.cohens = cohens_d(cols.case_vals, cols.control_vals);
            std::vector<double> diffs(cols.case_vals.size());
            for (std::size_t i = 0; i < diffs.size(); ++i) {
                diffs[i] = cols.case_vals[i] - cols.control_vals[i];
            }
            auto ci = bootstrap_ci(diffs, n_boot, 0.95,
                                   seed ^ static_cast<std::uint64_t>(f + 1));
            r.ci_low = ci.first;
            r.ci_high = ci.second;
            double cm = std::accumulate(cols.case_vals.begin(), cols.case_vals.end(), 0.0) /
                        static_cast<double>(r.n_pairs);
            double km = std::accumulate(cols.control_vals.begin(), cols.control_vals.end(), 0.0) /
                        static_cast<double>(r.n_pairs);
            r.fold_change = fold_ratio(cm, km);
        }
        pvals.push_back(r.p_value);
        results.push_back(std::move(r));
    }
    auto adjusted = bh_adjust(pvals);
    for (std::size_t i = 0; i < results.size(); ++i) results[i].p_adjusted = adjusted[i];
    return results;
}

} // namespace citeforge
