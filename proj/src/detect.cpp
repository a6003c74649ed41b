#include "citeforge/detect.hpp"

#include "citeforge/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

namespace citeforge {

StandardizeStats standardize_fit(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::size_t>& baseline_rows) {
    if (baseline_rows.size() < 2) {
        throw ValidationError("standardize: need at least 2 baseline rows");
    }
    const std::size_t cols = rows.empty() ? 0 : rows[0].size();
    StandardizeStats s;
    s.mean.assign(cols, 0.0);
    s.sd.assign(cols, 0.0);
    s.zero_variance.assign(cols, false);
    const double n = static_cast<double>(baseline_rows.size());
    for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        for (std::size_t r : baseline_rows) sum += rows[r][c];
        s.mean[c] = sum / n;
        double ss = 0.0;
        for (std::size_t r : baseline_rows) {
            double d = rows[r][c] - s.mean[c];
            ss += d * d;
        }
        s.sd[c] = std::sqrt(ss / n);
        if (s.sd[c] == 0.0) s.zero_variance[c] = true;
    }
    return s;
}

double standardize_value(double x, const StandardizeStats& s, std::size_t col) {
    if (s.zero_variance[col]) return 0.0;
    return (x - s.mean[col]) / s.sd[col];
}

double average_path_length(int n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    double harmonic;
    if (n - 1 <= 64) {
        harmonic = 0.0;
        for (int k = 1; k <= n - 1; ++k) harmonic += 1.0 / static_cast<double>(k);
    } else {
        constexpr double kEulerGamma = 0.57721566490153286060;
        harmonic = std::log(static_cast<double>(n - 1)) + kEulerGamma +
                   1.0 / (2.0 * static_cast<double>(n - 1));
    }
    return 2.0 * harmonic - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

int IsolationForest::grow(std::vector<Node>& tree, std::vector<std::size_t>& idx,
                          std::size_t lo, std::size_t hi, int depth, int depth_cap,
                          const std::vector<std::vector<double>>& rows, Pcg32& rng) {
    Node node;
    node.size = static_cast<int>(hi - lo);
    const int self = static_cast<int>(tree.size());
    tree.push_back(node);

    if (hi - lo <= 1 || depth >= depth_cap) return self;

    // Split candidates: features that actually vary inside this node.
    std::vector<int> candidates;
    std::vector<double> mins(n_features_), maxs(n_features_);
    for (std::size_t f = 0; f < n_features_; ++f) {
        double mn = rows[idx[lo]][f], mx = mn;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            mn = std::min(mn, rows[idx[i]][f]);
            mx = std::max(mx, rows[idx[i]][f]);
        }
        mins[f] = mn;
        maxs[f] = mx;
        if (mx > mn) candidates.push_back(static_cast<int>(f));
    }
    if (candidates.empty()) return self;   // duplicate rows

    const int f = candidates[rng.bounded(static_cast<std::uint32_t>(candidates.size()))];
    const double cut = mins[static_cast<std::size_t>(f)] +
                       rng.uniform_open() * (maxs[static_cast<std::size_t>(f)] -
                                             mins[static_cast<std::size_t>(f)]);

    auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                 idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                 [&](std::size_t i) { return rows[i][static_cast<std::size_t>(f)] < cut; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    if (mid == lo || mid == hi) return self;   // degenerate cut, cannot happen with open u

    tree[static_cast<std::size_t>(self)].feature = f;
    tree[static_cast<std::size_t>(self)].cut = cut;
    int left = grow(tree, idx, lo, mid, depth + 1, depth_cap, rows, rng);
    tree[static_cast<std::size_t>(self)].left = left;
    int right = grow(tree, idx, mid, hi, depth + 1, depth_cap, rows, rng);
    tree[static_cast<std::size_t>(self)].right = right;
    return self;
}

void IsolationForest::train(const std::vector<std::vector<double>>& rows,
                            const IsolationForestParams& params) {
    const std::size_t n = rows.size();
    if (n < 16) throw ValidationError("isolation forest: need at least 16 rows");
    n_features_ = rows[0].size();
    sample_size_ = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(params.max_samples), n));
    const int depth_cap = static_cast<int>(std::ceil(std::log2(static_cast<double>(sample_size_))));

    trees_.clear();
    trees_.resize(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        Pcg32 rng(params.seed, static_cast<std::uint64_t>(t) + 1);
        // Subsample without replacement: partial Fisher-Yates over row indices.
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        for (int i = 0; i < sample_size_; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            rng.bounded(static_cast<std::uint32_t>(n - static_cast<std::size_t>(i)));
            std::swap(all[static_cast<std::size_t>(i)], all[j]);
        }
        std::vector<std::size_t> idx(all.begin(), all.begin() + sample_size_);
        auto& tree = trees_[static_cast<std::size_t>(t)];
        tree.reserve(static_cast<std::size_t>(2 * sample_size_));
        grow(tree, idx, 0, idx.size(), 0, depth_cap, rows, rng);
    }
}

double IsolationForest::score(const std::vector<double>& row) const {
    if (row.size() != n_features_) throw ValidationError("isolation forest: feature count mismatch");
    double total = 0.0;
    for (const auto& tree : trees_) {
        int node = 0;
        int depth = 0;
        while (tree[static_cast<std::size_t>(node)].feature >= 0) {
            const auto& nd = tree[static_cast<std::size_t>(node)];
            node = row[static_cast<std::size_t>(nd.feature)] < nd.cut ? nd.left : nd.right;
            ++depth;
        }
        total += static_cast<double>(depth) +
                 average_path_length(tree[static_cast<std::size_t>(node)].size);
    }
    const double mean_path = total / static_cast<double>(trees_.size());
    return std::pow(2.0, -mean_path / average_path_length(sample_size_));
}

std::map<std::pair<std::string, int>, CohortLabel> tiers_from_pairs(
    const std::vector<MatchedPair>& pairs) {
    std::map<std::pair<std::string, int>, CohortLabel> tiers;
    for (const auto& p : pairs) {
        tiers[{p.case_author, p.subject}] = CohortLabel::Case;
        tiers[{p.control_author, p.subject}] = CohortLabel::Control;
    }
    return tiers;
}

namespace {

// Columns fed to the forest: every feature except burst intensity.
std::vector<int> if_feature_columns() {
    std::vector<int> cols;
    for (int f = 0; f < kFeatureCount; ++f) {
        if (f != kBurstIntensity) cols.push_back(f);
    }
    return cols;
}

struct SubjectBlock {
    std::vector<std::size_t> rows;       // indices into the feature vector list
    std::vector<std::size_t> baseline;   // subset of `rows` positions (local)
};

} // namespace

DetectResult run_detect(const std::vector<FeatureVector>& features,
                        const std::map<std::pair<std::string, int>, CohortLabel>& tiers,
                        const DetectParams& params) {
    DetectResult result;

    std::map<int, SubjectBlock> subjects;
    for (std::size_t i = 0; i < features.size(); ++i) {
        subjects[features[i].subject].rows.push_back(i);
    }

    const auto if_cols = if_feature_columns();

    for (auto& [subject, block] : subjects) {
        // Deterministic row order inside the subject.
        std::sort(block.rows.begin(), block.rows.end(), [&](std::size_t a, std::size_t b) {
            return features[a].author < features[b].author;
        });

        std::vector<CohortLabel> tier_of(block.rows.size(), CohortLabel::Other);
        for (std::size_t k = 0; k < block.rows.size(); ++k) {
            const auto& fv = features[block.rows[k]];
            auto it = tiers.find({fv.author, fv.subject});
            if (it != tiers.end()) tier_of[k] = it->second;
            if (params.baseline == BaselineMode::Population ||
                tier_of[k] == CohortLabel::Control) {
                block.baseline.push_back(k);
            }
        }

        std::vector<std::vector<double>> raw(block.rows.size());
        for (std::size_t k = 0; k < block.rows.size(); ++k) {
            const auto& fv = features[block.rows[k]];
            raw[k].assign(fv.values.begin(), fv.values.end());
        }

        if (block.baseline.size() < 2 || block.rows.size() < 16) {
            result.warnings.push_back("subject " + std::to_string(subject) +
                                      " skipped: too few rows for detection");
            continue;
        }

        StandardizeStats stats = standardize_fit(raw, block.baseline);

        // Forest input: z-scores, authority metrics inverted, optional
        // cohesion-weight scaling.
        std::vector<double> col_scale(kFeatureCount, 1.0);
        for (int f : kInvertedFeatures) col_scale[static_cast<std::size_t>(f)] *= -1.0;
        if (params.scale_if_inputs) {
            for (std::size_t k = 0; k < kCohesionFeatures.size(); ++k) {
                col_scale[static_cast<std::size_t>(kCohesionFeatures[k])] *= kCohesionWeights[k];
            }
        }
        std::vector<std::vector<double>> z_if(block.rows.size(),
                                              std::vector<double>(if_cols.size(), 0.0));
        for (std::size_t k = 0; k < block.rows.size(); ++k) {
            for (std::size_t c = 0; c < if_cols.size(); ++c) {
                auto f = static_cast<std::size_t>(if_cols[c]);
                z_if[k][c] = col_scale[f] * standardize_value(raw[k][f], stats, f);
            }
        }

        IsolationForestParams fp = params.forest;
        fp.seed = params.seed ^ (static_cast<std::uint64_t>(subject) << 32);
        IsolationForest forest;
        forest.train(z_if, fp);

        std::vector<double> if_scores(block.rows.size());
        for (std::size_t k = 0; k < block.rows.size(); ++k) if_scores[k] = forest.score(z_if[k]);

        std::vector<double> sorted_scores = if_scores;
        std::sort(sorted_scores.begin(), sorted_scores.end());
        const double cutoff = quantile_sorted(sorted_scores, 1.0 - params.contamination);
        result.if_cutoff[subject] = cutoff;

        // Cohesion composite and its baseline moments.
        std::vector<double> s_vals(block.rows.size(), 0.0);
        std::vector<std::array<double, 6>> comps(block.rows.size());
        for (std::size_t k = 0; k < block.rows.size(); ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < kCohesionFeatures.size(); ++c) {
                auto f = static_cast<std::size_t>(kCohesionFeatures[c]);
                double z = standardize_value(raw[k][f], stats, f);
                comps[k][c] = z;
                s += kCohesionWeights[c] * z;
            }
            s_vals[k] = s;
        }
        double s_mean = 0.0;
        for (std::size_t b : block.baseline) s_mean += s_vals[b];
        s_mean /= static_cast<double>(block.baseline.size());
        double s_ss = 0.0;
        for (std::size_t b : block.baseline) {
            double d = s_vals[b] - s_mean;
            s_ss += d * d;
        }
        const double s_sd = std::sqrt(s_ss / static_cast<double>(block.baseline.size()));

        for (std::size_t k = 0; k < block.rows.size(); ++k) {
            const auto& fv = features[block.rows[k]];
            OutlierFlag flag;
            flag.author = fv.author;
            flag.subject = subject;
            flag.tier = tier_of[k];
            flag.if_score = if_scores[k];
            flag.cohesion_s = s_vals[k];
            flag.cohesion_z = s_sd > 0.0 ? (s_vals[k] - s_mean) / s_sd : 0.0;
            flag.z_components = comps[k];
            flag.threshold_sigma = params.sigma;
            flag.flagged = if_scores[k] >= cutoff && flag.cohesion_z > params.sigma;
            result.flags.push_back(std::move(flag));
        }
    }

    std::sort(result.flags.begin(), result.flags.end(), [](const OutlierFlag& a, const OutlierFlag& b) {
        return std::tie(a.subject, a.author) < std::tie(b.subject, b.author);
    });
    return result;
}

namespace {

// Fraction of the flagged set inside a mutual-citation component of size >= 2.
double connected_fraction(const std::set<std::pair<std::string, int>>& flagged,
                          const AuthorCitationGraph& g) {
    std::set<std::string> authors;
    for (const auto& [a, s] : flagged) authors.insert(a);
    std::vector<std::string> ids(authors.begin(), authors.end());
    std::map<std::string, int> local;
    for (std::size_t i = 0; i < ids.size(); ++i) local[ids[i]] = static_cast<int>(i);

    // Union-find over mutual links.
    std::vector<int> parent(ids.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (std::size_t i = 0; i < ids.size(); ++i) {
        int gi = g.index_of(ids[i]);
        if (gi < 0) continue;
        for (const auto& [j, w] : g.out_adj[static_cast<std::size_t>(gi)]) {
            auto it = local.find(g.node_ids[static_cast<std::size_t>(j)]);
            if (it == local.end()) continue;
            if (g.edge_weight(j, gi) > 0.0) {
                int ra = find(static_cast<int>(i)), rb = find(it->second);
                if (ra != rb) parent[static_cast<std::size_t>(ra)] = rb;
            }
        }
    }
    std::map<int, int> comp_size;
    for (std::size_t i = 0; i < ids.size(); ++i) ++comp_size[find(static_cast<int>(i))];
    std::size_t connected = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (comp_size[find(static_cast<int>(i))] >= 2) ++connected;
    }
    if (ids.empty()) return 0.0;
    return static_cast<double>(connected) / static_cast<double>(ids.size());
}

} // namespace

std::vector<SweepRow> sensitivity_sweep(const std::vector<FeatureVector>& features,
                                        const std::map<std::pair<std::string, int>, CohortLabel>& tiers,
                                        const DetectParams& params,
                                        const std::vector<double>& sigmas,
                                        const AuthorCitationGraph* graph) {
    // Scores do not depend on sigma: detect once at any sigma, then threshold.
    DetectParams base = params;
    DetectResult scored = run_detect(features, tiers, base);

    std::vector<SweepRow> rows;
    for (double sigma : sigmas) {
        for (const char* method_name : {"if_only", "cohesion_only", "hybrid"}) {
            const std::string method = method_name;
            SweepRow row;
            row.method = method;
            row.sigma = sigma;
            std::set<std::pair<std::string, int>> flagged;
            int n_case = 0;
            for (const auto& f : scored.flags) {
                bool above_if = f.if_score >= scored.if_cutoff.at(f.subject);
                bool above_z = f.cohesion_z > sigma;
                bool hit = method == "if_only" ? above_if
                          : method == "cohesion_only" ? above_z
                                                      : (above_if && above_z);
                if (!hit) continue;
                flagged.insert({f.author, f.subject});
                if (f.tier == CohortLabel::Case) ++n_case;
            }
            row.n_flagged = static_cast<int>(flagged.size());
            if (row.n_flagged > 0) {
                row.case_purity = static_cast<double>(n_case) / row.n_flagged;
            }
            if (graph != nullptr && row.n_flagged > 0) {
                row.connected_share = connected_fraction(flagged, *graph);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void save_outliers_csv(const DetectResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "author,subject,tier,if_score,cohesion_s,cohesion_z,"
           "z_coauthor,z_clique,z_reciprocity,z_hhi_out,z_self,z_endogamy,"
           "flagged,threshold_sigma\n";
    for (const auto& f : result.flags) {
        out << f.author << "," << f.subject << "," << cohort_name(f.tier) << ","
            << format_double(f.if_score) << "," << format_double(f.cohesion_s) << ","
            << format_double(f.cohesion_z);
        for (double z : f.z_components) out << "," << format_double(z);
        out << "," << (f.flagged ? 1 : 0) << "," << format_double(f.threshold_sigma) << "\n";
    }
}

std::vector<OutlierFlag> load_outliers_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<OutlierFlag> flags;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("author,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != 14) throw ValidationError("bad outlier row: " + line);
        OutlierFlag f;
        f.author = fields[0];
        f.subject = std::stoi(fields[1]);
        f.tier = fields[2] == "case" ? CohortLabel::Case
               : fields[2] == "control" ? CohortLabel::Control : CohortLabel::Other;
        f.if_score = std::stod(fields[3]);
        f.cohesion_s = std::stod(fields[4]);
        f.cohesion_z = std::stod(fields[5]);
        for (std::size_t c = 0; c < 6; ++c) f.z_components[c] = std::stod(fields[6 + c]);
        f.flagged = fields[12] == "1";
        f.threshold_sigma = std::stod(fields[13]);
        flags.push_back(std::move(f));
    }
    return flags;
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "method,sigma,outliers,case_purity,connected_share\n";
    for (const auto& r : rows) {
        out << r.method << "," << format_double(r.sigma) << "," << r.n_flagged << ",";
        if (r.case_purity) out << format_double(*r.case_purity);
        out << ",";
        if (r.connected_share) out << format_double(*r.connected_share);
        out << "\n";
    }
}

} // namespace citeforge
