#pragma once

// Matched-pair statistical battery: Wilcoxon signed-rank (exact and normal
// approximation), BH-FDR, effect sizes, bootstrap CIs, permutation and
// placebo checks, and k-means archetypes.

#include "citeforge/cohort.hpp"
#include "citeforge/features.hpp"

#include <optional>
#include <string>
#include <vector>

namespace citeforge {

struct WilcoxonResult {
    double statistic = 0.0;   // W = min(W+, W-)
    double p_value = 1.0;
    int n_used = 0;           // non-zero differences
    bool exact = false;
    bool all_zero = false;    // every difference was zero
};

// Two-sided test on paired samples; zero differences are dropped, ties get
// midranks. Exact enumeration (via rank-sum convolution) for n <= 25, normal
// approximation with tie correction and continuity correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x,
                                    const std::vector<double>& y);

// Benjamini-Hochberg adjusted p-values: p_adj(i) = min_{k >= rank(i)} m*p(k)/k,
// clipped to 1.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

// (#{x_i > y_j} - #{x_i < y_j}) / (|x|*|y|), computed by sorted counting.
double cliffs_delta(const std::vector<double>& x, const std::vector<double>& y);

// (mean x - mean y) / pooled sd with pooled sd = sqrt((SSx+SSy)/(nx+ny)).
// Empty when the pooled sd is zero.
std::optional<double> cohens_d(const std::vector<double>& x, const std::vector<double>& y);

// Seeded percentile bootstrap CI of the mean difference.
std::pair<double, double> bootstrap_ci(const std::vector<double>& diffs,
                                       int n_boot = 10000, double level = 0.95,
                                       std::uint64_t seed = 0);

// Two-sided label-shuffle test on the group mean difference.
// p = (1 + #{|perm| >= |observed|}) / (1 + n_perm).
double permutation_test(const std::vector<double>& values,
                        const std::vector<int>& labels, int n_perm = 10000,
                        std::uint64_t seed = 0);

// Random control-control pairing under the matching bucket rule; odd or
// incompatible pools leave authors unpaired.
std::vector<MatchedPair> placebo_pairs(const std::vector<AuthorPortfolio>& controls,
                                       std::uint64_t seed, int bucket_width = 3);

enum class Archetype { Central, Independent, Solo };

const char* archetype_name(Archetype a);

struct ArchetypeAssignment {
    std::string author;
    int cluster = 0;
    Archetype label = Archetype::Independent;
    std::array<double, 3> centroid_distances{};
};

struct KmeansResult {
    std::vector<int> assignment;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    int iterations = 0;
};

// Lloyd's iteration from k-means++ seeding; empty clusters re-seed at the
// farthest point. Deterministic under the seed.
KmeansResult kmeans(const std::vector<std::vector<double>>& rows, int k,
                    std::uint64_t seed, int max_iter = 300);

// Archetypes over the 13-column standardized feature matrix (burst excluded,
// canonical column order). Labels follow centroid semantics: Solo has the
// highest self+coauthor mean, Central the highest kcore+eigenvector mean
// among the rest.
std::vector<ArchetypeAssignment> kmeans_archetypes(
    const std::vector<std::string>& authors,
    const std::vector<std::vector<double>>& z_rows, std::uint64_t seed);

struct PairedTestResult {
    std::string metric;
    int n_pairs = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    double p_adjusted = 1.0;
    double cliffs = 0.0;
    std::optional<double> cohens;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> fold_change;
};

struct FoldChangeRow {
    std::string metric;
    double case_mean = 0.0;
    double control_mean = 0.0;
    std::optional<double> fold;   // absent when the control mean is zero
};

// "6.7x"-style rendering at one decimal; empty when the ratio is absent.
std::string format_fold(const std::optional<double>& fold);
std::optional<double> fold_ratio(double case_mean, double control_mean);

// Per-metric Case/Control means over pair members and their ratio.
std::vector<FoldChangeRow> fold_change_table(
    const std::vector<FeatureVector>& features, const std::vector<MatchedPair>& pairs);

// Full battery: one row per feature, pairs incomplete on a metric dropped for
// that metric, BH across the 14 p-values.
std::vector<PairedTestResult> paired_battery(const std::vector<FeatureVector>& features,
                                             const std::vector<MatchedPair>& pairs,
                                             int n_boot = 10000, std::uint64_t seed = 0);

} // namespace citeforge
