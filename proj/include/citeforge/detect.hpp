#pragma once

// Hybrid outlier detection: per-subject Isolation Forest intersected with the
// weighted cohesion composite z-score.

#include "citeforge/cohort.hpp"
#include "citeforge/features.hpp"
#include "citeforge/graph.hpp"
#include "citeforge/rng.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace citeforge {

// Cohesion composite components and their fixed weights.
inline constexpr std::array<int, 6> kCohesionFeatures = {
    kCoauthorCitationRate, kCliqueStrength, kReciprocityRate,
    kHhiOut, kSelfCitationRate, kJournalEndogamy,
};
inline constexpr std::array<double, 6> kCohesionWeights = {4.0, 3.5, 3.5, 3.0, 2.0, 2.0};

// Authority metrics sign-inverted after standardization (lower = more suspect).
inline constexpr std::array<int, 4> kInvertedFeatures = {
    kEigenvectorCentrality, kKcoreNumber, kCitationEntropy, kCitationBalance,
};

struct StandardizeStats {
    std::vector<double> mean;
    std::vector<double> sd;          // population sd over baseline rows
    std::vector<bool> zero_variance; // z forced to 0, reported as a warning
};

// Baseline statistics per column; throws when fewer than 2 baseline rows.
StandardizeStats standardize_fit(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::size_t>& baseline_rows);
double standardize_value(double x, const StandardizeStats& s, std::size_t col);

struct IsolationForestParams {
    int n_trees = 200;
    int max_samples = 256;          // capped at the row count
    std::uint64_t seed = 42;
};

// Classic isolation forest: uniform feature choice, uniform cut between the
// in-node min and max, subsampling without replacement, depth capped at
// ceil(log2(max_samples)). Randomness comes from per-tree PCG32 substreams,
// so training is reproducible bit for bit.
class IsolationForest {
public:
    void train(const std::vector<std::vector<double>>& rows, const IsolationForestParams& params);
    double score(const std::vector<double>& row) const;   // in (0, 1)
    int sample_size() const { return sample_size_; }

private:
    struct Node {
        int feature = -1;
        double cut = 0.0;
        int size = 0;
        int left = -1;
        int right = -1;
    };
    std::vector<std::vector<Node>> trees_;
    int sample_size_ = 0;
    std::size_t n_features_ = 0;

    int grow(std::vector<Node>& tree, std::vector<std::size_t>& idx, std::size_t lo,
             std::size_t hi, int depth, int depth_cap,
             const std::vector<std::vector<double>>& rows, Pcg32& rng);
};

// Average unsuccessful-BST-search depth; exact harmonic numbers for small n.
double average_path_length(int n);

enum class BaselineMode { Control, Population };

struct DetectParams {
    double sigma = 4.0;
    double contamination = 0.01;
    std::uint64_t seed = 42;
    BaselineMode baseline = BaselineMode::Control;
    bool scale_if_inputs = true;     // multiply IF z-columns by cohesion weights
    IsolationForestParams forest;
};

struct OutlierFlag {
    std::string author;
    int subject = 0;
    CohortLabel tier = CohortLabel::Other;
    double if_score = 0.0;
    double cohesion_s = 0.0;         // Eq.-1 weighted sum of component z-scores
    double cohesion_z = 0.0;         // s standardized against the baseline s
    std::array<double, 6> z_components{};
    bool flagged = false;
    double threshold_sigma = 4.0;
};

struct DetectResult {
    std::vector<OutlierFlag> flags;                 // sorted by (subject, author)
    std::map<int, double> if_cutoff;                // per subject
    std::vector<std::string> warnings;              // skipped subjects etc.
};

// Tier labels per (author, subject) recovered from the matched pairs.
std::map<std::pair<std::string, int>, CohortLabel> tiers_from_pairs(
    const std::vector<MatchedPair>& pairs);

DetectResult run_detect(const std::vector<FeatureVector>& features,
                        const std::map<std::pair<std::string, int>, CohortLabel>& tiers,
                        const DetectParams& params);

struct SweepRow {
    std::string method;      // if_only | cohesion_only | hybrid
    double sigma = 0.0;
    int n_flagged = 0;
    std::optional<double> case_purity;
    std::optional<double> connected_share;   // needs the author graph
};

// One row per (sigma, method); connected_share is the fraction of flagged
// authors inside a mutual-citation component of size >= 2.
std::vector<SweepRow> sensitivity_sweep(const std::vector<FeatureVector>& features,
                                        const std::map<std::pair<std::string, int>, CohortLabel>& tiers,
                                        const DetectParams& params,
                                        const std::vector<double>& sigmas,
                                        const AuthorCitationGraph* graph);

// outliers.csv round trip (all rows, flagged column).
void save_outliers_csv(const DetectResult& result, const std::string& path);
std::vector<OutlierFlag> load_outliers_csv(const std::string& path);
void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

} // namespace citeforge
