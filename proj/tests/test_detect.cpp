#include <doctest.h>

#include "citeforge/detect.hpp"
#include "citeforge/rng.hpp"
#include "citeforge/util.hpp"
#include "graph_fixtures.hpp"
#include "test_util.hpp"

#include <cmath>
#include <unistd.h>

using namespace citeforge;

namespace {

FeatureVector feature_row(const std::string& author, int subject,
                          std::array<double, kFeatureCount> values, bool burst = true) {
    FeatureVector fv;
    fv.author = author;
    fv.subject = subject;
    fv.values = values;
    fv.burst_present = burst;
    return fv;
}

// Gaussian-ish rows for forest tests.
std::vector<std::vector<double>> normal_rows(int n, int cols, Pcg32& rng) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) {
        std::vector<double> row;
        for (int c = 0; c < cols; ++c) {
            double u1 = rng.uniform_open(), u2 = rng.uniform();
            row.push_back(std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

TEST_CASE("standardization uses population moments of the baseline rows") {
    std::vector<std::vector<double>> rows{{0.0}, {2.0}, {3.0}};
    auto stats = standardize_fit(rows, {0, 1});
    CHECK(stats.mean[0] == doctest::Approx(1.0));
    CHECK(stats.sd[0] == doctest::Approx(1.0));
    CHECK(standardize_value(3.0, stats, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(standardize_value(1.0, stats, 0) == doctest::Approx(0.0));

    CHECK_THROWS_AS(standardize_fit(rows, {0}), ValidationError);

    std::vector<std::vector<double>> flat{{5.0}, {5.0}, {7.0}};
    auto zstats = standardize_fit(flat, {0, 1});
    CHECK(zstats.zero_variance[0]);
    CHECK(standardize_value(7.0, zstats, 0) == 0.0);
}

TEST_CASE("average path length normalizer") {
    CHECK(average_path_length(0) == 0.0);
    CHECK(average_path_length(1) == 0.0);
    CHECK(average_path_length(2) == doctest::Approx(1.0));
    // c(3) = 2*H(2) - 2*(2/3) = 3 - 4/3.
    CHECK(average_path_length(3) == doctest::Approx(3.0 - 4.0 / 3.0).epsilon(1e-12));
    CHECK(average_path_length(256) > average_path_length(64));
}

TEST_CASE("identical rows isolate equally") {
    std::vector<std::vector<double>> rows(30, std::vector<double>(13, 1.5));
    IsolationForestParams params;
    params.n_trees = 50;
    IsolationForest forest;
    forest.train(rows, params);
    double first = forest.score(rows[0]);
    for (const auto& row : rows) CHECK(forest.score(row) == doctest::Approx(first));
    CHECK(first == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("a planted extreme row attains the maximum anomaly score") {
    Pcg32 rng(1234, 1);
    auto rows = normal_rows(500, 13, rng);
    rows.push_back(std::vector<double>(13, 10.0));   // 10 sigma on every feature
    IsolationForestParams params;
    IsolationForest forest;
    forest.train(rows, params);
    double planted = forest.score(rows.back());
    double best_other = 0.0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        best_other = std::max(best_other, forest.score(rows[i]));
    }
    CHECK(planted > best_other);
    CHECK(planted > 0.5);
}

TEST_CASE("training is reproducible under the seed") {
    Pcg32 rng(555, 2);
    auto rows = normal_rows(100, 13, rng);
    IsolationForestParams params;
    params.n_trees = 40;
    IsolationForest a, b;
    a.train(rows, params);
    b.train(rows, params);
    for (const auto& row : rows) CHECK(a.score(row) == b.score(row));
}

TEST_CASE("forest rejects tiny datasets and mismatched rows") {
    std::vector<std::vector<double>> rows(10, std::vector<double>(13, 0.0));
    IsolationForest forest;
    CHECK_THROWS_AS(forest.train(rows, IsolationForestParams{}), ValidationError);

    Pcg32 rng(556, 3);
    auto ok = normal_rows(30, 13, rng);
    forest.train(ok, IsolationForestParams{});
    CHECK_THROWS_AS(forest.score(std::vector<double>(5, 0.0)), ValidationError);
}

TEST_CASE("two-point dataset ranks the outlying point higher") {
    // 16-row minimum: 15 points at 0 and one at 100.
    std::vector<std::vector<double>> rows(15, std::vector<double>{0.0});
    rows.push_back({100.0});
    IsolationForestParams params;
    params.n_trees = 100;
    IsolationForest forest;
    forest.train(rows, params);
    CHECK(forest.score(rows.back()) > forest.score(rows.front()));
}

TEST_CASE("cohesion score follows the fixed weight schedule") {
    // Rows built so control variance is 1 per component; the planted row sits
    // one sd above the mean on all six components.
    std::vector<FeatureVector> features;
    std::array<double, kFeatureCount> base{};
    std::array<double, kFeatureCount> plus{};
    std::array<double, kFeatureCount> minus{};
    for (std::size_t c = 0; c < kCohesionFeatures.size(); ++c) {
        auto f = static_cast<std::size_t>(kCohesionFeatures[c]);
        plus[f] = 1.0;
        minus[f] = -1.0;
    }
    std::map<std::pair<std::string, int>, CohortLabel> tiers;
    for (int i = 0; i < 10; ++i) {
        std::string a = "ctrlA" + std::to_string(i);
        std::string b = "ctrlB" + std::to_string(i);
        features.push_back(feature_row(a, 1, plus));
        features.push_back(feature_row(b, 1, minus));
        tiers[{a, 1}] = CohortLabel::Control;
        tiers[{b, 1}] = CohortLabel::Control;
    }
    std::array<double, kFeatureCount> unit{};
    for (std::size_t c = 0; c < kCohesionFeatures.size(); ++c) {
        unit[static_cast<std::size_t>(kCohesionFeatures[c])] = 1.0;   // z = +1 each
    }
    features.push_back(feature_row("probe", 1, unit));
    tiers[{"probe", 1}] = CohortLabel::Case;

    DetectParams params;
    params.sigma = 100.0;   // flagging not under test here
    auto result = run_detect(features, tiers, params);
    const OutlierFlag* probe = nullptr;
    for (const auto& f : result.flags) {
        if (f.author == "probe") probe = &f;
    }
    REQUIRE(probe != nullptr);
    // z = 1 on each component: s = 4 + 3.5 + 3.5 + 3 + 2 + 2 = 18.
    CHECK(probe->cohesion_s == doctest::Approx(18.0).epsilon(1e-9));
    for (double z : probe->z_components) CHECK(z == doctest::Approx(1.0).epsilon(1e-9));

    // A centered probe scores zero.
    std::array<double, kFeatureCount> zero{};
    features.push_back(feature_row("center", 1, zero));
    tiers[{"center", 1}] = CohortLabel::Case;
    auto result2 = run_detect(features, tiers, params);
    for (const auto& f : result2.flags) {
        if (f.author == "center") CHECK(f.cohesion_s == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("hybrid flag requires both conditions") {
    // One subject, 30 controls at the origin with unit spread, one case row
    // extreme on cohesion components only.
    Pcg32 rng(808, 4);
    std::vector<FeatureVector> features;
    std::map<std::pair<std::string, int>, CohortLabel> tiers;
    for (int i = 0; i < 30; ++i) {
        std::array<double, kFeatureCount> v{};
        for (int f = 0; f < kFeatureCount; ++f) v[static_cast<std::size_t>(f)] = rng.uniform(-1.0, 1.0);
        std::string id = "ctrl" + std::to_string(i);
        features.push_back(feature_row(id, 1, v));
        tiers[{id, 1}] = CohortLabel::Control;
    }
    std::array<double, kFeatureCount> hot{};
    for (std::size_t c = 0; c < kCohesionFeatures.size(); ++c) {
        hot[static_cast<std::size_t>(kCohesionFeatures[c])] = 25.0;
    }
    features.push_back(feature_row("suspect", 1, hot));
    tiers[{"suspect", 1}] = CohortLabel::Case;

    DetectParams params;
    params.sigma = 4.0;
    auto result = run_detect(features, tiers, params);
    int flagged = 0;
    for (const auto& f : result.flags) {
        if (f.flagged) {
            ++flagged;
            CHECK(f.author == "suspect");
            CHECK(f.cohesion_z > 4.0);
            CHECK(f.if_score >= result.if_cutoff.at(1));
        }
    }
    CHECK(flagged == 1);

    // With an unreachable sigma nothing passes the AND.
    params.sigma = 1e9;
    auto none = run_detect(features, tiers, params);
    for (const auto& f : none.flags) CHECK_FALSE(f.flagged);
}

TEST_CASE("sweep is monotone and hybrid stays inside IF-only") {
    Pcg32 rng(909, 5);
    std::vector<FeatureVector> features;
    std::map<std::pair<std::string, int>, CohortLabel> tiers;
    for (int i = 0; i < 60; ++i) {
        std::array<double, kFeatureCount> v{};
        for (int f = 0; f < kFeatureCount; ++f) v[static_cast<std::size_t>(f)] = rng.uniform(0.0, 1.0);
        std::string id = (i % 2 ? "case" : "ctrl") + std::to_string(i);
        features.push_back(feature_row(id, 1, v));
        tiers[{id, 1}] = i % 2 ? CohortLabel::Case : CohortLabel::Control;
    }
    for (int i = 0; i < 3; ++i) {
        std::array<double, kFeatureCount> v{};
        for (std::size_t c = 0; c < kCohesionFeatures.size(); ++c) {
            v[static_cast<std::size_t>(kCohesionFeatures[c])] = 10.0 + i;
        }
        std::string id = "planted" + std::to_string(i);
        features.push_back(feature_row(id, 1, v));
        tiers[{id, 1}] = CohortLabel::Case;
    }

    DetectParams params;
    auto rows = sensitivity_sweep(features, tiers, params, {1.0, 2.0, 3.0, 4.0}, nullptr);
    std::map<std::string, std::vector<int>> counts;
    std::map<double, int> hybrid_at, ifonly_at;
    for (const auto& r : rows) {
        counts[r.method].push_back(r.n_flagged);
        if (r.method == "hybrid") hybrid_at[r.sigma] = r.n_flagged;
        if (r.method == "if_only") ifonly_at[r.sigma] = r.n_flagged;
    }
    for (const auto& [method, series] : counts) {
        for (std::size_t i = 1; i < series.size(); ++i) CHECK(series[i] <= series[i - 1]);
    }
    for (const auto& [sigma, n] : hybrid_at) CHECK(n <= ifonly_at.at(sigma));
}

TEST_CASE("cohesion score is affine-equivariant in each raw feature") {
    Pcg32 rng(2121, 7);
    std::vector<FeatureVector> features;
    std::map<std::pair<std::string, int>, CohortLabel> tiers;
    for (int i = 0; i < 40; ++i) {
        std::array<double, kFeatureCount> v{};
        for (int f = 0; f < kFeatureCount; ++f) v[static_cast<std::size_t>(f)] = rng.uniform(0.0, 1.0);
        std::string id = "a" + std::to_string(i);
        features.push_back(feature_row(id, 1, v));
        tiers[{id, 1}] = i % 2 ? CohortLabel::Case : CohortLabel::Control;
    }
    DetectParams params;
    auto base = run_detect(features, tiers, params);

    // Shift one cohesion component by a constant everywhere (rows and
    // baseline alike): every z and therefore every s is unchanged.
    auto shifted = features;
    for (auto& fv : shifted) fv.values[kCoauthorCitationRate] += 7.25;
    auto moved = run_detect(shifted, tiers, params);
    REQUIRE(moved.flags.size() == base.flags.size());
    for (std::size_t i = 0; i < base.flags.size(); ++i) {
        CHECK(moved.flags[i].cohesion_s ==
              doctest::Approx(base.flags[i].cohesion_s).epsilon(1e-9));
        CHECK(moved.flags[i].cohesion_z ==
              doctest::Approx(base.flags[i].cohesion_z).epsilon(1e-9));
    }
}

TEST_CASE("outliers csv round trip is lossless and deterministic") {
    Pcg32 rng(101, 6);
    std::vector<FeatureVector> features;
    std::map<std::pair<std::string, int>, CohortLabel> tiers;
    for (int i = 0; i < 20; ++i) {
        std::array<double, kFeatureCount> v{};
        for (int f = 0; f < kFeatureCount; ++f) v[static_cast<std::size_t>(f)] = rng.uniform(0.0, 1.0);
        std::string id = "a" + std::to_string(i);
        features.push_back(feature_row(id, 1, v));
        tiers[{id, 1}] = i % 2 ? CohortLabel::Case : CohortLabel::Control;
    }
    DetectParams params;
    auto result = run_detect(features, tiers, params);

    TempDir tmp("outliers");
    save_outliers_csv(result, tmp.file("outliers.csv"));
    save_outliers_csv(result, tmp.file("outliers2.csv"));
    CHECK(citeforge::read_text_file(tmp.file("outliers.csv")) ==
          citeforge::read_text_file(tmp.file("outliers2.csv")));

    auto loaded = load_outliers_csv(tmp.file("outliers.csv"));
    REQUIRE(loaded.size() == result.flags.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].author == result.flags[i].author);
        CHECK(loaded[i].if_score == result.flags[i].if_score);
        CHECK(loaded[i].cohesion_z == result.flags[i].cohesion_z);
        CHECK(loaded[i].flagged == result.flags[i].flagged);
    }
}
