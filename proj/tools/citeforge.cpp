// citeforge: citation-network forensics pipeline CLI.

#include "citeforge/pipeline.hpp"
#include "citeforge/util.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

using namespace citeforge;

namespace {

std::pair<int, int> parse_window(const std::string& text) {
    auto parts = split(text, ':');
    if (parts.size() != 2) throw ValidationError("window must look like 2020:2024");
    return {std::stoi(parts[0]), std::stoi(parts[1])};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"citeforge: subject-aware citation network forensics"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse and filter record files into a catalog");
    std::string in_works, in_subjects, in_window = "2020:2024", in_out;
    bool in_citable = false;
    std::string in_digit;
    ingest->add_option("--works", in_works, "works file (NDJSON or CSV)")->required();
    ingest->add_option("--subjects", in_subjects, "issn,subject CSV")->required();
    ingest->add_option("--window", in_window, "publication year window, e.g. 2020:2024");
    ingest->add_flag("--citable-only", in_citable, "drop single-page entries");
    ingest->add_option("--sample-digit", in_digit, "keep only authors whose ID ends in this digit");
    ingest->add_option("--out", in_out, "output catalog directory")->required();

    // graph
    auto* graph = app.add_subcommand("graph", "Build journal and author citation graphs");
    std::string g_catalog, g_out;
    graph->add_option("--catalog", g_catalog, "catalog directory")->required();
    graph->add_option("--out", g_out, "output directory")->required();

    // rank
    auto* rank = app.add_subcommand("rank", "Eigenfactor scores and venue tiers");
    std::string r_graphs, r_out;
    double r_damping = 0.85;
    bool r_articles = false;
    rank->add_option("--graphs", r_graphs, "graph directory")->required();
    rank->add_option("--out", r_out, "journal_tiers.csv path")->required();
    rank->add_option("--damping", r_damping, "teleport damping (default 0.85)");
    rank->add_flag("--article-teleport", r_articles,
                   "weight the teleport vector by journal article volume");

    // match
    auto* match = app.add_subcommand("match", "Classify authors and build matched pairs");
    std::string m_catalog, m_tiers, m_out;
    match->add_option("--catalog", m_catalog, "catalog directory")->required();
    match->add_option("--tiers", m_tiers, "journal_tiers.csv")->required();
    match->add_option("--out", m_out, "pairs.csv path")->required();

    // features
    auto* features = app.add_subcommand("features", "Behavioral features for matched authors");
    std::string f_graph, f_pairs, f_out;
    bool f_burst_in = false;
    features->add_option("--graph", f_graph, "graph directory")->required();
    features->add_option("--pairs", f_pairs, "pairs.csv")->required();
    features->add_option("--out", f_out, "features.csv path")->required();
    features->add_flag("--burst-incoming", f_burst_in, "use incoming max weight in burst numerator");

    // detect
    auto* detect = app.add_subcommand("detect", "Hybrid outlier detection");
    std::string d_features, d_pairs, d_out, d_graph, d_baseline = "control";
    DetectParams d_params;
    detect->add_option("--features", d_features, "features.csv")->required();
    detect->add_option("--pairs", d_pairs, "pairs.csv")->required();
    detect->add_option("--sigma", d_params.sigma, "cohesion z threshold (default 4)");
    detect->add_option("--contamination", d_params.contamination, "IF contamination (default 0.01)");
    detect->add_option("--seed", d_params.seed, "random seed (default 42)");
    detect->add_option("--baseline", d_baseline, "z baseline: control|population");
    detect->add_option("--out", d_out, "outliers.csv path")->required();
    detect->add_option("--graph", d_graph, "graph directory (enables connected share)");
    bool d_no_scale = false;
    detect->add_flag("--no-if-weighting", d_no_scale, "disable cohesion-weight scaling of IF inputs");

    // stats
    auto* stats = app.add_subcommand("stats", "Matched-pair statistical battery");
    std::string s_features, s_pairs, s_out;
    int s_boot = 10000;
    std::uint64_t s_seed = 42;
    stats->add_option("--features", s_features, "features.csv")->required();
    stats->add_option("--pairs", s_pairs, "pairs.csv")->required();
    stats->add_option("--out", s_out, "stats.csv path")->required();
    stats->add_option("--n-boot", s_boot, "bootstrap resamples (default 10000)");
    stats->add_option("--seed", s_seed, "random seed (default 42)");

    // forensics
    auto* forensics = app.add_subcommand("forensics", "Syndicates, roles, mixing, communities");
    std::string fo_graph, fo_outliers, fo_out;
    std::uint64_t fo_seed = 42;
    forensics->add_option("--graph", fo_graph, "graph directory")->required();
    forensics->add_option("--outliers", fo_outliers, "outliers.csv")->required();
    forensics->add_option("--out", fo_out, "output directory")->required();
    forensics->add_option("--seed", fo_seed, "random seed (default 42)");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic citation economy");
    std::string sy_config, sy_out;
    synth->add_option("--config", sy_config, "scenario JSON")->required();
    synth->add_option("--out", sy_out, "output directory")->required();

    // run
    auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
    std::string run_config_path;
    run->add_option("--config", run_config_path, "run config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    const bool is_run = run->parsed();
    try {
        if (ingest->parsed()) {
            auto [ws, we] = parse_window(in_window);
            IngestOptions opts;
            opts.works_path = in_works;
            opts.subjects_path = in_subjects;
            opts.window_start = ws;
            opts.window_end = we;
            opts.citable_only = in_citable;
            if (!in_digit.empty()) opts.sample_digit = in_digit[0];
            opts.out_dir = in_out;
            stage_ingest(opts);
        } else if (graph->parsed()) {
            stage_graph({g_catalog, g_out});
        } else if (rank->parsed()) {
            RankOptions opts;
            opts.graphs_dir = r_graphs;
            opts.out_path = r_out;
            opts.damping = r_damping;
            opts.article_teleport = r_articles;
            stage_rank(opts);
        } else if (match->parsed()) {
            MatchOptions opts;
            opts.catalog_dir = m_catalog;
            opts.tiers_path = m_tiers;
            opts.out_path = m_out;
            stage_match(opts);
        } else if (features->parsed()) {
            FeatureOptions opts;
            opts.graph_dir = f_graph;
            opts.pairs_path = f_pairs;
            opts.out_path = f_out;
            opts.burst_incoming = f_burst_in;
            stage_features(opts);
        } else if (detect->parsed()) {
            DetectOptions opts;
            opts.features_path = d_features;
            opts.pairs_path = d_pairs;
            opts.out_path = d_out;
            opts.graph_dir = d_graph;
            d_params.baseline = d_baseline == "population" ? BaselineMode::Population
                                                           : BaselineMode::Control;
            d_params.scale_if_inputs = !d_no_scale;
            d_params.forest.seed = d_params.seed;
            opts.params = d_params;
            stage_detect(opts);
        } else if (stats->parsed()) {
            StatsOptions opts;
            opts.features_path = s_features;
            opts.pairs_path = s_pairs;
            opts.out_path = s_out;
            opts.n_boot = s_boot;
            opts.seed = s_seed;
            stage_stats(opts);
        } else if (forensics->parsed()) {
            ForensicsOptions opts;
            opts.graph_dir = fo_graph;
            opts.outliers_path = fo_outliers;
            opts.out_dir = fo_out;
            opts.seed = fo_seed;
            stage_forensics(opts);
        } else if (synth->parsed()) {
            ScenarioConfig sc = parse_scenario(read_text_file(sy_config));
            SynthResult result = generate(sc);
            write_synth(result, sc, sy_out);
        } else if (is_run) {
            RunConfig config = parse_run_config(read_text_file(run_config_path));
            if (const char* env_seed = std::getenv("CITEFORGE_SEED")) {
                config.seed = std::stoull(env_seed);
                config.detect.seed = config.seed;
                config.detect.forest.seed = config.seed;
            }
            RunReport report = run_pipeline(config);
            for (const auto& stage : report.stages) {
                std::cout << stage.name << ": " << (stage.executed ? "executed" : "skipped")
                          << "\n";
            }
            std::cout << "report: " << report.report_path << "\n";
        }
    } catch (const StageError& e) {
        std::cerr << "stage '" << e.stage << "' failed: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_run ? 3 : 1;
    }
    return 0;
}
