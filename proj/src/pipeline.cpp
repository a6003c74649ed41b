#include "citeforge/pipeline.hpp"

#include "citeforge/util.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace citeforge {

void stage_ingest(const IngestOptions& opts) {
    IngestStats stats;
    Catalog cat = load_records(opts.works_path, opts.window_start, opts.window_end, &stats);
    cat.subject_map = load_subjects(opts.subjects_path);

    std::vector<std::string> filters;
    if (opts.citable_only) {
        long long removed = 0;
        cat = filter_citable(cat, &removed);
        filters.push_back("citable_only(removed=" + std::to_string(removed) + ")");
    }
    if (opts.sample_digit) {
        cat = sample_authors(cat, *opts.sample_digit);
        filters.push_back(std::string("sample_digit=") + *opts.sample_digit);
    }
    save_catalog(cat, opts.out_dir, stats, filters);
}

void stage_graph(const GraphOptions& opts) {
    Catalog cat = load_catalog(opts.catalog_dir);
    fs::create_directories(opts.out_dir);

    std::set<int> subjects;
    for (const auto& [issn, s] : cat.subject_map.entries) subjects.insert(s);
    std::vector<int> degenerate_subjects;
    for (int s : subjects) {
        bool degenerate = false;
        JournalGraph jg = build_journal_graph(cat, s, &degenerate);
        if (degenerate) degenerate_subjects.push_back(s);
        save_journal_graph_csv(jg, (fs::path(opts.out_dir) /
                                    ("journal_graph_" + std::to_string(s) + ".csv")).string());
        // Node sidecar keeps isolated journals rankable and carries the
        // article counts used by the article-volume teleport mode.
        std::ofstream nodes_out(fs::path(opts.out_dir) /
                                ("journal_nodes_" + std::to_string(s) + ".csv"));
        nodes_out << "issn,works\n";
        for (const auto& issn : jg.nodes) {
            auto it = cat.journal_index.find(issn);
            std::size_t works = it == cat.journal_index.end() ? 0 : it->second.size();
            nodes_out << issn << "," << works << "\n";
        }
    }

    std::set<std::string> authors;
    for (const auto& [a, ids] : cat.author_index) authors.insert(a);
    AuthorCitationGraph g = build_author_graph(cat, authors);
    save_author_graph_csv(g, (fs::path(opts.out_dir) / "author_edges.csv").string());

    // Companion tables so downstream stages need only this directory.
    auto coauthors = coauthor_sets(cat);
    std::ofstream co_out(fs::path(opts.out_dir) / "coauthor_pairs.csv", std::ios::binary);
    co_out << "author,coauthor\n";
    for (const auto& [a, peers] : coauthors) {
        for (const auto& b : peers) co_out << a << "," << b << "\n";
    }

    auto endog = endogamy_table(cat);
    std::ofstream en_out(fs::path(opts.out_dir) / "endogamy.csv", std::ios::binary);
    en_out << "author,same_issn,resolvable\n";
    for (const auto& [a, e] : endog) {
        en_out << a << "," << e.same_issn << "," << e.resolvable << "\n";
    }

    std::ofstream aw_out(fs::path(opts.out_dir) / "author_works.csv", std::ios::binary);
    aw_out << "author,work_id,year,issn\n";
    for (const auto& [a, ids] : cat.author_index) {
        for (const auto& id : ids) {
            const auto& rec = cat.works.at(id);
            aw_out << a << "," << id << "," << rec.year << "," << rec.issn << "\n";
        }
    }

    json manifest;
    manifest["nodes"] = g.node_ids.size();
    manifest["edges"] = g.edges.size();
    manifest["dangling_refs"] = g.dangling_refs;
    manifest["degenerate_subjects"] = degenerate_subjects;   // < 2 journals, rank skips
    write_text_file((fs::path(opts.out_dir) / "graph_manifest.json").string(),
                    manifest.dump(2) + "\n");
}

namespace {

JournalGraph load_journal_graph_csv(const std::string& path, int subject,
                                    const std::string& nodes_path,
                                    std::map<std::string, double>* works_of = nullptr) {
    JournalGraph g;
    g.subject = subject;
    std::set<std::string> nodes;
    if (fs::exists(nodes_path)) {
        std::ifstream nin(nodes_path);
        std::string line;
        while (std::getline(nin, line)) {
            std::string t = trim(line);
            if (t.empty() || t.rfind("issn", 0) == 0) continue;
            auto fields = parse_csv_line(t);
            nodes.insert(fields[0]);
            if (works_of && fields.size() > 1) {
                (*works_of)[fields[0]] = std::stod(fields[1]);
            }
        }
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("citing,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() < 3) throw ValidationError("bad journal edge row: " + line);
        g.edge_weights[{fields[0], fields[1]}] += std::stoll(fields[2]);
        nodes.insert(fields[0]);
        nodes.insert(fields[1]);
    }
    g.nodes.assign(nodes.begin(), nodes.end());
    return g;
}

} // namespace

void save_tiers_csv(const std::vector<TierRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "issn,subject,score,tier\n";
    for (const auto& r : rows) {
        out << r.issn << "," << r.subject << "," << format_double(r.score) << ","
            << tier_name(r.tier) << "\n";
    }
}

std::vector<TierRow> load_tiers_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<TierRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("issn,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != 4) throw ValidationError("bad tier row: " + line);
        TierRow r;
        r.issn = fields[0];
        r.subject = std::stoi(fields[1]);
        r.score = std::stod(fields[2]);
        r.tier = fields[3] == "low" ? JournalTier::Low
               : fields[3] == "high" ? JournalTier::High : JournalTier::Mid;
        rows.push_back(std::move(r));
    }
    return rows;
}

void stage_rank(const RankOptions& opts) {
    std::vector<TierRow> rows;
    for (int s = 1; s <= 5; ++s) {
        std::string path =
            (fs::path(opts.graphs_dir) / ("journal_graph_" + std::to_string(s) + ".csv")).string();
        if (!fs::exists(path)) continue;
        std::string nodes_path =
            (fs::path(opts.graphs_dir) / ("journal_nodes_" + std::to_string(s) + ".csv")).string();
        std::map<std::string, double> works_of;
        JournalGraph g = load_journal_graph_csv(path, s, nodes_path, &works_of);
        if (g.nodes.empty()) continue;
        std::vector<double> article_weights;
        const std::vector<double>* teleport = nullptr;
        if (opts.article_teleport) {
            article_weights.reserve(g.nodes.size());
            for (const auto& issn : g.nodes) {
                auto it = works_of.find(issn);
                article_weights.push_back(it == works_of.end() ? 0.0 : it->second);
            }
            teleport = &article_weights;
        }
        EigenfactorResult ef = eigenfactor(g, opts.damping, opts.tol, opts.max_iter, teleport);
        if (ef.scores.size() < 4) continue;   // quartiles meaningless
        TierThresholds th = tier_thresholds(ef);
        auto labels = label_journal_tier(ef, th);
        for (const auto& [issn, score] : ef.scores) {
            TierRow r;
            r.issn = issn;
            r.subject = s;
            r.score = score;
            r.tier = labels.at(issn);
            rows.push_back(std::move(r));
        }
    }
    save_tiers_csv(rows, opts.out_path);
}

void save_pairs_csv(const std::vector<MatchedPair>& pairs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "subject,case_orcid,control_orcid,case_h5,control_h5\n";
    for (const auto& p : pairs) {
        out << p.subject << "," << p.case_author << "," << p.control_author << ","
            << p.case_h5 << "," << p.control_h5 << "\n";
    }
}

std::vector<MatchedPair> load_pairs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<MatchedPair> pairs;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("subject,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != 5) throw ValidationError("bad pair row: " + line);
        MatchedPair p;
        p.subject = std::stoi(fields[0]);
        p.case_author = fields[1];
        p.control_author = fields[2];
        p.case_h5 = std::stoi(fields[3]);
        p.control_h5 = std::stoi(fields[4]);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void stage_match(const MatchOptions& opts) {
    Catalog cat = load_catalog(opts.catalog_dir);
    auto tier_rows = load_tiers_csv(opts.tiers_path);

    std::map<int, std::map<std::string, JournalTier>> tiers_by_subject;
    for (const auto& r : tier_rows) tiers_by_subject[r.subject][r.issn] = r.tier;

    std::vector<MatchedPair> all_pairs;
    std::ostringstream funnel;
    funnel << "subject,n_authors,n_cases,n_controls,n_pairs\n";
    for (const auto& [subject, tiers] : tiers_by_subject) {
        auto portfolios = build_portfolios(cat, tiers, subject);
        std::vector<AuthorPortfolio> cases, controls;
        for (const auto& p : portfolios) {
            switch (classify_author(p, opts.min_works, opts.tier_share)) {
                case CohortLabel::Case: cases.push_back(p); break;
                case CohortLabel::Control: controls.push_back(p); break;
                case CohortLabel::Other: break;
            }
        }
        auto pairs = match_pairs(cases, controls, opts.bucket_width);
        funnel << subject << "," << portfolios.size() << "," << cases.size() << ","
               << controls.size() << "," << pairs.size() << "\n";
        all_pairs.insert(all_pairs.end(), pairs.begin(), pairs.end());
    }
    save_pairs_csv(all_pairs, opts.out_path);
    write_text_file((fs::path(opts.out_path).parent_path() / "funnel.csv").string(),
                    funnel.str());
}

namespace {

std::map<std::string, std::set<std::string>> load_coauthors_csv(const std::string& path) {
    std::map<std::string, std::set<std::string>> out;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("author,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != 2) throw ValidationError("bad coauthor row: " + line);
        out[fields[0]].insert(fields[1]);
    }
    return out;
}

std::map<std::string, EndogamyEntry> load_endogamy_csv(const std::string& path) {
    std::map<std::string, EndogamyEntry> out;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("author,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != 3) throw ValidationError("bad endogamy row: " + line);
        out[fields[0]] = {std::stoll(fields[1]), std::stoll(fields[2])};
    }
    return out;
}

std::map<std::string, AuthorWorksInfo> load_author_works_csv(const std::string& path) {
    std::map<std::string, AuthorWorksInfo> out;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("author,", 0) == 0) continue;
        }
        auto fields = parse_csv_line(line);
        if (fields.size() != 4) throw ValidationError("bad author work row: " + line);
        auto& info = out[fields[0]];
        int year = std::stoi(fields[2]);
        if (info.works == 0) {
            info.year_min = info.year_max = year;
        } else {
            info.year_min = std::min(info.year_min, year);
            info.year_max = std::max(info.year_max, year);
        }
        ++info.works;
        if (!fields[3].empty()) ++info.journal_counts[fields[3]];
    }
    return out;
}

} // namespace

void stage_features(const FeatureOptions& opts) {
    AuthorCitationGraph g =
        load_author_graph_csv((fs::path(opts.graph_dir) / "author_edges.csv").string());
    auto coauthors = load_coauthors_csv((fs::path(opts.graph_dir) / "coauthor_pairs.csv").string());
    auto endogamy = load_endogamy_csv((fs::path(opts.graph_dir) / "endogamy.csv").string());
    auto pairs = load_pairs_csv(opts.pairs_path);

    FeatureEngine engine(g, std::move(coauthors), std::move(endogamy), opts.burst_incoming);

    std::set<std::pair<std::string, int>> members;
    for (const auto& p : pairs) {
        members.insert({p.case_author, p.subject});
        members.insert({p.control_author, p.subject});
    }
    std::vector<FeatureVector> rows;
    rows.reserve(members.size());
    for (const auto& [author, subject] : members) {
        rows.push_back(engine.compute(author, subject));
    }
    save_features_csv(rows, opts.out_path);
}

void stage_detect(const DetectOptions& opts) {
    auto features = load_features_csv(opts.features_path);
    auto pairs = load_pairs_csv(opts.pairs_path);
    auto tiers = tiers_from_pairs(pairs);

    DetectResult result = run_detect(features, tiers, opts.params);
    save_outliers_csv(result, opts.out_path);

    std::optional<AuthorCitationGraph> graph;
    if (!opts.graph_dir.empty()) {
        graph = load_author_graph_csv((fs::path(opts.graph_dir) / "author_edges.csv").string());
    }
    auto sweep = sensitivity_sweep(features, tiers, opts.params, {1.0, 2.0, 3.0, 4.0},
                                   graph ? &*graph : nullptr);
    save_sweep_csv(sweep, (fs::path(opts.out_path).parent_path() / "sensitivity.csv").string());
}

void stage_stats(const StatsOptions& opts) {
    auto features = load_features_csv(opts.features_path);
    auto pairs = load_pairs_csv(opts.pairs_path);

    auto battery = paired_battery(features, pairs, opts.n_boot, opts.seed);
    std::ofstream out(opts.out_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + opts.out_path);
    out << "metric,n_pairs,statistic,p_value,p_adjusted,cliffs_delta,cohens_d,"
           "ci_low,ci_high,fold_change\n";
    for (const auto& r : battery) {
        out << r.metric << "," << r.n_pairs << "," << format_double(r.statistic) << ","
            << format_double(r.p_value) << "," << format_double(r.p_adjusted) << ","
            << format_double(r.cliffs) << ",";
        if (r.cohens) out << format_double(*r.cohens);
        out << "," << format_double(r.ci_low) << "," << format_double(r.ci_high) << ",";
        if (r.fold_change) out << format_double(*r.fold_change);
        out << "\n";
    }
    out.close();

    // Figure data: per-subject mean paired difference in co-author citation
    // rate with bootstrap CI, and the per-subject Cliff's delta heatmap.
    std::map<std::pair<std::string, int>, const FeatureVector*> lookup;
    for (const auto& fv : features) lookup[{fv.author, fv.subject}] = &fv;
    std::set<int> subjects;
    for (const auto& p : pairs) subjects.insert(p.subject);

    std::ofstream forest((fs::path(opts.out_path).parent_path() / "forest_data.csv").string(),
                         std::ios::binary);
    forest << "subject,metric,n_pairs,delta,ci_low,ci_high\n";
    auto forest_row = [&](const std::string& label, const std::vector<MatchedPair>& subset) {
        std::vector<double> diffs;
        for (const auto& p : subset) {
            auto ci = lookup.find({p.case_author, p.subject});
            auto ki = lookup.find({p.control_author, p.subject});
            if (ci == lookup.end() || ki == lookup.end()) continue;
            diffs.push_back(ci->second->values[kCoauthorCitationRate] -
                            ki->second->values[kCoauthorCitationRate]);
        }
        if (diffs.size() < 5) return;
        double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) /
                      static_cast<double>(diffs.size());
        auto ci = bootstrap_ci(diffs, opts.n_boot, 0.95, opts.seed);
        forest << label << ",coauthor_citation_rate," << diffs.size() << ","
               << format_double(mean) << "," << format_double(ci.first) << ","
               << format_double(ci.second) << "\n";
    };
    for (int s : subjects) {
        std::vector<MatchedPair> subset;
        for (const auto& p : pairs) {
            if (p.subject == s) subset.push_back(p);
        }
        forest_row(std::to_string(s), subset);
    }
    forest_row("overall", pairs);
    forest.close();

    std::ofstream heat((fs::path(opts.out_path).parent_path() / "heatmap_data.csv").string(),
                       std::ios::binary);
    heat << "subject,metric,cliffs_delta\n";
    for (int s : subjects) {
        std::vector<MatchedPair> subset;
        for (const auto& p : pairs) {
            if (p.subject == s) subset.push_back(p);
        }
        for (int f = 0; f < kFeatureCount; ++f) {
            std::vector<double> xs, ys;
            for (const auto& p : subset) {
                auto ci = lookup.find({p.case_author, p.subject});
                auto ki = lookup.find({p.control_author, p.subject});
                if (ci == lookup.end() || ki == lookup.end()) continue;
                if (f == kBurstIntensity &&
                    (!ci->second->burst_present || !ki->second->burst_present)) {
                    continue;
                }
                xs.push_back(ci->second->values[static_cast<std::size_t>(f)]);
                ys.push_back(ki->second->values[static_cast<std::size_t>(f)]);
            }
            if (xs.empty()) continue;
            heat << s << "," << feature_names()[static_cast<std::size_t>(f)] << ","
                 << format_double(cliffs_delta(xs, ys)) << "\n";
        }
    }
    heat.close();

    // Archetypes over population-standardized features (burst excluded).
    std::vector<std::string> authors;
    std::vector<std::vector<double>> raw;
    std::vector<int> row_subject;
    for (const auto& fv : features) {
        authors.push_back(fv.author);
        row_subject.push_back(fv.subject);
        std::vector<double> v;
        for (int f = 0; f < kFeatureCount; ++f) {
            if (f != kBurstIntensity) v.push_back(fv.values[static_cast<std::size_t>(f)]);
        }
        raw.push_back(std::move(v));
    }
    std::ofstream arch((fs::path(opts.out_path).parent_path() / "archetypes.csv").string(),
                       std::ios::binary);
    arch << "author,subject,cluster,label\n";
    if (raw.size() >= 3) {
        std::vector<std::size_t> all_rows(raw.size());
        std::iota(all_rows.begin(), all_rows.end(), 0);
        auto stats = standardize_fit(raw, all_rows);
        std::vector<std::vector<double>> z = raw;
        for (auto& row : z) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                row[c] = standardize_value(row[c], stats, c);
            }
        }
        auto assignments = kmeans_archetypes(authors, z, opts.seed);
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            arch << assignments[i].author << "," << row_subject[i] << ","
                 << assignments[i].cluster << "," << archetype_name(assignments[i].label) << "\n";
        }
    }
}

void stage_forensics(const ForensicsOptions& opts) {
    AuthorCitationGraph g =
        load_author_graph_csv((fs::path(opts.graph_dir) / "author_edges.csv").string());
    auto flags = load_outliers_csv(opts.outliers_path);
    fs::create_directories(opts.out_dir);

    std::set<std::string> flagged;
    std::set<std::string> matched;
    std::map<std::string, CohortLabel> tier_of;
    for (const auto& f : flags) {
        matched.insert(f.author);
        if (f.flagged) flagged.insert(f.author);
        tier_of.emplace(f.author, f.tier);
    }

    auto syndicates = syndicate_components(flagged, g);
    json sj = json::array();
    for (const auto& s : syndicates) {
        json one;
        one["id"] = s.id;
        one["members"] = s.members;
        one["density"] = s.density;
        one["internal_edge_count"] = s.internal_edges.size();
        json roles;
        for (const auto& [member, role] : s.roles) roles[member] = role_name(role);
        one["roles"] = std::move(roles);
        json timeline;
        for (const auto& [year, w] : s.timeline) timeline[std::to_string(year)] = w;
        one["timeline"] = std::move(timeline);
        sj.push_back(std::move(one));

        std::ofstream net(fs::path(opts.out_dir) / ("network_" + std::to_string(s.id) + ".csv"),
                          std::ios::binary);
        net << "citing,cited,weight\n";
        for (const auto& [a, b, w] : s.internal_edges) {
            net << a << "," << b << "," << format_double(w) << "\n";
        }
    }
    write_text_file((fs::path(opts.out_dir) / "syndicates.json").string(), sj.dump(2) + "\n");

    MixingMatrix mm = mixing_matrix(g, tier_of);
    std::ofstream mix(fs::path(opts.out_dir) / "mixing.csv", std::ios::binary);
    mix << "tier,to_case,to_control\n";
    const char* tier_names[2] = {"case", "control"};
    for (int r = 0; r < 2; ++r) {
        mix << tier_names[r] << ",";
        if (mm.row_defined[r]) {
            mix << format_double(mm.probs[r][0]) << "," << format_double(mm.probs[r][1]);
        } else {
            mix << ",";
        }
        mix << "\n";
    }
    mix.close();

    auto ug = undirected_projection(g);
    auto lv = louvain_modularity(ug, opts.seed);
    std::ofstream lou(fs::path(opts.out_dir) / "louvain.csv", std::ios::binary);
    lou << "author,community\n";
    for (std::size_t i = 0; i < g.node_ids.size(); ++i) {
        lou << g.node_ids[i] << "," << lv.community[i] << "\n";
    }
    lou.close();

    json seg;
    seg["assortativity_r"] = mm.assortativity_r;
    seg["diagonal_avg"] = mm.diagonal_avg;
    seg["untiered_nodes_excluded"] = mm.excluded_nodes;
    seg["modularity_q"] = lv.modularity;
    int n_comms = 0;
    for (int c : lv.community) n_comms = std::max(n_comms, c + 1);
    seg["communities"] = n_comms;
    seg["n_syndicates"] = syndicates.size();
    write_text_file((fs::path(opts.out_dir) / "segregation.json").string(), seg.dump(2) + "\n");

    auto works_info = load_author_works_csv((fs::path(opts.graph_dir) / "author_works.csv").string());
    auto profiles = rank_outliers(flags, works_info, g, matched);
    std::ofstream audit(fs::path(opts.out_dir) / "audit.csv", std::ios::binary);
    audit << "rank,author,subject,outlier_score,works,year_min,year_max,"
             "out_partners,in_partners,reciprocal_partners,primary_journal,"
             "primary_journal_count,flags\n";
    int rank = 1;
    for (const auto& p : profiles) {
        std::string flag_text;
        for (const auto& [feature, level] : p.feature_flags) {
            if (!flag_text.empty()) flag_text += ";";
            flag_text += feature + ">" + std::to_string(level) + "sigma";
        }
        audit << rank++ << "," << p.author << "," << p.subject << ","
              << format_double(p.outlier_score) << "," << p.works << "," << p.year_min << ","
              << p.year_max << "," << p.out_partners << "," << p.in_partners << ","
              << p.reciprocal_partners << "," << p.primary_journal << ","
              << p.primary_journal_count << "," << flag_text << "\n";
    }
}

RunConfig parse_run_config(const std::string& json_text) {
    json obj = json::parse(json_text);
    RunConfig c;
    if (obj.contains("window")) {
        c.window_start = obj["window"][0].get<int>();
        c.window_end = obj["window"][1].get<int>();
    }
    c.works_path = obj.value("works", "");
    c.subjects_path = obj.value("subjects", "");
    c.scenario_path = obj.value("scenario", "");
    c.out_dir = obj.value("out_dir", "out");
    c.citable_only = obj.value("citable_only", false);
    if (obj.contains("sample_digit") && obj["sample_digit"].is_string()) {
        std::string d = obj["sample_digit"].get<std::string>();
        if (!d.empty()) c.sample_digit = d[0];
    }
    c.damping = obj.value("damping", 0.85);
    c.min_works = obj.value("min_works", 3);
    c.tier_share = obj.value("tier_share", 0.70);
    c.bucket_width = obj.value("bucket_width", 3);
    c.detect.sigma = obj.value("sigma", 4.0);
    c.detect.contamination = obj.value("contamination", 0.01);
    c.detect.forest.n_trees = obj.value("n_trees", 200);
    c.detect.forest.max_samples = obj.value("max_samples", 256);
    std::string baseline = obj.value("baseline", "control");
    c.detect.baseline =
        baseline == "population" ? BaselineMode::Population : BaselineMode::Control;
    c.detect.scale_if_inputs = obj.value("scale_if_inputs", true);
    c.n_boot = obj.value("n_boot", 2000);
    c.seed = obj.value("seed", 42ULL);
    c.detect.seed = c.seed;
    c.detect.forest.seed = c.seed;

    if (c.scenario_path.empty() && (c.works_path.empty() || c.subjects_path.empty())) {
        throw ValidationError("run config needs either scenario or works+subjects paths");
    }
    return c;
}

namespace {

std::uint64_t hash_file_if_exists(const std::string& path) {
    if (!fs::exists(path)) return 0;
    return fnv1a64_file(path);
}

std::uint64_t hash_dir_csvs(const std::string& dir) {
    if (!fs::exists(dir)) return 0;
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& p : paths) {
        h = fnv1a64(p, h);
        h = fnv1a64(hex64(fnv1a64_file(p)), h);
    }
    return h;
}

struct StageRunner {
    std::string state_dir;
    RunReport* report;

    // Runs `body` unless the recorded hash for `name` matches `input_hash`.
    template <typename Fn>
    void run(const std::string& name, std::uint64_t input_hash, Fn&& body) {
        fs::create_directories(state_dir);
        const std::string hash_path = (fs::path(state_dir) / (name + ".hash")).string();
        const std::string hash_text = hex64(input_hash);
        StageOutcome outcome;
        outcome.name = name;
        outcome.input_hash = hash_text;
        if (fs::exists(hash_path)) {
            std::string prev = trim(read_text_file(hash_path));
            if (prev == hash_text) {
                report->stages.push_back(outcome);
                return;
            }
        }
        try {
            body();
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
        write_text_file(hash_path, hash_text + "\n");
        outcome.executed = true;
        report->stages.push_back(outcome);
    }
};

std::string two_col_table(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ostringstream os;
    for (const auto& [k, v] : rows) os << "| " << k << " | " << v << " |\n";
    return os.str();
}

} // namespace

RunReport run_pipeline(const RunConfig& config) {
    RunReport report;
    const fs::path out(config.out_dir);
    fs::create_directories(out);
    StageRunner runner{(out / ".state").string(), &report};

    const std::string version = "citeforge-1";
    auto base_hash = fnv1a64(version);

    std::string works_path = config.works_path;
    std::string subjects_path = config.subjects_path;

    if (!config.scenario_path.empty()) {
        const std::string synth_dir = (out / "scenario").string();
        std::uint64_t h = base_hash;
        h = fnv1a64("synth", h);
        h = fnv1a64(hex64(hash_file_if_exists(config.scenario_path)), h);
        runner.run("synth", h, [&] {
            ScenarioConfig sc = parse_scenario(read_text_file(config.scenario_path));
            SynthResult result = generate(sc);
            write_synth(result, sc, synth_dir);
        });
        works_path = (fs::path(synth_dir) / "works.jsonl").string();
        subjects_path = (fs::path(synth_dir) / "subjects.csv").string();
    }

    const std::string catalog_dir = (out / "catalog").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("ingest", h);
        h = fnv1a64(hex64(hash_file_if_exists(works_path)), h);
        h = fnv1a64(hex64(hash_file_if_exists(subjects_path)), h);
        h = fnv1a64(std::to_string(config.window_start) + ":" + std::to_string(config.window_end), h);
        h = fnv1a64(config.citable_only ? "citable" : "all", h);
        h = fnv1a64(config.sample_digit ? std::string(1, *config.sample_digit) : "none", h);
        runner.run("ingest", h, [&] {
            IngestOptions opts;
            opts.works_path = works_path;
            opts.subjects_path = subjects_path;
            opts.window_start = config.window_start;
            opts.window_end = config.window_end;
            opts.citable_only = config.citable_only;
            opts.sample_digit = config.sample_digit;
            opts.out_dir = catalog_dir;
            stage_ingest(opts);
        });
    }

    const std::string graph_dir = (out / "graph").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("graph", h);
        h = fnv1a64(hex64(hash_dir_csvs(catalog_dir)), h);
        runner.run("graph", h, [&] { stage_graph({catalog_dir, graph_dir}); });
    }

    const std::string tiers_path = (out / "rank" / "journal_tiers.csv").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("rank", h);
        h = fnv1a64(hex64(hash_dir_csvs(graph_dir)), h);
        h = fnv1a64(format_double(config.damping), h);
        runner.run("rank", h, [&] {
            fs::create_directories(out / "rank");
            RankOptions opts;
            opts.graphs_dir = graph_dir;
            opts.out_path = tiers_path;
            opts.damping = config.damping;
            stage_rank(opts);
        });
    }

    const std::string pairs_path = (out / "match" / "pairs.csv").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("match", h);
        h = fnv1a64(hex64(hash_dir_csvs(catalog_dir)), h);
        h = fnv1a64(hex64(hash_file_if_exists(tiers_path)), h);
        h = fnv1a64(std::to_string(config.min_works), h);
        h = fnv1a64(format_double(config.tier_share), h);
        h = fnv1a64(std::to_string(config.bucket_width), h);
        runner.run("match", h, [&] {
            fs::create_directories(out / "match");
            MatchOptions opts;
            opts.catalog_dir = catalog_dir;
            opts.tiers_path = tiers_path;
            opts.out_path = pairs_path;
            opts.min_works = config.min_works;
            opts.tier_share = config.tier_share;
            opts.bucket_width = config.bucket_width;
            stage_match(opts);
        });
    }

    const std::string features_path = (out / "features" / "features.csv").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("features", h);
        h = fnv1a64(hex64(hash_dir_csvs(graph_dir)), h);
        h = fnv1a64(hex64(hash_file_if_exists(pairs_path)), h);
        runner.run("features", h, [&] {
            fs::create_directories(out / "features");
            FeatureOptions opts;
            opts.graph_dir = graph_dir;
            opts.pairs_path = pairs_path;
            opts.out_path = features_path;
            stage_features(opts);
        });
    }

    const std::string outliers_path = (out / "detect" / "outliers.csv").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("detect", h);
        h = fnv1a64(hex64(hash_file_if_exists(features_path)), h);
        h = fnv1a64(hex64(hash_file_if_exists(pairs_path)), h);
        h = fnv1a64(format_double(config.detect.sigma), h);
        h = fnv1a64(format_double(config.detect.contamination), h);
        h = fnv1a64(std::to_string(config.detect.forest.n_trees), h);
        h = fnv1a64(std::to_string(config.detect.forest.max_samples), h);
        h = fnv1a64(std::to_string(config.seed), h);
        h = fnv1a64(config.detect.baseline == BaselineMode::Control ? "control" : "population", h);
        h = fnv1a64(config.detect.scale_if_inputs ? "scaled" : "raw", h);
        runner.run("detect", h, [&] {
            fs::create_directories(out / "detect");
            DetectOptions opts;
            opts.features_path = features_path;
            opts.pairs_path = pairs_path;
            opts.out_path = outliers_path;
            opts.graph_dir = graph_dir;
            opts.params = config.detect;
            stage_detect(opts);
        });
    }

    const std::string stats_path = (out / "stats" / "stats.csv").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("stats", h);
        h = fnv1a64(hex64(hash_file_if_exists(features_path)), h);
        h = fnv1a64(hex64(hash_file_if_exists(pairs_path)), h);
        h = fnv1a64(std::to_string(config.n_boot), h);
        h = fnv1a64(std::to_string(config.seed), h);
        runner.run("stats", h, [&] {
            fs::create_directories(out / "stats");
            StatsOptions opts;
            opts.features_path = features_path;
            opts.pairs_path = pairs_path;
            opts.out_path = stats_path;
            opts.n_boot = config.n_boot;
            opts.seed = config.seed;
            stage_stats(opts);
        });
    }

    const std::string forensics_dir = (out / "forensics").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("forensics", h);
        h = fnv1a64(hex64(hash_dir_csvs(graph_dir)), h);
        h = fnv1a64(hex64(hash_file_if_exists(outliers_path)), h);
        h = fnv1a64(std::to_string(config.seed), h);
        runner.run("forensics", h, [&] {
            ForensicsOptions opts;
            opts.graph_dir = graph_dir;
            opts.outliers_path = outliers_path;
            opts.out_dir = forensics_dir;
            opts.seed = config.seed;
            stage_forensics(opts);
        });
    }

    const std::string report_path = (out / "report.md").string();
    {
        std::uint64_t h = base_hash;
        h = fnv1a64("report", h);
        h = fnv1a64(hex64(hash_file_if_exists(stats_path)), h);
        h = fnv1a64(hex64(hash_file_if_exists(outliers_path)), h);
        h = fnv1a64(hex64(hash_dir_csvs(forensics_dir)), h);
        runner.run("report", h, [&] {
            std::ostringstream md;
            md << "# citeforge run report\n\n";
            md << "| parameter | value |\n|---|---|\n";
            md << two_col_table({
                {"window", std::to_string(config.window_start) + "-" + std::to_string(config.window_end)},
                {"sigma", format_double(config.detect.sigma)},
                {"contamination", format_double(config.detect.contamination)},
                {"seed", std::to_string(config.seed)},
                {"baseline", config.detect.baseline == BaselineMode::Control ? "control" : "population"},
            });

            // Matching funnel.
            const std::string funnel_path = (out / "match" / "funnel.csv").string();
            if (fs::exists(funnel_path)) {
                md << "\n## Matched pairs by subject\n\n";
                md << "| subject | authors | cases | controls | pairs |\n|---|---|---|---|---|\n";
                std::istringstream fin(read_text_file(funnel_path));
                std::string line;
                bool first = true;
                while (std::getline(fin, line)) {
                    if (first) { first = false; continue; }
                    if (trim(line).empty()) continue;
                    auto f = parse_csv_line(line);
                    md << "| " << f[0] << " | " << f[1] << " | " << f[2] << " | " << f[3]
                       << " | " << f[4] << " |\n";
                }
            }

            // Case/Control metric means.
            auto features = load_features_csv(features_path);
            auto pairs = load_pairs_csv(pairs_path);
            md << "\n## Case-Control metric averages\n\n";
            md << "| metric | case mean | control mean | fold |\n|---|---|---|---|\n";
            for (const auto& row : fold_change_table(features, pairs)) {
                md << "| " << row.metric << " | " << format_double(row.case_mean) << " | "
                   << format_double(row.control_mean) << " | " << format_fold(row.fold)
                   << " |\n";
            }

            // Sensitivity table.
            const std::string sens_path = (out / "detect" / "sensitivity.csv").string();
            if (fs::exists(sens_path)) {
                md << "\n## Detection sensitivity\n\n";
                md << "| method | sigma | outliers | case purity | connected |\n|---|---|---|---|---|\n";
                std::istringstream sin(read_text_file(sens_path));
                std::string line;
                bool first = true;
                while (std::getline(sin, line)) {
                    if (first) { first = false; continue; }
                    if (trim(line).empty()) continue;
                    auto f = parse_csv_line(line);
                    md << "| " << f[0] << " | " << f[1] << " | " << f[2] << " | " << f[3]
                       << " | " << f[4] << " |\n";
                }
            }

            // Top audit profiles.
            const std::string audit_path = (fs::path(forensics_dir) / "audit.csv").string();
            if (fs::exists(audit_path)) {
                md << "\n## Top outlier audit profiles\n\n";
                md << "| rank | author | score | works | years | out | in | recip | primary journal | flags |\n";
                md << "|---|---|---|---|---|---|---|---|---|---|\n";
                std::istringstream ain(read_text_file(audit_path));
                std::string line;
                bool first = true;
                int shown = 0;
                while (std::getline(ain, line) && shown < 10) {
                    if (first) { first = false; continue; }
                    if (trim(line).empty()) continue;
                    auto f = parse_csv_line(line);
                    md << "| " << f[0] << " | " << f[1] << " | " << f[3] << " | " << f[4]
                       << " | " << f[5] << "-" << f[6] << " | " << f[7] << " | " << f[8]
                       << " | " << f[9] << " | " << f[10] << " | " << f[12] << " |\n";
                    ++shown;
                }
            }

            // Segregation summary.
            const std::string seg_path = (fs::path(forensics_dir) / "segregation.json").string();
            if (fs::exists(seg_path)) {
                json seg = json::parse(read_text_file(seg_path));
                md << "\n## Segregation\n\n";
                md << "| quantity | value |\n|---|---|\n";
                md << two_col_table({
                    {"assortativity r", format_double(seg["assortativity_r"].get<double>())},
                    {"diagonal average", format_double(seg["diagonal_avg"].get<double>())},
                    {"modularity Q", format_double(seg["modularity_q"].get<double>())},
                    {"communities", std::to_string(seg["communities"].get<long long>())},
                    {"syndicates", std::to_string(seg["n_syndicates"].get<long long>())},
                });
            }

            md << "\nFigure data: `stats/forest_data.csv`, `stats/heatmap_data.csv`, "
                  "`forensics/mixing.csv`.\n";
            write_text_file(report_path, md.str());
        });
    }

    // Bundle manifest: configuration digest and per-stage input hashes. Kept
    // free of run-specific state so a skipped rerun leaves it byte-identical.
    {
        json manifest;
        manifest["tool"] = version;
        std::uint64_t config_hash = fnv1a64(version);
        config_hash = fnv1a64(std::to_string(config.window_start), config_hash);
        config_hash = fnv1a64(std::to_string(config.window_end), config_hash);
        config_hash = fnv1a64(format_double(config.detect.sigma), config_hash);
        config_hash = fnv1a64(format_double(config.detect.contamination), config_hash);
        config_hash = fnv1a64(std::to_string(config.seed), config_hash);
        manifest["config_hash"] = hex64(config_hash);
        manifest["parameters"] = {
            {"window", {config.window_start, config.window_end}},
            {"damping", config.damping},
            {"min_works", config.min_works},
            {"tier_share", config.tier_share},
            {"bucket_width", config.bucket_width},
            {"sigma", config.detect.sigma},
            {"contamination", config.detect.contamination},
            {"n_trees", config.detect.forest.n_trees},
            {"max_samples", config.detect.forest.max_samples},
            {"baseline",
             config.detect.baseline == BaselineMode::Control ? "control" : "population"},
            {"scale_if_inputs", config.detect.scale_if_inputs},
            {"seed", config.seed},
            {"n_boot", config.n_boot},
        };
        json stages = json::object();
        for (const auto& stage : report.stages) stages[stage.name] = stage.input_hash;
        manifest["stage_input_hashes"] = std::move(stages);
        write_text_file((out / "manifest.json").string(), manifest.dump(2) + "\n");
    }

    report.report_path = report_path;
    return report;
}

} // namespace citeforge
