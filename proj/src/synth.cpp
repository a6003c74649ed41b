#include "citeforge/synth.hpp"

#include "citeforge/rng.hpp"
#include "citeforge/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace citeforge {

namespace {

enum VenueTier { kVenueLow = 0, kVenueMid = 1, kVenueHigh = 2 };
enum AuthorPool { kPoolCase = 0, kPoolControl = 1 };

std::string make_issn(int subject, int venue_tier, int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%1d%1d%02d-%04d", subject, venue_tier + 1,
                  index / 10000, index % 10000);
    return std::string(buf);
}

std::string make_author(int subject, int kind, int index) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%04d-%04d-%04d", subject, kind,
                  1000 + index / 10000, index % 10000);
    return std::string(buf);
}

std::string make_work_id(int subject, long long counter) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "10.%04d/w%07lld", 1000 + subject, counter);
    return std::string(buf);
}

// Truncated geometric team size on 1..8, mean near 2.
int draw_team_size(Pcg32& rng) {
    int k = 1;
    while (k < 8 && rng.uniform() < 0.5) ++k;
    return k;
}

// Shifted negative-binomial-like reference count: 3 + Geom(p) + Geom(p),
// truncated at 25.
int draw_ref_count(Pcg32& rng, double p = 0.35) {
    int r = 3;
    for (int part = 0; part < 2; ++part) {
        while (r < 25 && rng.uniform() > p) ++r;
    }
    return std::min(r, 25);
}

struct WorkMeta {
    int pool = -1;          // author pool, -1 for filler
    int venue_tier = 0;
    int lead = -1;          // index into study author arrays, or -1
    int syndicate = -1;     // planted group index, -1 otherwise
};

// Weighted pick from a cumulative weight array.
std::size_t pick_cumulative(const std::vector<double>& cum, Pcg32& rng) {
    double r = rng.uniform() * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), r);
    std::size_t i = static_cast<std::size_t>(it - cum.begin());
    return std::min(i, cum.size() - 1);
}

} // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
    json obj = json::parse(json_text);
    ScenarioConfig c;
    c.n_authors_per_tier = obj.value("n_authors_per_tier", 1000);
    c.n_journals_per_tier = obj.value("n_journals_per_tier", 25);
    c.subjects = obj.value("subjects", 1);
    c.baseline_cite_rate = obj.value("baseline_cite_rate", 0.06);
    c.homophily = obj.value("homophily", 0.8);
    c.seed = obj.value("seed", 42ULL);
    if (obj.contains("window")) {
        c.window_start = obj["window"][0].get<int>();
        c.window_end = obj["window"][1].get<int>();
    }
    if (obj.contains("syndicates")) {
        for (const auto& s : obj["syndicates"]) {
            SyndicateSpec spec;
            spec.size = s.value("size", 0);
            std::string topo = s.value("topology", "mesh");
            spec.topology = topo == "hub_and_spoke" ? SyndicateTopology::HubAndSpoke
                                                    : SyndicateTopology::Mesh;
            spec.internal_rate_multiplier = s.value("internal_rate_multiplier", 1.0);
            if (s.contains("burst_years")) {
                for (const auto& y : s["burst_years"]) spec.burst_years.push_back(y.get<int>());
            }
            c.syndicates.push_back(std::move(spec));
        }
    }
    return c;
}

std::string scenario_to_json(const ScenarioConfig& c) {
    json obj;
    obj["n_authors_per_tier"] = c.n_authors_per_tier;
    obj["n_journals_per_tier"] = c.n_journals_per_tier;
    obj["subjects"] = c.subjects;
    obj["baseline_cite_rate"] = c.baseline_cite_rate;
    obj["homophily"] = c.homophily;
    obj["seed"] = c.seed;
    obj["window"] = {c.window_start, c.window_end};
    obj["syndicates"] = json::array();
    for (const auto& s : c.syndicates) {
        json sj;
        sj["size"] = s.size;
        sj["topology"] = s.topology == SyndicateTopology::HubAndSpoke ? "hub_and_spoke" : "mesh";
        sj["internal_rate_multiplier"] = s.internal_rate_multiplier;
        sj["burst_years"] = s.burst_years;
        obj["syndicates"].push_back(std::move(sj));
    }
    return obj.dump(2);
}

SynthResult generate(const ScenarioConfig& config) {
    if (config.n_authors_per_tier < 4) throw ValidationError("scenario: need >= 4 authors per tier");
    if (config.n_journals_per_tier < 1) throw ValidationError("scenario: need >= 1 journal per tier");
    if (config.subjects < 1 || config.subjects > 5) throw ValidationError("scenario: subjects in 1..5");
    if (config.homophily < 0.0 || config.homophily > 1.0) {
        throw ValidationError("scenario: homophily must be in [0,1]");
    }
    int planted_total = 0;
    for (const auto& s : config.syndicates) {
        if (s.size < 2) throw ValidationError("scenario: syndicate size must be >= 2");
        if (s.internal_rate_multiplier < 1.0) {
            throw ValidationError("scenario: internal_rate_multiplier must be >= 1");
        }
        if (s.internal_rate_multiplier > 1.0) planted_total += s.size;
    }
    if (planted_total > config.n_authors_per_tier) {
        throw ValidationError("scenario: more syndicate members than baseline tier authors");
    }

    SynthResult result;
    const int years = config.window_end - config.window_start + 1;
    if (years < 1) throw ValidationError("scenario: empty window");

    long long work_counter = 0;

    for (int subject = 1; subject <= config.subjects; ++subject) {
        Pcg32 rng(config.seed, static_cast<std::uint64_t>(subject));

        // Journals: J low, 2J mid, J high, so the score quartiles align with
        // the tier blocks.
        const int j_low = config.n_journals_per_tier;
        const int j_mid = 2 * config.n_journals_per_tier;
        const int j_high = config.n_journals_per_tier;
        std::vector<std::string> journals[3];
        for (int k = 0; k < j_low; ++k) journals[kVenueLow].push_back(make_issn(subject, kVenueLow, k));
        for (int k = 0; k < j_mid; ++k) journals[kVenueMid].push_back(make_issn(subject, kVenueMid, k));
        for (int k = 0; k < j_high; ++k) journals[kVenueHigh].push_back(make_issn(subject, kVenueHigh, k));
        for (int t = 0; t < 3; ++t) {
            for (const auto& issn : journals[t]) {
                auto norm = normalize_issn(issn);
                result.subjects.entries[*norm] = subject;
            }
        }

        // Author populations.
        const int n = config.n_authors_per_tier;
        std::vector<std::string> pool_authors[2];
        for (int i = 0; i < n; ++i) pool_authors[kPoolCase].push_back(make_author(subject, 1, i));
        for (int i = 0; i < n; ++i) pool_authors[kPoolControl].push_back(make_author(subject, 2, i));

        struct PlantedGroup {
            SyndicateSpec spec;
            std::vector<std::string> members;
            int hub = 0;                      // member index
            std::string club_journal;
            long long internal_refs = 0;
            long long total_refs = 0;
        };
        std::vector<PlantedGroup> groups;
        int member_counter = 0;
        for (const auto& spec : config.syndicates) {
            if (spec.internal_rate_multiplier <= 1.0) {
                result.notes.push_back("syndicate inert (multiplier <= 1), generated as baseline");
                continue;
            }
            PlantedGroup grp;
            grp.spec = spec;
            for (int i = 0; i < spec.size; ++i) {
                grp.members.push_back(make_author(subject, 4, member_counter++));
            }
            grp.hub = 0;
            grp.club_journal =
                journals[kVenueLow][static_cast<std::size_t>(groups.size()) % journals[kVenueLow].size()];
            groups.push_back(std::move(grp));
        }

        // Filler economy sized so journal prestige is dominated by a flow we
        // control: filler references about 4x the expected study references.
        const double exp_study_works = 2.0 * n * 5.5 + 6.0 * static_cast<double>(planted_total);
        const double exp_study_refs = exp_study_works * 8.7;
        const int filler_refs_per_work = 12;
        const int filler_works_n =
            static_cast<int>(std::ceil(4.0 * exp_study_refs / filler_refs_per_work));
        const int filler_authors_n = std::max(2, filler_works_n / 3);
        std::vector<std::string> filler_authors;
        for (int i = 0; i < filler_authors_n; ++i) {
            filler_authors.push_back(make_author(subject, 3, i));
        }

        // ---- Work creation ----
        struct PendingWork {
            std::size_t index;   // into result.works
            WorkMeta meta;
        };
        std::vector<PendingWork> pending;
        std::vector<WorkMeta> meta;

        auto add_work = [&](const std::vector<std::string>& team, const std::string& issn,
                            int year, WorkMeta m) {
            WorkRecord rec;
            rec.work_id = make_work_id(subject, work_counter++);
            rec.year = year;
            rec.issn = *normalize_issn(issn);
            rec.authors = team;
            result.works.push_back(std::move(rec));
            meta.push_back(m);
            pending.push_back({result.works.size() - 1, m});
        };

        auto draw_team = [&](const std::vector<std::string>& pool, const std::string& lead,
                             int size) {
            std::vector<std::string> team{lead};
            std::set<std::string> seen{lead};
            int attempts = 0;
            while (static_cast<int>(team.size()) < size && attempts < 4 * size) {
                const auto& cand = pool[rng.bounded(static_cast<std::uint32_t>(pool.size()))];
                ++attempts;
                if (seen.insert(cand).second) team.push_back(cand);
            }
            return team;
        };

        const std::size_t subject_first_work = result.works.size();

        // Baseline study works: venue 90% own tier.
        for (int pool = 0; pool < 2; ++pool) {
            const int own_tier = pool == kPoolCase ? kVenueLow : kVenueHigh;
            const int other_tier = pool == kPoolCase ? kVenueHigh : kVenueLow;
            for (int i = 0; i < n; ++i) {
                const int n_works = 3 + static_cast<int>(rng.bounded(6));
                for (int w = 0; w < n_works; ++w) {
                    int tier = rng.uniform() < 0.9 ? own_tier : other_tier;
                    const auto& issn =
                        journals[tier][rng.bounded(static_cast<std::uint32_t>(journals[tier].size()))];
                    int year = config.window_start + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(years)));
                    WorkMeta m;
                    m.pool = pool;
                    m.venue_tier = tier;
                    m.lead = i;
                    add_work(draw_team(pool_authors[pool], pool_authors[pool][static_cast<std::size_t>(i)],
                                       draw_team_size(rng)),
                             issn, year, m);
                }
            }
        }

        // Planted syndicate works: concentrated in the club journal and the
        // burst years.
        std::vector<std::vector<std::vector<std::size_t>>> works_by_member(groups.size());
        for (std::size_t gidx = 0; gidx < groups.size(); ++gidx) {
            auto& grp = groups[gidx];
            works_by_member[gidx].resize(grp.members.size());
            for (std::size_t mi = 0; mi < grp.members.size(); ++mi) {
                const int n_works = 5 + static_cast<int>(rng.bounded(3));
                for (int w = 0; w < n_works; ++w) {
                    std::string issn = grp.club_journal;
                    if (rng.uniform() >= 0.9) {
                        issn = journals[kVenueLow][rng.bounded(
                            static_cast<std::uint32_t>(journals[kVenueLow].size()))];
                    }
                    int year;
                    if (!grp.spec.burst_years.empty() && rng.uniform() < 0.8) {
                        year = grp.spec.burst_years[rng.bounded(
                            static_cast<std::uint32_t>(grp.spec.burst_years.size()))];
                    } else {
                        year = config.window_start +
                               static_cast<int>(rng.bounded(static_cast<std::uint32_t>(years)));
                    }
                    // Team: the member plus one or two peers; spokes sometimes
                    // bring the hub in as co-author.
                    std::vector<std::string> team{grp.members[mi]};
                    std::set<std::string> seen{grp.members[mi]};
                    int extras = 1 + static_cast<int>(rng.bounded(2));
                    if (grp.spec.topology == SyndicateTopology::HubAndSpoke && mi != 0 &&
                        rng.uniform() < 0.35) {
                        if (seen.insert(grp.members[0]).second) team.push_back(grp.members[0]);
                    }
                    int attempts = 0;
                    while (static_cast<int>(team.size()) < 1 + extras && attempts < 12) {
                        ++attempts;
                        const auto& cand = grp.members[rng.bounded(
                            static_cast<std::uint32_t>(grp.members.size()))];
                        if (seen.insert(cand).second) team.push_back(cand);
                    }
                    WorkMeta m;
                    m.pool = kPoolCase;
                    m.venue_tier = kVenueLow;
                    m.lead = -1;
                    m.syndicate = static_cast<int>(gidx);
                    works_by_member[gidx][mi].push_back(result.works.size());
                    add_work(team, issn, year, m);
                }
            }
        }

        // Filler works: mostly mid venues, small teams.
        for (int w = 0; w < filler_works_n; ++w) {
            double u = rng.uniform();
            int tier = u < 0.10 ? kVenueLow : (u < 0.70 ? kVenueMid : kVenueHigh);
            const auto& issn =
                journals[tier][rng.bounded(static_cast<std::uint32_t>(journals[tier].size()))];
            int year = config.window_start + static_cast<int>(rng.bounded(static_cast<std::uint32_t>(years)));
            std::vector<std::string> team{
                filler_authors[rng.bounded(static_cast<std::uint32_t>(filler_authors.size()))]};
            if (rng.uniform() < 0.25) {
                const auto& second =
                    filler_authors[rng.bounded(static_cast<std::uint32_t>(filler_authors.size()))];
                if (second != team[0]) team.push_back(second);
            }
            WorkMeta m;
            m.venue_tier = tier;
            add_work(team, issn, year, m);
        }

        // ---- Target pools ----
        // Study references pick an author pool (homophily), then a work inside
        // it weighted by venue attractiveness; filler references pick a venue
        // tier, then a work uniformly.
        static const double venue_attract[3] = {1.0, 2.0, 4.0};
        std::vector<std::size_t> pool_works[2];
        std::vector<double> pool_cum[2];
        std::vector<std::size_t> venue_works[3];
        for (std::size_t wi = subject_first_work; wi < result.works.size(); ++wi) {
            const auto& m = meta[wi - subject_first_work];
            if (m.pool >= 0) {
                pool_works[m.pool].push_back(wi);
                pool_cum[m.pool].push_back(venue_attract[m.venue_tier]);
            }
            venue_works[m.venue_tier].push_back(wi);
        }
        for (int pool = 0; pool < 2; ++pool) {
            double acc = 0.0;
            for (auto& v : pool_cum[pool]) {
                acc += v;
                v = acc;
            }
        }

        auto draw_study_target = [&](int own_pool, std::size_t self_index) -> const std::string* {
            int pool = rng.uniform() < config.homophily ? own_pool : 1 - own_pool;
            for (int attempt = 0; attempt < 4; ++attempt) {
                std::size_t k = pick_cumulative(pool_cum[pool], rng);
                std::size_t wi = pool_works[pool][k];
                if (wi != self_index) return &result.works[wi].work_id;
            }
            return nullptr;
        };

        // ---- References ----
        for (const auto& pw : pending) {
            auto& rec = result.works[pw.index];
            const auto& m = pw.meta;
            if (m.syndicate >= 0) {
                auto& grp = groups[static_cast<std::size_t>(m.syndicate)];
                const auto& members = grp.members;
                // Member index of the first team author.
                std::size_t mi = 0;
                for (std::size_t i = 0; i < members.size(); ++i) {
                    if (members[i] == rec.authors[0]) { mi = i; break; }
                }
                const double internal_share =
                    std::min(0.9, grp.spec.internal_rate_multiplier * config.baseline_cite_rate);
                const int n_refs = 8 + static_cast<int>(rng.bounded(5));
                for (int r = 0; r < n_refs; ++r) {
                    ++grp.total_refs;
                    bool internal = rng.uniform() < internal_share;
                    // The first reference of a spoke work always reaches the
                    // hub so hub-spoke mutuality is structural, not sampled.
                    if (grp.spec.topology == SyndicateTopology::HubAndSpoke && r == 0 && mi != 0) {
                        internal = true;
                    }
                    if (internal) {
                        std::size_t target_member;
                        if (grp.spec.topology == SyndicateTopology::HubAndSpoke) {
                            if (mi == 0) {
                                // Hub cites spokes round-robin for coverage.
                                target_member = 1 + static_cast<std::size_t>(grp.internal_refs) %
                                                        (members.size() - 1);
                            } else if (r == 0 || rng.uniform() < 0.7) {
                                target_member = 0;
                            } else {
                                target_member = 1 + rng.bounded(static_cast<std::uint32_t>(members.size() - 1));
                                if (target_member == mi) {
                                    target_member = target_member == members.size() - 1 ? 1 : target_member + 1;
                                }
                            }
                        } else {
                            target_member = rng.bounded(static_cast<std::uint32_t>(members.size()));
                            if (target_member == mi) {
                                target_member = (target_member + 1) % members.size();
                            }
                        }
                        const auto& tw =
                            works_by_member[static_cast<std::size_t>(m.syndicate)][target_member];
                        std::size_t wi = tw[rng.bounded(static_cast<std::uint32_t>(tw.size()))];
                        if (wi == pw.index) continue;
                        rec.refs.push_back(result.works[wi].work_id);
                        ++grp.internal_refs;
                    } else {
                        const std::string* target = draw_study_target(kPoolCase, pw.index);
                        if (target) rec.refs.push_back(*target);
                    }
                }
            } else if (m.pool >= 0) {
                const int n_refs = draw_ref_count(rng);
                for (int r = 0; r < n_refs; ++r) {
                    const std::string* target = draw_study_target(m.pool, pw.index);
                    if (target) rec.refs.push_back(*target);
                }
            } else {
                const int n_refs = filler_refs_per_work - 2 + static_cast<int>(rng.bounded(5));
                for (int r = 0; r < n_refs; ++r) {
                    double u = rng.uniform();
                    int tier = u < 0.04 ? kVenueLow : (u < 0.64 ? kVenueMid : kVenueHigh);
                    const auto& tw = venue_works[tier];
                    std::size_t wi = tw[rng.bounded(static_cast<std::uint32_t>(tw.size()))];
                    if (wi == pw.index) continue;
                    rec.refs.push_back(result.works[wi].work_id);
                }
            }
        }

        // Ground truth and self-audit.
        for (const auto& a : pool_authors[kPoolCase]) result.truth.tier_of[a] = CohortLabel::Case;
        for (const auto& a : pool_authors[kPoolControl]) result.truth.tier_of[a] = CohortLabel::Control;
        for (const auto& grp : groups) {
            std::vector<std::string> ids(grp.members.begin(), grp.members.end());
            for (const auto& a : grp.members) {
                result.truth.syndicate_members.insert(a);
                result.truth.tier_of[a] = CohortLabel::Case;
            }
            result.truth.hub_ids.insert(grp.members[static_cast<std::size_t>(grp.hub)]);
            result.truth.syndicate_groups.push_back(std::move(ids));

            const double target =
                std::min(0.9, grp.spec.internal_rate_multiplier * config.baseline_cite_rate);
            const double realized = grp.total_refs > 0
                                        ? static_cast<double>(grp.internal_refs) /
                                              static_cast<double>(grp.total_refs)
                                        : 0.0;
            result.realized_internal_share.push_back(realized);
            if (grp.members.size() >= 10 && std::fabs(realized - target) > 0.2 * target) {
                result.notes.push_back("internal share audit outside 20% band: realized " +
                                       format_double(realized) + " vs target " +
                                       format_double(target));
            }
        }
    }
    return result;
}

void write_synth(const SynthResult& result, const ScenarioConfig& config,
                 const std::string& dir) {
    fs::create_directories(dir);

    std::ofstream works_out(fs::path(dir) / "works.jsonl", std::ios::binary);
    if (!works_out) throw IoError("cannot write works.jsonl under " + dir);
    for (const auto& rec : result.works) {
        json obj;
        obj["work_id"] = rec.work_id;
        obj["year"] = rec.year;
        obj["issn"] = rec.issn;
        obj["authors"] = rec.authors;
        obj["refs"] = rec.refs;
        works_out << obj.dump() << "\n";
    }

    std::ofstream subj_out(fs::path(dir) / "subjects.csv", std::ios::binary);
    if (!subj_out) throw IoError("cannot write subjects.csv under " + dir);
    subj_out << "issn,subject\n";
    for (const auto& [issn, subject] : result.subjects.entries) {
        subj_out << issn << "," << subject << "\n";
    }

    json truth;
    truth["syndicate_members"] = json::array();
    for (const auto& a : result.truth.syndicate_members) truth["syndicate_members"].push_back(a);
    truth["hub_ids"] = json::array();
    for (const auto& a : result.truth.hub_ids) truth["hub_ids"].push_back(a);
    truth["syndicates"] = result.truth.syndicate_groups;
    json tiers;
    for (const auto& [a, t] : result.truth.tier_of) tiers[a] = cohort_name(t);
    truth["tier_of"] = std::move(tiers);
    write_text_file((fs::path(dir) / "truth.json").string(), truth.dump(2) + "\n");

    json manifest;
    manifest["tool"] = "citeforge synth";
    manifest["scenario"] = json::parse(scenario_to_json(config));
    manifest["works"] = result.works.size();
    manifest["team_size_distribution"] = "truncated geometric, p=0.5, support 1..8";
    manifest["reference_count_distribution"] =
        "3 + two geometric(0.35) components, truncated at 25";
    manifest["internal_share_definition"] =
        "min(0.9, multiplier * baseline_cite_rate) of a member work's references";
    manifest["realized_internal_share"] = result.realized_internal_share;
    manifest["notes"] = result.notes;
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

GroundTruth load_truth(const std::string& path) {
    json obj = json::parse(read_text_file(path));
    GroundTruth truth;
    for (const auto& a : obj["syndicate_members"]) truth.syndicate_members.insert(a.get<std::string>());
    for (const auto& a : obj["hub_ids"]) truth.hub_ids.insert(a.get<std::string>());
    if (obj.contains("syndicates")) {
        for (const auto& grp : obj["syndicates"]) {
            std::vector<std::string> ids;
            for (const auto& a : grp) ids.push_back(a.get<std::string>());
            truth.syndicate_groups.push_back(std::move(ids));
        }
    }
    for (auto it = obj["tier_of"].begin(); it != obj["tier_of"].end(); ++it) {
        std::string v = it.value().get<std::string>();
        truth.tier_of[it.key()] = v == "case" ? CohortLabel::Case
                                : v == "control" ? CohortLabel::Control : CohortLabel::Other;
    }
    return truth;
}

} // namespace citeforge
