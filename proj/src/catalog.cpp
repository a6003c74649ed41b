#include "citeforge/catalog.hpp"

#include "citeforge/util.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace citeforge {

std::optional<std::string> normalize_issn(std::string_view raw) {
    std::string norm;
    norm.reserve(8);
    for (char c : raw) {
        if (c == '-' || std::isspace(static_cast<unsigned char>(c))) continue;
        norm.push_back(c == 'x' ? 'X' : c);
    }
    if (norm.size() != 8) return std::nullopt;
    for (std::size_t i = 0; i < 7; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(norm[i]))) return std::nullopt;
    }
    char last = norm[7];
    if (!std::isdigit(static_cast<unsigned char>(last)) && last != 'X') return std::nullopt;
    return norm;
}

void Catalog::insert(WorkRecord rec, IngestStats* stats) {
    // In-record author dedup, first occurrence wins.
    std::set<std::string> seen;
    std::vector<std::string> deduped;
    deduped.reserve(rec.authors.size());
    for (auto& a : rec.authors) {
        if (a.empty()) continue;
        if (seen.insert(a).second) {
            deduped.push_back(std::move(a));
        } else if (stats) {
            ++stats->duplicate_authors;
        }
    }
    rec.authors = std::move(deduped);

    auto [it, inserted] = works.insert_or_assign(rec.work_id, std::move(rec));
    if (!inserted && stats) ++stats->duplicate_ids;
}

void Catalog::rebuild_indexes() {
    author_index.clear();
    journal_index.clear();
    for (const auto& [id, rec] : works) {
        for (const auto& a : rec.authors) author_index[a].push_back(id);
        if (!rec.issn.empty()) journal_index[rec.issn].push_back(id);
    }
}

bool Catalog::check_indexes() const {
    for (const auto& [a, ids] : author_index) {
        for (const auto& id : ids) {
            if (!works.count(id)) return false;
        }
    }
    for (const auto& [j, ids] : journal_index) {
        for (const auto& id : ids) {
            auto it = works.find(id);
            if (it == works.end() || it->second.issn != j) return false;
        }
    }
    return true;
}

namespace {

std::optional<WorkRecord> parse_json_row(const std::string& line, IngestStats& stats) {
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) return std::nullopt;
    WorkRecord rec;
    if (!obj.contains("work_id") || !obj["work_id"].is_string()) return std::nullopt;
    rec.work_id = obj["work_id"].get<std::string>();
    if (rec.work_id.empty()) return std::nullopt;
    if (!obj.contains("year") || !obj["year"].is_number_integer()) return std::nullopt;
    rec.year = obj["year"].get<int>();
    if (obj.contains("issn") && obj["issn"].is_string()) {
        auto norm = normalize_issn(obj["issn"].get<std::string>());
        if (norm) {
            rec.issn = *norm;
        } else if (!obj["issn"].get<std::string>().empty()) {
            ++stats.invalid_issn;
        }
    }
    if (obj.contains("authors") && obj["authors"].is_array()) {
        for (const auto& a : obj["authors"]) {
            if (a.is_string()) rec.authors.push_back(a.get<std::string>());
        }
    }
    if (obj.contains("refs") && obj["refs"].is_array()) {
        for (const auto& r : obj["refs"]) {
            if (r.is_string()) rec.refs.push_back(r.get<std::string>());
        }
    }
    if (obj.contains("pages") && obj["pages"].is_number_integer()) {
        rec.pages = obj["pages"].get<int>();
    }
    return rec;
}

// CSV columns: work_id,year,issn,authors,refs,pages with ';'-separated lists.
std::optional<WorkRecord> parse_csv_row(const std::vector<std::string>& fields,
                                        IngestStats& stats) {
    if (fields.size() < 2) return std::nullopt;
    WorkRecord rec;
    rec.work_id = trim(fields[0]);
    if (rec.work_id.empty()) return std::nullopt;
    try {
        rec.year = std::stoi(trim(fields[1]));
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (fields.size() > 2) {
        std::string raw = trim(fields[2]);
        if (!raw.empty()) {
            auto norm = normalize_issn(raw);
            if (norm) rec.issn = *norm;
            else ++stats.invalid_issn;
        }
    }
    auto parse_list = [](const std::string& s) {
        std::vector<std::string> out;
        for (auto& tok : split(s, ';')) {
            std::string t = trim(tok);
            if (!t.empty()) out.push_back(std::move(t));
        }
        return out;
    };
    if (fields.size() > 3) rec.authors = parse_list(fields[3]);
    if (fields.size() > 4) rec.refs = parse_list(fields[4]);
    if (fields.size() > 5) {
        std::string p = trim(fields[5]);
        if (!p.empty()) {
            try {
                rec.pages = std::stoi(p);
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
    }
    return rec;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

Catalog load_records(const std::string& path, int window_start, int window_end,
                     IngestStats* stats_out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open works file: " + path);

    IngestStats stats;
    Catalog cat;
    cat.window_start = window_start;
    cat.window_end = window_end;

    const bool csv = has_suffix(path, ".csv");
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (csv && first) {
            first = false;
            // Skip a header row when the first field is the literal column name.
            auto fields = parse_csv_line(line);
            if (!fields.empty() && trim(fields[0]) == "work_id") continue;
        }
        first = false;
        ++stats.total_rows;
        std::optional<WorkRecord> rec =
            csv ? parse_csv_row(parse_csv_line(line), stats) : parse_json_row(line, stats);
        if (!rec) {
            ++stats.malformed;
            if (stats.sample_offenders.size() < 5) stats.sample_offenders.push_back(line);
            continue;
        }
        if (rec->year < window_start || rec->year > window_end) {
            ++stats.window_filtered;
            continue;
        }
        cat.insert(std::move(*rec), &stats);
    }

    if (stats.total_rows > 0 && 2 * stats.malformed > stats.total_rows) {
        std::ostringstream msg;
        msg << "works file mostly malformed (" << stats.malformed << " of "
            << stats.total_rows << " rows); sample offenders:";
        for (const auto& s : stats.sample_offenders) msg << "\n  " << s;
        throw ValidationError(msg.str());
    }

    cat.rebuild_indexes();
    if (stats_out) *stats_out = stats;
    return cat;
}

SubjectMap load_subjects(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open subjects file: " + path);
    SubjectMap map;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = parse_csv_line(line);
        if (fields.size() < 2) continue;
        std::string head = trim(fields[0]);
        if (head == "issn") continue;
        auto norm = normalize_issn(head);
        if (!norm) continue;
        int subject = 0;
        try {
            subject = std::stoi(trim(fields[1]));
        } catch (const std::exception&) {
            continue;
        }
        if (subject < 1 || subject > 5) {
            throw ValidationError("subject out of range 1..5 for ISSN " + *norm);
        }
        map.entries[*norm] = subject;
    }
    return map;
}

Catalog filter_citable(const Catalog& catalog, long long* removed) {
    Catalog out;
    out.subject_map = catalog.subject_map;
    out.window_start = catalog.window_start;
    out.window_end = catalog.window_end;
    long long dropped = 0;
    for (const auto& [id, rec] : catalog.works) {
        if (rec.pages && *rec.pages == 1) {
            ++dropped;
            continue;
        }
        out.works.emplace(id, rec);
    }
    out.rebuild_indexes();
    // Honor an upstream author sampling: keep only authors previously indexed.
    std::map<std::string, std::vector<std::string>> pruned;
    for (auto& [a, ids] : out.author_index) {
        if (catalog.author_index.count(a)) pruned.emplace(a, std::move(ids));
    }
    out.author_index = std::move(pruned);
    if (removed) *removed = dropped;
    return out;
}

Catalog sample_authors(const Catalog& catalog, char last_digit) {
    bool valid = (last_digit >= '0' && last_digit <= '9') || last_digit == 'X';
    if (!valid) throw ValidationError(std::string("sample digit must be 0-9 or X, got '") + last_digit + "'");
    Catalog out = catalog;
    std::map<std::string, std::vector<std::string>> kept;
    for (const auto& [a, ids] : catalog.author_index) {
        if (!a.empty() && a.back() == last_digit) kept.emplace(a, ids);
    }
    out.author_index = std::move(kept);
    return out;
}

void save_catalog(const Catalog& catalog, const std::string& dir,
                  const IngestStats& stats, const std::vector<std::string>& filters) {
    fs::create_directories(dir);

    std::ofstream works_out(fs::path(dir) / "works.jsonl", std::ios::binary);
    if (!works_out) throw IoError("cannot write works.jsonl under " + dir);
    for (const auto& [id, rec] : catalog.works) {
        json obj;
        obj["work_id"] = id;
        obj["year"] = rec.year;
        if (!rec.issn.empty()) obj["issn"] = rec.issn;
        obj["authors"] = rec.authors;
        obj["refs"] = rec.refs;
        if (rec.pages) obj["pages"] = *rec.pages;
        works_out << obj.dump() << "\n";
    }

    std::ofstream subj_out(fs::path(dir) / "subjects.csv", std::ios::binary);
    if (!subj_out) throw IoError("cannot write subjects.csv under " + dir);
    subj_out << "issn,subject\n";
    for (const auto& [issn, subject] : catalog.subject_map.entries) {
        subj_out << issn << "," << subject << "\n";
    }

    json manifest;
    manifest["tool"] = "citeforge";
    manifest["window"] = {catalog.window_start, catalog.window_end};
    manifest["works"] = catalog.works.size();
    manifest["authors"] = catalog.author_index.size();
    manifest["journals"] = catalog.journal_index.size();
    manifest["filters"] = filters;
    manifest["stats"] = {
        {"total_rows", stats.total_rows},
        {"malformed", stats.malformed},
        {"window_filtered", stats.window_filtered},
        {"duplicate_ids", stats.duplicate_ids},
        {"invalid_issn", stats.invalid_issn},
        {"duplicate_authors", stats.duplicate_authors},
    };
    // Sampled author list persists the ingest-time author filter.
    json sampled = json::array();
    for (const auto& [a, ids] : catalog.author_index) sampled.push_back(a);
    manifest["sampled_authors"] = std::move(sampled);
    write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

Catalog load_catalog(const std::string& dir) {
    json manifest = json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
    int ws = manifest["window"][0].get<int>();
    int we = manifest["window"][1].get<int>();
    Catalog cat = load_records((fs::path(dir) / "works.jsonl").string(), ws, we);
    cat.subject_map = load_subjects((fs::path(dir) / "subjects.csv").string());
    if (manifest.contains("sampled_authors")) {
        std::set<std::string> sampled;
        for (const auto& a : manifest["sampled_authors"]) sampled.insert(a.get<std::string>());
        std::map<std::string, std::vector<std::string>> kept;
        for (auto& [a, ids] : cat.author_index) {
            if (sampled.count(a)) kept.emplace(a, std::move(ids));
        }
        cat.author_index = std::move(kept);
    }
    return cat;
}

} // namespace citeforge
