#pragma once

// Record ingestion: parse work files (NDJSON or CSV), apply the record
// filters, and build the normalized catalog the rest of the pipeline reads.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace citeforge {

struct WorkRecord {
    std::string work_id;                 // DOI-like opaque identifier
    int year = 0;
    std::string issn;                    // normalized 8-char form, empty = absent
    std::vector<std::string> authors;    // ordered, no duplicates
    std::vector<std::string> refs;       // cited work_ids
    std::optional<int> pages;            // page count when known
};

struct SubjectMap {
    std::map<std::string, int> entries;  // normalized ISSN -> subject in 1..5

    std::optional<int> subject_of(const std::string& issn) const {
        auto it = entries.find(issn);
        if (it == entries.end()) return std::nullopt;
        return it->second;
    }
};

struct IngestStats {
    long long total_rows = 0;
    long long malformed = 0;             // dropped rows (unparseable / missing id or year)
    long long window_filtered = 0;
    long long duplicate_ids = 0;         // earlier record replaced, last wins
    long long invalid_issn = 0;          // ISSN field dropped, record kept
    long long duplicate_authors = 0;     // in-record author dedup events
    std::vector<std::string> sample_offenders;  // first few malformed rows, for the fatal report
};

class Catalog {
public:
    std::map<std::string, WorkRecord> works;                          // work_id -> record
    std::map<std::string, std::vector<std::string>> author_index;     // author -> work_ids
    std::map<std::string, std::vector<std::string>> journal_index;    // issn -> work_ids
    SubjectMap subject_map;
    int window_start = 0;
    int window_end = 0;

    void insert(WorkRecord rec, IngestStats* stats = nullptr);
    void rebuild_indexes();
    bool check_indexes() const;          // index entries exhaustive and valid
};

// "1234-567X" -> "1234567X"; nullopt when the normalized form is invalid.
std::optional<std::string> normalize_issn(std::string_view raw);

// Streaming parse of an NDJSON or CSV works file (format chosen by extension,
// ".csv" -> CSV). Keeps records with year inside [window_start, window_end].
// Throws IoError when the file is unreadable and ValidationError when more
// than half of the rows are malformed.
Catalog load_records(const std::string& path, int window_start, int window_end,
                     IngestStats* stats = nullptr);

// issn,subject CSV (header optional).
SubjectMap load_subjects(const std::string& path);

// Drops works whose page count is exactly 1; absent page info is retained.
Catalog filter_citable(const Catalog& catalog, long long* removed = nullptr);

// Keeps only author-index entries whose ID ends in `last_digit` (0-9 or X).
// Works and their author lists are untouched.
Catalog sample_authors(const Catalog& catalog, char last_digit);

// Catalog directory round trip: works.jsonl + subjects.csv + manifest.json.
void save_catalog(const Catalog& catalog, const std::string& dir,
                  const IngestStats& stats, const std::vector<std::string>& filters);
Catalog load_catalog(const std::string& dir);

} // namespace citeforge
