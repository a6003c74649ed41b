#include <doctest.h>

#include "citeforge/catalog.hpp"
#include "citeforge/util.hpp"
#include "test_util.hpp"

#include <unistd.h>

using namespace citeforge;

namespace {

std::string work_line(const std::string& id, int year, const std::string& issn,
                      const std::string& authors = "[]", const std::string& refs = "[]",
                      const std::string& extra = "") {
    std::string issn_field = issn.empty() ? "" : ",\"issn\":\"" + issn + "\"";
    return "{\"work_id\":\"" + id + "\",\"year\":" + std::to_string(year) + issn_field +
           ",\"authors\":" + authors + ",\"refs\":" + refs + extra + "}\n";
}

} // namespace

TEST_CASE("issn normalization strips hyphens and uppercases the check char") {
    CHECK(normalize_issn("1234-567X").value() == "1234567X");
    CHECK(normalize_issn("1234-567x").value() == "1234567X");
    CHECK(normalize_issn("12345670").value() == "12345670");
    CHECK_FALSE(normalize_issn("1234-567").has_value());
    CHECK_FALSE(normalize_issn("ABCD-EFGH").has_value());
    CHECK_FALSE(normalize_issn("1234X670").has_value());
}

TEST_CASE("window filtering keeps inclusive bounds only") {
    TempDir tmp("window");
    std::string content = work_line("w1", 2019, "") + work_line("w2", 2021, "") +
                          work_line("w3", 2024, "");
    auto path = tmp.write("works.jsonl", content);
    IngestStats stats;
    Catalog cat = load_records(path, 2020, 2024, &stats);
    CHECK(cat.works.size() == 2);
    CHECK(stats.window_filtered == 1);
    for (const auto& [id, rec] : cat.works) {
        CHECK(rec.year >= 2020);
        CHECK(rec.year <= 2024);
    }
}

TEST_CASE("malformed rows are counted, not fatal") {
    TempDir tmp("malformed");
    std::string content;
    for (int i = 0; i < 8; ++i) content += work_line("w" + std::to_string(i), 2021, "");
    content += "{\"year\":2021}\n";           // missing work_id
    content += "{\"work_id\":\"bad\"}\n";     // missing year
    auto path = tmp.write("works.jsonl", content);
    IngestStats stats;
    Catalog cat = load_records(path, 2020, 2024, &stats);
    CHECK(cat.works.size() == 8);
    CHECK(stats.malformed == 2);
}

TEST_CASE("mostly-malformed file is a fatal format error with offenders") {
    TempDir tmp("fatal");
    std::string content = work_line("w1", 2021, "");
    content += "not json\n";
    content += "{\"nope\":1}\n";
    auto path = tmp.write("works.jsonl", content);
    CHECK_THROWS_AS(load_records(path, 2020, 2024), ValidationError);
}

TEST_CASE("unreadable works file is an I/O error") {
    CHECK_THROWS_AS(load_records("/nonexistent/nowhere.jsonl", 2020, 2024), IoError);
}

TEST_CASE("duplicate work ids: last record wins with a warning") {
    TempDir tmp("dups");
    std::string content = work_line("w1", 2021, "", "[\"a\"]") + work_line("w1", 2022, "");
    auto path = tmp.write("works.jsonl", content);
    IngestStats stats;
    Catalog cat = load_records(path, 2020, 2024, &stats);
    CHECK(cat.works.size() == 1);
    CHECK(cat.works.at("w1").year == 2022);
    CHECK(stats.duplicate_ids == 1);
}

TEST_CASE("in-record duplicate authors are deduplicated") {
    TempDir tmp("dupauth");
    auto path = tmp.write("works.jsonl", work_line("w1", 2021, "", "[\"a\",\"b\",\"a\"]"));
    IngestStats stats;
    Catalog cat = load_records(path, 2020, 2024, &stats);
    CHECK(cat.works.at("w1").authors == std::vector<std::string>{"a", "b"});
    CHECK(stats.duplicate_authors == 1);
}

TEST_CASE("citable filter drops exactly page-count-one works") {
    TempDir tmp("citable");
    std::string content;
    content += work_line("w1", 2021, "", "[]", "[]", ",\"pages\":1");
    content += work_line("w2", 2021, "", "[]", "[]", ",\"pages\":1");
    content += work_line("w3", 2021, "", "[]", "[]", ",\"pages\":3");
    content += work_line("w4", 2021, "");   // pages absent, retained
    auto path = tmp.write("works.jsonl", content);
    Catalog cat = load_records(path, 2020, 2024);
    long long removed = 0;
    Catalog filtered = filter_citable(cat, &removed);
    CHECK(filtered.works.size() == 2);
    CHECK(removed == 2);
    CHECK(filtered.works.count("w3") == 1);
    CHECK(filtered.works.count("w4") == 1);

    // Idempotence.
    Catalog twice = filter_citable(filtered);
    CHECK(twice.works.size() == filtered.works.size());
}

TEST_CASE("author sampling by last digit keeps works intact") {
    TempDir tmp("sample");
    std::string content = work_line("w1", 2021, "", "[\"0000-0001-2222-3810\"]") +
                          work_line("w2", 2021, "", "[\"0000-0001-2222-8680\"]") +
                          work_line("w3", 2021, "", "[\"0000-0001-2222-5581\"]");
    auto path = tmp.write("works.jsonl", content);
    Catalog cat = load_records(path, 2020, 2024);
    Catalog sampled = sample_authors(cat, '0');
    CHECK(sampled.author_index.size() == 2);
    CHECK(sampled.author_index.count("0000-0001-2222-3810") == 1);
    CHECK(sampled.author_index.count("0000-0001-2222-8680") == 1);
    CHECK(sampled.works.size() == 3);   // works never removed

    Catalog none = sample_authors(cat, 'X');
    CHECK(none.author_index.empty());
    CHECK(none.works.size() == 3);

    CHECK_THROWS_AS(sample_authors(cat, 'q'), ValidationError);
}

TEST_CASE("uniform author suffixes sample to one tenth") {
    TempDir tmp("uniform");
    std::string content;
    for (int i = 0; i < 100; ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "[\"author-%03d\"]", i);
        content += work_line("w" + std::to_string(i), 2021, "", buf);
    }
    auto path = tmp.write("works.jsonl", content);
    Catalog cat = load_records(path, 2020, 2024);
    Catalog sampled = sample_authors(cat, '0');
    CHECK(sampled.author_index.size() == 10);
}

TEST_CASE("csv adapter parses semicolon lists") {
    TempDir tmp("csv");
    std::string content =
        "work_id,year,issn,authors,refs,pages\n"
        "w1,2021,1234-567X,a;b,r1;r2,4\n"
        "w2,2022,,c,,\n";
    auto path = tmp.write("works.csv", content);
    IngestStats stats;
    Catalog cat = load_records(path, 2020, 2024, &stats);
    CHECK(cat.works.size() == 2);
    const auto& w1 = cat.works.at("w1");
    CHECK(w1.issn == "1234567X");
    CHECK(w1.authors == std::vector<std::string>{"a", "b"});
    CHECK(w1.refs == std::vector<std::string>{"r1", "r2"});
    CHECK(w1.pages.value() == 4);
    CHECK_FALSE(cat.works.at("w2").pages.has_value());
}

TEST_CASE("catalog directory round trip preserves records and sampling") {
    TempDir tmp("roundtrip");
    std::string content = work_line("w1", 2021, "1234-567X", "[\"a0\",\"b1\"]", "[\"w2\"]") +
                          work_line("w2", 2022, "9876-5430", "[\"b1\"]");
    auto works = tmp.write("works.jsonl", content);
    auto subjects = tmp.write("subjects.csv", "issn,subject\n1234567X,1\n98765430,2\n");
    IngestStats stats;
    Catalog cat = load_records(works, 2020, 2024, &stats);
    cat.subject_map = load_subjects(subjects);
    cat = sample_authors(cat, '0');

    save_catalog(cat, tmp.file("catalog"), stats, {"sample_digit=0"});
    Catalog loaded = load_catalog(tmp.file("catalog"));
    CHECK(loaded.works.size() == 2);
    CHECK(loaded.author_index.size() == 1);
    CHECK(loaded.author_index.count("a0") == 1);
    CHECK(loaded.subject_map.entries.at("1234567X") == 1);
    CHECK(loaded.check_indexes());
}
