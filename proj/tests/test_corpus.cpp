#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "qrank/corpus.hpp"
#include "qrank/error.hpp"
#include "support/synthetic.hpp"

using namespace qrank;
using namespace qrank::testsupport;

namespace {

std::vector<PairRecord> parse_text(const std::string& text, Task task) {
    std::istringstream in(text);
    return parse_pairs(in, task, "mem");
}

const char* kThreeQq =
    R"({"task":"qq","group_id":"g1","pair_id":"p1","text_a":"original question","text_b":"first candidate","label":"PerfectMatch","orig_rank":1}
{"task":"qq","group_id":"g1","pair_id":"p2","text_a":"original question","text_b":"second candidate","label":"Irrelevant","orig_rank":2}
{"task":"qq","group_id":"g2","pair_id":"p3","text_a":"another question","text_b":"third candidate","label":"Relevant","orig_rank":1}
)";

}  // namespace

TEST_CASE("parse_pairs returns records in file order") {
    const auto records = parse_text(kThreeQq, Task::QQ);
    REQUIRE(records.size() == 3);
    CHECK(records[0].pair_id == "p1");
    CHECK(records[1].pair_id == "p2");
    CHECK(records[2].pair_id == "p3");
    CHECK(records[0].orig_rank == 1);
    CHECK(records[2].group_id == "g2");
}

TEST_CASE("parse_pairs names the offending line and the admissible set") {
    const std::string text =
        R"({"task":"qq","group_id":"g1","pair_id":"p1","text_a":"a","text_b":"b","label":"PerfectMatch","orig_rank":1}
{"task":"qq","group_id":"g1","pair_id":"p2","text_a":"a","text_b":"b","label":"Maybe","orig_rank":2}
)";
    try {
        parse_text(text, Task::QQ);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK(what.find("Maybe") != std::string::npos);
        CHECK(what.find("PerfectMatch") != std::string::npos);
        CHECK(what.find("Irrelevant") != std::string::npos);
    }
}

TEST_CASE("parse_pairs rejects structural problems") {
    // duplicate pair_id
    CHECK_THROWS_WITH_AS(
        parse_text(R"({"task":"qa","group_id":"","pair_id":"p1","text_a":"a","text_b":"b","label":"Good"}
{"task":"qa","group_id":"","pair_id":"p1","text_a":"c","text_b":"d","label":"Bad"}
)",
                   Task::QA),
        doctest::Contains("duplicate pair_id"), ValidationError);
    // qq without orig_rank
    CHECK_THROWS_WITH_AS(
        parse_text(R"({"task":"qq","group_id":"g","pair_id":"p1","text_a":"a","text_b":"b","label":"Relevant"})",
                   Task::QQ),
        doctest::Contains("orig_rank"), ValidationError);
    // qq with empty group_id
    CHECK_THROWS_WITH_AS(
        parse_text(R"({"task":"qq","group_id":"","pair_id":"p1","text_a":"a","text_b":"b","label":"Relevant","orig_rank":1})",
                   Task::QQ),
        doctest::Contains("group_id"), ValidationError);
    // orig_rank on a non-ranking task
    CHECK_THROWS_AS(
        parse_text(R"({"task":"nli","group_id":"","pair_id":"p1","text_a":"a","text_b":"b","label":"neutral","orig_rank":1})",
                   Task::NLI),
        ValidationError);
    // unknown field
    CHECK_THROWS_WITH_AS(
        parse_text(R"({"task":"qa","group_id":"","pair_id":"p1","text_a":"a","text_b":"b","label":"Good","extra":1})",
                   Task::QA),
        doctest::Contains("unknown field"), ValidationError);
    // task mismatch against the expected task
    CHECK_THROWS_AS(
        parse_text(R"({"task":"qa","group_id":"","pair_id":"p1","text_a":"a","text_b":"b","label":"Good"})",
                   Task::QQ),
        ValidationError);
    // malformed json names the line
    CHECK_THROWS_WITH_AS(parse_text("{not json}\n", Task::QQ), doctest::Contains("mem:1"),
                         ValidationError);
}

TEST_CASE("a 700-group test file loads to 7000 records") {
    TempDir dir;
    const auto records = synthetic_qq_records(700, 10, 99);
    save_pairs(records, dir.file("qq_test.jsonl"));
    const auto loaded = load_pairs(dir.file("qq_test.jsonl"), Task::QQ);
    CHECK(loaded.size() == 7000);
    std::set<std::string> group_ids;
    for (const auto& rec : loaded) group_ids.insert(rec.group_id);
    CHECK(group_ids.size() == 700);
}

TEST_CASE("save then load is the identity") {
    TempDir dir;
    auto records = synthetic_qq_records(5, 10, 7);
    records[0].text_b = "uni\xc3\xa7ode \"quoted\"\ttabbed";
    save_pairs(records, dir.file("roundtrip.jsonl"));
    const auto loaded = load_pairs(dir.file("roundtrip.jsonl"), Task::QQ);
    CHECK(loaded == records);
}

TEST_CASE("map_label follows the task conventions") {
    CHECK(map_label("PerfectMatch", Task::QQ).class_index == 1);
    CHECK(map_label("Relevant", Task::QQ).class_index == 1);
    CHECK(map_label("Irrelevant", Task::QQ).class_index == 0);
    CHECK(map_label("PerfectMatch", Task::QQ).class_count == 2);

    CHECK(map_label("Good", Task::QA).class_index == 1);
    CHECK(map_label("Bad", Task::QA).class_index == 0);
    CHECK(map_label("PotentiallyUseful", Task::QA).class_index == 0);

    CHECK(map_label("entailment", Task::NLI).class_index == 0);
    CHECK(map_label("neutral", Task::NLI).class_index == 1);
    CHECK(map_label("contradiction", Task::NLI).class_index == 2);
    CHECK(map_label("neutral", Task::NLI).class_count == 3);

    CHECK(map_label("agrees", Task::FNC).class_index == 0);
    CHECK(map_label("disagrees", Task::FNC).class_index == 1);
    CHECK(map_label("discusses", Task::FNC).class_index == 2);
    CHECK(map_label("unrelated", Task::FNC).class_index == 3);
    CHECK(map_label("unrelated", Task::FNC).class_count == 4);

    CHECK_THROWS_AS(map_label("Good", Task::QQ), ValidationError);
}

namespace {

PairRecord qq_record(const std::string& group, const std::string& pair, int rank,
                     const std::string& label = "Irrelevant") {
    PairRecord rec;
    rec.task = Task::QQ;
    rec.group_id = group;
    rec.pair_id = pair;
    rec.text_a = "original " + group;
    rec.text_b = "candidate " + pair;
    rec.raw_label = label;
    rec.orig_rank = rank;
    return rec;
}

}  // namespace

TEST_CASE("group_records sorts candidates by orig_rank") {
    std::vector<PairRecord> records;
    for (int rank : {3, 1, 2}) records.push_back(qq_record("g1", "a" + std::to_string(rank), rank));
    for (int rank : {2, 1}) records.push_back(qq_record("g2", "b" + std::to_string(rank), rank, "Relevant"));
    const auto groups = group_records(records);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].group_id == "g1");
    CHECK(groups[0].candidates.size() == 3);
    CHECK(groups[0].candidates[0].orig_rank == 1);
    CHECK(groups[0].candidates[1].orig_rank == 2);
    CHECK(groups[0].candidates[2].orig_rank == 3);
    CHECK(groups[1].candidates[0].gold_relevant);
}

TEST_CASE("group_records keeps every record exactly once") {
    const auto records = synthetic_qq_records(20, 10, 17);
    const auto groups = group_records(records);
    std::multiset<std::string> in_ids, out_ids;
    for (const auto& rec : records) in_ids.insert(rec.pair_id);
    for (const auto& group : groups) {
        for (const auto& c : group.candidates) out_ids.insert(c.pair_id);
    }
    CHECK(in_ids == out_ids);
}

TEST_CASE("group_records rejects rank clashes and foreign tasks") {
    {
        std::vector<PairRecord> records = {qq_record("g1", "a", 1), qq_record("g1", "b", 1)};
        CHECK_THROWS_WITH_AS(group_records(records), doctest::Contains("g1"), ValidationError);
    }
    {
        std::vector<PairRecord> records = {qq_record("g1", "a", 1)};
        PairRecord qa;
        qa.task = Task::QA;
        qa.pair_id = "x";
        qa.raw_label = "Good";
        records.push_back(qa);
        CHECK_THROWS_AS(group_records(records), ValidationError);
    }
    {
        std::vector<PairRecord> records = {qq_record("g1", "a", 1), qq_record("g1", "b", 2)};
        records[1].text_a = "a different original";
        CHECK_THROWS_AS(group_records(records), ValidationError);
    }
}

TEST_CASE("sample_auxiliary keeps order and is deterministic") {
    const auto records = synthetic_qa_records(5000, 3);

    const auto all = sample_auxiliary(records, records.size(), 7);
    CHECK(all == records);

    const auto a = sample_auxiliary(records, 500, 7);
    const auto b = sample_auxiliary(records, 500, 7);
    CHECK(a == b);
    CHECK(a.size() == 500);

    const auto c = sample_auxiliary(records, 500, 8);
    CHECK(a != c);

    // subsequence of the input: members appear in input order
    std::size_t cursor = 0;
    for (const auto& rec : a) {
        while (cursor < records.size() && !(records[cursor] == rec)) ++cursor;
        REQUIRE(cursor < records.size());
        ++cursor;
    }

    CHECK_THROWS_AS(sample_auxiliary(records, records.size() + 1, 7), ValidationError);
}
