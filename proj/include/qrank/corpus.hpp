#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qrank {

enum class Task { QQ, QA, NLI, FNC };

const char* task_name(Task task);                 // "qq", "qa", "nli", "fnc"
Task task_from_name(std::string_view name);
int task_class_count(Task task);                  // 2, 2, 3, 4

struct Label {
    int class_index = 0;
    int class_count = 0;
};

// One labeled text pair in the canonical line-delimited format.
// orig_rank is the position in the original retrieval order and is required
// for QQ records; group_id may be empty for non-ranking auxiliary tasks.
struct PairRecord {
    Task task = Task::QQ;
    std::string group_id;
    std::string pair_id;
    std::string text_a;
    std::string text_b;
    std::string raw_label;
    std::optional<int> orig_rank;

    bool operator==(const PairRecord&) const = default;
};

struct Candidate {
    std::string pair_id;
    std::string text;
    bool gold_relevant = false;
    int orig_rank = 0;
};

// An original question with its candidates in ascending original retrieval
// order.
struct RankingGroup {
    std::string group_id;
    std::string original_text;
    std::vector<Candidate> candidates;
};

// Admissible raw labels per task:
//   qq:  PerfectMatch, Relevant, Irrelevant
//   qa:  Good, Bad, PotentiallyUseful
//   nli: entailment, neutral, contradiction
//   fnc: agrees, disagrees, discusses, unrelated
const std::vector<std::string>& admissible_labels(Task task);

// qq: PerfectMatch/Relevant -> 1, Irrelevant -> 0. qa: Good -> 1, Bad and
// PotentiallyUseful -> 0 (the official scorer's binarization). nli:
// entailment 0, neutral 1, contradiction 2. fnc: agrees 0, disagrees 1,
// discusses 2, unrelated 3.
Label map_label(const std::string& raw_label, Task task);

std::vector<PairRecord> load_pairs(const std::string& path, Task task);
std::vector<PairRecord> parse_pairs(std::istream& in, Task task, const std::string& source_name);

void save_pairs(const std::vector<PairRecord>& records, const std::string& path);
std::string record_to_line(const PairRecord& record);

// One group per distinct group_id (in first-appearance order), candidates
// sorted by ascending orig_rank. All records must be QQ.
std::vector<RankingGroup> group_records(const std::vector<PairRecord>& records);

// Uniform sample of n records without replacement, deterministic in seed,
// preserving the input's relative order.
std::vector<PairRecord> sample_auxiliary(const std::vector<PairRecord>& records, std::size_t n,
                                         std::uint64_t seed);

std::uint64_t records_fingerprint(const std::vector<PairRecord>& records);

}  // namespace qrank
