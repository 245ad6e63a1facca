#include "qrank/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "qrank/error.hpp"
#include "qrank/rng.hpp"

namespace qrank {

using nlohmann::json;

const char* task_name(Task task) {
    switch (task) {
        case Task::QQ: return "qq";
        case Task::QA: return "qa";
        case Task::NLI: return "nli";
        case Task::FNC: return "fnc";
    }
    return "?";
}

Task task_from_name(std::string_view name) {
    if (name == "qq") return Task::QQ;
    if (name == "qa") return Task::QA;
    if (name == "nli") return Task::NLI;
    if (name == "fnc") return Task::FNC;
    throw ValidationError("unknown task '" + std::string(name) + "' (expected qq, qa, nli or fnc)");
}

int task_class_count(Task task) {
    switch (task) {
        case Task::QQ:
        case Task::QA: return 2;
        case Task::NLI: return 3;
        case Task::FNC: return 4;
    }
    return 0;
}

const std::vector<std::string>& admissible_labels(Task task) {
    static const std::vector<std::string> qq = {"PerfectMatch", "Relevant", "Irrelevant"};
    static const std::vector<std::string> qa = {"Good", "Bad", "PotentiallyUseful"};
    static const std::vector<std::string> nli = {"entailment", "neutral", "contradiction"};
    static const std::vector<std::string> fnc = {"agrees", "disagrees", "discusses", "unrelated"};
    switch (task) {
        case Task::QQ: return qq;
        case Task::QA: return qa;
        case Task::NLI: return nli;
        case Task::FNC: return fnc;
    }
    return qq;
}

namespace {

std::string admissible_labels_text(Task task) {
    std::string out;
    for (const auto& l : admissible_labels(task)) {
        if (!out.empty()) out += ", ";
        out += l;
    }
    return out;
}

}  // namespace

Label map_label(const std::string& raw_label, Task task) {
    int index = -1;
    switch (task) {
        case Task::QQ:
            if (raw_label == "PerfectMatch" || raw_label == "Relevant") index = 1;
            else if (raw_label == "Irrelevant") index = 0;
            break;
        case Task::QA:
            if (raw_label == "Good") index = 1;
            else if (raw_label == "Bad" || raw_label == "PotentiallyUseful") index = 0;
            break;
        case Task::NLI:
            if (raw_label == "entailment") index = 0;
            else if (raw_label == "neutral") index = 1;
            else if (raw_label == "contradiction") index = 2;
            break;
        case Task::FNC:
            if (raw_label == "agrees") index = 0;
            else if (raw_label == "disagrees") index = 1;
            else if (raw_label == "discusses") index = 2;
            else if (raw_label == "unrelated") index = 3;
            break;
    }
    if (index < 0) {
        throw ValidationError("inadmissible label '" + raw_label + "' for task " + task_name(task) +
                              " (admissible: " + admissible_labels_text(task) + ")");
    }
    return Label{index, task_class_count(task)};
}

namespace {

PairRecord parse_record(const json& obj, Task task, const std::string& where) {
    static const std::unordered_set<std::string> known_keys = {
        "task", "group_id", "pair_id", "text_a", "text_b", "label", "orig_rank"};
    if (!obj.is_object()) throw ValidationError(where + ": record is not an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known_keys.count(key)) throw ValidationError(where + ": unknown field '" + key + "'");
    }
    auto require_string = [&](const char* key) -> std::string {
        if (!obj.contains(key) || !obj.at(key).is_string()) {
            throw ValidationError(where + ": missing or non-string field '" + std::string(key) + "'");
        }
        return obj.at(key).get<std::string>();
    };

    PairRecord rec;
    rec.task = task_from_name(require_string("task"));
    if (rec.task != task) {
        throw ValidationError(where + ": record task '" + std::string(task_name(rec.task)) +
                              "' does not match expected task '" + task_name(task) + "'");
    }
    rec.group_id = require_string("group_id");
    rec.pair_id = require_string("pair_id");
    rec.text_a = require_string("text_a");
    rec.text_b = require_string("text_b");
    rec.raw_label = require_string("label");
    map_label(rec.raw_label, rec.task);  // validates admissibility

    if (rec.task == Task::QQ) {
        if (rec.group_id.empty()) throw ValidationError(where + ": qq record with empty group_id");
        if (!obj.contains("orig_rank") || !obj.at("orig_rank").is_number_integer()) {
            throw ValidationError(where + ": qq record missing integer orig_rank");
        }
        const int rank = obj.at("orig_rank").get<int>();
        if (rank < 1) throw ValidationError(where + ": orig_rank must be >= 1");
        rec.orig_rank = rank;
    } else if (obj.contains("orig_rank")) {
        throw ValidationError(where + ": orig_rank is only valid for qq records");
    }
    return rec;
}

}  // namespace

std::vector<PairRecord> parse_pairs(std::istream& in, Task task, const std::string& source_name) {
    std::vector<PairRecord> records;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": malformed record: " + e.what());
        }
        PairRecord rec = parse_record(obj, task, where);
        if (!seen_ids.insert(rec.pair_id).second) {
            throw ValidationError(where + ": duplicate pair_id '" + rec.pair_id + "'");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<PairRecord> load_pairs(const std::string& path, Task task) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset file: " + path);
    return parse_pairs(in, task, path);
}

std::string record_to_line(const PairRecord& record) {
    json obj;
    obj["task"] = task_name(record.task);
    obj["group_id"] = record.group_id;
    obj["pair_id"] = record.pair_id;
    obj["text_a"] = record.text_a;
    obj["text_b"] = record.text_b;
    obj["label"] = record.raw_label;
    if (record.orig_rank) obj["orig_rank"] = *record.orig_rank;
    return obj.dump();
}

void save_pairs(const std::vector<PairRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write dataset file: " + path);
    for (const auto& rec : records) out << record_to_line(rec) << '\n';
}

std::vector<RankingGroup> group_records(const std::vector<PairRecord>& records) {
    std::vector<RankingGroup> groups;
    std::unordered_map<std::string, std::size_t> index_of;
    for (const auto& rec : records) {
        if (rec.task != Task::QQ) {
            throw ValidationError("group_records: record '" + rec.pair_id + "' has task " +
                                  task_name(rec.task) + ", expected qq");
        }
        auto [it, inserted] = index_of.emplace(rec.group_id, groups.size());
        if (inserted) {
            groups.push_back(RankingGroup{rec.group_id, rec.text_a, {}});
        }
        RankingGroup& group = groups[it->second];
        if (group.original_text != rec.text_a) {
            throw ValidationError("group '" + rec.group_id +
                                  "': candidates disagree on the original question text");
        }
        group.candidates.push_back(Candidate{rec.pair_id, rec.text_b,
                                             map_label(rec.raw_label, Task::QQ).class_index == 1,
                                             *rec.orig_rank});
    }
    for (auto& group : groups) {
        std::stable_sort(group.candidates.begin(), group.candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.orig_rank < b.orig_rank; });
        for (std::size_t i = 1; i < group.candidates.size(); ++i) {
            if (group.candidates[i].orig_rank == group.candidates[i - 1].orig_rank) {
                throw ValidationError("group '" + group.group_id + "': duplicate orig_rank " +
                                      std::to_string(group.candidates[i].orig_rank));
            }
        }
    }
    return groups;
}

std::vector<PairRecord> sample_auxiliary(const std::vector<PairRecord>& records, std::size_t n,
                                         std::uint64_t seed) {
    if (n > records.size()) {
        throw ValidationError("sample_auxiliary: requested " + std::to_string(n) + " of " +
                              std::to_string(records.size()) + " records");
    }
    // Selection sampling: walks the input once, keeping relative order.
    Rng rng(derive_seed(seed, "aux_sample"));
    std::vector<PairRecord> sample;
    sample.reserve(n);
    std::size_t remaining = records.size();
    std::size_t needed = n;
    for (const auto& rec : records) {
        if (needed == 0) break;
        if (rng.uniform() * static_cast<double>(remaining) < static_cast<double>(needed)) {
            sample.push_back(rec);
            --needed;
        }
        --remaining;
    }
    return sample;
}

std::uint64_t records_fingerprint(const std::vector<PairRecord>& records) {
    std::uint64_t h = fnv1a("records");
    for (const auto& rec : records) {
        h = fnv1a(record_to_line(rec), h);
        h = fnv1a(std::string_view("\n", 1), h);
    }
    return h;
}

}  // namespace qrank
