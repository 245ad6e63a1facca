#include "qrank/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <array>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qrank/error.hpp"
#include "qrank/rng.hpp"

namespace qrank {

std::optional<double> average_precision(const RankedList& ranked, int cutoff) {
    int total_relevant = 0;
    for (const auto& item : ranked.items) total_relevant += item.gold_relevant ? 1 : 0;
    if (total_relevant == 0) return std::nullopt;

    double ap = 0.0;
    int hits = 0;
    const int depth = std::min<int>(cutoff, static_cast<int>(ranked.items.size()));
    for (int k = 1; k <= depth; ++k) {
        if (!ranked.items[static_cast<std::size_t>(k - 1)].gold_relevant) continue;
        ++hits;
        ap += static_cast<double>(hits) / k;
    }
    return ap / std::min(total_relevant, cutoff);
}

namespace {

double reciprocal_rank(const RankedList& ranked, int cutoff) {
    const int depth = std::min<int>(cutoff, static_cast<int>(ranked.items.size()));
    for (int k = 1; k <= depth; ++k) {
        if (ranked.items[static_cast<std::size_t>(k - 1)].gold_relevant) return 1.0 / k;
    }
    return 0.0;
}

// Mean of recall@1..cutoff; recall at depths past the list size equals the
// recall of the full list.
double average_recall(const RankedList& ranked, int cutoff, int total_relevant) {
    double sum = 0.0;
    int hits = 0;
    for (int c = 1; c <= cutoff; ++c) {
        if (c <= static_cast<int>(ranked.items.size()) &&
            ranked.items[static_cast<std::size_t>(c - 1)].gold_relevant) {
            ++hits;
        }
        sum += static_cast<double>(hits) / total_relevant;
    }
    return sum / cutoff;
}

}  // namespace

EvalReport evaluate(const std::vector<RankedList>& rankings,
                    const std::unordered_map<std::string, int>* predictions, int cutoff) {
    EvalReport report;
    // Per-group scores keyed by group_id, reduced in sorted order so the
    // result is independent of the processing order.
    std::map<std::string, std::array<double, 3>> per_group;
    std::size_t pairs = 0, correct = 0;
    for (const auto& ranked : rankings) {
        if (per_group.count(ranked.group_id)) {
            throw ValidationError("group '" + ranked.group_id + "' appears twice in the evaluation");
        }
        int total_relevant = 0;
        for (const auto& item : ranked.items) {
            total_relevant += item.gold_relevant ? 1 : 0;
            if (predictions) {
                const auto it = predictions->find(item.pair_id);
                if (it == predictions->end()) {
                    throw ValidationError("no class decision for pair '" + item.pair_id + "'");
                }
                ++pairs;
                correct += (it->second == (item.gold_relevant ? 1 : 0)) ? 1 : 0;
            }
        }
        if (total_relevant == 0) {
            per_group.emplace(ranked.group_id, std::array<double, 3>{});  // duplicate guard only
            continue;  // skipped, not zero
        }
        const double ap = *average_precision(ranked, cutoff);
        report.per_query_ap[ranked.group_id] = ap;
        per_group.emplace(ranked.group_id,
                          std::array<double, 3>{ap, reciprocal_rank(ranked, cutoff),
                                                average_recall(ranked, cutoff, total_relevant)});
        ++report.n_queries_scored;
    }
    if (report.n_queries_scored > 0) {
        double ap_sum = 0.0, rr_sum = 0.0, rec_sum = 0.0;
        for (const auto& [group_id, scores] : per_group) {
            if (!report.per_query_ap.count(group_id)) continue;
            ap_sum += scores[0];
            rr_sum += scores[1];
            rec_sum += scores[2];
        }
        report.map_score = 100.0 * ap_sum / report.n_queries_scored;
        report.mrr = 100.0 * rr_sum / report.n_queries_scored;
        report.avg_rec = 100.0 * rec_sum / report.n_queries_scored;
    }
    if (predictions && pairs > 0) {
        report.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(pairs);
    }
    return report;
}

double paired_randomization_test(const std::map<std::string, double>& per_query_a,
                                 const std::map<std::string, double>& per_query_b,
                                 int iterations, std::uint64_t seed) {
    if (per_query_a.size() != per_query_b.size()) {
        throw ValidationError("paired test: per-query key sets differ in size");
    }
    std::vector<double> diffs;
    diffs.reserve(per_query_a.size());
    for (const auto& [group_id, a_value] : per_query_a) {
        const auto it = per_query_b.find(group_id);
        if (it == per_query_b.end()) {
            throw ValidationError("paired test: group '" + group_id + "' missing from the second map");
        }
        diffs.push_back(a_value - it->second);
    }
    if (diffs.empty()) throw ValidationError("paired test: no queries");

    const double n = static_cast<double>(diffs.size());
    double observed = 0.0;
    for (double d : diffs) observed += d;
    observed = std::abs(observed / n);

    Rng rng(derive_seed(seed, "randomization_test"));
    int hits = 0;
    for (int it = 0; it < iterations; ++it) {
        double sum = 0.0;
        for (double d : diffs) sum += (rng.next_u64() & 1u) ? -d : d;
        if (std::abs(sum / n) >= observed) ++hits;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(iterations + 1);
}

std::string report_table(const EvalReport& report) {
    char buf[64];
    std::ostringstream out;
    out << "metric      value\n";
    auto row = [&](const char* name, double value) {
        std::snprintf(buf, sizeof(buf), "%-10s  %.2f\n", name, value);
        out << buf;
    };
    row("MAP", report.map_score);
    row("MRR", report.mrr);
    row("AvgRec", report.avg_rec);
    if (report.accuracy) {
        row("Accuracy", *report.accuracy);
    } else {
        out << "Accuracy    -\n";
    }
    out << "queries     " << report.n_queries_scored << "\n";
    return out.str();
}

std::string report_json(const EvalReport& report) {
    nlohmann::json j;
    j["map"] = report.map_score;
    j["mrr"] = report.mrr;
    j["avg_rec"] = report.avg_rec;
    if (report.accuracy) {
        j["accuracy"] = *report.accuracy;
    } else {
        j["accuracy"] = nullptr;
    }
    j["n_queries_scored"] = report.n_queries_scored;
    j["per_query_ap"] = report.per_query_ap;
    return j.dump(2);
}

void save_report(const EvalReport& report, const std::string& table_path,
                 const std::string& json_path) {
    std::ofstream table(table_path, std::ios::binary);
    if (!table) throw ValidationError("cannot write report: " + table_path);
    table << report_table(report);
    std::ofstream machine(json_path, std::ios::binary);
    if (!machine) throw ValidationError("cannot write report: " + json_path);
    machine << report_json(report) << '\n';
}

}  // namespace qrank
