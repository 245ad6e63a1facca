#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qrank/ranker.hpp"

namespace qrank {

// Scores are on a 0-100 scale. Accuracy is absent for score-free baselines.
struct EvalReport {
    double map_score = 0.0;
    double mrr = 0.0;
    double avg_rec = 0.0;
    std::optional<double> accuracy;
    std::map<std::string, double> per_query_ap;  // scored groups only, AP in [0,1]
    int n_queries_scored = 0;
};

// AP at the given cutoff: sum of precision@k over relevant ranks k <= cutoff,
// divided by min(R, cutoff) where R counts all relevant candidates in the
// group. Groups without relevant candidates are skipped (nullopt), not zero.
std::optional<double> average_precision(const RankedList& ranked, int cutoff = 10);

// MAP, MRR (first relevant within the cutoff, else 0) and AvgRec (mean of
// recall@1..cutoff) over the scored groups; accuracy over all pairs when
// per-pair class decisions are supplied.
EvalReport evaluate(const std::vector<RankedList>& rankings,
                    const std::unordered_map<std::string, int>* predictions = nullptr,
                    int cutoff = 10);

// Two-sided approximate randomization over per-query AP differences:
// flips each query's pair with probability 1/2 and compares |mean difference|
// against the observed one; p = (hits + 1) / (iterations + 1).
double paired_randomization_test(const std::map<std::string, double>& per_query_a,
                                 const std::map<std::string, double>& per_query_b,
                                 int iterations = 10000, std::uint64_t seed = 1);

std::string report_table(const EvalReport& report);
std::string report_json(const EvalReport& report);
void save_report(const EvalReport& report, const std::string& table_path,
                 const std::string& json_path);

}  // namespace qrank
