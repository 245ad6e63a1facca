#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrank/corpus.hpp"
#include "qrank/distances.hpp"
#include "qrank/training.hpp"

namespace qrank {

enum class RankProvenance { Model, IrOrder, Random };

const char* rank_provenance_name(RankProvenance p);

struct RankedCandidate {
    std::string pair_id;
    double score = 0.0;
    bool gold_relevant = false;
};

struct RankedList {
    std::string group_id;
    std::vector<RankedCandidate> items;
    RankProvenance provenance = RankProvenance::Model;
};

// Mismatches between a checkpointed model and the featurizer at hand.
// Differing feature options are fatal (silently different features);
// differing vocab/embedding fingerprints only warn — the model may simply
// have been trained from other data.
std::vector<std::string> compatibility_warnings(const TrainedModel& trained,
                                                const Featurizer& featurizer);

// Scores every candidate with the probability of the relevant class
// (eval-mode forward) and sorts descending; ties break by ascending
// orig_rank, then pair_id.
RankedList rank_group(const TrainedModel& trained, const RankingGroup& group,
                      const Featurizer& featurizer);

std::vector<RankedList> rank_groups(const TrainedModel& trained,
                                    const std::vector<RankingGroup>& groups,
                                    const Featurizer& featurizer);

// Candidates in their original retrieval order; scores 1/orig_rank.
RankedList ir_baseline(const RankingGroup& group);

// Uniformly random permutation, deterministic per (group_id, seed).
RankedList random_baseline(const RankingGroup& group, std::uint64_t seed);

// One line per candidate: group_id, pair_id, rank, score, gold label.
void save_ranked(const std::vector<RankedList>& rankings, const std::string& path);

}  // namespace qrank
