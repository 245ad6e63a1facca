#include "qrank/ranker.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include "qrank/error.hpp"

namespace qrank {

const char* rank_provenance_name(RankProvenance p) {
    switch (p) {
        case RankProvenance::Model: return "model";
        case RankProvenance::IrOrder: return "ir_order";
        case RankProvenance::Random: return "random";
    }
    return "?";
}

namespace {

std::string hex64(std::uint64_t value) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

void check_provenance_hash(const TrainedModel& trained, const char* key, std::uint64_t actual,
                           std::vector<std::string>& warnings) {
    const auto it = trained.provenance.find(key);
    if (it != trained.provenance.end() && it->second != hex64(actual)) {
        warnings.push_back(std::string(key) + " differs from the checkpoint's (" + it->second +
                           " vs " + hex64(actual) + ")");
    }
}

}  // namespace

std::vector<std::string> compatibility_warnings(const TrainedModel& trained,
                                                const Featurizer& featurizer) {
    if (featurizer.options() != trained.model.config.feature_options) {
        throw ValidationError("featurizer/model fingerprint mismatch: feature options differ "
                              "(cosine/jaccard/trigram modes)");
    }
    std::vector<std::string> warnings;
    check_provenance_hash(trained, "vocab_unigram_fingerprint",
                          featurizer.unigram_vocab().fingerprint(), warnings);
    check_provenance_hash(trained, "vocab_trigram_fingerprint",
                          featurizer.trigram_vocab().fingerprint(), warnings);
    check_provenance_hash(trained, "embedding_fingerprint", featurizer.embeddings().fingerprint,
                          warnings);
    return warnings;
}

namespace {

RankedList sorted_by_score(const RankingGroup& group, std::vector<double> scores,
                           RankProvenance provenance) {
    std::vector<std::size_t> order(group.candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        const Candidate& ca = group.candidates[a];
        const Candidate& cb = group.candidates[b];
        if (ca.orig_rank != cb.orig_rank) return ca.orig_rank < cb.orig_rank;
        return ca.pair_id < cb.pair_id;
    });
    RankedList ranked;
    ranked.group_id = group.group_id;
    ranked.provenance = provenance;
    for (std::size_t idx : order) {
        const Candidate& c = group.candidates[idx];
        ranked.items.push_back({c.pair_id, scores[idx], c.gold_relevant});
    }
    return ranked;
}

}  // namespace

namespace {

RankedList rank_group_impl(const TrainedModel& trained, const RankingGroup& group,
                           const Featurizer& featurizer) {
    const auto head = trained.model.heads.find(Task::QQ);
    if (head == trained.model.heads.end() || head->second.output_w.cols != 2) {
        throw ValidationError("rank_group needs a model with a binary qq head");
    }
    if (group.candidates.empty()) {
        return RankedList{group.group_id, {}, RankProvenance::Model};
    }
    Matrix batch(static_cast<int>(group.candidates.size()), kFeatureCount);
    for (std::size_t r = 0; r < group.candidates.size(); ++r) {
        const FeatureVector fv = featurizer.features(group.original_text,
                                                     group.candidates[r].text,
                                                     trained.model.feature_mask);
        for (int c = 0; c < kFeatureCount; ++c) {
            batch(static_cast<int>(r), c) = fv.values[static_cast<std::size_t>(c)];
        }
    }
    const Matrix probs = forward(trained.model, batch, Task::QQ, Mode::Eval, nullptr);
    std::vector<double> scores(group.candidates.size());
    for (std::size_t r = 0; r < scores.size(); ++r) scores[r] = probs(static_cast<int>(r), 1);
    return sorted_by_score(group, std::move(scores), RankProvenance::Model);
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& warning : warnings) std::cerr << "warning: " << warning << '\n';
}

}  // namespace

RankedList rank_group(const TrainedModel& trained, const RankingGroup& group,
                      const Featurizer& featurizer) {
    print_warnings(compatibility_warnings(trained, featurizer));
    return rank_group_impl(trained, group, featurizer);
}

std::vector<RankedList> rank_groups(const TrainedModel& trained,
                                    const std::vector<RankingGroup>& groups,
                                    const Featurizer& featurizer) {
    // Surface fingerprint warnings once, not per group.
    print_warnings(compatibility_warnings(trained, featurizer));
    std::vector<RankedList> rankings;
    rankings.reserve(groups.size());
    for (const auto& group : groups) rankings.push_back(rank_group_impl(trained, group, featurizer));
    return rankings;
}

RankedList ir_baseline(const RankingGroup& group) {
    RankedList ranked;
    ranked.group_id = group.group_id;
    ranked.provenance = RankProvenance::IrOrder;
    for (const auto& c : group.candidates) {  // already ascending orig_rank
        if (c.orig_rank < 1) throw ValidationError("ir_baseline: candidate without orig_rank");
        ranked.items.push_back({c.pair_id, 1.0 / c.orig_rank, c.gold_relevant});
    }
    return ranked;
}

RankedList random_baseline(const RankingGroup& group, std::uint64_t seed) {
    std::vector<std::size_t> order(group.candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, group.group_id));
    rng.shuffle(order);
    RankedList ranked;
    ranked.group_id = group.group_id;
    ranked.provenance = RankProvenance::Random;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Candidate& c = group.candidates[order[i]];
        ranked.items.push_back({c.pair_id, 1.0 / static_cast<double>(i + 1), c.gold_relevant});
    }
    return ranked;
}

void save_ranked(const std::vector<RankedList>& rankings, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write ranked output: " + path);
    char line[512];
    for (const auto& ranked : rankings) {
        for (std::size_t i = 0; i < ranked.items.size(); ++i) {
            const auto& item = ranked.items[i];
            std::snprintf(line, sizeof(line), "%s\t%s\t%zu\t%.17g\t%s\n", ranked.group_id.c_str(),
                          item.pair_id.c_str(), i + 1, item.score,
                          item.gold_relevant ? "true" : "false");
            out << line;
        }
    }
}

}  // namespace qrank
