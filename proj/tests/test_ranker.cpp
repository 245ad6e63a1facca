#include <doctest.h>

#include <algorithm>
#include <set>

#include "qrank/error.hpp"
#include "qrank/evaluation.hpp"
#include "qrank/ranker.hpp"
#include "support/metrics_oracle.hpp"
#include "support/pipeline.hpp"

using namespace qrank;
using namespace qrank::testsupport;

namespace {

RankingGroup make_group(const std::string& id, const std::vector<bool>& gold) {
    RankingGroup group;
    group.group_id = id;
    group.original_text = "original";
    for (std::size_t i = 0; i < gold.size(); ++i) {
        group.candidates.push_back(Candidate{id + "_c" + std::to_string(i),
                                             "candidate " + std::to_string(i), gold[i],
                                             static_cast<int>(i) + 1});
    }
    return group;
}

// Model that scores a pair by its jaccard_unigram feature alone: one shared
// unit reading slot 12, pass-through head, positive output weight.
TrainedModel handmade_overlap_model() {
    TrainConfig config;
    config.shared_units = 1;
    config.task_units = 1;
    TrainedModel trained;
    MlpModel& m = trained.model;
    m.config = config;
    m.input_dim = kFeatureCount;
    m.shared_w = Matrix(kFeatureCount, 1);
    m.shared_w(12, 0) = 1.0;
    m.shared_b = {0.0};
    TaskHead head;
    head.hidden_w = Matrix(1, 1);
    head.hidden_w(0, 0) = 1.0;
    head.hidden_b = {0.0};
    head.output_w = Matrix(1, 2);
    head.output_w(0, 1) = 4.0;
    head.output_b = {0.0, 0.0};
    m.heads.emplace(Task::QQ, std::move(head));
    return trained;
}

Featurizer plain_featurizer() {
    EmbeddingTable table;
    table.dim = 2;
    table.vectors["alpha"] = {1.0, 0.0};
    return Featurizer::from_texts({"alpha beta gamma delta", "epsilon zeta"}, table, {});
}

}  // namespace

TEST_CASE("rank_group orders by model score with deterministic tie-breaks") {
    const TrainedModel trained = handmade_overlap_model();
    const Featurizer fz = plain_featurizer();

    RankingGroup group;
    group.group_id = "g";
    group.original_text = "alpha beta gamma";
    group.candidates = {
        {"far", "epsilon zeta", false, 1},
        {"near", "alpha beta gamma", true, 2},
        {"mid", "alpha epsilon", false, 3},
    };
    const RankedList ranked = rank_group(trained, group, fz);
    REQUIRE(ranked.items.size() == 3);
    CHECK(ranked.items[0].pair_id == "near");
    CHECK(ranked.items[1].pair_id == "mid");
    CHECK(ranked.items[2].pair_id == "far");
    for (const auto& item : ranked.items) {
        CHECK(item.score >= 0.0);
        CHECK(item.score <= 1.0);
    }

    // bit-equal features: order falls back to ascending orig_rank
    group.candidates = {
        {"b", "alpha", false, 2},
        {"a", "alpha", true, 1},
        {"c", "alpha", false, 3},
    };
    const RankedList tied = rank_group(trained, group, fz);
    CHECK(tied.items[0].pair_id == "a");
    CHECK(tied.items[1].pair_id == "b");
    CHECK(tied.items[2].pair_id == "c");
}

TEST_CASE("raising one candidate's score swaps only that pair") {
    const TrainedModel trained = handmade_overlap_model();
    const Featurizer fz = plain_featurizer();
    RankingGroup group;
    group.group_id = "g";
    group.original_text = "alpha beta gamma delta";
    group.candidates = {
        {"p", "alpha beta", false, 1},
        {"q", "alpha", false, 2},
        {"r", "epsilon", false, 3},
    };
    const RankedList before = rank_group(trained, group, fz);
    CHECK(before.items[0].pair_id == "p");
    CHECK(before.items[1].pair_id == "q");
    CHECK(before.items[2].pair_id == "r");

    group.candidates[1].text = "alpha beta gamma";  // q now outscores p
    const RankedList after = rank_group(trained, group, fz);
    CHECK(after.items[0].pair_id == "q");
    CHECK(after.items[1].pair_id == "p");
    CHECK(after.items[2].pair_id == "r");  // unrelated order unchanged
}

TEST_CASE("rank_group output is a permutation of the group") {
    const TrainedModel trained = handmade_overlap_model();
    const Featurizer fz = plain_featurizer();
    const auto records = synthetic_qq_records(5, 10, 3);
    for (const auto& group : group_records(records)) {
        // vocab here is tiny and unrelated; scores collapse but the contract holds
        const RankedList ranked = rank_group(trained, group, fz);
        std::multiset<std::string> in_ids, out_ids;
        for (const auto& c : group.candidates) in_ids.insert(c.pair_id);
        for (const auto& item : ranked.items) out_ids.insert(item.pair_id);
        CHECK(in_ids == out_ids);
    }
}

TEST_CASE("rank_group is invariant to record arrival order") {
    const TrainedModel trained = handmade_overlap_model();
    const Featurizer fz = plain_featurizer();
    auto records = synthetic_qq_records(3, 10, 5);
    const auto groups_sorted = group_records(records);
    Rng rng(9);
    rng.shuffle(records);
    const auto groups_shuffled = group_records(records);

    REQUIRE(groups_sorted.size() == groups_shuffled.size());
    for (const auto& group : groups_sorted) {
        const auto matching = std::find_if(groups_shuffled.begin(), groups_shuffled.end(),
                                           [&](const RankingGroup& g) { return g.group_id == group.group_id; });
        REQUIRE(matching != groups_shuffled.end());
        const RankedList a = rank_group(trained, group, fz);
        const RankedList b = rank_group(trained, *matching, fz);
        for (std::size_t i = 0; i < a.items.size(); ++i) {
            CHECK(a.items[i].pair_id == b.items[i].pair_id);
        }
    }
}

TEST_CASE("a trained model ranks the verbatim duplicate first") {
    TrainConfig config;
    config.seed = 41;
    config.epochs = 60;
    const PipelineFixture fx = make_pipeline_fixture(60, 1, 41, config);
    const TrainedModel trained = train(config, fx.main_stream, {});

    RankingGroup group;
    group.group_id = "probe";
    group.original_text = fx.train_records.front().text_a;
    group.candidates.push_back({"dup", group.original_text, true, 5});
    for (int i = 0; i < 9; ++i) {
        group.candidates.push_back({"noise" + std::to_string(i),
                                    "zzz" + std::to_string(i) + " qqq www", false, i + (i >= 4 ? 2 : 1)});
    }
    std::stable_sort(group.candidates.begin(), group.candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.orig_rank < b.orig_rank; });
    const RankedList ranked = rank_group(trained, group, fx.featurizer);
    CHECK(ranked.items.front().pair_id == "dup");
}

TEST_CASE("ir baseline follows the original retrieval order") {
    const RankingGroup group = make_group("g", {false, true, false, true});
    const RankedList ranked = ir_baseline(group);
    REQUIRE(ranked.items.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(ranked.items[i].pair_id == "g_c" + std::to_string(i));
        CHECK(ranked.items[i].score == doctest::Approx(1.0 / static_cast<double>(i + 1)));
    }
    CHECK(ranked.provenance == RankProvenance::IrOrder);

    // groups built from shuffled records still come out in rank order
    auto records = synthetic_qq_records(2, 10, 21);
    Rng rng(2);
    rng.shuffle(records);
    for (const auto& g : group_records(records)) {
        const RankedList r = ir_baseline(g);
        for (std::size_t i = 1; i < r.items.size(); ++i) CHECK(r.items[i - 1].score > r.items[i].score);
    }
}

TEST_CASE("random baseline permutes deterministically per group and seed") {
    const RankingGroup group = make_group("g", {true, false, true, false, false});
    const RankedList a = random_baseline(group, 7);
    const RankedList b = random_baseline(group, 7);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i].pair_id == b.items[i].pair_id);

    std::multiset<std::string> in_ids, out_ids;
    for (const auto& c : group.candidates) in_ids.insert(c.pair_id);
    for (const auto& item : a.items) out_ids.insert(item.pair_id);
    CHECK(in_ids == out_ids);

    // distinct groups get distinct permutations under one seed
    const RankingGroup other = make_group("h", {true, false, true, false, false});
    bool any_difference = false;
    for (int seed = 0; seed < 20 && !any_difference; ++seed) {
        const RankedList x = random_baseline(group, static_cast<std::uint64_t>(seed));
        const RankedList y = random_baseline(other, static_cast<std::uint64_t>(seed));
        for (std::size_t i = 0; i < x.items.size(); ++i) {
            if (x.items[i].pair_id.substr(1) != y.items[i].pair_id.substr(1)) any_difference = true;
        }
    }
    CHECK(any_difference);
}

TEST_CASE("random baseline mean AP matches the exact expectation") {
    // 10 candidates, 4 relevant: enumerate all C(10,4) equally likely
    // placements of the relevant items for the exact expected AP.
    const RankingGroup group =
        make_group("g", {true, true, true, true, false, false, false, false, false, false});
    double exact = 0.0;
    int patterns = 0;
    std::vector<bool> pattern(10, false);
    std::fill(pattern.begin(), pattern.begin() + 4, true);
    std::sort(pattern.begin(), pattern.end());
    do {
        RankedList ranked;
        ranked.group_id = "g";
        for (int i = 0; i < 10; ++i) ranked.items.push_back({"c", 0.0, pattern[static_cast<std::size_t>(i)]});
        exact += *oracle_average_precision(ranked, 10);
        ++patterns;
    } while (std::next_permutation(pattern.begin(), pattern.end()));
    exact /= patterns;
    CHECK(patterns == 210);

    double mean = 0.0;
    const int seeds = 1000;
    for (int seed = 0; seed < seeds; ++seed) {
        const RankedList ranked = random_baseline(group, static_cast<std::uint64_t>(seed));
        mean += *average_precision(ranked, 10);
    }
    mean /= seeds;
    CHECK(std::abs(mean - exact) <= 0.01);
}

TEST_CASE("feature-option mismatches are fatal, fingerprint drift warns") {
    TrainedModel trained = handmade_overlap_model();
    const Featurizer fz = plain_featurizer();

    trained.model.config.feature_options.cosine = CosineMode::Standard;
    CHECK_THROWS_AS(compatibility_warnings(trained, fz), ValidationError);

    trained.model.config.feature_options.cosine = CosineMode::SumNorms;
    trained.provenance["vocab_unigram_fingerprint"] = "not_the_real_hash";
    const auto warnings = compatibility_warnings(trained, fz);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("vocab_unigram_fingerprint") != std::string::npos);
}

TEST_CASE("ranked output file has one line per candidate") {
    const RankingGroup group = make_group("g", {true, false});
    TempDir dir;
    save_ranked({ir_baseline(group)}, dir.file("ranked.tsv"));
    std::ifstream in(dir.file("ranked.tsv"));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].find("g\tg_c0\t1\t1\ttrue") == 0);
    CHECK(lines[1].find("g\tg_c1\t2\t0.5\tfalse") == 0);
}
