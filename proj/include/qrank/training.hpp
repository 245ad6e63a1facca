#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qrank/corpus.hpp"
#include "qrank/distances.hpp"
#include "qrank/neuralnet.hpp"

namespace qrank {

// Featurized examples of one task. All feature vectors share one mask.
struct TaskStream {
    Task task = Task::QQ;
    int class_count = 2;
    std::vector<FeatureVector> features;
    std::vector<int> labels;
    std::uint64_t shuffle_seed = 0;

    std::size_t size() const { return labels.size(); }
    std::uint64_t fingerprint() const;
};

TaskStream make_stream(const std::vector<PairRecord>& records, const Featurizer& featurizer,
                       const FeatureMask& mask, std::uint64_t shuffle_seed);

// Builds a stream from full (unmasked) cached feature values, re-applying the
// mask (masked slots become exact zeros).
TaskStream make_stream_from_values(Task task,
                                   const std::vector<std::array<double, kFeatureCount>>& values,
                                   const std::vector<int>& labels, const FeatureMask& mask,
                                   std::uint64_t shuffle_seed);

struct EpochBatch {
    int stream = 0;  // 0 = main, 1.. = aux in list order
    std::vector<std::size_t> indices;
};

// One epoch's batch sequence: every stream shuffled with its epoch-derived
// seed (shuffle_seed + epoch), then round-robin main -> aux1 -> aux2 -> ...
// until the main stream is exhausted; aux streams cycle through their
// shuffled order when shorter.
std::vector<EpochBatch> make_epoch_schedule(std::size_t main_size,
                                            const std::vector<std::size_t>& aux_sizes,
                                            int batch_size, std::uint64_t main_shuffle_seed,
                                            const std::vector<std::uint64_t>& aux_shuffle_seeds,
                                            int epoch);

struct EpochLogEntry {
    int epoch = 0;
    Task task = Task::QQ;
    double mean_loss = 0.0;

    bool operator==(const EpochLogEntry&) const = default;
};

struct TrainedModel {
    MlpModel model;
    std::vector<EpochLogEntry> log;
    // Dataset/vocab/embedding fingerprints and other reproducibility facts;
    // string-keyed so the CLI can add its own entries.
    std::map<std::string, std::string> provenance;
};

// Single- or multi-task training. STL is the degenerate case aux = {}.
// Aux streams are expected to be pre-sampled to the main stream's size.
TrainedModel train(const TrainConfig& config, const TaskStream& main,
                   const std::vector<TaskStream>& aux);

struct CurvePoint {
    double fraction = 0.0;
    std::uint64_t seed = 0;
    double map_score = 0.0;
};

// For each (fraction, seed): shuffle the main stream once with the seed, train
// on the first ceil(f*n) examples (aux streams cut to the same size), and
// score the trained model with dev_map.
std::vector<CurvePoint> learning_curve(const TrainConfig& config, const TaskStream& main,
                                       const std::vector<TaskStream>& aux,
                                       const std::vector<double>& fractions,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::function<double(const TrainedModel&)>& dev_map);

// Versioned JSON checkpoint; doubles round-trip bit-exactly.
void save_checkpoint(const TrainedModel& trained, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);
std::string checkpoint_to_json(const TrainedModel& trained);
TrainedModel checkpoint_from_json(const std::string& text, const std::string& source_name);

void write_run_log(const TrainedModel& trained, const std::string& path);

}  // namespace qrank
