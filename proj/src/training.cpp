#include "qrank/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qrank/error.hpp"

namespace qrank {

using nlohmann::json;

namespace {

std::uint64_t hash_doubles(const double* values, std::size_t count, std::uint64_t h) {
    for (std::size_t i = 0; i < count; ++i) {
        char bytes[sizeof(double)];
        std::memcpy(bytes, &values[i], sizeof(double));
        h = fnv1a(std::string_view(bytes, sizeof(double)), h);
    }
    return h;
}

}  // namespace

std::uint64_t TaskStream::fingerprint() const {
    std::uint64_t h = fnv1a(task_name(task));
    for (std::size_t i = 0; i < features.size(); ++i) {
        h = hash_doubles(features[i].values.data(), features[i].values.size(), h);
        h = mix_seed(h, static_cast<std::uint64_t>(labels[i]));
    }
    return h;
}

TaskStream make_stream(const std::vector<PairRecord>& records, const Featurizer& featurizer,
                       const FeatureMask& mask, std::uint64_t shuffle_seed) {
    TaskStream stream;
    if (records.empty()) throw ValidationError("cannot build a stream from zero records");
    stream.task = records.front().task;
    stream.class_count = task_class_count(stream.task);
    stream.shuffle_seed = derive_seed(shuffle_seed, std::string("shuffle_") + task_name(stream.task));
    stream.features.reserve(records.size());
    stream.labels.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.task != stream.task) {
            throw ValidationError("mixed tasks in one stream: " + std::string(task_name(rec.task)) +
                                  " and " + task_name(stream.task));
        }
        stream.features.push_back(featurizer.features(rec.text_a, rec.text_b, mask));
        stream.labels.push_back(map_label(rec.raw_label, rec.task).class_index);
    }
    return stream;
}

TaskStream make_stream_from_values(Task task,
                                   const std::vector<std::array<double, kFeatureCount>>& values,
                                   const std::vector<int>& labels, const FeatureMask& mask,
                                   std::uint64_t shuffle_seed) {
    if (values.size() != labels.size()) {
        throw ValidationError("feature rows and labels differ in count");
    }
    TaskStream stream;
    stream.task = task;
    stream.class_count = task_class_count(task);
    stream.shuffle_seed = derive_seed(shuffle_seed, std::string("shuffle_") + task_name(task));
    stream.features.reserve(values.size());
    for (const auto& row : values) {
        FeatureVector fv;
        fv.mask = mask;
        for (int i = 0; i < kFeatureCount; ++i) {
            fv.values[static_cast<std::size_t>(i)] = mask[static_cast<std::size_t>(i)] ? row[static_cast<std::size_t>(i)] : 0.0;
        }
        stream.features.push_back(fv);
    }
    stream.labels = labels;
    return stream;
}

std::vector<EpochBatch> make_epoch_schedule(std::size_t main_size,
                                            const std::vector<std::size_t>& aux_sizes,
                                            int batch_size, std::uint64_t main_shuffle_seed,
                                            const std::vector<std::uint64_t>& aux_shuffle_seeds,
                                            int epoch) {
    if (main_size == 0) throw ValidationError("empty main stream");
    if (aux_sizes.size() != aux_shuffle_seeds.size()) {
        throw ValidationError("aux sizes and seeds differ in count");
    }
    auto shuffled = [epoch](std::size_t n, std::uint64_t seed) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(seed + static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
        return order;
    };
    const std::vector<std::size_t> main_order = shuffled(main_size, main_shuffle_seed);
    std::vector<std::vector<std::size_t>> aux_orders;
    for (std::size_t i = 0; i < aux_sizes.size(); ++i) {
        if (aux_sizes[i] == 0) throw ValidationError("empty auxiliary stream");
        aux_orders.push_back(shuffled(aux_sizes[i], aux_shuffle_seeds[i]));
    }

    std::vector<EpochBatch> schedule;
    std::vector<std::size_t> aux_cursor(aux_sizes.size(), 0);
    const auto bs = static_cast<std::size_t>(batch_size);
    for (std::size_t start = 0; start < main_size; start += bs) {
        EpochBatch main_batch;
        main_batch.stream = 0;
        const std::size_t end = std::min(main_size, start + bs);
        main_batch.indices.assign(main_order.begin() + static_cast<std::ptrdiff_t>(start),
                                  main_order.begin() + static_cast<std::ptrdiff_t>(end));
        schedule.push_back(std::move(main_batch));
        for (std::size_t a = 0; a < aux_orders.size(); ++a) {
            EpochBatch aux_batch;
            aux_batch.stream = static_cast<int>(a) + 1;
            const std::size_t take = std::min(bs, aux_orders[a].size());
            for (std::size_t k = 0; k < take; ++k) {
                aux_batch.indices.push_back(aux_orders[a][aux_cursor[a]]);
                aux_cursor[a] = (aux_cursor[a] + 1) % aux_orders[a].size();
            }
            schedule.push_back(std::move(aux_batch));
        }
    }
    return schedule;
}

namespace {

Matrix batch_matrix(const TaskStream& stream, const std::vector<std::size_t>& indices) {
    Matrix x(static_cast<int>(indices.size()), kFeatureCount);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& values = stream.features[indices[r]].values;
        for (int c = 0; c < kFeatureCount; ++c) x(static_cast<int>(r), c) = values[static_cast<std::size_t>(c)];
    }
    return x;
}

std::vector<int> batch_labels(const TaskStream& stream, const std::vector<std::size_t>& indices) {
    std::vector<int> y;
    y.reserve(indices.size());
    for (std::size_t idx : indices) y.push_back(stream.labels[idx]);
    return y;
}

void check_stream_masks(const TaskStream& stream, const FeatureMask& mask) {
    for (const auto& fv : stream.features) {
        if (fv.mask != mask) {
            throw ValidationError(std::string("feature mask mismatch in stream for task ") +
                                  task_name(stream.task));
        }
    }
}

}  // namespace

TrainedModel train(const TrainConfig& config, const TaskStream& main,
                   const std::vector<TaskStream>& aux) {
    config.validate();
    if (main.size() == 0) throw ValidationError("empty main stream");
    check_stream_masks(main, config.feature_mask);
    for (const auto& s : aux) check_stream_masks(s, config.feature_mask);

    std::set<Task> configured(config.aux_tasks.begin(), config.aux_tasks.end());
    std::set<Task> provided;
    for (const auto& s : aux) provided.insert(s.task);
    if (configured != provided) {
        throw ValidationError("aux streams do not match config.aux_tasks");
    }

    std::map<Task, int> class_counts;
    class_counts[main.task] = main.class_count;
    for (const auto& s : aux) class_counts[s.task] = s.class_count;

    TrainedModel trained;
    trained.model = init_model(config, class_counts);
    Velocity velocity = zero_velocity(trained.model);
    Rng dropout_rng(derive_seed(config.seed, "dropout"));

    std::vector<std::size_t> aux_sizes;
    std::vector<std::uint64_t> aux_seeds;
    for (const auto& s : aux) {
        aux_sizes.push_back(s.size());
        aux_seeds.push_back(s.shuffle_seed);
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto schedule = make_epoch_schedule(main.size(), aux_sizes, config.batch_size,
                                                  main.shuffle_seed, aux_seeds, epoch);
        std::vector<double> loss_sum(aux.size() + 1, 0.0);
        std::vector<int> batch_count(aux.size() + 1, 0);
        for (const auto& batch : schedule) {
            const TaskStream& stream = batch.stream == 0 ? main : aux[static_cast<std::size_t>(batch.stream - 1)];
            const Matrix x = batch_matrix(stream, batch.indices);
            const std::vector<int> y = batch_labels(stream, batch.indices);
            const double loss =
                sgd_step(trained.model, x, y, stream.task, velocity, config, dropout_rng);
            loss_sum[static_cast<std::size_t>(batch.stream)] += loss;
            ++batch_count[static_cast<std::size_t>(batch.stream)];
        }
        trained.log.push_back({epoch, main.task, loss_sum[0] / batch_count[0]});
        for (std::size_t a = 0; a < aux.size(); ++a) {
            trained.log.push_back({epoch, aux[a].task, loss_sum[a + 1] / batch_count[a + 1]});
        }
    }

    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(main.fingerprint()));
    trained.provenance["stream_" + std::string(task_name(main.task))] = buf;
    for (const auto& s : aux) {
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(s.fingerprint()));
        trained.provenance["stream_" + std::string(task_name(s.task))] = buf;
    }
    return trained;
}

std::vector<CurvePoint> learning_curve(const TrainConfig& config, const TaskStream& main,
                                       const std::vector<TaskStream>& aux,
                                       const std::vector<double>& fractions,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::function<double(const TrainedModel&)>& dev_map) {
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (fractions[i] <= 0.0 || fractions[i] > 1.0) {
            throw ValidationError("curve fractions must lie in (0, 1]");
        }
        if (i > 0 && fractions[i] <= fractions[i - 1]) {
            throw ValidationError("curve fractions must be ascending");
        }
    }
    if (fractions.empty()) throw ValidationError("no curve fractions given");
    if (seeds.empty()) throw ValidationError("no curve seeds given");
    if (main.size() == 0) throw ValidationError("empty main stream");

    auto subset = [](const TaskStream& stream, const std::vector<std::size_t>& order, std::size_t k,
                     std::uint64_t seed) {
        TaskStream sub;
        sub.task = stream.task;
        sub.class_count = stream.class_count;
        sub.shuffle_seed = derive_seed(seed, std::string("shuffle_") + task_name(stream.task));
        for (std::size_t i = 0; i < k; ++i) {
            sub.features.push_back(stream.features[order[i]]);
            sub.labels.push_back(stream.labels[order[i]]);
        }
        return sub;
    };

    std::vector<CurvePoint> points;
    for (double fraction : fractions) {
        const auto k = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(main.size())));
        if (k == 0) throw ValidationError("curve subset is empty at the smallest fraction");
        for (std::uint64_t seed : seeds) {
            std::vector<std::size_t> main_order(main.size());
            std::iota(main_order.begin(), main_order.end(), std::size_t{0});
            Rng(derive_seed(seed, "curve_subset")).shuffle(main_order);

            TaskStream sub_main = subset(main, main_order, k, seed);
            std::vector<TaskStream> sub_aux;
            for (const auto& s : aux) {
                std::vector<std::size_t> order(s.size());
                std::iota(order.begin(), order.end(), std::size_t{0});
                Rng(derive_seed(seed, std::string("curve_subset_") + task_name(s.task))).shuffle(order);
                sub_aux.push_back(subset(s, order, std::min(k, s.size()), seed));
            }

            TrainConfig run_config = config;
            run_config.seed = seed;
            const TrainedModel trained = train(run_config, sub_main, sub_aux);
            points.push_back({fraction, seed, dev_map(trained)});
        }
    }
    return points;
}

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty()) throw ValidationError("checkpoint: bad matrix for " + what);
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < m.rows; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != m.cols) {
            throw ValidationError("checkpoint: ragged matrix for " + what);
        }
        for (int c = 0; c < m.cols; ++c) {
            const double v = row[static_cast<std::size_t>(c)].get<double>();
            if (!std::isfinite(v)) throw ValidationError("checkpoint: non-finite weight in " + what);
            m(r, c) = v;
        }
    }
    return m;
}

std::vector<double> vector_from_json(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw ValidationError("checkpoint: bad vector for " + what);
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& x : arr) {
        const double value = x.get<double>();
        if (!std::isfinite(value)) throw ValidationError("checkpoint: non-finite value in " + what);
        v.push_back(value);
    }
    return v;
}

json config_to_json(const TrainConfig& config) {
    json j;
    j["epochs"] = config.epochs;
    j["batch_size"] = config.batch_size;
    j["learning_rate"] = config.learning_rate;
    j["momentum"] = config.momentum;
    j["dropout"] = config.dropout;
    j["shared_units"] = config.shared_units;
    j["task_units"] = config.task_units;
    j["activation"] = activation_name(config.activation);
    j["seed"] = config.seed;
    json aux = json::array();
    for (Task t : config.aux_tasks) aux.push_back(task_name(t));
    j["aux_tasks"] = std::move(aux);
    json mask = json::array();
    for (bool b : config.feature_mask) mask.push_back(b);
    j["feature_mask"] = std::move(mask);
    j["cosine"] = cosine_mode_name(config.feature_options.cosine);
    j["jaccard"] = jaccard_mode_name(config.feature_options.jaccard);
    j["trigram"] = vocab_kind_name(config.feature_options.trigram);
    return j;
}

TrainConfig config_from_json(const json& j) {
    TrainConfig config;
    config.epochs = j.at("epochs").get<int>();
    config.batch_size = j.at("batch_size").get<int>();
    config.learning_rate = j.at("learning_rate").get<double>();
    config.momentum = j.at("momentum").get<double>();
    config.dropout = j.at("dropout").get<double>();
    config.shared_units = j.at("shared_units").get<int>();
    config.task_units = j.at("task_units").get<int>();
    config.activation = activation_from_name(j.at("activation").get<std::string>());
    config.seed = j.at("seed").get<std::uint64_t>();
    config.aux_tasks.clear();
    for (const auto& t : j.at("aux_tasks")) config.aux_tasks.push_back(task_from_name(t.get<std::string>()));
    const json& mask = j.at("feature_mask");
    if (mask.size() != kFeatureCount) throw ValidationError("checkpoint: feature mask must have 14 entries");
    for (std::size_t i = 0; i < kFeatureCount; ++i) config.feature_mask[i] = mask[i].get<bool>();
    config.feature_options.cosine = cosine_mode_from_name(j.at("cosine").get<std::string>());
    config.feature_options.jaccard = jaccard_mode_from_name(j.at("jaccard").get<std::string>());
    config.feature_options.trigram = vocab_kind_from_name(j.at("trigram").get<std::string>());
    return config;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

std::string checkpoint_to_json(const TrainedModel& trained) {
    const MlpModel& model = trained.model;
    json j;
    j["format"] = "qrank-checkpoint";
    j["version"] = kCheckpointVersion;
    j["config"] = config_to_json(model.config);
    json names = json::array();
    for (const auto& n : feature_names()) names.push_back(n);
    j["feature_names"] = std::move(names);

    json m;
    m["input_dim"] = model.input_dim;
    m["activation"] = activation_name(model.activation);
    m["rng_seed"] = model.rng_seed;
    m["shared_w"] = matrix_to_json(model.shared_w);
    m["shared_b"] = model.shared_b;
    json heads;
    for (const auto& [task, head] : model.heads) {
        json h;
        h["hidden_w"] = matrix_to_json(head.hidden_w);
        h["hidden_b"] = head.hidden_b;
        h["output_w"] = matrix_to_json(head.output_w);
        h["output_b"] = head.output_b;
        heads[task_name(task)] = std::move(h);
    }
    m["heads"] = std::move(heads);
    j["model"] = std::move(m);

    json log = json::array();
    for (const auto& entry : trained.log) {
        log.push_back({{"epoch", entry.epoch}, {"task", task_name(entry.task)}, {"mean_loss", entry.mean_loss}});
    }
    j["log"] = std::move(log);
    j["provenance"] = trained.provenance;
    return j.dump(2);
}

TrainedModel checkpoint_from_json(const std::string& text, const std::string& source_name) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(source_name + ": checkpoint parse error: " + e.what());
    }
    try {
        if (j.value("format", "") != "qrank-checkpoint") {
            throw ValidationError(source_name + ": not a checkpoint file");
        }
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw ValidationError(source_name + ": unsupported checkpoint version " +
                                  std::to_string(j.at("version").get<int>()));
        }
        TrainedModel trained;
        MlpModel& model = trained.model;
        model.config = config_from_json(j.at("config"));
        const json& m = j.at("model");
        model.input_dim = m.at("input_dim").get<int>();
        model.activation = activation_from_name(m.at("activation").get<std::string>());
        model.rng_seed = m.at("rng_seed").get<std::uint64_t>();
        model.feature_mask = model.config.feature_mask;
        model.shared_w = matrix_from_json(m.at("shared_w"), "shared_w");
        model.shared_b = vector_from_json(m.at("shared_b"), "shared_b");
        if (model.shared_w.rows != model.input_dim ||
            model.shared_w.cols != model.config.shared_units ||
            static_cast<int>(model.shared_b.size()) != model.config.shared_units) {
            throw ValidationError(source_name + ": shared layer dimensions are inconsistent");
        }
        for (const auto& [name, h] : m.at("heads").items()) {
            const Task task = task_from_name(name);
            TaskHead head;
            head.hidden_w = matrix_from_json(h.at("hidden_w"), "hidden_w/" + name);
            head.hidden_b = vector_from_json(h.at("hidden_b"), "hidden_b/" + name);
            head.output_w = matrix_from_json(h.at("output_w"), "output_w/" + name);
            head.output_b = vector_from_json(h.at("output_b"), "output_b/" + name);
            if (head.hidden_w.rows != model.config.shared_units ||
                head.hidden_w.cols != model.config.task_units ||
                static_cast<int>(head.hidden_b.size()) != model.config.task_units ||
                head.output_w.rows != model.config.task_units ||
                head.output_w.cols != static_cast<int>(head.output_b.size())) {
                throw ValidationError(source_name + ": head '" + name + "' dimensions are inconsistent");
            }
            model.heads.emplace(task, std::move(head));
        }
        if (model.heads.empty()) throw ValidationError(source_name + ": checkpoint has no task heads");
        for (const auto& entry : j.at("log")) {
            trained.log.push_back({entry.at("epoch").get<int>(),
                                   task_from_name(entry.at("task").get<std::string>()),
                                   entry.at("mean_loss").get<double>()});
        }
        for (const auto& [key, value] : j.at("provenance").items()) {
            trained.provenance[key] = value.get<std::string>();
        }
        return trained;
    } catch (const json::exception& e) {
        throw ValidationError(source_name + ": malformed checkpoint: " + e.what());
    }
}

void save_checkpoint(const TrainedModel& trained, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint: " + path);
    out << checkpoint_to_json(trained) << '\n';
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return checkpoint_from_json(buffer.str(), path);
}

void write_run_log(const TrainedModel& trained, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write run log: " + path);
    char line[128];
    for (const auto& entry : trained.log) {
        std::snprintf(line, sizeof(line), "epoch=%d task=%s mean_loss=%.17g\n", entry.epoch,
                      task_name(entry.task), entry.mean_loss);
        out << line;
    }
    out << "# provenance\n";
    for (const auto& [key, value] : trained.provenance) {
        out << key << '=' << value << '\n';
    }
}

}  // namespace qrank
