#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "qrank/corpus.hpp"
#include "qrank/distances.hpp"
#include "qrank/matrix.hpp"
#include "qrank/rng.hpp"

namespace qrank {

enum class Activation { Relu, Tanh };

const char* activation_name(Activation a);
Activation activation_from_name(std::string_view name);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 100;
    double learning_rate = 0.001;
    double momentum = 0.9;
    double dropout = 0.02;
    int shared_units = 64;
    int task_units = 32;
    Activation activation = Activation::Relu;
    std::uint64_t seed = 1;
    std::vector<Task> aux_tasks;
    FeatureMask feature_mask = full_mask();
    FeatureOptions feature_options;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct TaskHead {
    Matrix hidden_w;               // [shared_units x task_units]
    std::vector<double> hidden_b;  // [task_units]
    Matrix output_w;               // [task_units x class_count]
    std::vector<double> output_b;  // [class_count]

    bool operator==(const TaskHead&) const = default;
};

// One shared hidden layer feeding a per-task hidden layer and a per-task
// softmax classification layer.
struct MlpModel {
    int input_dim = kFeatureCount;
    Matrix shared_w;               // [input_dim x shared_units]
    std::vector<double> shared_b;  // [shared_units]
    std::map<Task, TaskHead> heads;
    Activation activation = Activation::Relu;
    FeatureMask feature_mask = full_mask();
    TrainConfig config;
    std::uint64_t rng_seed = 0;

    bool operator==(const MlpModel&) const = default;
};

// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
// deterministic in config.seed. class_counts keys define the model's heads
// and must cover every task in config.aux_tasks.
MlpModel init_model(const TrainConfig& config, const std::map<Task, int>& class_counts);

enum class Mode { Train, Eval };

struct ForwardCache {
    Matrix input;
    Matrix z_shared, h_shared;  // h_shared includes dropout scaling in train mode
    Matrix z_task, h_task;
    Matrix probs;
    Matrix dropout_keep;  // 0/1 keep mask; empty when dropout was not applied
    double keep_scale = 1.0;
};

// h1 = act(x W + b) with inverted dropout in train mode, h2 = act(h1 W_t +
// b_t), softmax output. Rows of the result sum to 1.
Matrix forward(const MlpModel& model, const Matrix& batch, Task task, Mode mode, Rng* rng,
               ForwardCache* cache = nullptr);

// Mean negative log-likelihood; probabilities clamp below at 1e-12.
double nll_loss(const Matrix& probs, const std::vector<int>& labels);

struct Gradients {
    Matrix shared_w;
    std::vector<double> shared_b;
    Matrix hidden_w;
    std::vector<double> hidden_b;
    Matrix output_w;
    std::vector<double> output_b;
};

Gradients backward(const MlpModel& model, Task task, const ForwardCache& cache,
                   const std::vector<int>& labels);

// Velocity buffers for classic momentum, same shapes as the parameters.
struct Velocity {
    Matrix shared_w;
    std::vector<double> shared_b;
    std::map<Task, TaskHead> heads;
};

Velocity zero_velocity(const MlpModel& model);

// v <- momentum*v - lr*grad; theta <- theta + v. Touches the shared layer and
// the addressed task's head only. Returns the batch loss (pre-update).
double sgd_step(MlpModel& model, const Matrix& batch, const std::vector<int>& labels, Task task,
                Velocity& velocity, const TrainConfig& config, Rng& dropout_rng);

struct GradCheckResult {
    double max_rel_error = 0.0;
    int checked = 0;
    int skipped_kinks = 0;
};

// Central-difference check of every shared + addressed-head parameter,
// dropout disabled. Parameters whose +/-eps evaluations land on different
// sides of a relu kink are excluded. inject_bug perturbs one analytic
// gradient entry (harness sanity hook).
GradCheckResult grad_check(const MlpModel& model, const Matrix& batch,
                           const std::vector<int>& labels, Task task, double eps = 1e-5,
                           double inject_bug = 0.0);

}  // namespace qrank
