#include "qrank/neuralnet.hpp"

#include <algorithm>
#include <cmath>

#include "qrank/error.hpp"

namespace qrank {

const char* activation_name(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation activation_from_name(std::string_view name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw ValidationError("unknown activation '" + std::string(name) + "' (expected relu or tanh)");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("momentum must be in [0, 1)");
    if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
    if (shared_units < 1 || task_units < 1) throw ValidationError("hidden layer sizes must be >= 1");
    if (active_feature_count(feature_mask) == 0) {
        throw ValidationError("feature mask leaves no active features (degenerate model)");
    }
}

namespace {

// out[B x N] = x[B x K] * w[K x N] + b
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix out(x.rows, w.cols);
    for (int r = 0; r < x.rows; ++r) {
        for (int k = 0; k < x.cols; ++k) {
            const double xv = x(r, k);
            if (xv == 0.0) continue;
            for (int c = 0; c < w.cols; ++c) out(r, c) += xv * w(k, c);
        }
        for (int c = 0; c < w.cols; ++c) out(r, c) += b[static_cast<std::size_t>(c)];
    }
    return out;
}

// out[K x N] = x[B x K]^T * d[B x N]
Matrix transpose_times(const Matrix& x, const Matrix& d) {
    Matrix out(x.cols, d.cols);
    for (int b = 0; b < x.rows; ++b) {
        for (int k = 0; k < x.cols; ++k) {
            const double xv = x(b, k);
            if (xv == 0.0) continue;
            for (int n = 0; n < d.cols; ++n) out(k, n) += xv * d(b, n);
        }
    }
    return out;
}

// out[B x K] = d[B x N] * w[K x N]^T
Matrix times_transpose(const Matrix& d, const Matrix& w) {
    Matrix out(d.rows, w.rows);
    for (int b = 0; b < d.rows; ++b) {
        for (int n = 0; n < d.cols; ++n) {
            const double dv = d(b, n);
            if (dv == 0.0) continue;
            for (int k = 0; k < w.rows; ++k) out(b, k) += dv * w(k, n);
        }
    }
    return out;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> sums(static_cast<std::size_t>(m.cols), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) sums[static_cast<std::size_t>(c)] += m(r, c);
    }
    return sums;
}

double activate(double z, Activation a) {
    return a == Activation::Relu ? std::max(0.0, z) : std::tanh(z);
}

double activate_deriv(double z, Activation a) {
    if (a == Activation::Relu) return z > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

Matrix map_activation(const Matrix& z, Activation a) {
    Matrix out = z;
    for (auto& v : out.data) v = activate(v, a);
    return out;
}

void softmax_rows(Matrix& m) {
    for (int r = 0; r < m.rows; ++r) {
        double mx = m(r, 0);
        for (int c = 1; c < m.cols; ++c) mx = std::max(mx, m(r, c));
        double sum = 0.0;
        for (int c = 0; c < m.cols; ++c) {
            m(r, c) = std::exp(m(r, c) - mx);
            sum += m(r, c);
        }
        for (int c = 0; c < m.cols; ++c) m(r, c) /= sum;
    }
}

const TaskHead& head_for(const MlpModel& model, Task task) {
    const auto it = model.heads.find(task);
    if (it == model.heads.end()) {
        throw ValidationError(std::string("model has no head for task ") + task_name(task));
    }
    return it->second;
}

void glorot_fill(Matrix& m, Rng& rng) {
    const double bound = std::sqrt(6.0 / (m.rows + m.cols));
    for (auto& v : m.data) v = rng.uniform(-bound, bound);
}

}  // namespace

MlpModel init_model(const TrainConfig& config, const std::map<Task, int>& class_counts) {
    config.validate();
    for (Task t : config.aux_tasks) {
        if (!class_counts.count(t)) {
            throw ValidationError(std::string("missing class count for configured task ") + task_name(t));
        }
    }
    MlpModel model;
    model.input_dim = kFeatureCount;
    model.activation = config.activation;
    model.feature_mask = config.feature_mask;
    model.config = config;
    model.rng_seed = config.seed;

    Rng rng(derive_seed(config.seed, "init"));
    model.shared_w = Matrix(model.input_dim, config.shared_units);
    glorot_fill(model.shared_w, rng);
    model.shared_b.assign(static_cast<std::size_t>(config.shared_units), 0.0);
    for (const auto& [task, classes] : class_counts) {
        TaskHead head;
        head.hidden_w = Matrix(config.shared_units, config.task_units);
        glorot_fill(head.hidden_w, rng);
        head.hidden_b.assign(static_cast<std::size_t>(config.task_units), 0.0);
        head.output_w = Matrix(config.task_units, classes);
        glorot_fill(head.output_w, rng);
        head.output_b.assign(static_cast<std::size_t>(classes), 0.0);
        model.heads.emplace(task, std::move(head));
    }
    return model;
}

Matrix forward(const MlpModel& model, const Matrix& batch, Task task, Mode mode, Rng* rng,
               ForwardCache* cache) {
    if (batch.cols != model.input_dim) {
        throw ValidationError("batch has " + std::to_string(batch.cols) + " columns, model expects " +
                              std::to_string(model.input_dim));
    }
    const TaskHead& head = head_for(model, task);

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.input = batch;
    c.z_shared = affine(batch, model.shared_w, model.shared_b);
    c.h_shared = map_activation(c.z_shared, model.activation);
    c.dropout_keep = Matrix();
    c.keep_scale = 1.0;

    const double p = model.config.dropout;
    if (mode == Mode::Train && p > 0.0) {
        if (!rng) throw ValidationError("train-mode forward with dropout needs an rng");
        c.dropout_keep = Matrix(c.h_shared.rows, c.h_shared.cols);
        c.keep_scale = 1.0 / (1.0 - p);
        for (std::size_t i = 0; i < c.h_shared.data.size(); ++i) {
            const bool keep = rng->uniform() >= p;
            c.dropout_keep.data[i] = keep ? 1.0 : 0.0;
            c.h_shared.data[i] = keep ? c.h_shared.data[i] * c.keep_scale : 0.0;
        }
    }

    c.z_task = affine(c.h_shared, head.hidden_w, head.hidden_b);
    c.h_task = map_activation(c.z_task, model.activation);
    c.probs = affine(c.h_task, head.output_w, head.output_b);
    softmax_rows(c.probs);
    return c.probs;
}

double nll_loss(const Matrix& probs, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != probs.rows) {
        throw ValidationError("label count does not match batch rows");
    }
    double total = 0.0;
    for (int r = 0; r < probs.rows; ++r) {
        const int y = labels[static_cast<std::size_t>(r)];
        if (y < 0 || y >= probs.cols) {
            throw ValidationError("label " + std::to_string(y) + " out of range for " +
                                  std::to_string(probs.cols) + " classes");
        }
        total -= std::log(std::max(1e-12, probs(r, y)));
    }
    return total / probs.rows;
}

Gradients backward(const MlpModel& model, Task task, const ForwardCache& cache,
                   const std::vector<int>& labels) {
    const TaskHead& head = head_for(model, task);
    const int batch = cache.probs.rows;

    // Softmax + NLL shortcut: d z_out = (p - onehot) / batch.
    Matrix d_out = cache.probs;
    for (int r = 0; r < batch; ++r) d_out(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    for (auto& v : d_out.data) v /= batch;

    Gradients g;
    g.output_w = transpose_times(cache.h_task, d_out);
    g.output_b = column_sums(d_out);

    Matrix d_h_task = times_transpose(d_out, head.output_w);
    Matrix d_z_task = std::move(d_h_task);
    for (std::size_t i = 0; i < d_z_task.data.size(); ++i) {
        d_z_task.data[i] *= activate_deriv(cache.z_task.data[i], model.activation);
    }

    g.hidden_w = transpose_times(cache.h_shared, d_z_task);
    g.hidden_b = column_sums(d_z_task);

    Matrix d_h_shared = times_transpose(d_z_task, head.hidden_w);
    if (cache.dropout_keep.rows > 0) {
        for (std::size_t i = 0; i < d_h_shared.data.size(); ++i) {
            d_h_shared.data[i] *= cache.dropout_keep.data[i] * cache.keep_scale;
        }
    }
    Matrix d_z_shared = std::move(d_h_shared);
    for (std::size_t i = 0; i < d_z_shared.data.size(); ++i) {
        d_z_shared.data[i] *= activate_deriv(cache.z_shared.data[i], model.activation);
    }

    g.shared_w = transpose_times(cache.input, d_z_shared);
    g.shared_b = column_sums(d_z_shared);
    return g;
}

Velocity zero_velocity(const MlpModel& model) {
    Velocity v;
    v.shared_w = Matrix(model.shared_w.rows, model.shared_w.cols);
    v.shared_b.assign(model.shared_b.size(), 0.0);
    for (const auto& [task, head] : model.heads) {
        TaskHead hv;
        hv.hidden_w = Matrix(head.hidden_w.rows, head.hidden_w.cols);
        hv.hidden_b.assign(head.hidden_b.size(), 0.0);
        hv.output_w = Matrix(head.output_w.rows, head.output_w.cols);
        hv.output_b.assign(head.output_b.size(), 0.0);
        v.heads.emplace(task, std::move(hv));
    }
    return v;
}

namespace {

void momentum_update(std::vector<double>& theta, std::vector<double>& vel,
                     const std::vector<double>& grad, double momentum, double lr) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        vel[i] = momentum * vel[i] - lr * grad[i];
        theta[i] += vel[i];
    }
}

void momentum_update(Matrix& theta, Matrix& vel, const Matrix& grad, double momentum, double lr) {
    momentum_update(theta.data, vel.data, grad.data, momentum, lr);
}

}  // namespace

double sgd_step(MlpModel& model, const Matrix& batch, const std::vector<int>& labels, Task task,
                Velocity& velocity, const TrainConfig& config, Rng& dropout_rng) {
    ForwardCache cache;
    forward(model, batch, task, Mode::Train, &dropout_rng, &cache);
    const double loss = nll_loss(cache.probs, labels);
    const Gradients g = backward(model, task, cache, labels);

    TaskHead& head = model.heads.at(task);
    TaskHead& vel = velocity.heads.at(task);
    momentum_update(model.shared_w, velocity.shared_w, g.shared_w, config.momentum, config.learning_rate);
    momentum_update(model.shared_b, velocity.shared_b, g.shared_b, config.momentum, config.learning_rate);
    momentum_update(head.hidden_w, vel.hidden_w, g.hidden_w, config.momentum, config.learning_rate);
    momentum_update(head.hidden_b, vel.hidden_b, g.hidden_b, config.momentum, config.learning_rate);
    momentum_update(head.output_w, vel.output_w, g.output_w, config.momentum, config.learning_rate);
    momentum_update(head.output_b, vel.output_b, g.output_b, config.momentum, config.learning_rate);
    return loss;
}

namespace {

bool relu_side_changed(const ForwardCache& a, const ForwardCache& b) {
    for (std::size_t i = 0; i < a.z_shared.data.size(); ++i) {
        if ((a.z_shared.data[i] > 0.0) != (b.z_shared.data[i] > 0.0)) return true;
    }
    for (std::size_t i = 0; i < a.z_task.data.size(); ++i) {
        if ((a.z_task.data[i] > 0.0) != (b.z_task.data[i] > 0.0)) return true;
    }
    return false;
}

}  // namespace

GradCheckResult grad_check(const MlpModel& model, const Matrix& batch,
                           const std::vector<int>& labels, Task task, double eps,
                           double inject_bug) {
    MlpModel work = model;
    ForwardCache cache;
    forward(work, batch, task, Mode::Eval, nullptr, &cache);
    Gradients analytic = backward(work, task, cache, labels);
    if (inject_bug != 0.0 && !analytic.shared_w.data.empty()) {
        analytic.shared_w.data[0] += inject_bug;
    }

    TaskHead& head = work.heads.at(task);
    struct ParamRef {
        double* value;
        double analytic;
    };
    std::vector<ParamRef> params;
    auto add = [&params](std::vector<double>& values, const std::vector<double>& grads) {
        for (std::size_t i = 0; i < values.size(); ++i) params.push_back({&values[i], grads[i]});
    };
    add(work.shared_w.data, analytic.shared_w.data);
    add(work.shared_b, analytic.shared_b);
    add(head.hidden_w.data, analytic.hidden_w.data);
    add(head.hidden_b, analytic.hidden_b);
    add(head.output_w.data, analytic.output_w.data);
    add(head.output_b, analytic.output_b);

    GradCheckResult result;
    for (const ParamRef& p : params) {
        const double original = *p.value;
        *p.value = original + eps;
        ForwardCache plus;
        forward(work, batch, task, Mode::Eval, nullptr, &plus);
        const double loss_plus = nll_loss(plus.probs, labels);
        *p.value = original - eps;
        ForwardCache minus;
        forward(work, batch, task, Mode::Eval, nullptr, &minus);
        const double loss_minus = nll_loss(minus.probs, labels);
        *p.value = original;

        if (work.activation == Activation::Relu && relu_side_changed(plus, minus)) {
            ++result.skipped_kinks;
            continue;
        }
        const double numeric = (loss_plus - loss_minus) / (2.0 * eps);
        const double rel = std::abs(p.analytic - numeric) /
                           std::max(1e-8, std::abs(p.analytic) + std::abs(numeric));
        result.max_rel_error = std::max(result.max_rel_error, rel);
        ++result.checked;
    }
    return result;
}

}  // namespace qrank
