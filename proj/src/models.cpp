#include "tsdlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace tsdlab {

namespace {

constexpr std::uint64_t kStreamBaseW = 1;
constexpr std::uint64_t kStreamTrainX = 2;
constexpr std::uint64_t kStreamTrainNoise = 3;
constexpr std::uint64_t kStreamValX = 4;
constexpr std::uint64_t kStreamValNoise = 5;
constexpr std::uint64_t kStreamReadout = 6;

Matrix tanh_of(const Matrix& a) {
    Matrix out = a;
    for (double& x : out.data()) x = std::tanh(x);
    return out;
}

Dataset make_dataset(const Task& task, int n_samples, std::uint64_t x_stream, std::uint64_t noise_stream) {
    const TaskSpec& spec = task.spec;
    Rng xrng(mix_seed(spec.seed, x_stream));
    Dataset d;
    d.x = Matrix::gaussian(n_samples, spec.m, xrng);
    Matrix h = matmul(d.x, transpose(task.w_star));
    d.y = (spec.kind == TaskKind::planted_mlp) ? matmul(tanh_of(h), transpose(task.readout)) : std::move(h);
    if (spec.noise_std > 0.0) {
        Rng nrng(mix_seed(spec.seed, noise_stream));
        for (double& y : d.y.data()) y += spec.noise_std * nrng.normal();
    }
    return d;
}

// dL/dW of the batch MSE for the task architecture, given the merged weight.
Matrix dense_weight_grad(const Matrix& w, const Dataset& batch, const Matrix* readout) {
    const int n_samples = batch.x.rows();
    Matrix h = matmul(batch.x, transpose(w));
    if (readout == nullptr) {
        Matrix g = sub(h, batch.y);
        const double c = 2.0 / (static_cast<double>(n_samples) * h.cols());
        for (double& x : g.data()) x *= c;
        return matmul(transpose(g), batch.x);
    }
    Matrix act = tanh_of(h);
    Matrix pred = matmul(act, transpose(*readout));
    Matrix gp = sub(pred, batch.y);
    const double c = 2.0 / (static_cast<double>(n_samples) * pred.cols());
    for (double& x : gp.data()) x *= c;
    Matrix gh = matmul(gp, *readout);
    for (int i = 0; i < gh.rows(); ++i)
        for (int j = 0; j < gh.cols(); ++j) gh(i, j) *= 1.0 - act(i, j) * act(i, j);
    return matmul(transpose(gh), batch.x);
}

Grads chain_to_params(const AdapterState& s, const Matrix& dW) {
    Grads g;
    const double scaling = s.core.alpha / s.core.rank;
    g.da = matmul(dW, transpose(s.core.b));
    for (double& x : g.da.data()) x *= scaling;
    g.db = matmul(transpose(s.core.a), dW);
    for (double& x : g.db.data()) x *= scaling;
    if (s.dash) {
        const DashTerm& d = *s.dash;
        g.ddsigma.resize(d.indices.size());
        for (std::size_t j = 0; j < d.indices.size(); ++j) {
            auto u = d.u_bar.col(static_cast<int>(j));
            auto v = d.v_bar.col(static_cast<int>(j));
            double acc = 0.0;
            for (int i = 0; i < dW.rows(); ++i) acc += u[i] * dot(dW.row(i), v);
            g.ddsigma[j] = acc;
        }
    }
    return g;
}

}  // namespace

std::string to_string(TaskKind k) { return k == TaskKind::planted_linear ? "planted_linear" : "planted_mlp"; }
std::string to_string(OptimizerKind o) { return o == OptimizerKind::sgd ? "sgd" : "adam"; }

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "planted_linear") return TaskKind::planted_linear;
    if (s == "planted_mlp") return TaskKind::planted_mlp;
    throw InvalidArgument("unknown task kind '" + s + "'");
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw InvalidArgument("unknown optimizer '" + s + "'");
}

Task gen_task(const TaskSpec& spec) {
    if (spec.n < 1 || spec.m < 1) throw InvalidArgument("gen_task: dimensions must be positive");
    if (spec.planted_indices.size() != spec.planted_coeffs.size())
        throw InvalidArgument("gen_task: planted_indices and planted_coeffs lengths differ");
    if (spec.n_train < 1 || spec.n_val < 1) throw InvalidArgument("gen_task: sample counts must be positive");
    const int k = std::min(spec.n, spec.m);
    std::set<int> seen;
    for (int idx : spec.planted_indices) {
        if (idx < 0 || idx >= k) throw InvalidArgument("gen_task: planted index " + std::to_string(idx) + " >= min(n,m)");
        if (!seen.insert(idx).second) throw InvalidArgument("gen_task: duplicate planted index");
    }

    Task task;
    task.spec = spec;
    Rng wrng(mix_seed(spec.seed, kStreamBaseW));
    task.base_w = Matrix::gaussian(spec.n, spec.m, wrng);
    SvdFactors f = svd(task.base_w);
    task.w_star = task.base_w;
    for (std::size_t j = 0; j < spec.planted_indices.size(); ++j) {
        const int idx = spec.planted_indices[j];
        add_outer(task.w_star, spec.planted_coeffs[j], f.u.col(idx), f.vt.row(idx));
    }
    if (spec.kind == TaskKind::planted_mlp) {
        Rng rrng(mix_seed(spec.seed, kStreamReadout));
        task.readout = Matrix::gaussian(spec.n, spec.n, rrng);
        // keep the fixed layer well-conditioned at unit scale
        for (double& x : task.readout.data()) x /= std::sqrt(static_cast<double>(spec.n));
    }
    task.train = make_dataset(task, spec.n_train, kStreamTrainX, kStreamTrainNoise);
    task.val = make_dataset(task, spec.n_val, kStreamValX, kStreamValNoise);
    return task;
}

Matrix forward(const AdapterState& s, const Matrix& x) {
    if (x.cols() != s.m())
        throw ShapeMismatch("forward: input has " + std::to_string(x.cols()) + " features, layer expects " +
                            std::to_string(s.m()));
    return matmul(x, transpose(merged_weight(s)));
}

Matrix model_forward(const Task& task, const AdapterState& s, const Matrix& x) {
    Matrix h = forward(s, x);
    if (task.spec.kind == TaskKind::planted_mlp) return matmul(tanh_of(h), transpose(task.readout));
    return h;
}

double loss_mse(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "loss_mse");
    double s = 0.0;
    auto pp = pred.data();
    auto pt = target.data();
    for (std::size_t i = 0; i < pp.size(); ++i) {
        double d = pp[i] - pt[i];
        s += d * d;
    }
    return s / static_cast<double>(pp.size());
}

Grads grads(const AdapterState& s, const Dataset& batch) {
    if (batch.x.rows() < 1) throw InvalidArgument("grads: empty batch");
    return chain_to_params(s, dense_weight_grad(merged_weight(s), batch, nullptr));
}

Grads grads(const AdapterState& s, const Dataset& batch, const Matrix& readout) {
    if (batch.x.rows() < 1) throw InvalidArgument("grads: empty batch");
    return chain_to_params(s, dense_weight_grad(merged_weight(s), batch, &readout));
}

ParamOptimizer::ParamOptimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

void ParamOptimizer::apply(std::span<double> p, std::span<const double> g, Slot& slot) {
    if (kind_ == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
        return;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (slot.m.size() != p.size()) {
        slot.m.assign(p.size(), 0.0);
        slot.v.assign(p.size(), 0.0);
        slot.t = 0;
    }
    ++slot.t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(slot.t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        slot.m[i] = beta1 * slot.m[i] + (1.0 - beta1) * g[i];
        slot.v[i] = beta2 * slot.v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr_ * (slot.m[i] / bc1) / (std::sqrt(slot.v[i] / bc2) + eps);
    }
}

void ParamOptimizer::step(AdapterState& s, const Grads& g) {
    apply(s.core.a.data(), g.da.data(), a_);
    apply(s.core.b.data(), g.db.data(), b_);
    if (s.dash && !g.ddsigma.empty()) apply(s.dash->dsigma, g.ddsigma, dsigma_);
}

void ParamOptimizer::reset_core_slots() {
    a_ = Slot{};
    b_ = Slot{};
}

namespace {

Dataset take_batch(const Dataset& d, const std::vector<int>& order, std::size_t start, int count) {
    Dataset b;
    b.x = Matrix(count, d.x.cols());
    b.y = Matrix(count, d.y.cols());
    for (int i = 0; i < count; ++i) {
        const int src = order[start + i];
        for (int j = 0; j < d.x.cols(); ++j) b.x(i, j) = d.x(src, j);
        for (int j = 0; j < d.y.cols(); ++j) b.y(i, j) = d.y(src, j);
    }
    return b;
}

std::vector<int> snapshot_indices(const SvdFactors& f, const AdapterState& s, double epsilon) {
    ChangeRates cr = change_rates(f, effective_delta(s), epsilon);
    return top_k(cr, std::min(8, cr.k()));
}

}  // namespace

TrainTrace train(AdapterState state, const Task& task, const TrainConfig& cfg, const SvdFactors& f,
                 const DirectionSelector& dash_selector) {
    if (cfg.steps < 1) throw InvalidArgument("train: steps must be positive");
    if (cfg.batch < 1) throw InvalidArgument("train: batch must be positive");

    const bool two_phase = (state.method == Method::dash || state.method == Method::tsd) &&
                           state.phase == Phase::prelaunch;
    if (two_phase && cfg.t_prelaunch > cfg.steps)
        throw InvalidArgument("train: t_prelaunch exceeds steps");
    const bool mlp = task.spec.kind == TaskKind::planted_mlp;

    TrainTrace trace;
    ParamOptimizer opt(cfg.optimizer, cfg.lr);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x5u));
    std::vector<int> order(task.train.x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();  // forces a shuffle before the first batch

    auto switch_phase = [&](AdapterState& s) {
        ChangeRates cr = change_rates(f, effective_delta(s), kDefaultEpsilon);
        std::vector<int> idx = dash_selector ? dash_selector(cr, f) : top_k(cr, std::min(cfg.s_dash, cr.k()));
        s = enter_dash_phase_with(std::move(s), f, cr, idx);
        if (s.method == Method::tsd) opt.reset_core_slots();  // a, b were replaced
    };

    if (two_phase && cfg.t_prelaunch == 0 && cfg.steps > 0) switch_phase(state);

    for (int step = 1; step <= cfg.steps; ++step) {
        if (cursor + cfg.batch > order.size()) {
            shuffle_rng.shuffle(order);
            cursor = 0;
        }
        Dataset batch = take_batch(task.train, order, cursor, cfg.batch);
        cursor += cfg.batch;

        double loss = loss_mse(model_forward(task, state, batch.x), batch.y);
        if (!std::isfinite(loss)) throw NumericDivergence("non-finite training loss at step " + std::to_string(step));
        trace.losses.push_back(loss);

        Grads g = mlp ? grads(state, batch, task.readout) : grads(state, batch);
        opt.step(state, g);

        if (cfg.record_every > 0 && step % cfg.record_every == 0) {
            double vl = loss_mse(model_forward(task, state, task.val.x), task.val.y);
            trace.val_losses.emplace_back(step, vl);
            trace.ltsd_snapshots.push_back({step, snapshot_indices(f, state, kDefaultEpsilon)});
        }
        if (two_phase && state.phase == Phase::prelaunch && step == cfg.t_prelaunch && step < cfg.steps)
            switch_phase(state);
    }
    trace.final_state = std::move(state);
    return trace;
}

double dense_loss(const Task& task, const Matrix& w, const Dataset& data) {
    Matrix h = matmul(data.x, transpose(w));
    if (task.spec.kind == TaskKind::planted_mlp) h = matmul(tanh_of(h), transpose(task.readout));
    return loss_mse(h, data.y);
}

Matrix train_full(const Matrix& w, const Task& task, const TrainConfig& cfg) {
    if (cfg.steps < 1) throw InvalidArgument("train_full: steps must be positive");
    const bool mlp = task.spec.kind == TaskKind::planted_mlp;

    Matrix weights = w;
    Rng shuffle_rng(mix_seed(cfg.seed, 0x5u));
    std::vector<int> order(task.train.x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();

    std::vector<double> mom(weights.data().size(), 0.0), vel(weights.data().size(), 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    for (int step = 1; step <= cfg.steps; ++step) {
        if (cursor + cfg.batch > order.size()) {
            shuffle_rng.shuffle(order);
            cursor = 0;
        }
        Dataset batch = take_batch(task.train, order, cursor, cfg.batch);
        cursor += cfg.batch;

        Matrix dW = dense_weight_grad(weights, batch, mlp ? &task.readout : nullptr);
        auto p = weights.data();
        auto g = dW.data();
        if (cfg.optimizer == OptimizerKind::sgd) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= cfg.lr * g[i];
        } else {
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < p.size(); ++i) {
                mom[i] = beta1 * mom[i] + (1.0 - beta1) * g[i];
                vel[i] = beta2 * vel[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= cfg.lr * (mom[i] / bc1) / (std::sqrt(vel[i] / bc2) + eps);
            }
        }
        if (!all_finite(weights)) throw NumericDivergence("non-finite weights at step " + std::to_string(step));
    }
    return weights;
}

}  // namespace tsdlab
